import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from reschern.geometry import get_builtin
from reschern.mellin import build_integral

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

S1_NAMES = ["S1_FLAT", "S1_WINDING", "S1_WINDING_2", "S1_TWISTED", "S1_MIXED"]

_scenarios = {}
_integrals = {}


def scenario(name):
    if name not in _scenarios:
        _scenarios[name] = get_builtin(name)
    return _scenarios[name]


def integral(name):
    """Meromorphic integral of a built-in at R = 1, built once per session."""
    if name not in _integrals:
        _integrals[name] = build_integral(scenario(name), R=1.0)
    return _integrals[name]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
