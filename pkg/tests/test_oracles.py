"""Cross-checks between the independent oracles themselves."""
import math

import numpy as np
import pytest

from reschern.oracles import (binomial_power, brute_force_words, dense_exp, dense_inverse,
                              dense_wedge, divided_difference, duhamel_exp, random_form)
from reschern.superalgebra import MixedForm, left_regular


def test_left_regular_is_homomorphism(rng):
    for _ in range(20):
        a = random_form(rng, 2, 1, 1)
        b = random_form(rng, 2, 1, 1)
        assert np.allclose(left_regular(dense_wedge(a, b)), left_regular(a) @ left_regular(b), atol=1e-10)


def test_duhamel_vs_dense_exp(rng):
    for n, p, q in ((1, 1, 1), (1, 2, 1), (2, 1, 1)):
        x0 = rng.standard_normal((p + q, p + q)) * 0.5
        x0[:p, p:] = 0
        x0[p:, :p] = 0
        x = MixedForm.scalar(n, p, q, x0 + 0j) + random_form(rng, n, p, q, parity=0, scale=0.3).nilpotent_part()
        assert (duhamel_exp(x) - dense_exp(x)).max_abs() < 1e-10


def test_binomial_vs_dense_inverse(rng):
    nil = random_form(rng, 2, 1, 1, scale=0.3).nilpotent_part()
    mu = 1.7
    x = MixedForm.scalar(2, 1, 1, mu * np.eye(2)) - nil
    assert (binomial_power(mu, nil, 1) - dense_inverse(x)).max_abs() < 1e-12
    assert (binomial_power(mu, nil, -2) - dense_wedge(x, x)).max_abs() < 1e-12


@pytest.mark.parametrize("z", [0.5, 1.0, 2.3 - 0.4j, -1.5])
def test_divided_difference_recursive(z):
    nodes = [0.7, 1.3, 2.9]
    f = lambda t: t ** (-z)
    d01 = (f(nodes[1]) - f(nodes[0])) / (nodes[1] - nodes[0])
    d12 = (f(nodes[2]) - f(nodes[1])) / (nodes[2] - nodes[1])
    ref = (d12 - d01) / (nodes[2] - nodes[0])
    assert abs(divided_difference(nodes, z) - ref) < 1e-12


def test_divided_difference_confluent():
    # f[a, a] = f'(a), f[a, a, a] = f''(a) / 2
    z, a = 1.5, 1.2
    assert abs(divided_difference([a, a], z) - (-z) * a ** (-z - 1)) < 1e-12
    assert abs(divided_difference([a, a, a], z) - z * (z + 1) * a ** (-z - 2) / 2) < 1e-12


def test_divided_difference_integral_form():
    # for distinct nodes, (1/2 pi i) oint t^{-z} / prod(t - x_j) around the nodes
    nodes = np.array([0.8, 1.5])
    z = 0.7 + 0.2j
    th = np.linspace(0, 2 * np.pi, 4001)[:-1]
    t = 1.15 + 0.6 * np.exp(1j * th)
    vals = t ** (-z) / np.prod(t[:, None] - nodes, -1) * 0.6 * np.exp(1j * th)
    assert abs(np.mean(vals) - divided_difference(nodes, z)) < 1e-12


def test_brute_force_counts():
    # n = 2, kappa = 0: words with P, S and the rest from {H, F} with horizontal degree 2
    words = brute_force_words(2, 0, max_len=6)
    assert all(w.count("P") == 1 and w.count("S") == 1 for w in words)
    assert "PSHH" in words and "FPS" in words
    assert len(set(words)) == len(words)
    assert len(words) == math.factorial(3) + math.factorial(4) // 2


def test_random_form_homogeneity(rng):
    a = random_form(rng, 2, 2, 1, degree=2, parity=1)
    for b in range(16):
        c = a.coeffs[b]
        if bin(b).count("1") != 2:
            assert np.all(c == 0)
            continue
        assert np.all(c[:2, :2] == 0) and np.all(c[2:, 2:] == 0)
