"""Acceptance criteria, one pass/fail line per check.

Run with ``pytest -v tests/test_acceptance.py``; the lines are printed
straight to the terminal.  Tolerances are fixed here and never loosened.
"""
import time
from fractions import Fraction

import numpy as np
import pytest

from reschern.geometry import FourierSeries, t2_clifford, with_eta
from reschern.holocalc import complex_power
from reschern.harness import algebra_checks
from reschern.mellin import (MeromorphicIntegral, build_integral, direct_integral, enumerate_terms,
                             rhs_pairing, residue_sum, simple_pole_certificate)
from reschern.oracles import binomial_power
from reschern.superalgebra import wedge
from reschern.superconnection import curvature, lhs_pairing, lhs_pairing_outside

from conftest import S1_NAMES, integral, scenario

TOL_THM2_REL = 1e-5
TIME_BUDGET = 60.0
TOL_R = 1e-8
TOL_ODD = 1e-10
TOL_ZEROS = 1e-9
TOL_INT_POWER = 1e-12
TOL_THM1_REL = 1e-6
TOL_ZMIN = 1e-10
TOL_ORACLE = 1e-10
TOL_DIRECT = 1e-7
REL_FLOOR = 1e-12


def report(capsys, criterion, ok, detail):
    with capsys.disabled():
        print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {criterion}: {detail}")


_t2_k2 = {}


def t2_kappa2_scenario():
    """T2 with eta = (1 + 0.5 cos x^2) dx^1 dx^2."""
    if "s" not in _t2_k2:
        f = FourierSeries.build(2, [((0, 0), 1.0), ((0, 1), 0.25), ((0, -1), 0.25)])
        _t2_k2["s"] = with_eta(t2_clifford(), 2, [((1, 2), f)])
    return _t2_k2["s"]


def t2_kappa2():
    s = t2_kappa2_scenario()
    if "I" not in _t2_k2:
        _t2_k2["I"] = build_integral(s, R=1.0)
    return s, _t2_k2["I"]


def case(name):
    if name == "T2_CLIFFORD_K2":
        return t2_kappa2()
    return scenario(name), integral(name)


THM2_CASES = ["S1_FLAT", "S1_WINDING", "S1_WINDING_2", "S1_TWISTED", "S1_MIXED",
              "T2_CLIFFORD", "T2_CLIFFORD_K2"]


# 1 -------------------------------------------------------------------------------

@pytest.mark.parametrize("name", THM2_CASES)
def test_criterion_1_pairing_equals_residue(name, capsys):
    s = t2_kappa2_scenario() if name == "T2_CLIFFORD_K2" else scenario(name)
    t0 = time.perf_counter()
    I = build_integral(s, R=1.0)       # built here so the timing covers the whole pipeline
    lhs = lhs_pairing(s)
    rhs = rhs_pairing(s, integral=I)
    elapsed = time.perf_counter() - t0
    if name == "T2_CLIFFORD_K2":
        _t2_k2["I"] = I
    rel = abs(lhs - rhs) / max(abs(lhs), REL_FLOOR)
    ok = rel < TOL_THM2_REL and elapsed < TIME_BUDGET
    report(capsys, 1, ok, f"{name} kappa={s.kappa} lhs={lhs:.10g} rhs={rhs:.10g} rel_err={rel:.2e} "
                          f"(tol {TOL_THM2_REL:.0e}) time={elapsed:.1f}s (budget {TIME_BUDGET:.0f}s)")
    assert rel < TOL_THM2_REL
    assert elapsed < TIME_BUDGET


# 2 -------------------------------------------------------------------------------

@pytest.mark.parametrize("name", THM2_CASES)
def test_criterion_2_R_independence(name, capsys):
    s, I = case(name)
    vals = [rhs_pairing(s, R, integral=I) for R in (0.5, 1.0, 2.0)]
    spread = max(abs(a - b) for a in vals for b in vals)
    ok = spread < TOL_R
    report(capsys, 2, ok, f"{name} rhs at R=0.5,1,2 max pairwise diff={spread:.2e} (tol {TOL_R:.0e})")
    assert ok


# 3 -------------------------------------------------------------------------------

ODD_CASES = {
    "S1_WINDING_K1": lambda: with_eta(scenario("S1_WINDING"), 1, [((1,), 1.0)]),
    "S1_MIXED_K1": lambda: with_eta(scenario("S1_MIXED"), 1, [((1,), 1.0)]),
    "T2_CLIFFORD_K1": lambda: with_eta(t2_clifford(), 1, [((1,), 1.0), ((2,), 0.5)]),
}


@pytest.mark.parametrize("name", list(ODD_CASES))
def test_criterion_3_odd_kappa(name, capsys):
    s = ODD_CASES[name]()
    lhs = lhs_pairing(s)
    rhs = rhs_pairing(s)
    ok = abs(lhs) < TOL_ODD and abs(rhs) < TOL_ODD
    report(capsys, 3, ok, f"{name} |lhs|={abs(lhs):.2e} |rhs|={abs(rhs):.2e} (tol {TOL_ODD:.0e})")
    assert ok


# 4 -------------------------------------------------------------------------------

@pytest.mark.parametrize("name", THM2_CASES)
def test_criterion_4_forced_zeros(name, capsys):
    s, I = case(name)
    bound = Fraction(3 * s.n - s.kappa, 2)
    worst, count = 0.0, 0
    for f in I.factors:
        for m in range(0, 10):
            if m >= bound:
                break
            worst = max(worst, abs(f(-m)))
            count += 1
    ok = worst < TOL_ZEROS and count > 0
    report(capsys, 4, ok, f"{name} {count} (term, m) pairs, max |phi_V(-m)|={worst:.2e} (tol {TOL_ZEROS:.0e})")
    assert ok


@pytest.mark.parametrize("name", ["S1_WINDING", "S1_MIXED", "T2_CLIFFORD"])
def test_criterion_4_integer_powers(name, capsys):
    s = scenario(name)
    g = s.grids
    x = curvature(s, g.x, np.full(len(g.w), 1.3), g.xi).total()
    e1 = (complex_power(x, -1) - (-x)).max_abs()
    e2 = (complex_power(x, -2) - wedge(x, x)).max_abs()
    ok = max(e1, e2) < TOL_INT_POWER
    report(capsys, 4, ok, f"{name} integer powers z=-1 err={e1:.1e}, z=-2 err={e2:.1e} (tol {TOL_INT_POWER:.0e})")
    assert ok


# 5 -------------------------------------------------------------------------------

@pytest.mark.parametrize("name", S1_NAMES)
def test_criterion_5_residue_sum(name, capsys):
    s, I = case(name)
    total, _ = residue_sum(s, 1.0, integral=I)
    ref = lhs_pairing_outside(s, 1.0)
    err = abs(total - ref)
    rel = err / max(abs(ref), REL_FLOOR)
    ok = rel < TOL_THM1_REL
    report(capsys, "5a", ok, f"{name} residue sum={total:.10g} outside integral={ref:.10g} "
                             f"rel_err={rel:.2e} (tol {TOL_THM1_REL:.0e})")
    assert ok


@pytest.mark.parametrize("name", S1_NAMES)
def test_criterion_5_zmin_stability(name, capsys):
    s, I = case(name)
    a, _ = residue_sum(s, 1.0, z_min=-6, integral=I)
    b, _ = residue_sum(s, 1.0, z_min=-10, integral=I)
    change = abs(a - b)
    ok = change < TOL_ZMIN
    report(capsys, "5b", ok, f"{name} |sum(z_min=-10) - sum(z_min=-6)|={change:.2e} (tol {TOL_ZMIN:.0e})")
    assert ok


# 6 -------------------------------------------------------------------------------

@pytest.mark.parametrize("name", THM2_CASES)
def test_criterion_6_pole_structure(name, capsys):
    s, I = case(name)
    z0 = Fraction(s.kappa, 2) - s.n
    exact = all(t.pole == z0 for t in enumerate_terms(s.n, s.kappa))
    worst_ratio, bounded = 0.0, True
    for f in I.factors:
        single = MeromorphicIntegral([f], 1.0, I.kappa, I.n)
        c = np.array(simple_pole_certificate(single, z0))
        bounded &= bool(np.all(np.isfinite(c)) and np.max(np.abs(c)) < 1e6)
        steps = np.abs(np.diff(c))
        # geometric shrinking of successive differences means convergence
        ratio = steps[-1] / max(steps[0], 1e-300) if steps[0] > 1e-14 else 0.0
        worst_ratio = max(worst_ratio, ratio)
    ok = exact and bounded and worst_ratio < 0.2
    report(capsys, 6, ok, f"{name} z0={z0} exact={exact} {len(I.factors)} terms bounded={bounded} "
                          f"max step ratio={worst_ratio:.1e} (must shrink, < 2e-1)")
    assert ok


# 7 -------------------------------------------------------------------------------

def test_criterion_7_dense_oracles(capsys):
    res = algebra_checks(seed=0, trials=500, tol=TOL_ORACLE)
    for key in ("wedge", "exp", "inverse", "resolvent"):
        v = res[key]
        report(capsys, 7, v["pass"], f"{key} vs dense left-regular oracle, 500 cases, "
                                     f"max err={v['max_err']:.2e} (tol {TOL_ORACLE:.0e})")
    assert all(res[k]["pass"] for k in ("wedge", "exp", "inverse", "resolvent"))


def test_criterion_7_binomial(capsys):
    s = scenario("S1_WINDING")
    g = s.grids
    worst = 0.0
    for rho in (0.6, 1.0, 2.5):
        d = curvature(s, g.x, np.full(len(g.w), rho), g.xi)
        for z in (0.5, 1.7 - 0.8j, 3.0 + 2j):
            worst = max(worst, (complex_power(d, z) - binomial_power(rho ** 2, d.nilpotent(), z)).max_abs())
    ok = worst < TOL_ORACLE
    report(capsys, 7, ok, f"S1_WINDING complex power vs binomial series, max err={worst:.2e} (tol {TOL_ORACLE:.0e})")
    assert ok


# 8 -------------------------------------------------------------------------------

@pytest.mark.parametrize("name", S1_NAMES)
def test_criterion_8_direct_vs_continued(name, capsys):
    s, I = case(name)
    z = 5.0 + 0.5j
    cont = I(z)
    d = direct_integral(s, z, R=1.0)
    err = abs(cont - d)
    ok = err < TOL_DIRECT
    report(capsys, 8, ok, f"{name} z={z} continued={cont:.10g} direct={d:.10g} err={err:.2e} (tol {TOL_DIRECT:.0e})")
    assert ok
