import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, strategies as st

from reschern.errors import SingularityError, StructureError
from reschern.oracles import dense_exp, dense_inverse, dense_wedge, duhamel_exp, random_form
from reschern.superalgebra import (MixedForm, SuperMatrix, blade, degree_part, exp_form,
                                   invert_degree0_dominant, left_regular, supertrace,
                                   supertrace_form, wedge, wedge_sign)
from reschern.superconnection import curvature

from conftest import scenario

DRHO, DX = blade(0), blade(1)   # n = 1: generator 0 is d rho, generator 1 is dx

dims = st.tuples(st.integers(1, 2), st.integers(1, 2), st.integers(0, 2))
seeds = st.integers(0, 2 ** 32 - 1)


def odd_matrix(rng, p, q):
    m = rng.standard_normal((p + q, p + q)) + 1j * rng.standard_normal((p + q, p + q))
    m[:p, :p] = 0
    m[p:, p:] = 0
    return m


# -- SuperMatrix ---------------------------------------------------------------

def test_supermatrix_parity_split(rng):
    m = SuperMatrix(rng.standard_normal((3, 3)), 2, 1)
    assert m.even_part() + m.odd_part() == m
    assert m.even_part().is_even() and m.odd_part().is_odd()
    assert m.odd_part().supertrace() == 0


def test_supermatrix_supertrace_definition():
    m = SuperMatrix(np.diag([1.0, 2.0, 5.0]), 2, 1)
    assert m.supertrace() == -2.0


def test_supermatrix_shape_check():
    with pytest.raises(StructureError):
        SuperMatrix(np.eye(3), 1, 1)


# -- wedge ---------------------------------------------------------------------

def test_wedge_one_forms_anticommute():
    eye = np.eye(2)
    dx = MixedForm.from_components(1, 1, 1, {DX: eye})
    dr = MixedForm.from_components(1, 1, 1, {DRHO: eye})
    ab = wedge(dx, dr)
    # dx ^ drho = -(drho ^ dx)
    assert np.array_equal(ab.component(DX | DRHO), -eye)
    assert np.array_equal(wedge(dr, dx).coeffs, -ab.coeffs)


def test_wedge_degree_zero_is_matrix_product(rng):
    a, b = rng.standard_normal((2, 3, 3))
    fa, fb = MixedForm.scalar(1, 2, 1, a), MixedForm.scalar(1, 2, 1, b)
    assert np.allclose(wedge(fa, fb).component(0), a @ b, atol=0)


def test_wedge_odd_coefficients_pick_super_sign(rng):
    a, b = odd_matrix(rng, 1, 1), odd_matrix(rng, 1, 1)
    lhs = wedge(MixedForm.from_components(1, 1, 1, {DX: a}), MixedForm.from_components(1, 1, 1, {DRHO: b}))
    # (dx A)(drho B) = -(dx ^ drho) AB = +(drho ^ dx) AB
    assert np.allclose(lhs.component(DX | DRHO), a @ b, atol=1e-15)
    oracle = dense_wedge(MixedForm.from_components(1, 1, 1, {DX: a}),
                         MixedForm.from_components(1, 1, 1, {DRHO: b}))
    assert lhs.allclose(oracle, 1e-14)


def test_wedge_repeated_generator_vanishes(rng):
    a = MixedForm.from_components(2, 1, 1, {blade(2): rng.standard_normal((2, 2))})
    assert wedge(a, a).max_abs() == 0


def test_wedge_mismatch_raises():
    with pytest.raises(StructureError):
        wedge(MixedForm.identity(1, 1, 1), MixedForm.identity(1, 2, 1))
    with pytest.raises(StructureError):
        wedge(MixedForm.identity(1, 1, 1), MixedForm.identity(2, 1, 1))


def test_wedge_sign_table():
    assert wedge_sign(blade(0), blade(1)) == 1
    assert wedge_sign(blade(1), blade(0)) == -1
    assert wedge_sign(blade(0, 2), blade(1)) == -1
    assert wedge_sign(blade(1), blade(1)) == 0


@given(dims, seeds)
def test_wedge_matches_left_regular(d, seed):
    n, p, q = d
    rng = np.random.default_rng(seed)
    a, b = random_form(rng, n, p, q), random_form(rng, n, p, q)
    assert (wedge(a, b) - dense_wedge(a, b)).max_abs() < 1e-12


def test_wedge_500_random_pairs():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(500):
        n, p = int(rng.integers(1, 3)), int(rng.integers(1, 3))
        q = int(rng.integers(0, 5 - p))
        a, b = random_form(rng, n, p, q), random_form(rng, n, p, q)
        worst = max(worst, (wedge(a, b) - dense_wedge(a, b)).max_abs())
    assert worst < 1e-12


@given(dims, seeds)
def test_wedge_associative(d, seed):
    n, p, q = d
    rng = np.random.default_rng(seed)
    a, b, c = (random_form(rng, n, p, q) for _ in range(3))
    assert (wedge(wedge(a, b), c) - wedge(a, wedge(b, c))).max_abs() < 1e-11


def test_left_regular_is_a_representation(rng):
    a, b = random_form(rng, 2, 1, 1), random_form(rng, 2, 1, 1)
    assert np.abs(left_regular(a) @ left_regular(b) - left_regular(wedge(a, b))).max() < 1e-12


def test_wedge_broadcasts_batches(rng):
    a = random_form(rng, 1, 1, 1)
    stack = MixedForm(1, 1, 1, np.stack([a.coeffs, 2 * a.coeffs]))
    out = wedge(stack, a)
    assert out.batch_shape == (2,)
    assert out[1].allclose(wedge(a, a) * 2, 1e-12)


# -- supertrace ----------------------------------------------------------------

def test_supertrace_form_definition():
    f = MixedForm.scalar(1, 1, 1, np.diag([3.0, 5.0]))
    assert supertrace_form(f)[0] == -2.0


def test_supertrace_kills_odd(rng):
    f = MixedForm.from_components(1, 1, 1, {DX: odd_matrix(rng, 1, 1)})
    assert np.all(supertrace_form(f) == 0)


def test_supertrace_of_supercommutator_vanishes():
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(100):
        p, q = int(rng.integers(1, 3)), int(rng.integers(1, 3))
        x = rng.standard_normal((p + q, p + q)) + 1j * rng.standard_normal((p + q, p + q))
        y = rng.standard_normal((p + q, p + q)) + 1j * rng.standard_normal((p + q, p + q))
        px, py = (int(v) for v in rng.integers(0, 2, 2))
        even = np.zeros((p + q, p + q), bool)
        even[:p, :p] = even[p:, p:] = True
        x = x * (even if px == 0 else ~even)
        y = y * (even if py == 0 else ~even)
        comm = x @ y - (-1) ** (px * py) * y @ x
        worst = max(worst, abs(supertrace(comm, p)))
    assert worst < 1e-13


@given(dims, seeds, st.integers(0, 4), st.integers(0, 4), st.integers(0, 1), st.integers(0, 1))
def test_supertrace_graded_symmetry(d, seed, da, db, pa, pb):
    n, p, q = d
    da, db = da % (2 * n + 1), db % (2 * n + 1)
    rng = np.random.default_rng(seed)
    a = random_form(rng, n, p, q, degree=da, parity=pa)
    b = random_form(rng, n, p, q, degree=db, parity=pb)
    sign = (-1) ** (((da + pa) % 2) * ((db + pb) % 2))
    diff = supertrace_form(wedge(a, b)) - sign * supertrace_form(wedge(b, a))
    assert np.max(np.abs(diff)) < 1e-12


# -- degree_part ---------------------------------------------------------------

def test_degree_part_picks_component(rng):
    a, b = rng.standard_normal((2, 2, 2))
    f = MixedForm.from_components(1, 1, 1, {0: a, DX | DRHO: b})
    two = degree_part(f, 2)
    assert np.array_equal(two.component(DX | DRHO), b) and not np.any(two.component(0))


@given(dims, seeds)
def test_degree_parts_partition_and_idempotent(d, seed):
    n, p, q = d
    a = random_form(np.random.default_rng(seed), n, p, q)
    total = degree_part(a, 0)
    for k in range(1, 2 * n + 1):
        part = degree_part(a, k)
        assert np.array_equal(degree_part(part, k).coeffs, part.coeffs)
        total = total + part
    assert np.array_equal(total.coeffs, a.coeffs)


def test_degree_part_range():
    with pytest.raises(ValueError):
        degree_part(MixedForm.identity(1, 1, 1), 3)
    with pytest.raises(ValueError):
        degree_part(MixedForm.identity(1, 1, 1), -1)


# -- exp -----------------------------------------------------------------------

def test_exp_scalar_form(rng):
    m = 0.7 * rng.standard_normal((3, 3))
    e = exp_form(MixedForm.scalar(1, 2, 1, m))
    assert np.abs(e.component(0) - scipy.linalg.expm(m)).max() < 1e-13
    assert e.nilpotent_part().max_abs() == 0


def test_exp_nilpotent_is_finite_sum(rng):
    x = random_form(rng, 2, 1, 1).nilpotent_part()
    acc, term = MixedForm.identity(2, 1, 1), MixedForm.identity(2, 1, 1)
    for j in range(1, 5):
        term = wedge(term, x) * (1.0 / j)
        acc = acc + term
    assert (exp_form(x) - acc).max_abs() < 1e-13


def test_exp_degree_zero_part_is_matrix_exp(rng):
    x = random_form(rng, 1, 2, 2, scale=0.4)
    assert np.abs(degree_part(exp_form(x), 0).component(0) - scipy.linalg.expm(x.component(0))).max() < 1e-13


@given(dims, seeds, st.floats(0.05, 3.0))
def test_exp_matches_dense(d, seed, scale):
    n, p, q = d
    x = random_form(np.random.default_rng(seed), n, p, q, scale=scale)
    ref = dense_exp(x)
    assert (exp_form(x) - ref).max_abs() < 1e-12 * max(1.0, ref.max_abs())


@given(dims, seeds)
def test_exp_functional_equation(d, seed):
    n, p, q = d
    x = random_form(np.random.default_rng(seed), n, p, q, scale=0.5)
    a, b = exp_form(x), exp_form(-x)
    prod = wedge(a, b)
    # rounding grows with the size of the factors
    assert (prod - MixedForm.identity(n, p, q)).max_abs() < 1e-14 * max(1, a.max_abs() * b.max_abs())


def test_exp_commuting_split_is_exact(rng):
    # X0 scalar commutes with N: exp(X) = e^{x0} sum N^j / j!
    nil = random_form(rng, 1, 1, 1).nilpotent_part()
    x = nil + MixedForm.scalar(1, 1, 1, -2.5 * np.eye(2))
    ref = (MixedForm.identity(1, 1, 1) + nil + wedge(nil, nil) * 0.5) * np.exp(-2.5)
    assert (exp_form(x) - ref).max_abs() < 1e-15


def test_exp_at_scenario_point_matches_duhamel():
    s = scenario("S1_TWISTED")
    x = curvature(s, np.array([0.7]), np.array(1.4), np.array([-1.0])).total()
    assert (exp_form(x) - duhamel_exp(x)).max_abs() < 1e-12
    s2 = scenario("T2_CLIFFORD")
    x2 = curvature(s2, np.array([0.4, 1.1]), np.array(0.9), np.array([0.6, 0.8])).total()
    assert (exp_form(x2) - duhamel_exp(x2)).max_abs() < 1e-12


# -- inverse -------------------------------------------------------------------

def test_inverse_scalar(rng):
    m = rng.standard_normal((3, 3)) + 3 * np.eye(3)
    inv = invert_degree0_dominant(MixedForm.scalar(1, 2, 1, m))
    assert np.abs(inv.component(0) - np.linalg.inv(m)).max() < 1e-14


def test_inverse_order_two_nilpotent(rng):
    a = rng.standard_normal((2, 2))
    x = MixedForm.from_components(1, 1, 1, {0: np.eye(2), DX: a})
    inv = invert_degree0_dominant(x)
    assert np.array_equal(inv.component(0), np.eye(2))
    assert np.array_equal(inv.component(DX), -a)


@given(dims, seeds)
def test_inverse_matches_dense_solve(d, seed):
    n, p, q = d
    rng = np.random.default_rng(seed)
    x = random_form(rng, n, p, q)
    x.coeffs[0] += 4 * np.eye(p + q)
    inv = invert_degree0_dominant(x)
    assert (wedge(x, inv) - MixedForm.identity(n, p, q)).max_abs() < 1e-12
    assert (inv - dense_inverse(x)).max_abs() < 1e-12


def test_inverse_singular_raises():
    x = MixedForm.scalar(1, 1, 1, np.diag([1.0, 0.0]))
    with pytest.raises(SingularityError) as info:
        invert_degree0_dominant(x, point=(0.5, 1.0))
    assert info.value.point == (0.5, 1.0)
