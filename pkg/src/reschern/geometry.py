"""Scenarios: flat base manifolds, the symbol endomorphism, connection and grids.

The base is S^1 (n = 1) or the flat torus T^2 (n = 2) with one global chart
and a globally trivial bundle C^{p|q}.  Fiber covectors are written in polar
form xi = rho * Xi with |Xi| = 1.  For n = 2 the angular coordinate is phi
with Xi = (cos phi, sin phi); for n = 1 the "sphere" is the two points
Xi = +1, -1 with unit weights.
"""
from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigError, InvariantError
from .superalgebra import MixedForm, blade, wedge

__all__ = [
    "FourierSeries",
    "TestForm",
    "Scenario",
    "Grids",
    "eval_L",
    "eval_eta",
    "eval_theta",
    "eval_nabla2",
    "quadrature_grids",
    "gauss_legendre_panels",
    "validate",
    "builtin_scenarios",
    "get_builtin",
    "s1_flat",
    "s1_winding",
    "s1_twisted",
    "t2_clifford",
    "with_eta",
    "scenario_to_dict",
    "scenario_from_dict",
    "dump_scenario",
    "load_scenario",
]


@dataclass(frozen=True, eq=False)
class FourierSeries:
    """Finite Fourier series ``sum_k c_k exp(i k.x)`` on the n-torus.

    Coefficients are scalars (shape ``()``) or square matrices.
    """

    n: int
    terms: tuple  # of (freq tuple, ndarray)
    shape: tuple = ()

    @classmethod
    def build(cls, n, terms, shape=()):
        cooked = []
        for freq, c in terms:
            freq = tuple(int(k) for k in np.atleast_1d(freq))
            if len(freq) != n:
                raise ConfigError(f"frequency {freq} has wrong length for n={n}")
            c = np.array(c, dtype=complex)
            if c.shape != tuple(shape):
                raise ConfigError(f"coefficient shape {c.shape} != {tuple(shape)}")
            c.setflags(write=False)
            cooked.append((freq, c))
        return cls(n, tuple(cooked), tuple(shape))

    @classmethod
    def constant(cls, n, c):
        c = np.asarray(c, dtype=complex)
        return cls.build(n, [((0,) * n, c)], c.shape)

    @classmethod
    def zero(cls, n, shape=()):
        return cls(n, (), tuple(shape))

    def __call__(self, x) -> np.ndarray:
        """Evaluate at points ``x`` of shape ``(..., n)``."""
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape[:-1] + self.shape, complex)
        pad = (None,) * len(self.shape)
        for freq, c in self.terms:
            phase = np.exp(1j * (x @ np.array(freq, dtype=float)))
            out += phase[(...,) + pad] * c
        return out

    def derivative(self, j: int) -> "FourierSeries":
        """Exact partial derivative in x^{j+1} (0-based ``j``)."""
        return FourierSeries(self.n, tuple((f, 1j * f[j] * c) for f, c in self.terms if f[j]), self.shape)

    def max_frequency(self) -> int:
        return max((max(abs(k) for k in f) for f, _ in self.terms), default=0)

    def __eq__(self, other):
        if not isinstance(other, FourierSeries):
            return NotImplemented
        return (self.n == other.n and self.shape == other.shape and len(self.terms) == len(other.terms)
                and all(f1 == f2 and np.array_equal(c1, c2)
                        for (f1, c1), (f2, c2) in zip(self.terms, other.terms)))

    __hash__ = None


@dataclass(frozen=True)
class TestForm:
    """Scalar differential form on the base: ``sum_I f_I(x) dx^I``.

    ``components`` maps increasing 1-based index tuples of length ``degree``
    to scalar Fourier series.
    """

    degree: int
    components: tuple  # of (index tuple, FourierSeries)

    __test__ = False  # not a pytest class

    @classmethod
    def constant(cls, n, degree=0, value=1.0):
        idx = tuple(range(1, degree + 1))
        return cls(degree, ((idx, FourierSeries.constant(n, value)),))


@dataclass(frozen=True)
class Scenario:
    """Full geometric setup plus quadrature parameters."""

    name: str
    n: int
    p: int
    q: int
    symbol: tuple            # A_1..A_n, matrix FourierSeries
    theta: tuple             # Theta_1..Theta_n, matrix FourierSeries
    eta: TestForm
    R: float = 1.0
    grid_base: int = 16
    grid_sphere: int = 16
    grid_radial: int = 16
    contour_nodes: int = 32
    z_circle_nodes: int = 64
    z_circle_radius: float = 0.25
    rho_max: float | None = None

    @property
    def dim(self):
        return self.p + self.q

    @property
    def kappa(self):
        return self.eta.degree

    @cached_property
    def grids(self) -> "Grids":
        return quadrature_grids(self)

    @cached_property
    def spectral_bounds(self) -> tuple[float, float]:
        """(s_min, s_max): extreme singular values of L(x, Xi) on base x sphere."""
        g = self.grids
        lmat = eval_L(self, g.x, 1.0, g.xi)
        sv = np.linalg.svd(lmat, compute_uv=False)
        return float(sv.min()), float(sv.max())

    @property
    def s_min(self):
        return self.spectral_bounds[0]

    @property
    def s_max(self):
        return self.spectral_bounds[1]

    @property
    def radial_cutoff(self) -> float:
        return self.rho_max if self.rho_max is not None else 8.0 / self.s_min


@dataclass(frozen=True)
class Grids:
    """Flattened base x sphere product grid and radial Gauss-Legendre nodes.

    ``x``, ``xi``, ``dxi`` have shape ``(P, n)``; ``w`` holds the product
    weights.  ``dxi`` is d(Xi)/d(phi) (zero for n = 1).
    """

    x: np.ndarray
    xi: np.ndarray
    dxi: np.ndarray
    w: np.ndarray
    base_x: np.ndarray
    base_w: np.ndarray
    sphere_xi: np.ndarray
    sphere_w: np.ndarray
    radial_outside: tuple  # (nodes, weights) on [R, rho_max]
    radial_full: tuple     # (nodes, weights) on [0, rho_max]


def gauss_legendre_panels(a: float, b: float, nodes: int, width: float = 1.0):
    """Composite Gauss-Legendre rule on [a, b] with panels no wider than ``width``."""
    t, w = np.polynomial.legendre.leggauss(nodes)
    m = max(1, math.ceil((b - a) / width - 1e-12))
    edges = np.linspace(a, b, m + 1)
    lo, hi = edges[:-1, None], edges[1:, None]
    xs = (0.5 * (hi - lo) * t + 0.5 * (hi + lo)).ravel()
    ws = (0.5 * (hi - lo) * w).ravel()
    return xs, ws


def quadrature_grids(s: Scenario) -> Grids:
    if s.grid_base < 2 or s.grid_sphere < 2 or s.grid_radial < 2:
        raise ValueError("grid sizes must be >= 2")
    h = 2 * np.pi / s.grid_base
    one = np.arange(s.grid_base) * h
    mesh = np.stack(np.meshgrid(*([one] * s.n), indexing="ij"), -1).reshape(-1, s.n)
    base_w = np.full(len(mesh), h ** s.n)
    if s.n == 1:
        sphere = np.array([[1.0], [-1.0]])
        dsphere = np.zeros_like(sphere)
        sphere_w = np.ones(2)
    elif s.n == 2:
        phi = np.arange(s.grid_sphere) * 2 * np.pi / s.grid_sphere
        sphere = np.stack([np.cos(phi), np.sin(phi)], -1)
        dsphere = np.stack([-np.sin(phi), np.cos(phi)], -1)
        sphere_w = np.full(s.grid_sphere, 2 * np.pi / s.grid_sphere)
    else:
        raise ValueError("only n = 1 and n = 2 are supported")
    nb, ns = len(mesh), len(sphere)
    x = np.repeat(mesh, ns, axis=0)
    xi = np.tile(sphere, (nb, 1))
    dxi = np.tile(dsphere, (nb, 1))
    w = np.repeat(base_w, ns) * np.tile(sphere_w, nb)
    # radial cutoff needs s_min, which needs the angular grid: compute locally
    lmat = np.einsum("pj,pjab->pab", xi, np.stack([a(x) for a in s.symbol], 1))
    smin = float(np.linalg.svd(lmat, compute_uv=False).min())
    if s.rho_max is not None:
        rho_max = s.rho_max
    else:
        # a degenerate symbol is reported by validate(); keep the grid finite
        rho_max = 8.0 / smin if smin > 1e-3 else 8.0
    return Grids(x, xi, dxi, w, mesh, base_w, sphere, sphere_w,
                 gauss_legendre_panels(s.R, rho_max, s.grid_radial),
                 gauss_legendre_panels(0.0, rho_max, s.grid_radial))


# ---------------------------------------------------------------------------
# pointwise geometry

def symbol_matrices(s: Scenario, x) -> np.ndarray:
    """A_j(x) stacked on axis -3: shape ``(..., n, N, N)``."""
    return np.stack([a(x) for a in s.symbol], axis=-3)


def eval_L(s: Scenario, x, rho, xi) -> np.ndarray:
    """L(x, rho*Xi) = rho * sum_j Xi_j A_j(x)."""
    xi = np.asarray(xi, dtype=float)
    rho = np.asarray(rho, dtype=float)
    lhat = np.einsum("...j,...jab->...ab", xi, symbol_matrices(s, x))
    return rho[..., None, None] * lhat


def dx_blade(n: int, j: int) -> int:
    """Blade of dx^{j+1} (0-based j)."""
    return blade(n + j)


def eval_eta(s: Scenario, x) -> dict[int, np.ndarray]:
    """Test form at base points ``x``: ``{blade: values}`` in the dx generators."""
    out = {}
    for idx, f in s.eta.components:
        b = blade(*(s.n + i - 1 for i in idx))
        out[b] = out.get(b, 0) + f(x)
    return out


def eval_theta(s: Scenario, x) -> MixedForm:
    """Connection 1-form theta = sum_j dx^j (x) Theta_j(x)."""
    return MixedForm.from_components(s.n, s.p, s.q,
                                     {dx_blade(s.n, j): s.theta[j](x) for j in range(s.n)})


def eval_nabla2(s: Scenario, x) -> MixedForm:
    """Curvature of the pulled-back connection, d(theta) + theta ^ theta."""
    th = eval_theta(s, x)
    comps = {}
    for i in range(s.n):
        for j in range(s.n):
            if i != j:
                b = dx_blade(s.n, i) | dx_blade(s.n, j)
                sign = 1 if i < j else -1
                comps[b] = comps.get(b, 0) + sign * s.theta[j].derivative(i)(x)
    dth = MixedForm.from_components(s.n, s.p, s.q, comps) if comps else MixedForm.zeros(s.n, s.p, s.q)
    return dth + wedge(th, th)


# ---------------------------------------------------------------------------
# validation

_PAR = {}


def _parity(p, q):
    key = (p, q)
    if key not in _PAR:
        g = np.concatenate([np.ones(p), -np.ones(q)])
        _PAR[key] = np.outer(g, g)
    return _PAR[key]


def validate(s: Scenario) -> Scenario:
    """Check every structural invariant on the quadrature grid; return ``s``."""
    if s.n not in (1, 2):
        raise InvariantError(f"base dimension {s.n} unsupported", "dimension")
    if s.p < 0 or s.q < 0 or s.p + s.q == 0:
        raise InvariantError(f"bad ranks p={s.p}, q={s.q}", "ranks")
    if len(s.symbol) != s.n or len(s.theta) != s.n:
        raise InvariantError("symbol and theta need one entry per base direction", "dimension")
    dim = (s.dim, s.dim)
    for f in tuple(s.symbol) + tuple(s.theta):
        if f.n != s.n or f.shape != dim:
            raise InvariantError(f"coefficient shape {f.shape} != {dim}", "ranks")
    if not 0 <= s.eta.degree <= s.n:
        raise InvariantError(f"eta degree {s.eta.degree} exceeds base dimension {s.n}", "eta_degree")
    for idx, f in s.eta.components:
        if (len(idx) != s.eta.degree or list(idx) != sorted(set(idx))
                or any(not 1 <= i <= s.n for i in idx) or f.shape != ()):
            raise InvariantError(f"bad eta component {idx}", "eta_degree")
    if not s.R > 0:
        raise InvariantError("tube radius R must be positive", "R")
    if s.z_circle_radius <= 0 or s.z_circle_radius >= 0.5:
        raise InvariantError("z circle radius must lie in (0, 0.5)", "z_circle_radius")

    par = _parity(s.p, s.q)
    g = s.grids
    mats = symbol_matrices(s, g.base_x)
    for j in range(s.n):
        a = mats[:, j]
        even = np.abs(a * (par > 0)).max(axis=(-1, -2))
        if np.any(even != 0):
            k = int(np.argmax(even))
            raise InvariantError(f"A_{j + 1} has a nonzero even block", "symbol_odd", tuple(g.base_x[k]))
        skew = np.abs(a + np.conj(np.swapaxes(a, -1, -2))).max(axis=(-1, -2))
        if np.any(skew >= 1e-13):
            k = int(np.argmax(skew))
            raise InvariantError(f"A_{j + 1} is not skew-adjoint (|A+A*|={skew[k]:.3g})",
                                 "symbol_skew_adjoint", tuple(g.base_x[k]))
        th = s.theta[j](g.base_x)
        odd = np.abs(th * (par < 0)).max(axis=(-1, -2))
        if np.any(odd != 0):
            k = int(np.argmax(odd))
            raise InvariantError(f"Theta_{j + 1} has a nonzero odd block", "theta_even", tuple(g.base_x[k]))
    lmat = eval_L(s, g.x, 1.0, g.xi)
    sv = np.linalg.svd(lmat, compute_uv=False).min(-1)
    if not sv.min() > 1e-12:
        k = int(np.argmin(sv))
        raise InvariantError("L is not invertible off the zero section", "symbol_invertible",
                             (tuple(g.x[k]), tuple(g.xi[k])))
    return s


# ---------------------------------------------------------------------------
# built-in scenarios

def _odd_unitary_symbol(u):
    """[[0, -u*], [u, 0]] for a square block u."""
    u = np.atleast_2d(np.asarray(u, dtype=complex))
    z = np.zeros_like(u)
    return np.block([[z, -u.conj().T], [u, z]])


def s1_flat(**grid) -> Scenario:
    a = FourierSeries.constant(1, _odd_unitary_symbol(1.0))
    zero = FourierSeries.zero(1, (2, 2))
    return validate(Scenario("S1_FLAT", 1, 1, 1, (a,), (zero,), TestForm.constant(1), **grid))


def s1_winding(m: int = 1, **grid) -> Scenario:
    """A(x) = [[0, -e^{-imx}], [e^{imx}, 0]]."""
    up = np.array([[0, -1], [0, 0]], complex)
    down = np.array([[0, 0], [1, 0]], complex)
    a = FourierSeries.build(1, [((-m,), up), ((m,), down)], (2, 2))
    zero = FourierSeries.zero(1, (2, 2))
    name = "S1_WINDING" if m == 1 else f"S1_WINDING_{m}"
    return validate(Scenario(name, 1, 1, 1, (a,), (zero,), TestForm.constant(1), **grid))


def s1_twisted(m: int = 1, **grid) -> Scenario:
    """Winding symbol with the diagonal connection i diag(0.3 + 0.2 cos x, -0.1) dx."""
    base = s1_winding(m)
    th = FourierSeries.build(1, [((0,), np.diag([0.3j, -0.1j])),
                                 ((1,), np.diag([0.1j, 0])),
                                 ((-1,), np.diag([0.1j, 0]))], (2, 2))
    return validate(dataclasses.replace(base, name="S1_TWISTED", theta=(th,), **grid))


def s1_mixed(**grid) -> Scenario:
    """Rank 2|2 symbol whose square is not scalar and does not commute with dL.

    u(x) = [[e^{ix}, 0.5], [0, 1.5]], A = [[0, -u*], [u, 0]], with the
    connection i diag(0.2 cos x, 0.1 | -0.3, 0.15 sin x) dx.
    """
    e00 = np.zeros((2, 2), complex)
    e00[0, 0] = 1
    const = _odd_unitary_symbol(np.array([[0, 0.5], [0, 1.5]]))
    plus = np.zeros((4, 4), complex)
    plus[2:, :2] = e00                      # e^{ix} in u
    minus = np.zeros((4, 4), complex)
    minus[:2, 2:] = -e00                    # -e^{-ix} in -u*
    a = FourierSeries.build(1, [((0,), const), ((1,), plus), ((-1,), minus)], (4, 4))
    th = FourierSeries.build(1, [((0,), np.diag([0, 0.1j, -0.3j, 0])),
                                 ((1,), np.diag([0.1j, 0, 0, 0.075])),
                                 ((-1,), np.diag([0.1j, 0, 0, -0.075]))], (4, 4))
    return validate(Scenario("S1_MIXED", 1, 2, 2, (a,), (th,), TestForm.constant(1), **grid))


def t2_clifford(with_theta: bool = True, **grid) -> Scenario:
    """Constant anticommuting A_1, A_2 on C^{2|2} over the flat torus.

    A_1 = [[0, -I], [I, 0]], A_2 = [[0, iI], [iI, 0]].  The optional
    connection is Theta_2 = 0.5 i sin(x^1) G with G = diag(1, 0 | 0, 0).
    The default test form is eta = cos(x^1).
    """
    i2 = np.eye(2)
    a1 = _odd_unitary_symbol(i2)
    a2 = _odd_unitary_symbol(1j * i2)
    sym = (FourierSeries.constant(2, a1), FourierSeries.constant(2, a2))
    if with_theta:
        g = np.diag([1, 0, 0, 0]).astype(complex)
        th2 = FourierSeries.build(2, [((1, 0), 0.25 * g), ((-1, 0), -0.25 * g)], (4, 4))  # 0.5 i sin(x1) G
        theta = (FourierSeries.zero(2, (4, 4)), th2)
    else:
        theta = (FourierSeries.zero(2, (4, 4)), FourierSeries.zero(2, (4, 4)))
    eta = TestForm(0, (((), FourierSeries.build(2, [((1, 0), 0.5), ((-1, 0), 0.5)])),))
    defaults = dict(grid_base=8, grid_sphere=8, grid_radial=8, contour_nodes=16)
    defaults.update(grid)
    return validate(Scenario("T2_CLIFFORD", 2, 2, 2, sym, theta, eta, **defaults))


def builtin_scenarios() -> dict[str, Scenario]:
    return {
        "S1_FLAT": s1_flat(),
        "S1_WINDING": s1_winding(1),
        "S1_WINDING_2": s1_winding(2),
        "S1_TWISTED": s1_twisted(),
        "S1_MIXED": s1_mixed(),
        "T2_CLIFFORD": t2_clifford(),
    }


def get_builtin(name: str) -> Scenario:
    table = {
        "S1_FLAT": s1_flat,
        "S1_WINDING": lambda: s1_winding(1),
        "S1_WINDING_2": lambda: s1_winding(2),
        "S1_TWISTED": s1_twisted,
        "S1_MIXED": s1_mixed,
        "T2_CLIFFORD": t2_clifford,
    }
    if name not in table:
        raise KeyError(f"unknown scenario {name!r}; choose from {sorted(table)}")
    return table[name]()


def with_eta(s: Scenario, degree: int, components: Sequence | None = None, **changes) -> Scenario:
    """Copy of ``s`` with a different test form.

    ``components`` is a list of ``(index tuple, FourierSeries or constant)``;
    by default eta is the constant form dx^1 ^ ... ^ dx^degree.
    """
    if components is None:
        eta = TestForm.constant(s.n, degree)
    else:
        comps = []
        for idx, f in components:
            if not isinstance(f, FourierSeries):
                f = FourierSeries.constant(s.n, f)
            comps.append((tuple(idx), f))
        eta = TestForm(degree, tuple(comps))
    return validate(dataclasses.replace(s, eta=eta, **changes))


# ---------------------------------------------------------------------------
# config files

def _c2j(c: complex):
    return [float(c.real), float(c.imag)]


def _mat2j(m: np.ndarray):
    if m.ndim == 0:
        return _c2j(complex(m))
    return [_mat2j(r) for r in m]


def _j2mat(v, shape, where):
    try:
        a = np.array(v, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: malformed numeric entry") from exc
    if a.shape != tuple(shape) + (2,):
        raise ConfigError(f"{where}: expected shape {tuple(shape) + (2,)} of [re, im] pairs, got {a.shape}")
    return a[..., 0] + 1j * a[..., 1]


def _series2j(f: FourierSeries):
    return [{"freq": list(freq), "coeff": _mat2j(c)} for freq, c in f.terms]


def _j2series(v, n, shape, where):
    if not isinstance(v, list):
        raise ConfigError(f"{where}: expected a list of Fourier terms")
    terms = []
    for i, t in enumerate(v):
        try:
            freq, coeff = t["freq"], t["coeff"]
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"{where}[{i}]: needs 'freq' and 'coeff'") from exc
        terms.append((freq, _j2mat(coeff, shape, f"{where}[{i}].coeff")))
    return FourierSeries.build(n, terms, shape)


_GRID_FIELDS = ("grid_base", "grid_sphere", "grid_radial", "contour_nodes", "z_circle_nodes",
                "z_circle_radius", "rho_max")


def scenario_to_dict(s: Scenario) -> dict:
    return {
        "name": s.name,
        "n": s.n,
        "p": s.p,
        "q": s.q,
        "symbol": [_series2j(f) for f in s.symbol],
        "theta": [_series2j(f) for f in s.theta],
        "eta": {"degree": s.eta.degree,
                "components": [{"indices": list(idx), "terms": _series2j(f)} for idx, f in s.eta.components]},
        "R": s.R,
        **{k: getattr(s, k) for k in _GRID_FIELDS},
    }


def scenario_from_dict(d: dict, check: bool = True) -> Scenario:
    try:
        n, p, q = int(d["n"]), int(d["p"]), int(d["q"])
        dim = (p + q, p + q)
        symbol = tuple(_j2series(v, n, dim, f"symbol[{j}]") for j, v in enumerate(d["symbol"]))
        theta = tuple(_j2series(v, n, dim, f"theta[{j}]") for j, v in enumerate(d["theta"]))
        e = d["eta"]
        comps = tuple((tuple(int(i) for i in c["indices"]), _j2series(c["terms"], n, (), f"eta.components[{k}]"))
                      for k, c in enumerate(e["components"]))
        eta = TestForm(int(e["degree"]), comps)
        extra = {k: d[k] for k in _GRID_FIELDS if k in d}
        s = Scenario(str(d.get("name", "custom")), n, p, q, symbol, theta, eta, R=float(d.get("R", 1.0)), **extra)
    except KeyError as exc:
        raise ConfigError(f"missing field {exc}") from exc
    return validate(s) if check else s


def dump_scenario(s: Scenario, path) -> None:
    Path(path).write_text(json.dumps(scenario_to_dict(s), indent=1))


def load_scenario(path, check: bool = True) -> Scenario:
    text = Path(path).read_text()
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(d, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return scenario_from_dict(d, check=check)
