"""Series terms, entire factors, meromorphic continuation and residues.

At a point of T*M at radius rho the curvature splits as

    nabla_L^2 = rho^2 Lhat^2 + P + S + H + F

with the letters scaling like rho^0, rho^1, rho^1, rho^0.  Expanding the
resolvent of the complex power in the nilpotent letters gives words

    (-1)^k B^{-1} X_1 B^{-1} ... X_k B^{-1},   B = lambda + rho^2 Lhat^2,

and after lambda = rho^2 sigma a word with l letters H (and n-1 letters S)
carries exactly the radial power rho^{-2(z+k)+n+l-1}.  Integrating over
rho >= R leaves

    R^{-2(z+k)+n+l} / (2(z+k)-n-l) * phi_V(z)

where phi_V collects the sigma-integral of the word at rho = 1, wedged with
eta, supertraced and integrated over base and fiber sphere.  phi_V is
entire; it is evaluated by the same vertical-contour rule as
:mod:`reschern.holocalc`, with the closed-form Laurent tail continuing it to
the whole plane.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import PoleError
from .geometry import Scenario, eval_eta
from .holocalc import FormContour, PowerEvaluator, contour_for_spectrum, tail_kernel
from .superalgebra import MixedForm, supertrace, top_blade, wedge, wedge_sign
from .superconnection import curvature

__all__ = [
    "SeriesTerm",
    "enumerate_terms",
    "PhiFactor",
    "phi_factors",
    "phi_V",
    "MeromorphicIntegral",
    "build_integral",
    "meromorphic_eval",
    "gamma",
    "residue_at",
    "ResidueEntry",
    "rhs_pairing",
    "residue_sum",
    "odd_kappa_check",
    "simple_pole_certificate",
    "cancellation_limit",
    "direct_integral",
]

LETTERS = "FHPS"


@dataclass(frozen=True)
class SeriesTerm:
    """One word of the resolvent expansion, e.g. ``SeriesTerm(1, "HP")``."""

    n: int
    word: str

    def __post_init__(self):
        if set(self.word) - set(LETTERS):
            raise ValueError(f"word {self.word!r} uses letters outside {LETTERS}")

    @property
    def k(self) -> int:
        return len(self.word)

    @property
    def l(self) -> int:  # noqa: E743
        return self.word.count("H")

    @property
    def counts(self) -> dict[str, int]:
        return {c: self.word.count(c) for c in LETTERS}

    @property
    def form_degree(self) -> int:
        return 2 * self.k - self.n - self.l

    @property
    def pole(self) -> Fraction:
        return Fraction(self.n + self.l, 2) - self.k

    def radial_exponent(self, z):
        """Exponent of R after the radial integral, -2(z+k)+n+l."""
        return -2 * (z + self.k) + self.n + self.l

    def admissible(self, kappa: int) -> bool:
        c = self.counts
        return (c["P"] == 1 and c["S"] == self.n - 1
                and kappa + 2 * self.k - self.l == 3 * self.n)


def enumerate_terms(n: int, kappa: int, max_k: int | None = None) -> list[SeriesTerm]:
    """Admissible words for a test form of degree ``kappa``, sorted by (k, word)."""
    if not 0 <= kappa <= n:
        raise ValueError(f"test-form degree {kappa} outside 0..{n}")
    if max_k is None:
        max_k = 3 * n
    out = []
    for k in range(1, max_k + 1):
        l = kappa + 2 * k - 3 * n  # noqa: E741
        f = k - n - l
        if l < 0 or f < 0:
            continue
        letters = "P" + "S" * (n - 1) + "H" * l + "F" * f
        for w in sorted(set(itertools.permutations(letters))):
            out.append(SeriesTerm(n, "".join(w)))
    return out


# ---------------------------------------------------------------------------
# entire factors

def _right_diag(y: np.ndarray, support, d: np.ndarray) -> np.ndarray:
    """Multiply the supported blade coefficients of ``y`` on the right by diag(d)."""
    out = np.zeros(np.broadcast_shapes(y.shape[:-3], d.shape[:-1]) + y.shape[-3:], complex)
    idx = sorted(support)
    if idx:
        out[..., idx, :, :] = y[..., idx, :, :] * d[..., None, None, :]
    return out


def _even_eigh(a: np.ndarray, p: int):
    """Eigen-decomposition of a Hermitian even matrix, block by block.

    Returns eigenvalues ``(..., N)`` and a block-diagonal unitary ``U`` with
    ``a = U diag(mu) U^*``.
    """
    N = a.shape[-1]
    mu = np.empty(a.shape[:-1])
    U = np.zeros(a.shape, complex)
    for blk in (slice(0, p), slice(p, N)):
        if blk.start == blk.stop:
            continue
        sub = a[..., blk, blk]
        sub = 0.5 * (sub + np.conj(np.swapaxes(sub, -1, -2)))
        w, v = np.linalg.eigh(sub)
        mu[..., blk] = w
        U[..., blk, blk] = v
    return mu, U


def _paired(n: int, p: int, eta: dict, coeffs: np.ndarray) -> np.ndarray:
    """Supertraced top coefficient of eta ^ form, touching only the needed blades."""
    top = top_blade(n)
    out = 0
    for b, v in eta.items():
        comp = top ^ b
        out = out + wedge_sign(b, comp) * v * supertrace(coeffs[..., comp, :, :], p)
    return out


def _trie(words):
    """Nested dict prefix tree; the key None marks a complete word."""
    root: dict = {}
    for w in words:
        node = root
        for c in w:
            node = node.setdefault(c, {})
        node[None] = w
    return root


@dataclass
class PhiFactor:
    """phi_V for one word, stored as contour node values and Laurent moments.

    ``phi(z) = rho^{2(z+k)-n-l+1} [sum_t w_t lambda_t^{-z} g_t
    + sum_J K_J(z) m_J]`` with K_J the closed-form tail kernel.  ``rho`` is
    the sphere the data were sampled on; for rho = 1 the prefactor is 1.
    """

    term: SeriesTerm
    contour: FormContour
    lam: np.ndarray
    weights: np.ndarray
    g: np.ndarray
    moments: np.ndarray
    rho: float = 1.0
    pointwise_max: float = 0.0

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        zz = z[..., None]
        quad = np.sum(self.weights * self.g * np.exp(-zz * np.log(self.lam)), -1)
        J = np.arange(1, len(self.moments) + 1)
        tail = np.sum(tail_kernel(self.contour, zz, J) * self.moments, -1)
        val = quad + tail
        if self.rho != 1.0:
            t = self.term
            val = val * np.exp((2 * (z + t.k) - t.n - t.l + 1) * math.log(self.rho))
        return val[()] if val.ndim == 0 else val

    def tail_size(self, z) -> float:
        J = np.arange(1, len(self.moments) + 1)
        return float(abs(np.sum(tail_kernel(self.contour, complex(z), J) * self.moments)))


def phi_factors(s: Scenario, terms, rho: float = 1.0, panel_nodes: int | None = None,
                laurent_terms: int | None = None, chunk: int | None = None) -> list[PhiFactor]:
    """Sample every word of ``terms`` on the sphere of radius ``rho``.

    One pass over the base x sphere grid computes, for all words at once
    (sharing prefixes), the eta-paired supertraced top coefficient at every
    contour node and every Laurent order, reduced with the grid weights.
    """
    terms = list(terms)
    if not terms:
        return []
    n, p, q = s.n, s.p, s.q
    panel_nodes = panel_nodes or s.contour_nodes
    contour = contour_for_spectrum(s.s_min ** 2 * rho ** 2, s.s_max ** 2 * rho ** 2, panel_nodes)
    lam, w = contour.nodes()
    kmax = max(t.k for t in terms)
    if laurent_terms is None:
        ratio = s.s_max ** 2 * rho ** 2 / abs(contour.top)
        laurent_terms = int(math.ceil(math.log(1e-20) / math.log(ratio))) + kmax + 4
    K = laurent_terms
    g = s.grids
    eta_all = eval_eta(s, g.x)
    words = [t.word for t in terms]
    acc_g = {wd: np.zeros(len(lam), complex) for wd in words}
    acc_m = {wd: np.zeros(K, complex) for wd in words}
    pmax = {wd: 0.0 for wd in words}
    trie = _trie(words)
    npts = len(g.w)
    if chunk is None:
        chunk = max(1, 16384 // len(lam))
    nb = 1 << 2 * n
    for lo in range(0, npts, chunk):
        sl = slice(lo, lo + chunk)
        x, xi, gw = g.x[sl], g.xi[sl], g.w[sl]
        pc = len(gw)
        d = curvature(s, x, np.full(pc, rho), xi)
        # -Q = -Lhat^2 is even and positive definite; in its block eigenbasis
        # B^{-1} is diagonal and the supertrace is unchanged
        mu, U = _even_eigh(-d.lsq.degree0(), p)                   # (pc, N), (pc, N, N)
        Uh = np.conj(np.swapaxes(U, -1, -2))
        letters = {}
        for key, X in d.letters().items():
            xc = np.broadcast_to(X.coeffs, (pc,) + X.coeffs.shape[-3:])
            c = np.zeros(xc.shape, complex)
            idx = sorted(X.support)
            c[:, idx] = Uh[:, None] @ xc[:, idx] @ U[:, None]
            letters[key] = X._like(c, X.support)
        dinv = 1.0 / (lam[:, None, None] - mu[None])               # (M, pc, N)
        # Laurent coefficients of B^{-1}: T_J = (-Q)^{J-1} = diag(mu^{J-1}), J = 1..K
        tl = np.zeros((K, pc, nb, p + q, p + q), complex)
        diag = np.arange(p + q)
        tl[:, :, 0, diag, diag] = mu[None] ** np.arange(K)[:, None, None]
        eta = {b: v[sl] for b, v in eta_all.items()}
        y0 = np.zeros((len(lam), pc, nb, p + q, p + q), complex)
        y0[:, :, 0, diag, diag] = dinv
        mud = mu[:, None, None, :]

        def visit(node, y, ysup, tlaur, tsup, depth):
            for key, child in node.items():
                if key is None:
                    sign = -1.0 if depth % 2 else 1.0
                    wy = _paired(n, p, eta, y)                  # (M, pc)
                    wt = _paired(n, p, eta, tlaur)              # (K, pc)
                    acc_g[child] += sign * (wy @ gw)
                    acc_m[child] += sign * (wt @ gw)
                    pmax[child] = max(pmax[child], float(np.max(np.abs(wy), initial=0.0)))
                    continue
                X = letters[key]
                if not X.support:
                    zero = np.zeros_like(y)
                    visit(child, zero, frozenset(), np.zeros_like(tlaur), frozenset(), depth + 1)
                    continue
                sy = wedge(MixedForm(n, p, q, y, ysup), X[None])
                ny = _right_diag(sy.coeffs, sy.support, dinv)
                st = wedge(MixedForm(n, p, q, tlaur, tsup), X[None])
                # convolution with the B^{-1} series: new_J = S_{J-1} + new_{J-1} (-Q)
                nt = np.zeros_like(st.coeffs)
                idx = sorted(st.support)
                for J in range(1, K):
                    nt[J][:, idx] = st.coeffs[J - 1][:, idx] + nt[J - 1][:, idx] * mud
                visit(child, ny, sy.support, nt, st.support, depth + 1)

        visit(trie, y0, frozenset({0}), tl, frozenset({0}), 0)
    out = []
    for t in terms:
        out.append(PhiFactor(t, contour, lam, w, acc_g[t.word], acc_m[t.word], float(rho),
                             pmax[t.word]))
    return out


def phi_V(s: Scenario, term: SeriesTerm, z, rho: float = 1.0) -> complex:
    """Entire factor of a single term at ``z`` (samples the grid on every call)."""
    return phi_factors(s, [term], rho)[0](z)


# ---------------------------------------------------------------------------
# Gamma

_LANCZOS_G = 7
_LANCZOS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)


def _gamma_right(z):
    z = z - 1
    x = _LANCZOS[0] + sum(c / (z + i) for i, c in enumerate(_LANCZOS[1:], 1))
    t = z + _LANCZOS_G + 0.5
    return math.sqrt(2 * math.pi) * np.exp((z + 0.5) * np.log(t) - t) * x


def gamma(z):
    """Gamma function: Lanczos approximation with reflection for Re z < 1/2.

    Accepts scalars or arrays; raises :class:`PoleError` at non-positive
    integers.
    """
    arr = np.asarray(z, dtype=complex)
    bad = (arr.imag == 0) & (arr.real <= 0) & (arr.real == np.round(arr.real))
    if np.any(bad):
        raise PoleError("Gamma has a pole here", complex(arr[bad].flat[0]))
    left = arr.real < 0.5
    out = np.empty_like(arr)
    if np.any(~left):
        out[~left] = _gamma_right(arr[~left])
    if np.any(left):
        zl = arr[left]
        out[left] = np.pi / (np.sin(np.pi * zl) * _gamma_right(1 - zl))
    return out[()] if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# meromorphic integral

@dataclass
class MeromorphicIntegral:
    """z -> int_{X_R} tr_s eta ^ [(-nabla_L^2)^{-z}]_{2n-kappa} as a sum over words."""

    factors: list[PhiFactor]
    R: float
    kappa: int
    n: int

    @property
    def terms(self) -> list[SeriesTerm]:
        return [f.term for f in self.factors]

    @property
    def poles(self) -> set[Fraction]:
        return {t.pole for t in self.terms}

    def with_R(self, R: float) -> "MeromorphicIntegral":
        return MeromorphicIntegral(self.factors, float(R), self.kappa, self.n)

    def term_values(self, z):
        z = np.asarray(z, dtype=complex)
        vals = []
        for f in self.factors:
            t = f.term
            z0 = complex(t.pole)
            if np.any(z == z0):
                raise PoleError(f"z = {t.pole} is a pole of the term {t.word}", z0)
            e = t.radial_exponent(z)
            vals.append(np.exp(e * math.log(self.R)) / (-e) * f(z))
        return vals

    def __call__(self, z):
        vals = self.term_values(z)
        if not vals:
            return np.zeros(np.shape(z), complex)[()]
        return sum(vals)


def build_integral(s: Scenario, R: float | None = None, kappa: int | None = None,
                   rho: float = 1.0, max_k: int | None = None) -> MeromorphicIntegral:
    kappa = s.kappa if kappa is None else kappa
    terms = enumerate_terms(s.n, kappa, max_k)
    return MeromorphicIntegral(phi_factors(s, terms, rho), float(s.R if R is None else R),
                               kappa, s.n)


def meromorphic_eval(integral: MeromorphicIntegral, z):
    return integral(z)


def residue_at(f, z0, radius: float = 0.25, nodes: int = 64) -> complex:
    """(1/2 pi i) times the integral of f around the circle |z - z0| = radius.

    ``f`` is called once with the array of circle points.
    """
    if not radius > 0:
        raise ValueError("radius must be positive")
    u = np.exp(2j * np.pi * np.arange(nodes) / nodes)
    zs = complex(z0) + radius * u
    vals = np.asarray(f(zs), dtype=complex)
    return complex(np.mean(vals * radius * u))


def _gamma_times(integral: MeromorphicIntegral):
    return lambda z: gamma(z) * integral(z)


def odd_kappa_check(s: Scenario, kappa: int | None = None) -> float:
    """Largest pointwise |supertraced word| over admissible odd-degree terms."""
    kappa = s.kappa if kappa is None else kappa
    terms = enumerate_terms(s.n, kappa)
    facs = phi_factors(s, terms)
    return max((f.pointwise_max for f in facs), default=0.0)


def rhs_pairing(s: Scenario, R: float | None = None, integral: MeromorphicIntegral | None = None,
                radius: float | None = None, nodes: int | None = None) -> complex:
    """Residue of Gamma(z) I(z) at z = kappa/2 - n.

    For odd kappa the admissible words are checked to vanish pointwise
    and 0 is returned.
    """
    kappa = s.kappa if integral is None else integral.kappa
    radius = s.z_circle_radius if radius is None else radius
    nodes = s.z_circle_nodes if nodes is None else nodes
    if kappa % 2:
        if integral is None:
            bound = odd_kappa_check(s, kappa)
        else:
            bound = max((f.pointwise_max for f in integral.factors), default=0.0)
        if bound > 1e-12:
            raise ArithmeticError(f"odd-degree words do not vanish (max {bound:.3g})")
        return 0j
    if integral is None:
        integral = build_integral(s, R)
    elif R is not None:
        integral = integral.with_R(R)
    z0 = Fraction(kappa, 2) - s.n
    return residue_at(_gamma_times(integral), complex(z0), radius, nodes)


@dataclass(frozen=True)
class ResidueEntry:
    pole: Fraction
    residue: complex
    R_exponent: Fraction


def residue_sum(s: Scenario, R: float | None = None, z_min: int = -20,
                integral: MeromorphicIntegral | None = None, radius: float | None = None,
                nodes: int | None = None) -> tuple[complex, list[ResidueEntry]]:
    """Sum of the residues of Gamma(z) I_R(z) over poles in [z_min, 0]."""
    if integral is None:
        integral = build_integral(s, R)
    elif R is not None:
        integral = integral.with_R(R)
    radius = s.z_circle_radius if radius is None else radius
    nodes = s.z_circle_nodes if nodes is None else nodes
    z0 = Fraction(integral.kappa, 2) - integral.n
    poles = {Fraction(m) for m in range(0, z_min - 1, -1)}
    if z0 >= z_min:
        poles.add(z0)
    f = _gamma_times(integral)
    table = []
    for pole in sorted(poles, reverse=True):
        res = residue_at(f, complex(pole), radius, nodes)
        table.append(ResidueEntry(pole, res, -2 * (pole - z0)))
    return complex(sum(e.residue for e in table)), table


# ---------------------------------------------------------------------------
# pole diagnostics

def simple_pole_certificate(f: PhiFactor | MeromorphicIntegral, z0, steps=(1, 2, 3, 4)):
    """Values of (z - z0) f(z) along z0 + 10^{-j}.

    For a :class:`PhiFactor` the term's radial factor 1/(2(z - z0)) with
    R = 1 is applied, so both inputs describe a meromorphic function.
    Returns the list of products; a simple pole shows a bounded,
    converging sequence.
    """
    z0 = complex(z0)
    zs = np.array([z0 + 10.0 ** (-j) for j in steps])
    if isinstance(f, PhiFactor):
        vals = f(zs) / (2 * (zs - z0))
    else:
        vals = f(zs)
    return list((zs - z0) * vals)


def cancellation_limit(f: PhiFactor, z0, h: float = 1e-2) -> complex:
    """lim_{z -> z0} Gamma(z) phi(z) by Richardson-extrapolated symmetric averages."""
    z0 = complex(z0)

    def avg(hh):
        zs = np.array([z0 + hh, z0 - hh])
        return complex(np.mean(gamma(zs) * f(zs)))

    a1, a2 = avg(h), avg(h / 2)
    return (4 * a2 - a1) / 3


def direct_integral(s: Scenario, z, R: float | None = None, radial_nodes: int = 24,
                    panel_nodes: int | None = None) -> complex:
    """int_{X_R} tr_s eta ^ (-nabla_L^2)^{-z} by two-stage quadrature, Re z large.

    The inner stage is the contour complex power of :mod:`reschern.holocalc`
    at each point; the outer stage maps rho = R/u and uses Gauss-Legendre
    in u on (0, 1], so the polynomial decay in rho becomes a polynomial in u.
    """
    R = float(s.R if R is None else R)
    z = complex(z)
    panel_nodes = panel_nodes or s.contour_nodes
    g = s.grids
    eta = eval_eta(s, g.x)
    u, wu = np.polynomial.legendre.leggauss(radial_nodes)
    u, wu = 0.5 * (u + 1), 0.5 * wu
    total = 0j
    for uj, wj in zip(u, wu):
        rho = R / uj
        d = curvature(s, g.x, np.full(len(g.w), rho), g.xi)
        pw = PowerEvaluator(d, panel_nodes=panel_nodes)(z)
        dens = _paired(s.n, s.p, eta, pw.coeffs)
        total += wj * R / uj ** 2 * np.sum(dens * g.w)
    return complex(total)
