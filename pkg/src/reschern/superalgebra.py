"""Z2-graded exterior algebra with super-matrix coefficients.

Elements are mixed differential forms on the 2n-dimensional total space
T*M with coefficients in End(C^{p|q}).  Generators are numbered

    0            d(rho)
    1 .. n-1     d(Xi^1) .. d(Xi^{n-1})     (angular fiber coordinates)
    n .. 2n-1    d(x^1) .. d(x^n)           (base coordinates)

and a multi-index is stored as a bitmask ("blade"), whose canonical order is
increasing generator number.  Products follow the super-sign rule

    (w (x) A) (v (x) B) = (-1)^{|A| deg v} (w ^ v) (x) AB .

Coefficients are kept in a dense array of shape ``(..., 2**(2n), N, N)``
together with the set of blades that may be nonzero; products only visit
supported blade pairs, so sparse factors stay cheap.  Leading axes are batch
axes and broadcast like numpy arrays.
"""
from __future__ import annotations

import math
from functools import lru_cache
from typing import Iterable, Mapping

import numpy as np
import scipy.linalg

from .errors import SingularityError, StructureError

__all__ = [
    "SuperMatrix",
    "MixedForm",
    "supertrace",
    "supertrace_form",
    "wedge",
    "degree_part",
    "exp_form",
    "invert_degree0_dominant",
    "blade",
    "blade_degree",
    "wedge_sign",
    "top_blade",
    "generator_labels",
    "left_regular",
    "from_left_regular",
]


# ---------------------------------------------------------------------------
# multi-indices

def blade(*generators: int) -> int:
    """Bitmask of a set of distinct generators."""
    b = 0
    for g in generators:
        if b >> g & 1:
            raise ValueError(f"repeated generator {g}")
        b |= 1 << g
    return b


def blade_degree(b: int) -> int:
    return bin(b).count("1")


@lru_cache(maxsize=None)
def wedge_sign(i: int, j: int) -> int:
    """Sign of e_I ^ e_J relative to e_{I|J}; 0 if the blades overlap."""
    if i & j:
        return 0
    swaps = 0
    for g in range(j.bit_length()):
        if j >> g & 1:
            swaps += blade_degree(i >> (g + 1))
    return -1 if swaps % 2 else 1


def top_blade(n: int) -> int:
    return (1 << (2 * n)) - 1


def generator_labels(n: int) -> list[str]:
    return ["drho"] + [f"dXi{j}" for j in range(1, n)] + [f"dx{j}" for j in range(1, n + 1)]


@lru_cache(maxsize=None)
def _degree_table(n: int) -> np.ndarray:
    return np.array([blade_degree(b) for b in range(1 << (2 * n))])


@lru_cache(maxsize=None)
def _parity_mask(p: int, q: int) -> np.ndarray:
    """+1 on the diagonal blocks, -1 on the off-diagonal blocks."""
    g = np.concatenate([np.ones(p), -np.ones(q)])
    m = np.outer(g, g)
    m.setflags(write=False)
    return m


# ---------------------------------------------------------------------------
# super-matrices

class SuperMatrix:
    """A (p+q) x (p+q) complex matrix with even rank p and odd rank q."""

    __slots__ = ("p", "q", "entries")

    def __init__(self, entries, p: int, q: int):
        entries = np.array(entries, dtype=complex)
        if entries.shape[-2:] != (p + q, p + q):
            raise StructureError(f"expected a {(p + q, p + q)} matrix, got {entries.shape}")
        entries.setflags(write=False)
        self.p, self.q, self.entries = p, q, entries

    def even_part(self) -> "SuperMatrix":
        return SuperMatrix(self.entries * (_parity_mask(self.p, self.q) > 0), self.p, self.q)

    def odd_part(self) -> "SuperMatrix":
        return SuperMatrix(self.entries * (_parity_mask(self.p, self.q) < 0), self.p, self.q)

    def is_odd(self, atol: float = 0.0) -> bool:
        return bool(np.all(np.abs(self.entries * (_parity_mask(self.p, self.q) > 0)) <= atol))

    def is_even(self, atol: float = 0.0) -> bool:
        return bool(np.all(np.abs(self.entries * (_parity_mask(self.p, self.q) < 0)) <= atol))

    def supertrace(self):
        return supertrace(self.entries, self.p)

    def __matmul__(self, other: "SuperMatrix") -> "SuperMatrix":
        return SuperMatrix(self.entries @ other.entries, self.p, self.q)

    def __add__(self, other: "SuperMatrix") -> "SuperMatrix":
        return SuperMatrix(self.entries + other.entries, self.p, self.q)

    def __sub__(self, other: "SuperMatrix") -> "SuperMatrix":
        return SuperMatrix(self.entries - other.entries, self.p, self.q)

    def __eq__(self, other):
        return (isinstance(other, SuperMatrix) and (self.p, self.q) == (other.p, other.q)
                and np.array_equal(self.entries, other.entries))

    def __repr__(self):
        return f"SuperMatrix(p={self.p}, q={self.q}, entries={self.entries!r})"


def supertrace(entries: np.ndarray, p: int):
    """Trace of the even block minus trace of the odd block (batched)."""
    d = np.diagonal(entries, axis1=-2, axis2=-1)
    return d[..., :p].sum(-1) - d[..., p:].sum(-1)


# ---------------------------------------------------------------------------
# mixed forms

class MixedForm:
    """Mixed form with super-matrix coefficients, possibly batched.

    Parameters
    ----------
    n : int
        Base dimension; the algebra has 2n generators.
    p, q : int
        Even and odd ranks.
    coeffs : ndarray, shape ``(..., 2**(2n), p+q, p+q)``
    support : iterable of int, optional
        Blades that may be nonzero.  Defaults to all blades.
    """

    __slots__ = ("n", "p", "q", "coeffs", "support")

    def __init__(self, n: int, p: int, q: int, coeffs, support: Iterable[int] | None = None):
        coeffs = np.asarray(coeffs, dtype=complex)
        nb, dim = 1 << (2 * n), p + q
        if coeffs.shape[-3:] != (nb, dim, dim):
            raise StructureError(f"coefficient array has shape {coeffs.shape}, "
                                 f"expected (..., {nb}, {dim}, {dim})")
        if support is None:
            support = range(nb)
        self.n, self.p, self.q = n, p, q
        self.coeffs = coeffs
        self.support = frozenset(support)

    # -- constructors -------------------------------------------------------
    @classmethod
    def zeros(cls, n, p, q, batch=()):
        return cls(n, p, q, np.zeros(tuple(batch) + (1 << 2 * n, p + q, p + q), complex), ())

    @classmethod
    def from_components(cls, n, p, q, components: Mapping[int, np.ndarray]):
        """Build from ``{blade: matrix}``; matrices may carry batch axes."""
        if not components:
            return cls.zeros(n, p, q)
        batch = np.broadcast_shapes(*(np.shape(m)[:-2] for m in components.values()))
        out = np.zeros(batch + (1 << 2 * n, p + q, p + q), complex)
        for b, m in components.items():
            out[..., b, :, :] = m
        return cls(n, p, q, out, components.keys())

    @classmethod
    def scalar(cls, n, p, q, matrix):
        """Degree-zero form ``1 (x) matrix``."""
        return cls.from_components(n, p, q, {0: matrix})

    @classmethod
    def identity(cls, n, p, q):
        return cls.scalar(n, p, q, np.eye(p + q))

    # -- basic accessors ----------------------------------------------------
    @property
    def batch_shape(self):
        return self.coeffs.shape[:-3]

    @property
    def dim(self):
        return self.p + self.q

    def component(self, b: int) -> np.ndarray:
        return self.coeffs[..., b, :, :]

    def _like(self, coeffs, support):
        return MixedForm(self.n, self.p, self.q, coeffs, support)

    def _check(self, other: "MixedForm"):
        if (self.n, self.p, self.q) != (other.n, other.p, other.q):
            raise StructureError(f"algebra mismatch: (n,p,q)={(self.n, self.p, self.q)} "
                                 f"vs {(other.n, other.p, other.q)}")

    # -- linear structure ---------------------------------------------------
    def __add__(self, other):
        if not isinstance(other, MixedForm):
            return NotImplemented
        self._check(other)
        return self._like(self.coeffs + other.coeffs, self.support | other.support)

    def __sub__(self, other):
        if not isinstance(other, MixedForm):
            return NotImplemented
        self._check(other)
        return self._like(self.coeffs - other.coeffs, self.support | other.support)

    def __neg__(self):
        return self._like(-self.coeffs, self.support)

    def __mul__(self, c):
        c = np.asarray(c)
        if c.ndim:
            c = c[..., None, None, None]
        return self._like(self.coeffs * c, self.support)

    __rmul__ = __mul__

    def __matmul__(self, other):
        return wedge(self, other)

    def __getitem__(self, idx):
        """Index the batch axes."""
        if not isinstance(idx, tuple):
            idx = (idx,)
        return self._like(self.coeffs[idx + (slice(None),) * 3], self.support)

    def twisted(self) -> np.ndarray:
        """Coefficients conjugated by the grading operator (odd blocks negated)."""
        return self.coeffs * _parity_mask(self.p, self.q)

    def degree0(self) -> np.ndarray:
        return self.coeffs[..., 0, :, :]

    def nilpotent_part(self) -> "MixedForm":
        c = self.coeffs.copy()
        c[..., 0, :, :] = 0
        return self._like(c, self.support - {0})

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.coeffs), initial=0.0))

    def allclose(self, other, atol=1e-12):
        self._check(other)
        return bool(np.max(np.abs(self.coeffs - other.coeffs), initial=0.0) <= atol)

    def __repr__(self):
        return (f"MixedForm(n={self.n}, p={self.p}, q={self.q}, batch={self.batch_shape}, "
                f"support={sorted(self.support)})")


@lru_cache(maxsize=4096)
def _pair_plan(nbits: int, sa: frozenset, sb: frozenset):
    """Index arrays for the supported, non-overlapping blade pairs, grouped by product blade."""
    pairs = sorted(((i | j, i, j) for i in sa for j in sb if not i & j))
    if not pairs:
        return None
    k = np.array([t[0] for t in pairs])
    i = np.array([t[1] for t in pairs])
    j = np.array([t[2] for t in pairs])
    odd = np.array([blade_degree(t[2]) % 2 == 1 for t in pairs])
    sign = np.array([wedge_sign(t[1], t[2]) for t in pairs], dtype=float)
    starts = np.flatnonzero(np.r_[True, k[1:] != k[:-1]])
    return i, j, odd, sign, starts, k[starts]


def wedge(a: MixedForm, b: MixedForm) -> MixedForm:
    """Super-graded product of two mixed forms."""
    a._check(b)
    batch = np.broadcast_shapes(a.batch_shape, b.batch_shape)
    nb, dim = 1 << (2 * a.n), a.dim
    out = np.zeros(batch + (nb, dim, dim), complex)
    plan = _pair_plan(2 * a.n, a.support, b.support)
    if plan is None:
        return MixedForm(a.n, a.p, a.q, out, ())
    i, j, odd, sign, starts, ks = plan
    left = a.coeffs[..., i, :, :]
    if odd.any():
        # super-sign: odd blocks of A pick up (-1)^{deg eta} for odd eta
        left[..., odd, :, :] *= _parity_mask(a.p, a.q)
    prod = left @ b.coeffs[..., j, :, :]
    prod *= sign[:, None, None]
    out[..., ks, :, :] = np.add.reduceat(prod, starts, axis=-3)
    return MixedForm(a.n, a.p, a.q, out, set(ks.tolist()))


def supertrace_form(a: MixedForm) -> np.ndarray:
    """Apply the supertrace blade-wise; returns complex array ``(..., 2**(2n))``."""
    return supertrace(a.coeffs, a.p)


def degree_part(a: MixedForm, k: int) -> MixedForm:
    """Keep only the coefficients of form degree ``k``."""
    if not 0 <= k <= 2 * a.n:
        raise ValueError(f"degree {k} outside 0..{2 * a.n}")
    keep = _degree_table(a.n) == k
    return a._like(a.coeffs * keep[:, None, None], {b for b in a.support if keep[b]})


def _norm_bound(x: MixedForm) -> float:
    """Submultiplicative bound: sum over blades of Frobenius norms, maxed over the batch."""
    if not x.support:
        return 0.0
    fro = np.sqrt(np.sum(np.abs(x.coeffs) ** 2, axis=(-1, -2))).sum(-1)
    return float(np.max(fro))


def exp_form(x: MixedForm, tol: float = 1e-17) -> MixedForm:
    """Exponential by scaling and squaring with a Taylor core.

    The scalar part mu = tr(X0)/N is shifted out first, exp(X) = e^mu exp(X - mu).
    If the shifted degree-zero part vanishes to round-off, the remainder is
    nilpotent and its series terminates after 2n terms, which is summed
    exactly.  Otherwise the scaling exponent brings the norm bound below 1/2
    and the Taylor order is the smallest whose remainder bound is below ``tol``.
    """
    dim = x.dim
    mu = np.trace(x.degree0(), axis1=-2, axis2=-1) / dim
    c = x.coeffs.copy()
    c[..., 0, :, :] -= mu[..., None, None] * np.eye(dim)
    y = x._like(c, x.support)
    one = MixedForm(x.n, x.p, x.q,
                    np.broadcast_to(MixedForm.identity(x.n, x.p, x.q).coeffs, x.coeffs.shape), {0})
    resid = np.max(np.abs(c[..., 0, :, :]), initial=0.0)
    scale = max(1.0, float(np.max(np.abs(mu), initial=0.0)))
    if resid <= 8 * np.finfo(float).eps * scale:
        nil = y.nilpotent_part()
        acc = one
        for j in range(2 * x.n, 0, -1):
            acc = one + wedge(nil, acc) * (1.0 / j)
    else:
        nrm = _norm_bound(y)
        s = max(0, math.ceil(math.log2(nrm / 0.5))) if nrm > 0.5 else 0
        y = y * (0.5 ** s)
        theta = nrm * 0.5 ** s
        order = 1
        while theta ** (order + 1) / math.factorial(order + 1) * math.exp(theta) > tol:
            order += 1
        # Horner: 1 + y(1 + y/2(1 + y/3(...)))
        acc = one
        for j in range(order, 0, -1):
            acc = one + wedge(y, acc) * (1.0 / j)
        for _ in range(s):
            acc = wedge(acc, acc)
    return acc * np.exp(mu)


def invert_degree0_dominant(x: MixedForm, point=None) -> MixedForm:
    """Inverse of a form whose degree-zero coefficient is invertible.

    Uses the terminating series ``sum_j (-X0^{-1} N)^j X0^{-1}`` in the
    nilpotent remainder N.
    """
    x0 = x.degree0()
    try:
        inv0 = np.linalg.inv(x0)
    except np.linalg.LinAlgError as exc:
        raise SingularityError("degree-zero coefficient is singular", point) from exc
    if not np.all(np.isfinite(inv0)):
        raise SingularityError("degree-zero coefficient is singular", point)
    cond = np.linalg.cond(x0)
    if np.any(cond > 1e14):
        raise SingularityError(f"degree-zero coefficient is numerically singular (cond={np.max(cond):.3g})",
                               point)
    b0 = MixedForm.scalar(x.n, x.p, x.q, inv0)
    step = -wedge(b0, x.nilpotent_part())
    term, acc = b0, b0
    for _ in range(2 * x.n):
        term = wedge(step, term)
        if not term.support:
            break
        acc = acc + term
    return acc


# ---------------------------------------------------------------------------
# left-regular representation (test oracle)

def left_regular(a: MixedForm) -> np.ndarray:
    """Dense matrix of left multiplication on the module Lambda (x) C^{p+q}.

    The module has dimension ``2**(2n) * (p+q)``; basis vector ``(K, r)`` is
    ``e_K (x) v_r`` at flat position ``K*(p+q) + r``.  Only unbatched forms.
    """
    nb, dim = 1 << (2 * a.n), a.dim
    if a.batch_shape:
        raise ValueError("left_regular expects an unbatched form")
    out = np.zeros((nb * dim, nb * dim), complex)
    twisted = a.twisted()
    for j in range(nb):
        for i in range(nb):
            if i & j:
                continue
            coeff = twisted[i] if blade_degree(j) % 2 else a.coeffs[i]
            k = i | j
            out[k * dim:(k + 1) * dim, j * dim:(j + 1) * dim] += wedge_sign(i, j) * coeff
    return out


def from_left_regular(m: np.ndarray, n: int, p: int, q: int) -> MixedForm:
    """Recover the form from its representing matrix (action on 1 (x) v)."""
    nb, dim = 1 << (2 * n), p + q
    coeffs = m[:, :dim].reshape(nb, dim, dim)
    return MixedForm(n, p, q, coeffs.copy())


def expm_dense(a: MixedForm) -> MixedForm:
    """Oracle exponential through the dense representation."""
    return from_left_regular(scipy.linalg.expm(left_regular(a)), a.n, a.p, a.q)
