"""Curvature of the superconnection, its Chern character and the direct pairing."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import Scenario, dx_blade, eval_eta, eval_nabla2, eval_theta, symbol_matrices
from .superalgebra import (MixedForm, blade, exp_form, supertrace_form, top_blade, wedge,
                           wedge_sign)

__all__ = [
    "CurvatureDecomposition",
    "curvature",
    "superconnection_square",
    "chern_form",
    "pair_top",
    "lhs_pairing",
    "lhs_pairing_outside",
]

DRHO = blade(0)
DPHI = blade(1)  # only for n = 2

# points per exp_form batch; bounds peak memory
_CHUNK = 4096


@dataclass(frozen=True)
class CurvatureDecomposition:
    """Homogeneous pieces of the curvature at a batch of points.

    ``lsq`` = L^2 (degree 0), ``P`` = d_rho L, ``S`` = d_Xi L (zero for
    n = 1), ``H`` = d_x L + [theta, L], ``F`` = curvature of the pulled-back
    connection.  Under rho -> t rho they scale as t^2, 1, t, t, 1.
    """

    lsq: MixedForm
    P: MixedForm
    S: MixedForm
    H: MixedForm
    F: MixedForm

    def nilpotent(self) -> MixedForm:
        return self.P + self.S + self.H + self.F

    def total(self) -> MixedForm:
        return self.lsq + self.nilpotent()

    def letters(self) -> dict[str, MixedForm]:
        return {"P": self.P, "S": self.S, "H": self.H, "F": self.F}


def _angular_tangent(xi):
    """d Xi / d phi on the unit circle; zero array for n = 1."""
    xi = np.asarray(xi, dtype=float)
    if xi.shape[-1] == 1:
        return np.zeros_like(xi)
    return np.stack([-xi[..., 1], xi[..., 0]], -1)


def curvature(s: Scenario, x, rho, xi) -> CurvatureDecomposition:
    """Evaluate the decomposed curvature at points (x, rho, Xi).

    ``x`` and ``xi`` have shape ``(..., n)`` and ``rho`` shape ``(...)``;
    all three broadcast together.
    """
    n, p, q = s.n, s.p, s.q
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    rho = np.asarray(rho, dtype=float)
    a = symbol_matrices(s, x)                                   # (..., n, N, N)
    lhat = np.einsum("...j,...jab->...ab", xi, a)
    lmat = rho[..., None, None] * lhat
    lsq = MixedForm.scalar(n, p, q, lmat @ lmat)
    P = MixedForm.from_components(n, p, q, {DRHO: lhat})
    if n == 2:
        dxi = _angular_tangent(xi)
        S = MixedForm.from_components(n, p, q, {DPHI: rho[..., None, None] * np.einsum("...j,...jab->...ab", dxi, a)})
    else:
        S = MixedForm.zeros(n, p, q)
    hcomp = {}
    for i in range(n):
        dai = np.stack([f.derivative(i)(x) for f in s.symbol], -3)
        dl = rho[..., None, None] * np.einsum("...j,...jab->...ab", xi, dai)
        th = s.theta[i](x)
        hcomp[dx_blade(n, i)] = dl + th @ lmat - lmat @ th
    H = MixedForm.from_components(n, p, q, hcomp)
    F = eval_nabla2(s, x) if n > 1 else MixedForm.zeros(n, p, q)
    return CurvatureDecomposition(lsq, P, S, H, F)


def superconnection_square(s: Scenario, x, rho, xi) -> MixedForm:
    """(nabla + L)^2 assembled in Cartesian fiber coordinates.

    Independent of :func:`curvature`: dL is formed as sum_j dxi_j (x) A_j +
    sum_i dx^i (x) d_i L with dxi_j = Xi_j drho + rho dXi_j/dphi dphi, and
    [theta, L] as the graded commutator theta^L + L^theta of forms.
    """
    n, p, q = s.n, s.p, s.q
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    rho = np.asarray(rho, dtype=float)
    a = symbol_matrices(s, x)
    xi_cart = rho[..., None] * xi
    lmat = np.einsum("...j,...jab->...ab", xi_cart, a)
    lform = MixedForm.scalar(n, p, q, lmat)
    dxi = _angular_tangent(xi)
    dl = MixedForm.zeros(n, p, q)
    for j in range(n):
        comps = {DRHO: xi[..., j, None, None] * a[..., j, :, :]}
        if n == 2:
            comps[DPHI] = (rho * dxi[..., j])[..., None, None] * a[..., j, :, :]
        dl = dl + MixedForm.from_components(n, p, q, comps)
    for i in range(n):
        dai = np.stack([f.derivative(i)(x) for f in s.symbol], -3)
        dl = dl + MixedForm.from_components(n, p, q, {dx_blade(n, i): np.einsum("...j,...jab->...ab", xi_cart, dai)})
    th = eval_theta(s, x)
    comm = wedge(th, lform) + wedge(lform, th)
    return wedge(lform, lform) + dl + comm + eval_nabla2(s, x)


def chern_form(s: Scenario, x, rho, xi) -> np.ndarray:
    """Supertraced exp(nabla_L^2): complex array ``(..., 2**(2n))`` over blades."""
    return supertrace_form(exp_form(curvature(s, x, rho, xi).total()))


def pair_top(n: int, eta: dict, form: np.ndarray) -> np.ndarray:
    """Top-degree coefficient of eta ^ form for a scalar-valued ``form``.

    ``eta`` maps blades to values broadcasting against ``form[..., 0]``.
    """
    top = top_blade(n)
    out = 0
    for b, v in eta.items():
        comp = top ^ b
        out = out + wedge_sign(b, comp) * v * form[..., comp]
    return np.asarray(out)


def _radial_pairing(s: Scenario, nodes, weights) -> complex:
    g = s.grids
    eta = eval_eta(s, g.x)                                      # (P,)
    total = 0j
    npts = len(g.w)
    step = max(1, _CHUNK // len(nodes))
    for lo in range(0, npts, step):
        sl = slice(lo, lo + step)
        x = g.x[sl, None, :]
        xi = g.xi[sl, None, :]
        rho = np.broadcast_to(nodes, (x.shape[0], len(nodes)))
        ch = chern_form(s, x, rho, xi)                          # (chunk, nr, B)
        dens = pair_top(s.n, {b: v[sl, None] for b, v in eta.items()}, ch)
        total += np.sum((dens @ weights) * g.w[sl])
    return complex(total)


def lhs_pairing(s: Scenario) -> complex:
    """Integral over T*M of tr_s eta ^ exp(nabla_L^2), radially truncated at rho_max."""
    return _radial_pairing(s, *s.grids.radial_full)


def lhs_pairing_outside(s: Scenario, R: float | None = None) -> complex:
    """Same integral restricted to rho >= R."""
    if R is None or R == s.R:
        nodes, weights = s.grids.radial_outside
    else:
        from .geometry import gauss_legendre_panels
        nodes, weights = gauss_legendre_panels(R, s.radial_cutoff, s.grid_radial)
    return _radial_pairing(s, nodes, weights)


def radial_tail_bound(s: Scenario) -> float:
    """Rough bound on the part of the pairing beyond rho_max.

    Uses the integrand size at rho_max times the Gaussian tail factor
    1 / (2 s_min^2 rho_max).
    """
    g = s.grids
    rmax = s.radial_cutoff
    ch = chern_form(s, g.x, np.full(len(g.w), rmax), g.xi)
    dens = pair_top(s.n, eval_eta(s, g.x), ch)
    return float(np.sum(np.abs(dens) * g.w) / (2 * s.s_min ** 2 * rmax))
