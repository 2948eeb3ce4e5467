"""Resolvents and complex powers of the curvature by vertical-contour quadrature.

For a form X whose degree-zero part has spectrum of -X0 in [mu_min, mu_max]
(a subset of the positive reals),

    (-X)^{-z} = (1/2 pi i) int_gamma lambda^{-z} (lambda + X)^{-1} d lambda

with gamma the line Re(lambda) = c, 0 < c < mu_min, traversed downward.  The
segment |Im lambda| <= T is integrated with Gauss-Legendre panels that
grow geometrically away from the real axis.  Beyond T the resolvent is
replaced by its Laurent series sum_J M_J lambda^{-J}, whose two tails
integrate in closed form:

    (1/2 pi i) int_{|Im| > T} lambda^{-z-J} d lambda
        = (1/pi) r^w sin(w alpha) / w,   w = 1 - z - J,

where c + iT = r e^{i alpha}.  The right side is entire in z, so the same
formula also continues the contour integral to Re z <= 0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, SingularityError
from .superalgebra import MixedForm, invert_degree0_dominant, wedge

__all__ = [
    "FormContour",
    "PowerEvaluator",
    "contour_for_spectrum",
    "tail_kernel",
    "resolvent",
    "complex_power",
    "integer_power",
    "spectral_interval",
]


@dataclass(frozen=True)
class FormContour:
    """Downward vertical line Re(lambda) = ``abscissa``, truncated at +-``half_height``."""

    abscissa: float
    half_height: float
    panel_nodes: int = 32
    orientation: str = "downward"

    def __post_init__(self):
        if not self.abscissa > 0:
            raise ValueError("contour abscissa must be positive")
        if not self.half_height > 0:
            raise ValueError("contour half-height must be positive")
        if self.panel_nodes < 2:
            raise ValueError("need at least two nodes per panel")
        if self.orientation != "downward":
            raise ValueError("only the downward orientation is implemented")

    @property
    def top(self) -> complex:
        return complex(self.abscissa, self.half_height)

    def nodes(self) -> tuple[np.ndarray, np.ndarray]:
        """Nodes lambda_j and weights w_j with (1/2 pi i) int f ~ sum_j w_j f(lambda_j).

        Nodes are ordered top to bottom.  The weights include the downward
        orientation: d lambda = i dt with t running from +T to -T.
        """
        c, T = self.abscissa, self.half_height
        edges = [0.0]
        e = c
        while e < T:
            edges.append(e)
            e *= 2
        edges.append(T)
        edges = np.array(edges)
        t, w = np.polynomial.legendre.leggauss(self.panel_nodes)
        lo, hi = edges[:-1, None], edges[1:, None]
        ts = (0.5 * (hi - lo) * t + 0.5 * (hi + lo)).ravel()
        ws = (0.5 * (hi - lo) * w).ravel()
        ts = np.concatenate([ts[::-1], -ts])
        ws = np.concatenate([ws[::-1], ws])
        return c + 1j * ts, -ws / (2 * np.pi)


def _sin_over(w, alpha):
    """sin(w alpha) / w, continuous at w = 0."""
    w = np.asarray(w, dtype=complex)
    u = w * alpha
    small = np.abs(u) < 1e-6
    safe = np.where(small, 1.0, u)
    return alpha * np.where(small, 1 - u * u / 6 + u ** 4 / 120, np.sin(safe) / safe)


def tail_kernel(contour: FormContour, z, J) -> np.ndarray:
    """(1/2 pi i) int over |Im lambda| > T of lambda^{-z-J}, continued in z.

    Broadcasts ``z`` against ``J``.
    """
    top = contour.top
    r, alpha = abs(top), math.atan2(contour.half_height, contour.abscissa)
    w = 1 - np.asarray(z, dtype=complex) - np.asarray(J)
    return np.exp(w * math.log(r)) * _sin_over(w, alpha) / np.pi


def spectral_interval(x0: np.ndarray) -> tuple[float, float]:
    """Range of Re(spec(-X0)) over a batch of degree-zero coefficients."""
    ev = np.linalg.eigvals(-np.asarray(x0))
    return float(ev.real.min()), float(np.abs(ev).max())


def contour_for_spectrum(mu_min: float, mu_max: float, panel_nodes: int = 32,
                         reach: float = 4.0) -> FormContour:
    """Contour at c = mu_min/2 with |c + iT| = reach * mu_max (at least 2c)."""
    if not mu_min > 0:
        raise SingularityError("spectrum touches the imaginary axis (point on the zero section?)", mu_min)
    c = 0.5 * mu_min
    radius = max(reach * mu_max, 2 * c)
    return FormContour(c, math.sqrt(radius ** 2 - c ** 2), panel_nodes)


def _as_form(x) -> MixedForm:
    return x.total() if hasattr(x, "total") else x


def resolvent(x, lam: complex, point=None) -> MixedForm:
    """(lambda + X)^{-1} as a terminating series in the nilpotent part."""
    x = _as_form(x)
    shifted = x + MixedForm.scalar(x.n, x.p, x.q, lam * np.eye(x.dim))
    # relative test: a tiny but well-conditioned lambda + X0 is still on the spectrum
    scale = max(1.0, abs(lam), float(np.abs(x.degree0()).max()))
    if np.linalg.svd(shifted.degree0(), compute_uv=False).min() < 1e-13 * scale:
        raise SingularityError(f"lambda={lam} lies in the spectrum of -X0", point if point is not None else lam)
    try:
        return invert_degree0_dominant(shifted, point=point)
    except SingularityError as exc:
        raise SingularityError(f"lambda={lam} lies in the spectrum of -X0", point if point is not None else lam) from exc


def integer_power(x, m: int) -> MixedForm:
    """(-X)^m for a non-negative integer m, by repeated products."""
    x = _as_form(x)
    eye = np.broadcast_to(np.eye(x.dim), x.batch_shape + (x.dim, x.dim))
    out = MixedForm.scalar(x.n, x.p, x.q, eye)
    for _ in range(m):
        out = wedge(out, -x)
    return out


class PowerEvaluator:
    """Precomputed contour data for z -> (-X)^{-z} at a (batched) point.

    Resolvents at the contour nodes and the Laurent coefficients
    M_J = (-X)^{J-1} are computed once; each evaluation is then a weighted
    sum.  ``tail_estimate(z)`` reports the size of the appended tail.
    """

    def __init__(self, x, contour: FormContour | None = None, panel_nodes: int = 32,
                 laurent_terms: int | None = None):
        x = _as_form(x)
        self.x = x
        mu_min, mu_max = spectral_interval(x.degree0())
        if contour is None:
            contour = contour_for_spectrum(mu_min, mu_max, panel_nodes)
        elif not contour.abscissa < mu_min:
            raise DomainError(f"contour abscissa {contour.abscissa} does not separate 0 from the "
                              f"spectrum (min {mu_min})")
        self.contour = contour
        lam, w = contour.nodes()
        self.lam, self.w = lam, w
        m = len(lam)
        coeffs = np.broadcast_to(x.coeffs, (m,) + x.coeffs.shape).copy()
        coeffs[..., 0, :, :] += lam.reshape((m,) + (1,) * (len(x.batch_shape) + 2)) * np.eye(x.dim)
        shifted = x._like(coeffs, x.support | {0})
        self.res = invert_degree0_dominant(shifted)
        # Laurent series of the resolvent: sum_J (-X)^{J-1} lambda^{-J}
        ratio = mu_max / abs(contour.top)
        if laurent_terms is None:
            laurent_terms = int(math.ceil(np.log(1e-20) / np.log(max(ratio, 1e-3)))) + 4 * x.n + 2
        self.laurent = [integer_power(x, j) for j in range(laurent_terms)]

    def quadrature_part(self, z) -> MixedForm:
        f = self.w * np.exp(-z * np.log(self.lam))
        c = np.tensordot(f, self.res.coeffs, axes=(0, 0))
        return self.x._like(c, self.res.support)

    def tail_part(self, z) -> MixedForm:
        J = np.arange(1, len(self.laurent) + 1)
        k = tail_kernel(self.contour, z, J)
        out = self.laurent[0] * k[0]
        for kj, m in zip(k[1:], self.laurent[1:]):
            out = out + m * kj
        return out

    def __call__(self, z) -> MixedForm:
        z = complex(z)
        return self.quadrature_part(z) + self.tail_part(z)

    def tail_estimate(self, z) -> float:
        return self.tail_part(complex(z)).max_abs()


def complex_power(x, z, contour: FormContour | None = None, panel_nodes: int = 32) -> MixedForm:
    """(-X)^{-z} for a curvature ``X`` (form or decomposition) off the zero section.

    Integer z = -m <= 0 uses the exact power (-X)^m.  Other z must have
    positive real part; continuation to the left half-plane is done on the
    level of the series terms (see :mod:`reschern.mellin`).
    """
    x = _as_form(x)
    z = complex(z)
    if z.imag == 0 and z.real <= 0 and z.real == round(z.real):
        return integer_power(x, int(-round(z.real)))
    if z.real <= 0:
        raise DomainError(f"Re z = {z.real} <= 0: the truncated contour integral diverges; "
                          "use the meromorphic continuation")
    return PowerEvaluator(x, contour, panel_nodes)(z)
