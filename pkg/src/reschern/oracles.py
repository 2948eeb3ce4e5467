"""Independent reference computations used by the tests and the harness.

Nothing here is on the main evaluation path.  Each oracle reaches its answer
by a different route from the production code:

* dense linear algebra in the left-regular representation,
* the Duhamel expansion of exp(X0 + N) through block-triangular expm,
* the terminating binomial series for scalar degree-zero parts,
* exact divided differences (Opitz matrices) in place of contour integrals,
* brute-force word enumeration.
"""
from __future__ import annotations

import itertools

import numpy as np
import scipy.linalg

from .geometry import Scenario, eval_eta
from .superalgebra import (MixedForm, blade_degree, expm_dense, from_left_regular, left_regular,
                           supertrace, top_blade, wedge, wedge_sign, _parity_mask)
from .superconnection import curvature

__all__ = [
    "dense_wedge",
    "dense_inverse",
    "dense_exp",
    "duhamel_exp",
    "binomial_power",
    "divided_difference",
    "phi_V_exact",
    "brute_force_words",
    "random_form",
]


def dense_wedge(a: MixedForm, b: MixedForm) -> MixedForm:
    return from_left_regular(left_regular(a) @ left_regular(b), a.n, a.p, a.q)


def dense_inverse(a: MixedForm) -> MixedForm:
    return from_left_regular(np.linalg.inv(left_regular(a)), a.n, a.p, a.q)


dense_exp = expm_dense


def _signed_chain(parts, dim, p, q):
    """Matrix chain for a product of (blade, matrix) pairs with super-signs.

    (w1 A1)(w2 A2)... = sign * (w1 w2 ...) (A1' A2' ...) where A_j' is A_j
    conjugated by the grading once for every odd blade to its right.
    """
    mask = _parity_mask(p, q)
    blades = [b for b, _ in parts]
    acc_blade, sign = 0, 1
    for b in blades:
        s = wedge_sign(acc_blade, b)
        if s == 0:
            return None, 0, 0
        sign *= s
        acc_blade |= b
    mats = []
    for j, (_, m) in enumerate(parts):
        later = sum(blade_degree(b) for b in blades[j + 1:])
        mats.append(m * mask if later % 2 else m)
    return mats, acc_blade, sign


def duhamel_exp(x: MixedForm) -> MixedForm:
    """exp(X0 + N) as sum_k int_simplex e^{(1-s1)X0} N ... N e^{sk X0}.

    Each iterated integral is the top-right block of the exponential of a
    block bidiagonal matrix (Van Loan).  Unbatched forms only; X0 must be
    even, as for a curvature.
    """
    n, p, q, dim = x.n, x.p, x.q, x.dim
    x0 = x.degree0()
    comps = [(b, x.coeffs[b]) for b in sorted(x.support) if b and np.any(x.coeffs[b])]
    out = np.zeros_like(x.coeffs)
    out[0] = scipy.linalg.expm(x0)
    for k in range(1, 2 * n + 1):
        for seq in itertools.product(comps, repeat=k):
            mats, bl, sign = _signed_chain(seq, dim, p, q)
            if not sign:
                continue
            big = np.zeros(((k + 1) * dim, (k + 1) * dim), complex)
            for j in range(k + 1):
                big[j * dim:(j + 1) * dim, j * dim:(j + 1) * dim] = x0
            for j, m in enumerate(mats):
                big[j * dim:(j + 1) * dim, (j + 1) * dim:(j + 2) * dim] = m
            e = scipy.linalg.expm(big)
            out[bl] += sign * e[:dim, k * dim:]
    return MixedForm(n, p, q, out)


def binomial_power(mu: float, nil: MixedForm, z) -> MixedForm:
    """(mu - N)^{-z} = sum_k C(-z, k) mu^{-z-k} (-N)^k for scalar mu > 0, nilpotent N."""
    z = complex(z)
    acc = None
    term = MixedForm.scalar(nil.n, nil.p, nil.q,
                            np.broadcast_to(np.eye(nil.dim), nil.batch_shape + (nil.dim, nil.dim)))
    coef = 1.0 + 0j
    for k in range(2 * nil.n + 1):
        piece = term * (coef * mu ** (-z - k))
        acc = piece if acc is None else acc + piece
        term = wedge(term, -nil)
        coef *= (-z - k) / (k + 1)
    return acc


def divided_difference(nodes, z) -> complex:
    """f[x_0, ..., x_k] for f(x) = x^{-z}, via the Opitz matrix.

    The divided difference is the top-right entry of f(J) with J the upper
    bidiagonal matrix carrying the nodes on the diagonal; f(J) is formed as
    expm(-z logm(J)) so confluent nodes need no special casing.
    """
    nodes = np.asarray(nodes, dtype=complex)
    k = len(nodes)
    J = np.diag(nodes) + np.diag(np.ones(k - 1), 1)
    if k == 1:
        return complex(nodes[0] ** (-complex(z)))
    fj = scipy.linalg.expm(-complex(z) * scipy.linalg.logm(J))
    return complex(fj[0, -1])


def phi_V_exact(s: Scenario, word: str, z, rho: float = 1.0) -> complex:
    """phi_V of one word by exact divided differences in the eigenbasis of -Lhat^2.

    The word (-1)^k B^{-1} X_1 ... X_k B^{-1} is expanded over eigenvector
    paths i_0 ... i_k; the contour integral of lambda^{-z} prod 1/(lambda - mu)
    along a path is the divided difference of x^{-z} at the path's
    eigenvalues.  Costs N^{k+1} products per point; meant for small cases.
    """
    n, p, q = s.n, s.p, s.q
    dim = p + q
    g = s.grids
    eta = eval_eta(s, g.x)
    top = top_blade(n)
    k = len(word)
    total = 0j
    for ip in range(len(g.w)):
        d = curvature(s, g.x[ip], np.asarray(rho), g.xi[ip])
        letters = d.letters()
        mq = -d.lsq.degree0()
        mu, U = np.linalg.eigh(0.5 * (mq + mq.conj().T))
        proj = [MixedForm.scalar(n, p, q, np.outer(U[:, i], U[:, i].conj())) for i in range(dim)]
        for path in itertools.product(range(dim), repeat=k + 1):
            f = proj[path[0]]
            for c, i in zip(word, path[1:]):
                f = wedge(wedge(f, letters[c]), proj[i])
            if not f.support:
                continue
            val = 0j
            for b, v in eta.items():
                comp = top ^ b
                val += wedge_sign(b, comp) * v[ip] * supertrace(f.coeffs[comp], p)
            if val == 0:
                continue
            total += g.w[ip] * (-1) ** k * val * divided_difference(mu[list(path)], z)
    if rho != 1.0:
        # undo the radial power carried by the word at this sphere
        total *= rho ** (2 * (complex(z) + k) - n - word.count("H") + 1)
    return complex(total)


_DEGREES = {"P": 1, "S": 1, "H": 1, "F": 2}


def brute_force_words(n: int, kappa: int, max_len: int = 6) -> list[str]:
    """All words over {F, H, P, S} of length <= max_len that can pair to the top degree.

    A word survives when it holds exactly one d rho letter P, n-1 angular
    letters S, and its horizontal degree (H counts 1, F counts 2) is n - kappa.
    """
    out = []
    for k in range(1, max_len + 1):
        for w in itertools.product("FHPS", repeat=k):
            if w.count("P") != 1 or w.count("S") != n - 1:
                continue
            horiz = sum(_DEGREES[c] for c in w if c in "HF")
            if horiz == n - kappa:
                out.append("".join(w))
    return sorted(out, key=lambda w: (len(w), w))


def random_form(rng: np.random.Generator, n: int, p: int, q: int, degree: int | None = None,
                parity: int | None = None, scale: float = 1.0) -> MixedForm:
    """Random form; optionally homogeneous in form degree and/or matrix parity."""
    nb, dim = 1 << (2 * n), p + q
    c = scale * (rng.standard_normal((nb, dim, dim)) + 1j * rng.standard_normal((nb, dim, dim)))
    if degree is not None:
        keep = np.array([blade_degree(b) == degree for b in range(nb)])
        c[~keep] = 0
    if parity is not None:
        mask = _parity_mask(p, q)
        c = c * ((mask > 0) if parity == 0 else (mask < 0))
    return MixedForm(n, p, q, c)
