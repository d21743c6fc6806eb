"""Polynomial kernels for estimating derivatives by local averaging.

A kernel of order (L, j) is supported on [-1, 1] and satisfies the moment
conditions

    int t^l K(t) dt = 0             for l in {0, ..., L-1} \\ {j},
    int t^j K(t) dt = (-1)^j j!,

so that convolving data with the rescaled kernel lam^-(j+1) K(. / lam)
reproduces the j-th derivative of any polynomial of degree < L exactly.
Among all solutions we build the unique one of minimal degree (at most
L - 1).  In the Legendre basis the moment system is diagonal, which gives
a closed form; an independent monomial-basis solve is kept around as a
cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from numpy.polynomial import polynomial as npoly

__all__ = [
    "DerivKernel",
    "SingularMomentSystem",
    "build_kernel",
    "kernel_moment",
    "l2_norm_sq",
    "moment_table",
]


class SingularMomentSystem(RuntimeError):
    """The moment system could not be solved reliably."""


@dataclass(frozen=True)
class DerivKernel:
    """A polynomial derivative-estimation kernel on [-1, 1].

    Attributes
    ----------
    j : int
        Derivative order the kernel targets.
    L : int
        Number of moment conditions imposed (kernel order).
    coeffs : tuple of float
        Polynomial coefficients in ascending powers; degree <= L - 1.
    l2_norm_sq : float
        int_{-1}^{1} K(t)^2 dt, cached for threshold calibration.
    """

    j: int
    L: int
    coeffs: tuple[float, ...]
    l2_norm_sq: float

    def __call__(self, z):
        arr = np.asarray(z, dtype=float)
        vals = npoly.polyval(arr, np.asarray(self.coeffs))
        out = np.where(np.abs(arr) <= 1.0, vals, 0.0)
        if np.isscalar(z) or arr.ndim == 0:
            return float(out)
        return out


def _even_moment(k: int, l: int) -> float:
    """int_{-1}^{1} t^(k+l) dt."""
    return (1.0 + (-1.0) ** (k + l)) / (k + l + 1)


def kernel_moment(coeffs, l: int) -> float:
    """int_{-1}^{1} t^l K(t) dt for a polynomial kernel.

    Computed in exact rational arithmetic (every float coefficient is a
    rational number), so the returned value is the true moment of the
    as-stored kernel up to one final rounding.  Plain float summation
    loses two digits to cancellation at order 8, which matters because
    conformance is checked in absolute terms.
    """
    c = np.asarray(coeffs, dtype=float)
    total = Fraction(0)
    for k in range(c.size):
        if (k + l) % 2 == 0:
            total += Fraction(float(c[k])) * Fraction(2, k + l + 1)
    return float(total)


def l2_norm_sq(coeffs) -> float:
    """int_{-1}^{1} K(t)^2 dt for a polynomial kernel, in closed form."""
    c = np.asarray(coeffs, dtype=float)
    total = 0.0
    for k in range(c.size):
        for kp in range(c.size):
            total += c[k] * c[kp] * _even_moment(k, kp)
    return float(total)


def _legendre_coeffs_exact(l_max: int) -> list[list[Fraction]]:
    """Monomial coefficients of P_0 .. P_{l_max} as exact rationals.

    Bonnet recurrence (l+1) P_{l+1} = (2l+1) x P_l - l P_{l-1}; every
    coefficient is rational, so no rounding enters.
    """
    polys = [[Fraction(1)]]
    if l_max >= 1:
        polys.append([Fraction(0), Fraction(1)])
    for l in range(1, l_max):
        shifted = [Fraction(0)] + polys[l]
        nxt = []
        for k in range(l + 2):
            term = Fraction(2 * l + 1, l + 1) * shifted[k]
            if k < len(polys[l - 1]):
                term -= Fraction(l, l + 1) * polys[l - 1][k]
            nxt.append(term)
        polys.append(nxt)
    return polys


def _solve_legendre(L: int, j: int) -> np.ndarray:
    """Closed-form minimal-degree solution via Legendre orthogonality.

    Testing the moment conditions against Legendre polynomials decouples
    them: if K = sum_l d_l P_l then int P_l K = 2 d_l / (2l + 1), while the
    monomial conditions force int P_l K = p_{l,j} (-1)^j j! with p_{l,j}
    the t^j coefficient of P_l.  Carried out in exact rational arithmetic
    and rounded once at the end: the high-order coefficients reach 1e5
    while the conformance tolerance is absolute, leaving no headroom for
    accumulated float error.
    """
    target = Fraction((-1) ** j * math.factorial(j))
    legendre = _legendre_coeffs_exact(L - 1)
    out = [Fraction(0)] * L
    for l in range(L):
        p_l = legendre[l]
        p_lj = p_l[j] if j < len(p_l) else Fraction(0)
        d_l = Fraction(2 * l + 1, 2) * p_lj * target
        for k in range(len(p_l)):
            out[k] += d_l * p_l[k]
    return np.array([float(c) for c in out])


def _solve_monomial(L: int, j: int) -> np.ndarray:
    """Direct solve of the L x L moment system in the monomial basis."""
    m = np.array([[_even_moment(l, k) for k in range(L)] for l in range(L)])
    rhs = np.zeros(L)
    rhs[j] = (-1.0) ** j * math.factorial(j)
    cond = np.linalg.cond(m)
    if not np.isfinite(cond) or cond > 1e12:
        raise SingularMomentSystem("moment matrix condition number %.3g" % cond)
    return np.linalg.solve(m, rhs)


def build_kernel(L: int, j: int) -> DerivKernel:
    """Construct the minimal-degree kernel of order (L, j).

    Raises ``ValueError`` unless 0 <= j < L, and
    :class:`SingularMomentSystem` if the construction fails its own moment
    verification (defensive; the Gram structure is positive definite).
    """
    if L < 1 or j < 0 or j >= L:
        raise ValueError("need 0 <= j < L, got L=%r j=%r" % (L, j))
    coeffs = _solve_legendre(L, j)
    target = (-1.0) ** j * math.factorial(j)
    for l in range(L):
        want = target if l == j else 0.0
        got = kernel_moment(coeffs, l)
        if abs(got - want) > 1e-8 * max(1.0, abs(target)):
            raise SingularMomentSystem(
                "kernel (%d, %d) violates moment %d: %g" % (L, j, l, got)
            )
    return DerivKernel(
        j=j,
        L=L,
        coeffs=tuple(float(c) for c in coeffs),
        l2_norm_sq=l2_norm_sq(coeffs),
    )


def moment_table(l_max: int) -> list[tuple[int, int, int, float, float, float]]:
    """Moment-conformance rows (L, j, l, moment, target, abs_error) for L <= l_max."""
    rows = []
    for L in range(1, l_max + 1):
        for j in range(L):
            kern = build_kernel(L, j)
            target_j = (-1.0) ** j * math.factorial(j)
            for l in range(L):
                want = target_j if l == j else 0.0
                got = kernel_moment(kern.coeffs, l)
                rows.append((L, j, l, got, want, abs(got - want)))
    return rows
