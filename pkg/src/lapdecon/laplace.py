"""Convolution kernels with rational Laplace transforms and their inversion.

The observation model convolves an unknown source f against a known causal
kernel g, q(t) = int_0^t g(t - x) f(x) dx, where the Laplace transform of g
is rational, g~(s) = P(s)/Q(s).  Writing r = deg Q - deg P for the relative
degree, such kernels vanish to order r - 2 at t = 0 and their first
nonvanishing derivative there equals lead(P)/lead(Q).

The source can be recovered from derivatives of q through an explicit
formula: with b = lead(P)/lead(Q),

    f(t) = (1/b) * ( q^(r)(t) - sum_{j<r} c_{r-j-1} q^(j)(t)
                     - int_0^t q^(r)(t - x) w(x) dx ),

where the constants c_i and the exponential-polynomial weight w come from
the partial fractions of the correction transform
1 - b Q(s) / (s^r P(s)): c_i is the coefficient of s^-(i+1) at the origin
pole, and w collects the poles at the zeros of P.  This module validates
kernels, computes those ingredients exactly, and provides trapezoid
quadrature for both the forward convolution and the reconstruction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy.signal import fftconvolve

from .exppoly import (
    MERGE_LADDER,
    ExpPoly,
    IllConditionedRoots,
    clustered_roots,
    partial_fractions,
    trim_poly,
)

__all__ = [
    "DegenerateKernel",
    "ExpTerm",
    "InversionCoefficients",
    "KernelValidation",
    "NonnegativeRealPartZero",
    "RationalFunction",
    "RationalLaplaceKernel",
    "UnstableKernel",
    "correction_transform",
    "forward_convolve",
    "impulse_response",
    "inversion_coefficients",
    "memory_kernel",
    "memory_kernel_eval",
    "reconstruct",
    "validate_kernel",
]

#: Roots must satisfy Re(root) < -HALF_PLANE_TOL to count as stable.
HALF_PLANE_TOL = 1e-9

#: Relative tolerance for the time-domain derivative checks at zero.
DERIV_CHECK_RTOL = 1e-6


class DegenerateKernel(ValueError):
    """The rational transform is not strictly proper or has a common factor."""


class UnstableKernel(ValueError):
    """A pole of the transform lies outside the open left half-plane."""


class NonnegativeRealPartZero(ValueError):
    """A zero of the transform lies outside the open left half-plane."""


@dataclass(frozen=True)
class RationalLaplaceKernel:
    """A causal convolution kernel given by its rational Laplace transform.

    Attributes
    ----------
    num, den : tuple of float
        Numerator / denominator coefficients in ascending powers of s.
        Trailing exact zeros are trimmed on construction.
    """

    num: tuple[float, ...]
    den: tuple[float, ...]

    def __init__(self, num, den):
        n = trim_poly(np.asarray(num, dtype=float))
        d = trim_poly(np.asarray(den, dtype=float))
        if n[-1] == 0.0:
            raise DegenerateKernel("numerator is identically zero")
        if d[-1] == 0.0:
            raise DegenerateKernel("denominator is identically zero")
        if n.size >= d.size:
            raise DegenerateKernel(
                "transform must be strictly proper (deg num < deg den)"
            )
        object.__setattr__(self, "num", tuple(float(c) for c in n))
        object.__setattr__(self, "den", tuple(float(c) for c in d))

    @property
    def relative_degree(self) -> int:
        """deg den - deg num; the order of the kernel's zero at t = 0 plus one."""
        return len(self.den) - len(self.num)

    @property
    def lead_coeff(self) -> float:
        """lead(num)/lead(den); the first nonvanishing derivative of g at 0."""
        return self.num[-1] / self.den[-1]

    def __call__(self, s):
        sv = np.asarray(s, dtype=complex)
        return npoly.polyval(sv, np.asarray(self.num)) / npoly.polyval(
            sv, np.asarray(self.den)
        )


@dataclass(frozen=True)
class RationalFunction:
    """A plain rational function in ascending coefficients, for evaluation."""

    num: tuple[float, ...]
    den: tuple[float, ...]

    def __call__(self, s):
        sv = np.asarray(s, dtype=complex)
        out = npoly.polyval(sv, np.asarray(self.num)) / npoly.polyval(
            sv, np.asarray(self.den)
        )
        return out


@dataclass(frozen=True)
class KernelValidation:
    """Validated structural data of a rational kernel."""

    relative_degree: int
    lead_coeff: float
    poles: tuple[tuple[complex, int], ...]
    zeros: tuple[tuple[complex, int], ...]


def _checked_cluster(coeffs) -> list[tuple[complex, int]]:
    """Cluster polynomial roots, arbitrating the merge tolerance.

    A flat tolerance cannot tell a scattered multiple eigenvalue from
    genuinely close simple roots, but the partial-fraction probe check
    can: residues of wrongly split poles cancel catastrophically.  Each
    ladder rung is accepted only if expanding 1/poly over the clustered
    roots passes that check.
    """
    c = trim_poly(np.asarray(coeffs, dtype=float))
    if c.size == 1:
        return []
    failure: IllConditionedRoots | None = None
    for rtol in MERGE_LADDER:
        try:
            guess = clustered_roots(c, rtol=rtol)
            partial_fractions(np.array([1.0]), c, roots=guess)
            return guess
        except IllConditionedRoots as exc:
            failure = exc
    raise IllConditionedRoots(
        "no merge tolerance produced a verifiable root clustering"
    ) from failure


def validate_kernel(g: RationalLaplaceKernel) -> KernelValidation:
    """Check the structural requirements of a deconvolution kernel.

    Two independent routes must agree: algebraically, the relative degree
    and leading-coefficient ratio of the transform; analytically, the
    derivatives of the time-domain kernel at zero computed through its
    partial fractions.  Raises :class:`UnstableKernel` /
    :class:`NonnegativeRealPartZero` when poles / zeros leave the open
    left half-plane and :class:`DegenerateKernel` for improper or
    reducible transforms.
    """
    r = g.relative_degree
    b = g.lead_coeff
    poles = _checked_cluster(np.asarray(g.den))
    zeros = _checked_cluster(np.asarray(g.num))
    for p, _ in poles:
        if p.real >= -HALF_PLANE_TOL:
            raise UnstableKernel("pole %r is not in the open left half-plane" % (p,))
    for z, _ in zeros:
        if z.real >= -HALF_PLANE_TOL:
            raise NonnegativeRealPartZero(
                "zero %r is not in the open left half-plane" % (z,)
            )
    for z, _ in zeros:
        for p, _ in poles:
            if abs(z - p) <= 1e-7 * max(1.0, abs(z), abs(p)):
                raise DegenerateKernel(
                    "transform has a common factor near %r; reduce it first" % (z,)
                )

    h = ExpPoly.from_rational(np.asarray(g.num), np.asarray(g.den), roots=poles)
    tol = DERIV_CHECK_RTOL * max(1.0, abs(b))
    for j in range(r - 1):
        val = h.deriv_at_zero(j)
        if abs(val) > tol:
            raise DegenerateKernel(
                "kernel derivative %d at zero is %g, expected 0" % (j, val)
            )
    top = h.deriv_at_zero(r - 1)
    if abs(top - b) > tol:
        raise DegenerateKernel(
            "kernel derivative %d at zero is %g, expected %g" % (r - 1, top, b)
        )
    return KernelValidation(r, b, tuple(poles), tuple(zeros))


def impulse_response(g: RationalLaplaceKernel) -> ExpPoly:
    """The time-domain kernel g as an exponential-polynomial sum."""
    return ExpPoly.from_rational(np.asarray(g.num), np.asarray(g.den))


def correction_transform(g: RationalLaplaceKernel) -> RationalFunction:
    """The strictly proper transform 1 - b Q(s) / (s^r P(s)).

    Its numerator is s^r P(s) - b Q(s); the exact leading cancellation is
    carried out in floating point and trimmed.
    """
    r = g.relative_degree
    b = g.lead_coeff
    num_s = np.concatenate([np.zeros(r), np.asarray(g.num, dtype=float)])
    den = np.asarray(g.den, dtype=float)
    num_phi = num_s - b * den
    num_phi = trim_poly(num_phi, rtol=1e-12)
    if num_phi.size >= num_s.size:
        raise DegenerateKernel("correction transform failed to reduce")
    return RationalFunction(tuple(float(c) for c in num_phi), tuple(float(c) for c in num_s))


@dataclass(frozen=True)
class ExpTerm:
    """One pole of the correction transform away from the origin."""

    root: complex
    multiplicity: int
    coeffs: tuple[complex, ...]


@dataclass(frozen=True)
class InversionCoefficients:
    """Partial-fraction data of the correction transform.

    ``origin_coeffs[i]`` multiplies s^-(i+1) at the origin pole (these
    weight the lower-order derivatives in the inversion formula);
    ``exp_terms`` hold the residues at the zeros of the transform's
    numerator polynomial, which assemble into the convolution weight.
    """

    origin_coeffs: tuple[float, ...]
    exp_terms: tuple[ExpTerm, ...]


def inversion_coefficients(g: RationalLaplaceKernel) -> InversionCoefficients:
    """Residues of the correction transform at all of its poles.

    The origin pole has multiplicity equal to the relative degree; the
    remaining poles sit at the zeros of the kernel transform with their
    multiplicities.  Residues come from local Taylor expansion, not from
    numerical differentiation.
    """
    val = validate_kernel(g)
    r = val.relative_degree
    phi = correction_transform(g)
    num_phi = np.asarray(phi.num)
    den_phi = np.asarray(phi.den)
    # The origin pole's multiplicity is known exactly (the relative degree),
    # so only the numerator zeros need clustering; try successively coarser
    # merges until the expansion verifies, as a multiple zero scatters the
    # eigensolve well beyond any single tolerance.
    expansion = None
    failure: IllConditionedRoots | None = None
    for rtol in MERGE_LADDER:
        try:
            zeros = clustered_roots(np.asarray(g.num), rtol=rtol)
            roots = [(0.0 + 0.0j, r)] + [(z, m) for z, m in zeros]
            expansion = partial_fractions(num_phi, den_phi, roots=roots)
            break
        except IllConditionedRoots as exc:
            failure = exc
    if expansion is None:
        raise IllConditionedRoots(
            "no zero clustering produced a verifiable correction expansion"
        ) from failure

    origin = None
    terms = []
    for p, m, res in expansion:
        if p == 0:
            origin = res
        else:
            terms.append((p, m, res))
    if origin is None:
        raise DegenerateKernel("correction transform lost its origin pole")
    if np.max(np.abs(origin.imag)) > 1e-9 * max(1.0, float(np.max(np.abs(origin)))):
        raise DegenerateKernel("origin residues are not real")

    # enforce exact conjugate structure on the exponential terms
    cleaned: list[ExpTerm] = []
    used = [False] * len(terms)
    for i, (p, m, res) in enumerate(terms):
        if used[i]:
            continue
        used[i] = True
        if p.imag == 0:
            cleaned.append(ExpTerm(p, m, tuple(complex(c.real) for c in res)))
            continue
        mate = None
        for k, (q, mq, _) in enumerate(terms):
            if not used[k] and mq == m and abs(q - p.conjugate()) <= 1e-7 * max(1.0, abs(p)):
                mate = k
                break
        if mate is None:
            raise DegenerateKernel("unpaired complex pole %r in correction transform" % (p,))
        used[mate] = True
        avg = 0.5 * (res + np.conj(terms[mate][2]))
        cleaned.append(ExpTerm(p, m, tuple(complex(c) for c in avg)))
        cleaned.append(ExpTerm(p.conjugate(), m, tuple(complex(c.conjugate()) for c in avg)))

    return InversionCoefficients(
        tuple(float(c.real) for c in origin), tuple(cleaned)
    )


def memory_kernel(coeffs: InversionCoefficients) -> ExpPoly:
    """The convolution weight in the inversion formula.

    Collects the non-origin residues into
    ``sum_l sum_j a_{l,j} x^j exp(root_l x) / j!``; identically zero when
    the kernel transform has a constant numerator.
    """
    terms = []
    for term in coeffs.exp_terms:
        poly = tuple(
            term.coeffs[j] / math.factorial(j) for j in range(term.multiplicity)
        )
        terms.append((term.root, poly))
    return ExpPoly(tuple(terms))


def memory_kernel_eval(coeffs: InversionCoefficients, x):
    """Evaluate the inversion formula's convolution weight at ``x``."""
    return memory_kernel(coeffs)(x)


def _trapezoid_causal(a: np.ndarray, b: np.ndarray, h: float) -> np.ndarray:
    """Trapezoid discretization of the causal convolution int_0^t a(t-x) b(x) dx.

    ``a`` and ``b`` are samples on the same uniform grid 0, h, 2h, ...;
    the result has the same length.
    """
    if a.shape != b.shape:
        raise ValueError("convolution inputs must share a grid")
    full = fftconvolve(a, b)[: a.size]
    out = h * (full - 0.5 * a * b[0] - 0.5 * a[0] * b)
    out[0] = 0.0
    return out


def forward_convolve(g: RationalLaplaceKernel, f, grid: np.ndarray, refine: int = 8) -> np.ndarray:
    """Sample q(t) = int_0^t g(t-x) f(x) dx on a uniform grid from zero.

    Quadrature is composite trapezoid on a ``refine``-times finer grid.
    ``f`` may be a callable (evaluated on the fine grid) or an array of
    samples on ``grid`` (linearly interpolated onto the fine grid).
    """
    grid = np.asarray(grid, dtype=float)
    if grid[0] != 0.0:
        raise ValueError("grid must start at zero")
    steps = np.diff(grid)
    if steps.size == 0 or not np.allclose(steps, steps[0], rtol=1e-10, atol=0.0):
        raise ValueError("grid must be uniform")
    if refine < 1:
        raise ValueError("refine must be a positive integer")
    n = grid.size - 1
    fine = np.linspace(0.0, grid[-1], n * refine + 1)
    h = fine[1] - fine[0]
    if callable(f):
        fv = np.asarray(f(fine), dtype=float)
    else:
        fv = np.asarray(f, dtype=float)
        if fv.shape != grid.shape:
            raise ValueError("sampled f must match the grid")
        fv = np.interp(fine, grid, fv)
    gv = impulse_response(g)(fine)
    return _trapezoid_causal(gv, fv, h)[:: refine]


def reconstruct(g: RationalLaplaceKernel, q_derivs, grid: np.ndarray, refine: int = 8) -> np.ndarray:
    """Recover f on ``grid`` from exact derivative functions of q.

    ``q_derivs[j]`` must evaluate the j-th derivative of the convolution
    output, for j = 0 .. relative degree.  The derivative terms of the
    inversion formula are evaluated directly; the convolution term is
    integrated by composite trapezoid on a ``refine``-times finer grid.
    """
    grid = np.asarray(grid, dtype=float)
    val = validate_kernel(g)
    r = val.relative_degree
    if len(q_derivs) < r + 1:
        raise ValueError("need derivative orders 0 .. %d" % r)
    coeffs = inversion_coefficients(g)

    out = np.asarray(q_derivs[r](grid), dtype=float).copy()
    for j in range(r):
        out -= coeffs.origin_coeffs[r - 1 - j] * np.asarray(q_derivs[j](grid), dtype=float)

    if coeffs.exp_terms:
        if grid[0] != 0.0:
            raise ValueError("grid must start at zero for the convolution term")
        n = grid.size - 1
        fine = np.linspace(0.0, grid[-1], n * refine + 1)
        h = fine[1] - fine[0]
        qr = np.asarray(q_derivs[r](fine), dtype=float)
        w = memory_kernel(coeffs)(fine)
        conv = _trapezoid_causal(qr, w, h)[:: refine]
        out -= conv
    return out / val.lead_coeff
