"""Partial fractions of rational functions and exponential-polynomial sums.

The inverse Laplace transform of a proper rational function N(s)/D(s) is a
finite sum ``sum_l poly_l(t) * exp(p_l t)`` over the poles ``p_l`` of the
denominator.  This module finds the pole structure (clustered roots with
multiplicities), extracts residues by local Taylor expansion against an
exactly factored denominator, and represents the resulting time-domain
function so it can be evaluated and differentiated repeatedly.

Residues are never obtained by numerical differentiation of the rational
function itself: for a pole ``p`` of multiplicity ``m`` the factor
``(s - p)^m`` is removed symbolically (the denominator is rebuilt from its
remaining root clusters) and the quotient is expanded as a short power
series around ``p``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as npoly

__all__ = [
    "ExpPoly",
    "IllConditionedRoots",
    "MERGE_LADDER",
    "ShiftedExpPoly",
    "clustered_roots",
    "partial_fractions",
    "trim_poly",
]

#: Relative distance below which two computed roots are treated as one
#: multiple root.
ROOT_MERGE_RTOL = 1e-7

#: Successively coarser merge tolerances tried when the pole structure is
#: not supplied.  A root of multiplicity k scatters like eps**(1/k) under
#: the companion-matrix eigensolve (about 1e-4 for a quintuple root), so no
#: single tolerance separates "nearby distinct roots" from "one multiple
#: root".  Each rung is validated against the probe-point residual check;
#: distinct roots merge wrongly only at coarse rungs, which are never
#: reached because a finer rung already verified.
MERGE_LADDER = (ROOT_MERGE_RTOL, 1e-6, 1e-5, 1e-4, 1e-3, 8e-3)

#: Relative residual above which a partial-fraction expansion is rejected.
PF_CHECK_RTOL = 1e-6


class IllConditionedRoots(ValueError):
    """Residue extraction is numerically unreliable for this root layout."""


def trim_poly(coeffs, rtol: float = 0.0) -> np.ndarray:
    """Drop trailing (highest-degree) coefficients that vanish.

    Parameters
    ----------
    coeffs : array_like
        Polynomial coefficients in ascending order.
    rtol : float
        Coefficients with magnitude at most ``rtol * max|c|`` are treated
        as zero.  The default trims exact zeros only; a positive value
        absorbs analytic cancellations carried out in floating point.
    """
    c = np.atleast_1d(np.asarray(coeffs))
    if c.ndim != 1 or c.size == 0:
        raise ValueError("coefficients must form a nonempty 1-d sequence")
    cut = rtol * float(np.max(np.abs(c)))
    k = c.size
    while k > 1 and abs(c[k - 1]) <= cut:
        k -= 1
    return np.array(c[:k])


def _one_newton_step(coeffs: np.ndarray, roots: np.ndarray) -> np.ndarray:
    deriv = npoly.polyder(coeffs)
    vals = npoly.polyval(roots, coeffs)
    dvals = npoly.polyval(roots, deriv)
    safe = np.abs(dvals) > 1e-300
    out = roots.copy()
    out[safe] = roots[safe] - vals[safe] / dvals[safe]
    return out


def _polish_multiple(coeffs: np.ndarray, center: complex, mult: int) -> complex:
    """Refine a multiplicity-``mult`` root estimate.

    The eigensolve scatters a multiple root over a radius where averaging
    recovers only a few extra digits.  A multiplicity-m root of P is a
    simple root of the (m-1)-th derivative, so Newton applied there
    converges quadratically to full precision.
    """
    d = np.asarray(coeffs)
    for _ in range(mult - 1):
        d = npoly.polyder(d)
    z = center
    for _ in range(6):
        dval = complex(npoly.polyval(z, npoly.polyder(d)))
        if abs(dval) < 1e-300:
            break
        step = complex(npoly.polyval(z, d)) / dval
        z = z - step
        if abs(step) <= 1e-15 * max(1.0, abs(z)):
            break
    # a wrong clustering can send Newton far away; the caller's residual
    # check arbitrates, but never wander off the cluster entirely
    if not np.isfinite(z.real) or not np.isfinite(z.imag):
        return center
    if abs(z - center) > 0.1 * max(1.0, abs(center)):
        return center
    return z


def clustered_roots(coeffs, rtol: float = ROOT_MERGE_RTOL) -> list[tuple[complex, int]]:
    """Roots of a polynomial grouped into multiple roots.

    Companion-matrix eigenvalues are polished with a single Newton step and
    then merged whenever two roots sit within ``rtol`` (relative) of each
    other; each cluster is reported as (mean, size).  For real input the
    cluster list is symmetrized: nearly real roots are made exactly real
    and complex clusters are paired into exact conjugates.

    Returns a list sorted by (real part, imaginary part).
    """
    c = trim_poly(coeffs)
    if c.size == 1:
        return []
    cc = np.asarray(c, dtype=complex)
    # Keep the real dtype through np.roots: the real eigensolver returns
    # exact conjugate pairs, which the symmetrization below relies on.
    raw = np.asarray(np.roots(np.asarray(c)[::-1]), dtype=complex)
    raw = _one_newton_step(cc, raw)

    # single-linkage merge of nearby roots
    remaining = list(raw)
    clusters: list[list[complex]] = []
    while remaining:
        group = [remaining.pop()]
        grew = True
        while grew:
            grew = False
            for other in remaining[:]:
                near = any(
                    abs(other - g) <= rtol * max(1.0, abs(other), abs(g))
                    for g in group
                )
                if near:
                    remaining.remove(other)
                    group.append(other)
                    grew = True
        clusters.append(group)
    means = [(complex(np.mean(g)), len(g)) for g in clusters]
    means = [
        (_polish_multiple(c, z, m), m) if m > 1 else (z, m) for z, m in means
    ]

    if np.isrealobj(np.asarray(c)):
        means = _symmetrize(means, rtol)
    means.sort(key=lambda pm: (pm[0].real, pm[0].imag))
    return means


def _symmetrize(means: list[tuple[complex, int]], rtol: float) -> list[tuple[complex, int]]:
    out: list[tuple[complex, int]] = []
    used = [False] * len(means)
    for i, (p, m) in enumerate(means):
        if used[i]:
            continue
        used[i] = True
        if abs(p.imag) <= rtol * max(1.0, abs(p)):
            out.append((complex(p.real, 0.0), m))
            continue
        match = None
        for k, (q, mq) in enumerate(means):
            if used[k] or mq != m:
                continue
            if abs(q - p.conjugate()) <= rtol * max(1.0, abs(p)):
                match = k
                break
        if match is None:
            raise IllConditionedRoots(
                "unpaired complex root %r of a real polynomial" % (p,)
            )
        used[match] = True
        z = 0.5 * (p + means[match][0].conjugate())
        if z.imag < 0:
            z = z.conjugate()
        out.append((z, m))
        out.append((z.conjugate(), m))
    return out


def _taylor_coeffs(coeffs: np.ndarray, center: complex, count: int) -> np.ndarray:
    """First ``count`` Taylor coefficients of a polynomial about ``center``."""
    out = np.empty(count, dtype=complex)
    d = np.asarray(coeffs, dtype=complex)
    for i in range(count):
        out[i] = npoly.polyval(center, d) / math.factorial(i)
        d = npoly.polyder(d)
    return out


def partial_fractions(num, den, roots=None, check: bool = True):
    """Expand a strictly proper rational function over its poles.

    Returns a list of ``(pole, multiplicity, residues)`` triples where
    ``residues[j]`` multiplies ``1 / (s - pole)^(j + 1)`` in

        N(s)/D(s) = sum_l sum_j residues_l[j] / (s - p_l)^(j+1).

    Parameters
    ----------
    num, den : array_like
        Coefficients in ascending order; deg N < deg D required.
    roots : list of (pole, multiplicity), optional
        Pole structure of ``den`` if already known (e.g. built by
        construction).  Otherwise :func:`clustered_roots` is tried under
        each tolerance in :data:`MERGE_LADDER` and the first expansion
        that passes the probe-point check wins.
    check : bool
        Verify the expansion against the original function at probe points
        and raise :class:`IllConditionedRoots` on disagreement.  Ignored
        when ``roots`` is inferred (the check then arbitrates the merge
        tolerance and always runs).
    """
    n = trim_poly(num)
    d = trim_poly(den)
    if d.size == 1 and d[0] == 0:
        raise ValueError("zero denominator")
    if n.size >= d.size and not (n.size == 1 and n[0] == 0):
        raise ValueError("strictly proper rational function required")

    if roots is not None:
        result = _expand(n, d, roots)
        if check:
            _check_expansion(n, d, result)
        return result

    failure: IllConditionedRoots | None = None
    for rtol in MERGE_LADDER:
        try:
            guess = clustered_roots(d, rtol=rtol)
            result = _expand(n, d, guess)
            _check_expansion(n, d, result)
            return result
        except IllConditionedRoots as exc:
            failure = exc
    raise IllConditionedRoots(
        "no merge tolerance produced a verifiable expansion"
    ) from failure


def _expand(n: np.ndarray, d: np.ndarray, roots) -> list:
    total = sum(m for _, m in roots)
    if total != d.size - 1:
        raise IllConditionedRoots(
            "root multiplicities sum to %d for a degree-%d denominator"
            % (total, d.size - 1)
        )
    lead = complex(d[-1])

    result = []
    for idx, (p, m) in enumerate(roots):
        others: list[complex] = []
        for k, (q, mq) in enumerate(roots):
            if k != idx:
                others.extend([q] * mq)
        if others:
            d_other = lead * npoly.polyfromroots(others)
        else:
            d_other = np.array([lead])
        n_t = _taylor_coeffs(n, p, m)
        d_t = _taylor_coeffs(d_other, p, m)
        if abs(d_t[0]) < 1e-300:
            raise IllConditionedRoots("vanishing cofactor at pole %r" % (p,))
        h = np.empty(m, dtype=complex)
        for k in range(m):
            acc = n_t[k]
            for i in range(1, k + 1):
                acc -= d_t[i] * h[k - i]
            h[k] = acc / d_t[0]
        residues = np.array([h[m - 1 - j] for j in range(m)])
        result.append((complex(p), m, residues))
    return result


def _check_expansion(num, den, expansion) -> None:
    radius = 1.0 + 2.0 * max((abs(p) for p, _, _ in expansion), default=0.0)
    angles = np.array([0.37, 1.11, 2.03, 2.71, 3.93, 5.21])
    pts = radius * np.exp(1j * angles)
    direct = npoly.polyval(pts, np.asarray(num, complex)) / npoly.polyval(
        pts, np.asarray(den, complex)
    )
    series = np.zeros_like(pts)
    for p, m, res in expansion:
        for j in range(m):
            series += res[j] / (pts - p) ** (j + 1)
    scale = np.maximum(1.0, np.abs(direct))
    if np.max(np.abs(direct - series) / scale) > PF_CHECK_RTOL:
        raise IllConditionedRoots("partial-fraction expansion failed its residual check")


@dataclass(frozen=True)
class ExpPoly:
    """A finite sum ``sum_l poly_l(t) * exp(p_l t)``.

    ``terms`` maps each exponent ``p_l`` to ascending polynomial
    coefficients.  Complex terms are expected to occur in conjugate pairs
    so that evaluation is real; the imaginary residue of summation is
    discarded.
    """

    terms: tuple[tuple[complex, tuple[complex, ...]], ...]

    @classmethod
    def from_rational(cls, num, den, roots=None) -> "ExpPoly":
        """Inverse Laplace transform of a strictly proper N(s)/D(s)."""
        expansion = partial_fractions(num, den, roots=roots)
        terms = []
        for p, m, res in expansion:
            coeffs = tuple(complex(res[j]) / math.factorial(j) for j in range(m))
            terms.append((complex(p), coeffs))
        return cls(tuple(terms))

    @classmethod
    def zero(cls) -> "ExpPoly":
        return cls(())

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def scaled(self, factor: complex) -> "ExpPoly":
        return ExpPoly(
            tuple((p, tuple(factor * c for c in coeffs)) for p, coeffs in self.terms)
        )

    def __call__(self, t):
        arr = np.asarray(t, dtype=float)
        total = np.zeros(arr.shape, dtype=complex)
        for p, coeffs in self.terms:
            total += npoly.polyval(arr, np.asarray(coeffs)) * np.exp(p * arr)
        out = total.real
        if np.isscalar(t) or arr.ndim == 0:
            return float(out)
        return out

    def derivative(self) -> "ExpPoly":
        terms = []
        for p, coeffs in self.terms:
            c = np.asarray(coeffs)
            dc = np.zeros(c.size, dtype=complex)
            dc += p * c
            dc[:-1] += np.arange(1, c.size) * c[1:]
            terms.append((p, tuple(dc)))
        return ExpPoly(tuple(terms))

    def deriv_at_zero(self, order: int) -> float:
        """The value of the ``order``-th derivative at t = 0."""
        total = 0.0 + 0.0j
        for p, coeffs in self.terms:
            for i, c in enumerate(coeffs):
                if i > order:
                    break
                total += (
                    c
                    * math.factorial(order)
                    / math.factorial(order - i)
                    * p ** (order - i)
                )
        return float(total.real)


@dataclass(frozen=True)
class ShiftedExpPoly:
    """A causal sum of time-shifted exponential-polynomial pieces.

    Represents ``t -> sum_k 1[t >= tau_k] * piece_k(t - tau_k)``.
    Differentiation is termwise and therefore only valid when every piece
    vanishes at 0 (no jump at its own shift), which holds for all the
    convolution outputs built in this package.
    """

    pieces: tuple[tuple[float, ExpPoly], ...]

    def __call__(self, t):
        arr = np.asarray(t, dtype=float)
        total = np.zeros(arr.shape, dtype=float)
        for tau, piece in self.pieces:
            local = np.maximum(arr - tau, 0.0)
            vals = piece(local)
            total += np.where(arr >= tau, vals, 0.0)
        if np.isscalar(t) or arr.ndim == 0:
            return float(total)
        return total

    def derivative(self) -> "ShiftedExpPoly":
        return ShiftedExpPoly(
            tuple((tau, piece.derivative()) for tau, piece in self.pieces)
        )
