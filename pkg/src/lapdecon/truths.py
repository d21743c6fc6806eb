"""Benchmark source functions with exactly known convolution outputs.

Each truth bundles a source f, its nominal smoothness order, and a
constructor for the exact noise-free output q = g * f of any rational
convolution kernel g.  Exactness matters: simulation adds noise to q
evaluated in closed form, so measured estimation error is never confused
with quadrature error in the forward model.

Two families are provided.  The smooth truth t^2 exp(-t) has all
derivatives bounded; its transform 2/(s+1)^3 is rational, so q is a
plain exponential polynomial.  The kink truths are rescaled cardinal
B-splines of degree m: piecewise polynomials with a jump in the m-th
derivative, the canonical member of a smoothness-m class.  Their outputs
are shifted combinations of g convolved with t^m, again in closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.polynomial import polynomial as npoly

from .exppoly import ExpPoly, ShiftedExpPoly
from .laplace import RationalLaplaceKernel

__all__ = [
    "TruthSpec",
    "bspline_peak",
    "constant_truth",
    "kink_truth",
    "smooth_truth",
    "truth_from_config",
    "zero_truth",
]


@dataclass(frozen=True)
class TruthSpec:
    """A source function together with its exact forward image.

    ``m`` is the nominal smoothness order (None for infinitely smooth),
    ``support`` the interval outside which f vanishes (upper end may be
    inf), and ``exact_output(g)`` returns a callable evaluating g * f.
    """

    name: str
    m: int | None
    support: tuple[float, float]
    f: Callable[[np.ndarray], np.ndarray]
    exact_output: Callable[[RationalLaplaceKernel], Callable[[np.ndarray], np.ndarray]]


def smooth_truth() -> TruthSpec:
    """The infinitely differentiable source f(t) = t^2 exp(-t)."""

    def f(t):
        t = np.asarray(t, dtype=float)
        return t * t * np.exp(-t)

    def exact_output(g: RationalLaplaceKernel):
        num = npoly.polymul(np.asarray(g.num, dtype=float), [2.0])
        den = npoly.polymul(np.asarray(g.den, dtype=float), [1.0, 3.0, 3.0, 1.0])
        return ExpPoly.from_rational(tuple(num), tuple(den))

    return TruthSpec("smooth", None, (0.0, math.inf), f, exact_output)


def bspline_peak(m: int) -> float:
    """Maximum of the degree-m cardinal B-spline (attained at (m+1)/2)."""
    u = (m + 1) / 2.0
    total = 0.0
    for k in range(m + 2):
        z = u - k
        if z > 0.0:
            total += (-1) ** k * math.comb(m + 1, k) * z**m
    return total / math.factorial(m)


def kink_truth(m: int, center: float, width: float, amp: float = 1.0) -> TruthSpec:
    """Degree-m B-spline bump: smoothness exactly m, peak ``amp``.

    Supported on [center - width/2, center + width/2]; the m-th
    derivative has jumps at the m + 2 equally spaced knots.  The support
    must sit in t >= 0 so the source is causal.
    """
    if m < 1:
        raise ValueError("spline degree m must be at least 1")
    if width <= 0.0:
        raise ValueError("width must be positive")
    a = center - width / 2.0
    if a < 0.0:
        raise ValueError("support extends below t = 0")
    delta = width / (m + 1)
    scale = amp / (bspline_peak(m) * math.factorial(m) * delta**m)
    shifts = [a + k * delta for k in range(m + 2)]
    weights = [scale * (-1) ** k * math.comb(m + 1, k) for k in range(m + 2)]

    def f(t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        for tau, wk in zip(shifts, weights):
            z = np.maximum(t - tau, 0.0)
            out += wk * z**m
        return out

    def exact_output(g: RationalLaplaceKernel):
        num = npoly.polymul(np.asarray(g.num, dtype=float), [math.factorial(m)])
        den = npoly.polymul(
            np.asarray(g.den, dtype=float), npoly.polypow([0.0, 1.0], m + 1)
        )
        base = ExpPoly.from_rational(tuple(num), tuple(den))
        pieces = tuple(
            (tau, base.scaled(wk)) for tau, wk in zip(shifts, weights)
        )
        return ShiftedExpPoly(pieces)

    name = "kink%d" % m
    return TruthSpec(name, m, (a, a + width), f, exact_output)


def constant_truth(level: float = 1.0) -> TruthSpec:
    """The constant source f = level; its output is level times the
    running integral of the convolution kernel."""

    def f(t):
        return np.full_like(np.asarray(t, dtype=float), level)

    def exact_output(g: RationalLaplaceKernel):
        num = npoly.polymul(np.asarray(g.num, dtype=float), [level])
        den = npoly.polymul(np.asarray(g.den, dtype=float), [0.0, 1.0])
        return ExpPoly.from_rational(tuple(num), tuple(den))

    return TruthSpec("constant", None, (0.0, math.inf), f, exact_output)


def zero_truth() -> TruthSpec:
    """The zero source; its output is zero for every kernel."""

    def f(t):
        return np.zeros_like(np.asarray(t, dtype=float))

    def exact_output(g: RationalLaplaceKernel):
        return ExpPoly.zero()

    return TruthSpec("zero", None, (0.0, 0.0), f, exact_output)


def truth_from_config(entries: dict[str, str]) -> TruthSpec:
    """Build a truth from flat config keys (truth.kind and parameters)."""
    kind = entries.get("truth.kind", "smooth").strip().lower()
    if kind == "smooth":
        return smooth_truth()
    if kind == "zero":
        return zero_truth()
    if kind == "constant":
        return constant_truth(float(entries.get("truth.level", "1.0")))
    if kind == "kink":
        m = int(entries.get("truth.m", "1"))
        center = float(entries.get("truth.center", "2.0"))
        width = float(entries.get("truth.width", "1.6"))
        amp = float(entries.get("truth.amp", "1.0"))
        return kink_truth(m, center, width, amp)
    raise ValueError("unknown truth kind %r" % (kind,))
