"""Rational transform validation, inversion ingredients, and round trips.

Reference values come from symbolic Laplace inversion (sympy) or from
hand algebra that sympy confirms; the implementation under test never
touches sympy.
"""

import math

import numpy as np
import pytest
import sympy as sp

from lapdecon.exppoly import ExpPoly
from lapdecon.laplace import (
    DegenerateKernel,
    NonnegativeRealPartZero,
    RationalLaplaceKernel,
    UnstableKernel,
    correction_transform,
    forward_convolve,
    impulse_response,
    inversion_coefficients,
    memory_kernel,
    memory_kernel_eval,
    reconstruct,
    validate_kernel,
)

S = sp.symbols("s")
TT = sp.symbols("t", positive=True)


# -- validation --------------------------------------------------------------


def test_validate_reference_kernels(g1, g2, g3):
    v1 = validate_kernel(g1)
    assert v1.relative_degree == 1 and v1.lead_coeff == 1.0
    v2 = validate_kernel(g2)
    assert v2.relative_degree == 2 and v2.lead_coeff == 1.0
    assert v2.poles[0][1] == 2  # double pole at -1
    v3 = validate_kernel(g3)
    assert v3.relative_degree == 1 and v3.lead_coeff == 1.0
    assert len(v3.zeros) == 1
    z, mult = v3.zeros[0]
    assert mult == 1 and abs(z - (-2.0)) < 1e-9


def test_zero_on_imaginary_axis_rejected():
    # s/(s+1)^2: numerator root at the origin violates the half-plane rule
    g = RationalLaplaceKernel((0.0, 1.0), (1.0, 2.0, 1.0))
    with pytest.raises(NonnegativeRealPartZero):
        validate_kernel(g)


def test_unstable_pole_rejected():
    g = RationalLaplaceKernel((1.0,), (-1.0, 1.0))  # pole at +1
    with pytest.raises(UnstableKernel):
        validate_kernel(g)


def test_improper_transform_rejected_at_construction():
    with pytest.raises(DegenerateKernel):
        RationalLaplaceKernel((1.0, 1.0), (1.0, 1.0))
    with pytest.raises(DegenerateKernel):
        RationalLaplaceKernel((0.0,), (1.0, 1.0))


# -- impulse response --------------------------------------------------------


def test_impulse_response_values(g1, g2, g3):
    t1 = np.array([1.0])
    assert impulse_response(g1)(t1)[0] == pytest.approx(math.exp(-1.0), abs=1e-12)
    assert impulse_response(g2)(np.array([0.0]))[0] == pytest.approx(0.0, abs=1e-12)
    # (s+2)/(s+1)^2 inverts to (1+t) e^{-t}
    assert impulse_response(g3)(t1)[0] == pytest.approx(2 * math.exp(-1.0), abs=1e-12)


def test_impulse_response_matches_sympy(g3):
    expr = sp.inverse_laplace_transform((S + 2) / (S + 1) ** 2, S, TT)
    f = sp.lambdify(TT, expr, "numpy")
    t = np.linspace(0.05, 6.0, 40)
    assert np.max(np.abs(impulse_response(g3)(t) - f(t))) < 1e-10


# -- correction transform and its partial fractions --------------------------


def test_correction_transform_closed_forms(g1, g2, g3):
    pts = np.array([0.7 + 0.3j, -0.4 + 2.1j, 3.0 + 0.0j, 1.0 - 1.0j])
    assert np.allclose(correction_transform(g1)(pts), -1.0 / pts, rtol=1e-12)
    assert np.allclose(
        correction_transform(g2)(pts), -(2 * pts + 1) / pts**2, rtol=1e-12
    )
    assert np.allclose(
        correction_transform(g3)(pts), -1.0 / (pts * (pts + 2)), rtol=1e-12
    )


def test_worked_coefficient_sets(g1, g2, g3):
    c1 = inversion_coefficients(g1)
    assert c1.origin_coeffs == pytest.approx((-1.0,), abs=1e-10)
    assert c1.exp_terms == ()

    c2 = inversion_coefficients(g2)
    assert c2.origin_coeffs == pytest.approx((-2.0, -1.0), abs=1e-10)
    assert c2.exp_terms == ()

    c3 = inversion_coefficients(g3)
    assert c3.origin_coeffs == pytest.approx((-0.5,), abs=1e-10)
    assert len(c3.exp_terms) == 1
    term = c3.exp_terms[0]
    assert term.multiplicity == 1
    assert abs(term.root - (-2.0)) < 1e-10
    assert abs(term.coeffs[0] - 0.5) < 1e-10


def _expansion_value(coeffs, s):
    total = np.zeros_like(np.asarray(s, dtype=complex))
    for i, a in enumerate(coeffs.origin_coeffs):
        total += a / s ** (i + 1)
    for term in coeffs.exp_terms:
        for j, a in enumerate(term.coeffs):
            total += a / (s - term.root) ** (j + 1)
    return total


@pytest.mark.parametrize("which", ["g1", "g2", "g3"])
def test_reconstruction_identity_random_points(which, request):
    """Expanded correction transform equals the direct one off the poles."""
    g = request.getfixturevalue(which)
    coeffs = inversion_coefficients(g)
    phi = correction_transform(g)
    rng = np.random.default_rng(2024)
    pts = rng.uniform(0.5, 3.0, 20) * np.exp(2j * np.pi * rng.uniform(0, 1, 20))
    direct = phi(pts)
    assert np.max(np.abs(_expansion_value(coeffs, pts) - direct) / np.abs(direct)) < 1e-8


def test_memory_kernel_values(g2, g3):
    assert memory_kernel(inversion_coefficients(g2)).is_zero
    c3 = inversion_coefficients(g3)
    assert memory_kernel_eval(c3, 0.0) == pytest.approx(0.5, abs=1e-12)
    assert memory_kernel_eval(c3, 1.0) == pytest.approx(0.5 * math.exp(-2.0), abs=1e-12)


def test_memory_kernel_real_for_complex_zero_pair():
    # numerator zeros at -1 +- 2i, still strictly in the left half-plane
    g = RationalLaplaceKernel((5.0, 2.0, 1.0), (1.0, 4.0, 6.0, 4.0, 1.0))
    coeffs = inversion_coefficients(g)
    assert len(coeffs.exp_terms) == 2
    roots = sorted((t.root for t in coeffs.exp_terms), key=lambda z: z.imag)
    assert roots[0] == pytest.approx(roots[1].conjugate())
    x = np.linspace(0.0, 3.0, 31)
    vals = memory_kernel(coeffs)(x)
    assert np.max(np.abs(np.imag(vals))) < 1e-10


# -- forward convolution ------------------------------------------------------


def test_forward_convolve_constant_input(g1):
    grid = np.linspace(0.0, 2.0, 65)
    q = forward_convolve(g1, lambda t: np.ones_like(t), grid, refine=16)
    want = 1.0 - np.exp(-grid)
    assert q[0] == 0.0
    assert np.max(np.abs(q - want)) < 1e-5


def test_forward_convolve_zero_and_linearity(g3):
    grid = np.linspace(0.0, 3.0, 49)
    zero = forward_convolve(g3, lambda t: np.zeros_like(t), grid)
    assert np.all(zero == 0.0)
    f1 = lambda t: np.sin(t)
    f2 = lambda t: t
    qa = forward_convolve(g3, lambda t: 2.0 * f1(t) - 0.5 * f2(t), grid)
    qb = 2.0 * forward_convolve(g3, f1, grid) - 0.5 * forward_convolve(g3, f2, grid)
    assert np.max(np.abs(qa - qb)) < 1e-12


def test_forward_convolve_saturates_at_kernel_mass(g2):
    # int_0^inf t e^{-t} dt = 1, so q(t) -> 1 for constant input
    grid = np.linspace(0.0, 30.0, 601)
    q = forward_convolve(g2, lambda t: np.ones_like(t), grid, refine=8)
    assert q[-1] == pytest.approx(1.0, abs=1e-4)


def test_forward_convolve_sampled_input_matches_callable(g1):
    grid = np.linspace(0.0, 2.0, 33)
    f = lambda t: np.cos(0.5 * t)
    q_call = forward_convolve(g1, f, grid, refine=4)
    # sampled route interpolates linearly; agreement is only O(h^2)
    q_samp = forward_convolve(g1, f(grid), grid, refine=4)
    assert np.max(np.abs(q_call - q_samp)) < 5e-3


# -- reconstruction round trips ----------------------------------------------


def _exact_q_derivs(g, num, den, orders):
    """Analytic derivatives of q for f with rational transform num/den."""
    qnum = np.polynomial.polynomial.polymul(np.asarray(g.num, float), num)
    qden = np.polynomial.polynomial.polymul(np.asarray(g.den, float), den)
    e = ExpPoly.from_rational(tuple(qnum), tuple(qden))
    out = [e]
    for _ in range(orders):
        out.append(out[-1].derivative())
    return out


def test_round_trip_no_memory_term(g1, g2):
    grid = np.linspace(0.0, 5.0, 201)
    want = grid * grid * np.exp(-grid)
    for g in (g1, g2):
        derivs = _exact_q_derivs(g, [2.0], [1.0, 3.0, 3.0, 1.0], g.relative_degree)
        got = reconstruct(g, derivs, grid)
        assert np.max(np.abs(got - want)) < 1e-8


def test_round_trip_with_memory_term(g3):
    grid = np.linspace(0.0, 5.0, 401)
    want = grid * grid * np.exp(-grid)
    derivs = _exact_q_derivs(g3, [2.0], [1.0, 3.0, 3.0, 1.0], 1)
    got = reconstruct(g3, derivs, grid, refine=8)
    assert np.max(np.abs(got - want)) < 1e-6


def test_round_trip_constant_source(g1):
    # q = 1 - e^{-t}, f = q' + q = 1
    grid = np.linspace(0.0, 4.0, 81)
    e = ExpPoly.from_rational((1.0,), (0.0, 1.0, 1.0))  # 1/(s(s+1))
    got = reconstruct(g1, [e, e.derivative()], grid)
    assert np.max(np.abs(got - 1.0)) < 1e-10


def test_reconstruct_zero_output_gives_zero(g3):
    grid = np.linspace(0.0, 3.0, 61)
    zero = ExpPoly.zero()
    got = reconstruct(g3, [zero, zero.derivative()], grid)
    assert np.all(got == 0.0)
