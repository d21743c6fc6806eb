"""Monte Carlo experiments: simulation, risk curves, and selection studies.

This layer runs the estimator of :mod:`lapdecon.estimator` against the
benchmark truths of :mod:`lapdecon.truths` under the noise models of
:mod:`lapdecon.noise` and aggregates replicated integrated squared
errors.  Outputs are plain dataclasses of floats and tuples so the CLI
can serialize them without knowing how they were produced.

Reproducibility contract: every replicate derives its random stream from
the tuple (seed, design_index, replicate_index), so adding designs or
replicates never perturbs existing draws, and rerunning a study with the
same seed reproduces it bitwise.

Error reporting excludes boundary bands (width = the largest candidate
bandwidth, capped at a quarter of the horizon) where kernel windows
leave the data range and no estimator can be expected to behave.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .estimator import (
    ExperimentDesign,
    LepskiConfig,
    assemble_inversion,
    boundary_width,
    deconvolve,
    kernel_estimate,
    l2_diff_sq,
    lepski_grid,
    noise_level_sq,
    oracle_bandwidth,
    resolution_floor,
)
from .kernels import DerivKernel
from .laplace import (
    RationalLaplaceKernel,
    _trapezoid_causal,
    inversion_coefficients,
    memory_kernel,
    validate_kernel,
)
from .noise import NoiseModel, _ols_line, sample_noise
from .truths import TruthSpec

__all__ = [
    "ExceedanceRow",
    "FixedPolicy",
    "LepskiPolicy",
    "OraclePolicy",
    "RateStudy",
    "RiskDecomposition",
    "RiskReport",
    "SimulationResult",
    "TailStudy",
    "fit_loglog",
    "lepski_tail_study",
    "mc_risk",
    "rate_study",
    "risk_decomposition",
    "simulate",
    "theory_exponent",
]


@dataclass(frozen=True)
class SimulationResult:
    """One synthetic data set: design points, clean output, observations."""

    t: np.ndarray
    q: np.ndarray
    y: np.ndarray


def simulate(
    g: RationalLaplaceKernel,
    truth: TruthSpec,
    noise: NoiseModel,
    design: ExperimentDesign,
    seed,
) -> SimulationResult:
    """Draw y_i = q(t_i) + noise with q evaluated in closed form.

    The clean output comes from the truth's exact forward image, so the
    only stochastic component is the noise draw; there is no quadrature
    error in the data themselves.
    """
    t = design.data_grid
    q = np.asarray(truth.exact_output(g)(t), dtype=float)
    y = q + sample_noise(noise, design.n, seed)
    return SimulationResult(t, q, y)


@dataclass(frozen=True)
class LepskiPolicy:
    """Select bandwidths adaptively per derivative order."""


@dataclass(frozen=True)
class FixedPolicy:
    """Use caller-supplied bandwidths (a scalar or mapping order -> value)."""

    bandwidths: object


@dataclass(frozen=True)
class OraclePolicy:
    """Use the risk-balancing bandwidth for the truth's known smoothness.

    ``const`` multiplies the rate-optimal bandwidth; with ``snap`` the
    value is moved to the nearest point of the selection grid, making
    oracle and adaptive runs directly comparable.
    """

    const: float = 1.0
    snap: bool = True


def _snap_to_grid(lam: float, grid: np.ndarray) -> float:
    logs = np.log(grid)
    return float(grid[int(np.argmin(np.abs(logs - math.log(lam))))])


def _resolve_bandwidths(policy, truth, r, design, config):
    if isinstance(policy, LepskiPolicy):
        return None
    if isinstance(policy, FixedPolicy):
        return policy.bandwidths
    if isinstance(policy, OraclePolicy):
        if truth.m is None:
            raise ValueError(
                "oracle policy needs a finite smoothness order; truth %r has none"
                % truth.name
            )
        lam = oracle_bandwidth(truth.m, r, design, config.alpha, policy.const)
        if not policy.snap:
            return min(lam, design.T)
        out = {}
        for j in range(r + 1):
            floor = None
            if config.use_resolution_floor:
                floor = min(resolution_floor(j, config, design), 1.0)
            grid = lepski_grid(j, config, design, min_lambda=floor)
            out[j] = _snap_to_grid(lam, grid)
        return out
    raise TypeError("unknown bandwidth policy %r" % (policy,))


@dataclass(frozen=True)
class RiskReport:
    """Replicated integrated squared error at one design size."""

    n: int
    reps: int
    mean_ise: float
    se_ise: float
    ises: tuple[float, ...]
    mean_lambda: dict[int, float]


def mc_risk(
    g: RationalLaplaceKernel,
    truth: TruthSpec,
    kerns: list[DerivKernel],
    noise: NoiseModel,
    design: ExperimentDesign,
    config: LepskiConfig,
    policy,
    reps: int,
    seed: int,
    design_index: int = 0,
) -> RiskReport:
    """Monte Carlo integrated squared error of the reconstruction.

    The clean output is evaluated once; each replicate adds a fresh noise
    draw keyed by (seed, design_index, replicate), runs the policy's
    bandwidth choice, and scores the interior squared error against the
    true source.
    """
    if reps < 1:
        raise ValueError("reps must be positive")
    val = validate_kernel(g)
    r = val.relative_degree
    q_data = np.asarray(truth.exact_output(g)(design.data_grid), dtype=float)
    f_true = np.asarray(truth.f(design.grid), dtype=float)
    band = boundary_width(design, 1.0)
    lo, hi = band, design.T - band
    bandwidths = _resolve_bandwidths(policy, truth, r, design, config)

    ises = np.empty(reps)
    lam_sums = {j: 0.0 for j in range(r + 1)}
    for rep in range(reps):
        y = q_data + sample_noise(noise, design.n, (seed, design_index, rep))
        res = deconvolve(y, g, kerns, config, design, bandwidths=bandwidths)
        ises[rep] = l2_diff_sq(res.f_hat, f_true, design, lo, hi)
        for j in range(r + 1):
            lam_sums[j] += res.lambda_hat[j]
    mean = float(ises.mean())
    se = float(ises.std(ddof=1) / math.sqrt(reps)) if reps > 1 else 0.0
    mean_lambda = {j: lam_sums[j] / reps for j in range(r + 1)}
    return RiskReport(design.n, reps, mean, se, tuple(float(v) for v in ises), mean_lambda)


def fit_loglog(x, y):
    """Least-squares slope of log y on log x: (slope, intercept, stderr)."""
    lx = np.log(np.asarray(x, dtype=float))
    ly = np.log(np.asarray(y, dtype=float))
    return _ols_line(lx, ly)


def theory_exponent(m: int, r: int, alpha: float) -> float:
    """Fixed-horizon risk exponent: mean ISE decays like n to this power."""
    return -2.0 * m * alpha / (2.0 * (m + r) + 1.0)


@dataclass(frozen=True)
class RateStudy:
    """Risk-versus-sample-size sweep with a fitted decay exponent.

    The exponent fit is reported only when it is statistically meaningful:
    at least four design sizes and at least twenty replicates per size.
    """

    reports: tuple[RiskReport, ...]
    slope: float | None
    slope_stderr: float | None
    theory: float | None


def rate_study(
    g: RationalLaplaceKernel,
    truth: TruthSpec,
    kerns: list[DerivKernel],
    noise: NoiseModel,
    designs: list[ExperimentDesign],
    config: LepskiConfig,
    policy,
    reps: int,
    seed: int,
) -> RateStudy:
    """Measure how mean ISE scales with n across a family of designs.

    Fits log mean-ISE against log n by least squares; the theoretical
    exponent is attached when the truth has a finite smoothness order.
    """
    if len(designs) < 2:
        raise ValueError("need at least two design sizes")
    reports = tuple(
        mc_risk(g, truth, kerns, noise, d, config, policy, reps, seed, design_index=i)
        for i, d in enumerate(designs)
    )
    slope = stderr = None
    if len(designs) >= 4 and reps >= 20:
        slope, _, stderr = fit_loglog(
            [rep.n for rep in reports], [rep.mean_ise for rep in reports]
        )
    theory = None
    if truth.m is not None:
        r = validate_kernel(g).relative_degree
        theory = theory_exponent(truth.m, r, config.alpha)
    return RateStudy(reports, slope, stderr, theory)


@dataclass(frozen=True)
class ExceedanceRow:
    """Exceedance frequency of the selection statistic at one bandwidth."""

    n: int
    j: int
    lam: float
    lam_ref: float
    count: int
    reps: int

    @property
    def frequency(self) -> float:
        return self.count / self.reps


@dataclass(frozen=True)
class TailStudy:
    n: int
    j: int
    reps: int
    lam_ref: float
    rows: tuple[ExceedanceRow, ...]


def lepski_tail_study(
    kern: DerivKernel,
    noise: NoiseModel,
    design: ExperimentDesign,
    config: LepskiConfig,
    reps: int,
    seed: int,
    lam_ref: float | None = None,
    design_index: int = 0,
) -> TailStudy:
    """Pure-noise exceedance frequencies of the selection statistic.

    Draws zero-signal data (the source is identically zero, so every
    estimate is pure smoothed noise) and counts, for each admissible
    bandwidth lam below the reference lam_ref, how often the comparison
    statistic against the reference exceeds its threshold.  Under a zero
    source the reference defaults to the grid maximum, the bandwidth an
    oracle would use for an arbitrarily smooth target.  Admissible means
    lam strictly between the variance-saturation point
    (sigma^2 T^2 / n^alpha)^(1/(2j+1)) and lam_ref.  Frequencies should
    stay well under the selection's design level and shrink with n.
    """
    j = kern.j
    floor = None
    if config.use_resolution_floor:
        floor = min(resolution_floor(j, config, design), 1.0)
    grid = lepski_grid(j, config, design, min_lambda=floor)
    if lam_ref is None:
        lam_ref = float(grid.max())
    else:
        lam_ref = _snap_to_grid(lam_ref, grid)
    sat = (config.sigma**2 * design.T**2 / design.n**config.alpha) ** (
        1.0 / (2 * j + 1)
    )
    admissible = [float(l) for l in grid if sat < l < lam_ref]
    band = boundary_width(design, float(grid.max()))
    lo, hi = band, design.T - band
    gam_sq = config.gamma_sq(kern, design.mu)

    counts = {lam: 0 for lam in admissible}
    for rep in range(reps):
        y = sample_noise(noise, design.n, (seed, design_index, rep))
        ref = kernel_estimate(y, design, kern, lam_ref)
        for lam in admissible:
            est = kernel_estimate(y, design, kern, lam)
            stat = l2_diff_sq(est, ref, design, lo, hi)
            if stat > gam_sq * noise_level_sq(lam, j, config, design):
                counts[lam] += 1

    rows = tuple(
        ExceedanceRow(design.n, j, lam, lam_ref, counts[lam], reps)
        for lam in admissible
    )
    return TailStudy(design.n, j, reps, lam_ref, rows)


@dataclass(frozen=True)
class RiskDecomposition:
    """Reconstruction error split into its inversion-formula components.

    ``r1`` is the mean interior squared error of the top derivative
    estimate, ``r2`` of its convolution with the memory kernel, ``r3``
    the coefficient-weighted sum over lower orders.  ``identity_l2`` is
    the deterministic residual of the inversion identity on exact
    derivative samples (quadrature only, no noise).  ``min_margin`` is
    the worst-case slack in the per-replicate bound

        |fhat - f| <= sqrt((r + 2) (r1 + r2 + r3)) / |b| + identity

    (interior L2 norms); nonnegative up to roundoff when the
    decomposition is implemented consistently with the estimator.
    """

    r: int
    reps: int
    r1: float
    r2: float
    r3: float
    total: float
    identity_l2: float
    min_margin: float


def risk_decomposition(
    g: RationalLaplaceKernel,
    truth: TruthSpec,
    kerns: list[DerivKernel],
    noise: NoiseModel,
    design: ExperimentDesign,
    config: LepskiConfig,
    bandwidths,
    reps: int,
    seed: int,
) -> RiskDecomposition:
    """Split mean reconstruction risk into derivative-level contributions.

    Runs fixed-bandwidth reconstructions and measures, per replicate, the
    interior squared errors of each derivative estimate against the exact
    derivatives of the clean output, then verifies the triangle and
    Cauchy-Schwarz bound tying them to the end-to-end error.
    """
    val = validate_kernel(g)
    r = val.relative_degree
    coeffs = inversion_coefficients(g)
    grid = design.grid
    band = boundary_width(design, 1.0)
    lo, hi = band, design.T - band

    q_fun = truth.exact_output(g)
    q_exact = {0: np.asarray(q_fun(grid), dtype=float)}
    d = q_fun
    for j in range(1, r + 1):
        d = d.derivative()
        q_exact[j] = np.asarray(d(grid), dtype=float)
    q_data = q_exact[0][1:]
    f_true = np.asarray(truth.f(grid), dtype=float)

    f_identity = assemble_inversion(q_exact, g, design)
    identity_l2 = math.sqrt(l2_diff_sq(f_identity, f_true, design, lo, hi))

    w = memory_kernel(coeffs)(grid) if coeffs.exp_terms else None
    zero = np.zeros_like(grid)
    c_sq = [coeffs.origin_coeffs[r - 1 - j] ** 2 for j in range(r)]

    sums = np.zeros(4)
    min_margin = math.inf
    for rep in range(reps):
        y = q_data + sample_noise(noise, design.n, (seed, 0, rep))
        res = deconvolve(y, g, kerns, config, design, bandwidths=bandwidths)
        diffs = {j: res.q_hat[j] - q_exact[j] for j in range(r + 1)}
        r1 = l2_diff_sq(diffs[r], zero, design, lo, hi)
        r2 = 0.0
        if w is not None:
            r2 = l2_diff_sq(_trapezoid_causal(diffs[r], w, design.h), zero, design, lo, hi)
        r3 = sum(c_sq[j] * l2_diff_sq(diffs[j], zero, design, lo, hi) for j in range(r))
        total = l2_diff_sq(res.f_hat, f_true, design, lo, hi)
        sums += (r1, r2, r3, total)
        bound = math.sqrt((r + 2) * (r1 + r2 + r3)) / abs(val.lead_coeff) + identity_l2
        min_margin = min(min_margin, bound - math.sqrt(total))

    means = sums / reps
    return RiskDecomposition(
        r, reps, means[0], means[1], means[2], means[3], identity_l2, min_margin
    )
