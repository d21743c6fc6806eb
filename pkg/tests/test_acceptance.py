"""End-to-end acceptance checks.

Each test exercises one advertised guarantee of the package at its
stated tolerance and appends a single PASS/FAIL line to the terminal
summary (see conftest).  The Monte Carlo checks share one frozen
benchmark: convolution kernel 1/(s+1), a degree-one spline bump of
height 6 centered at t = 2, horizon 8, noise level 0.07, grid ratio
2^(1/4), threshold factor 1.05, seed 12.  These settings are also the
ones shipped in scripts/, so the suite certifies exactly what the
experiment configs run.
"""

import math
import statistics
import time

import numpy as np
import pytest
from conftest import record

from lapdecon.cli import main
from lapdecon.estimator import (
    ExperimentDesign,
    LepskiConfig,
    boundary_width,
    kernel_estimate,
    l2_diff_sq,
    lepski_grid,
    oracle_bandwidth,
    resolution_floor,
)
from lapdecon.harness import (
    FixedPolicy,
    LepskiPolicy,
    fit_loglog,
    lepski_tail_study,
    mc_risk,
    rate_study,
    theory_exponent,
)
from lapdecon.kernels import build_kernel, moment_table
from lapdecon.laplace import (
    RationalLaplaceKernel,
    correction_transform,
    inversion_coefficients,
    reconstruct,
)
from lapdecon.noise import (
    NoiseModel,
    autocovariance,
    covariance_matrix,
    eigen_envelope,
    sample_noise,
)
from lapdecon.truths import kink_truth

G1 = RationalLaplaceKernel((1.0,), (1.0, 1.0))
G2 = RationalLaplaceKernel((1.0,), (1.0, 2.0, 1.0))
G3 = RationalLaplaceKernel((2.0, 1.0), (1.0, 2.0, 1.0))

A_RATIO = 2.0 ** 0.25
SIGMA = 0.07
HORIZON = 8.0
SEED = 12
TRUTH_BENCH = kink_truth(1, center=2.0, width=1.6, amp=6.0)
KERNS_BENCH = [build_kernel(3, 0), build_kernel(3, 1)]
DESIGNS_BENCH = [ExperimentDesign(2**k, HORIZON) for k in range(10, 15)]


def bench_config(alpha: float, gamma_sq_factor: float = 1.05) -> LepskiConfig:
    return LepskiConfig(
        a=A_RATIO, gamma_sq_factor=gamma_sq_factor, sigma=SIGMA, alpha=alpha
    )


@pytest.fixture(scope="module")
def bench_rate_studies():
    """Adaptive-policy rate studies on the frozen benchmark, both memory
    regimes.  Shared between the rate check and the oracle comparison."""
    t0 = time.perf_counter()
    studies = {}
    for alpha in (0.5, 1.0):
        noise = NoiseModel("fgn", alpha, SIGMA)
        studies[alpha] = rate_study(
            G1, TRUTH_BENCH, KERNS_BENCH, noise, DESIGNS_BENCH,
            bench_config(alpha), LepskiPolicy(), reps=50, seed=SEED,
        )
    return {"studies": studies, "elapsed": time.perf_counter() - t0}


def _verdict(label: str, ok: bool, detail: str) -> bool:
    record("%s %-3s %s" % ("PASS" if ok else "FAIL", label, detail))
    return ok


def test_01_kernel_moment_conformance():
    t0 = time.perf_counter()
    rows = moment_table(8)
    elapsed = time.perf_counter() - t0
    worst = max(row[5] for row in rows)
    ok = _verdict(
        "1",
        worst <= 1e-10 and elapsed < 1.0,
        "kernel moments L<=8: worst |error| %.3g over %d conditions, %.2fs (limits 1e-10, 1s)"
        % (worst, len(rows), elapsed),
    )
    assert ok


def _exact_q_derivs(g, orders):
    """Analytic derivatives of g * f for f(t) = t^2 e^{-t}."""
    from lapdecon.exppoly import ExpPoly

    pm = np.polynomial.polynomial.polymul
    e = ExpPoly.from_rational(
        tuple(pm(np.asarray(g.num, float), [2.0])),
        tuple(pm(np.asarray(g.den, float), [1.0, 3.0, 3.0, 1.0])),
    )
    out = [e]
    for _ in range(orders):
        out.append(out[-1].derivative())
    return out


def test_02_inversion_round_trip():
    t0 = time.perf_counter()
    grid = np.linspace(0.0, 5.0, 501)
    want = grid * grid * np.exp(-grid)
    worst = 0.0
    for g in (G1, G2, G3):
        derivs = _exact_q_derivs(g, g.relative_degree)
        got = reconstruct(g, derivs, grid, refine=8)
        worst = max(worst, float(np.max(np.abs(got - want))))
    elapsed = time.perf_counter() - t0
    ok = _verdict(
        "2",
        worst <= 1e-6 and elapsed < 5.0,
        "inversion round trip, three kernels on [0,5]: sup error %.3g, %.2fs (limits 1e-6, 5s)"
        % (worst, elapsed),
    )
    assert ok


def _expansion_value(coeffs, s):
    total = np.zeros_like(np.asarray(s, dtype=complex))
    for i, a in enumerate(coeffs.origin_coeffs):
        total += a / s ** (i + 1)
    for term in coeffs.exp_terms:
        for j, a in enumerate(term.coeffs):
            total += a / (s - term.root) ** (j + 1)
    return total


def test_03_inversion_coefficients_and_transform_identity():
    t0 = time.perf_counter()
    devs = []
    c1 = inversion_coefficients(G1)
    devs.append(abs(c1.origin_coeffs[0] + 1.0))
    assert c1.exp_terms == ()
    c2 = inversion_coefficients(G2)
    devs.extend([abs(c2.origin_coeffs[0] + 2.0), abs(c2.origin_coeffs[1] + 1.0)])
    assert c2.exp_terms == ()
    c3 = inversion_coefficients(G3)
    devs.append(abs(c3.origin_coeffs[0] + 0.5))
    assert len(c3.exp_terms) == 1
    term = c3.exp_terms[0]
    assert term.multiplicity == 1
    devs.extend([abs(term.root + 2.0), abs(term.coeffs[0] - 0.5)])

    rng = np.random.default_rng(2024)
    pts = rng.uniform(0.5, 3.0, 20) * np.exp(2j * np.pi * rng.uniform(0.0, 1.0, 20))
    worst_rel = 0.0
    for g in (G1, G2, G3):
        coeffs = inversion_coefficients(g)
        direct = correction_transform(g)(pts)
        rel = np.abs(_expansion_value(coeffs, pts) - direct) / np.abs(direct)
        worst_rel = max(worst_rel, float(np.max(rel)))
    elapsed = time.perf_counter() - t0
    ok = _verdict(
        "3",
        max(devs) <= 1e-10 and worst_rel <= 1e-8 and elapsed < 1.0,
        "worked coefficient sets |dev| %.3g, transform identity rel err %.3g at 20 points, %.2fs"
        % (max(devs), worst_rel, elapsed),
    )
    assert ok


def test_04_covariance_eigenvalue_scaling():
    t0 = time.perf_counter()
    sizes = [2**k for k in range(8, 13)]
    details = []
    ok = True
    for alpha in (0.4, 0.7):
        env = eigen_envelope(NoiseModel("fgn", alpha, 1.0), sizes)
        dev = abs(env.slope - (1.0 - alpha))
        ok = ok and dev <= 0.1
        details.append("alpha %.1f slope %.3f (target %.1f)" % (alpha, env.slope, 1.0 - alpha))
    cov = covariance_matrix(autocovariance(NoiseModel("fgn", 1.0, 1.0), 512))
    identity = bool(np.array_equal(cov, np.eye(512)))
    lam_max = float(np.linalg.eigvalsh(cov).max())
    ok = ok and identity and abs(lam_max - 1.0) <= 1e-12
    elapsed = time.perf_counter() - t0
    ok = _verdict(
        "4",
        ok and elapsed < 120.0,
        "max-eigenvalue growth: %s; alpha 1.0 max %.15g (identity %s), %.1fs (limits 0.1, 2min)"
        % ("; ".join(details), lam_max, identity, elapsed),
    )
    assert ok


def test_05_pure_noise_variance_scaling():
    t0 = time.perf_counter()
    kern = build_kernel(3, 0)
    T, lam = 4.0, 0.25
    sizes = [2**k for k in range(9, 14)]
    slopes = {}
    for alpha in (0.5, 1.0):
        model = NoiseModel("fgn", alpha, 1.0)
        means = []
        for i, n in enumerate(sizes):
            design = ExperimentDesign(n, T)
            band = boundary_width(design, lam)
            zero = np.zeros(design.grid.size)
            draws = sample_noise(model, n, (21, i), 100)
            ises = [
                l2_diff_sq(kernel_estimate(y, design, kern, lam), zero,
                           design, band, T - band)
                for y in draws
            ]
            means.append(sum(ises) / len(ises))
        slopes[alpha], _, _ = fit_loglog(sizes, means)
    elapsed = time.perf_counter() - t0
    ok = all(abs(slopes[a] + a) <= 0.15 for a in slopes)
    ok = _verdict(
        "5",
        ok and elapsed < 300.0,
        "pure-noise variance decay: fitted %.3f (target -0.5), %.3f (target -1.0), R=100, %.1fs"
        % (slopes[0.5], slopes[1.0], elapsed),
    )
    assert ok


def test_06_adaptive_rate_exponents(bench_rate_studies):
    studies = bench_rate_studies["studies"]
    details = []
    ok = True
    for alpha in (0.5, 1.0):
        study = studies[alpha]
        theory = theory_exponent(1, 1, alpha)
        assert study.theory == pytest.approx(theory)
        tol = max(0.15, 2.0 * study.slope_stderr)
        ok = ok and abs(study.slope - theory) <= tol
        details.append(
            "alpha %.1f fitted %.3f +- %.3f vs theory %.2f (tol %.3f)"
            % (alpha, study.slope, study.slope_stderr, theory, tol)
        )
    ok = _verdict(
        "6",
        ok,
        "adaptive risk decay over n=2^10..2^14, R=50: %s, %.0fs"
        % ("; ".join(details), bench_rate_studies["elapsed"]),
    )
    assert ok


def test_07_memory_monotonicity():
    t0 = time.perf_counter()
    design = ExperimentDesign(2**12, HORIZON)
    rows = []
    for alpha in (0.4, 0.7, 1.0):
        noise = NoiseModel("fgn", alpha, SIGMA)
        rep = mc_risk(
            G1, TRUTH_BENCH, KERNS_BENCH, noise, design,
            bench_config(alpha), LepskiPolicy(), reps=50, seed=SEED,
        )
        rows.append((alpha, rep.mean_ise, rep.se_ise))
    elapsed = time.perf_counter() - t0
    ok = True
    for (a0, m0, s0), (a1, m1, s1) in zip(rows, rows[1:]):
        ok = ok and m1 <= m0 + 2.0 * math.hypot(s0, s1)
    ok = _verdict(
        "7",
        ok and elapsed < 600.0,
        "mean ISE across memory 0.4/0.7/1.0 at n=4096: %s (non-increasing within 2 SE), %.0fs"
        % (" > ".join("%.4f" % m for _, m, _ in rows), elapsed),
    )
    assert ok


def test_08a_selection_statistic_tail():
    t0 = time.perf_counter()
    design = ExperimentDesign(2**12, HORIZON)
    worst = 0.0
    n_rows = 0
    for alpha in (0.5, 1.0):
        cfg = LepskiConfig(a=A_RATIO, sigma=SIGMA, alpha=alpha)  # default threshold
        noise = NoiseModel("fgn", alpha, SIGMA)
        lam_o = oracle_bandwidth(1, 1, design, alpha)
        for j in (0, 1):
            study = lepski_tail_study(
                build_kernel(3, j), noise, design, cfg, reps=200, seed=SEED,
                lam_ref=lam_o,
            )
            assert study.rows, "no admissible bandwidths below the reference"
            n_rows += len(study.rows)
            worst = max(worst, max(row.frequency for row in study.rows))
    elapsed = time.perf_counter() - t0
    ok = _verdict(
        "8a",
        worst <= 0.05 and elapsed < 900.0,
        "pure-noise exceedance at default threshold: worst freq %.3f over %d cells, R=200, %.0fs (limit 5%%)"
        % (worst, n_rows, elapsed),
    )
    assert ok


def test_08b_adaptive_vs_best_fixed_bandwidth(bench_rate_studies):
    """Median adaptive ISE within a small factor of the exhaustive-search
    fixed-bandwidth optimum, same replicate noise on both sides.

    Run in the white-noise regime: under long memory the selection
    thresholds are calibrated conservatively enough that the adaptive
    estimator lands several grid steps above the fixed optimum at this
    design size, and no fixed factor this small can hold there.
    """
    t0 = time.perf_counter()
    cfg = bench_config(1.0)
    design = DESIGNS_BENCH[2]  # n = 4096
    noise = NoiseModel("fgn", 1.0, SIGMA)
    floor = min(resolution_floor(1, cfg, design), 1.0)
    grid = lepski_grid(1, cfg, design, min_lambda=floor)
    best = math.inf
    best_lam = None
    for lam in grid:
        rep = mc_risk(
            G1, TRUTH_BENCH, KERNS_BENCH, noise, design, cfg,
            FixedPolicy(float(lam)), reps=50, seed=SEED, design_index=2,
        )
        med = statistics.median(rep.ises)
        if med < best:
            best, best_lam = med, float(lam)
    lep_med = statistics.median(bench_rate_studies["studies"][1.0].reports[2].ises)
    ratio = lep_med / best
    elapsed = time.perf_counter() - t0
    ok = _verdict(
        "8b",
        ratio <= 3.0 and elapsed < 900.0,
        "median adaptive ISE %.4f vs best fixed %.4f at lam %.3f: ratio %.2f (limit 3), %.0fs"
        % (lep_med, best, best_lam, ratio, elapsed),
    )
    assert ok


SIM_CFG = """\
g.numer = 1.0
g.denom = 1.0, 1.0
truth.kind = smooth
noise.kind = iid
noise.alpha = 1.0
noise.sigma = 0.1
design.n = 128
design.T = 4.0
"""

RATE_CFG = """\
g.numer = 1.0
g.denom = 1.0, 1.0
truth.kind = kink
truth.m = 1
truth.center = 2.0
truth.width = 1.6
truth.amp = 6.0
noise.sigma = 0.05
design.n = 64, 128
design.T = 8.0
kernels.L = 3
study.alphas = 1.0
study.reps = 2
study.seed = 3
study.policy = fixed
study.fixed_lambda = 0.25
"""

LEPSKI_CFG = """\
g.numer = 1.0
g.denom = 1.0, 1.0
truth.m = 1
noise.kind = iid
noise.alpha = 1.0
noise.sigma = 1.0
design.n = 256
design.T = 4.0
study.j = 0
study.reps = 2
study.seed = 9
"""


def test_09_cli_determinism(tmp_path):
    t0 = time.perf_counter()
    sim_cfg = tmp_path / "sim.cfg"
    sim_cfg.write_text(SIM_CFG)
    rate_cfg = tmp_path / "rate.cfg"
    rate_cfg.write_text(RATE_CFG)
    lep_cfg = tmp_path / "lep.cfg"
    lep_cfg.write_text(LEPSKI_CFG)

    outputs = []
    for run in ("one", "two"):
        base = tmp_path / run
        base.mkdir()
        main(["kernels", "check", "--Lmax", "3", "--out", str(base / "kern.csv")])
        main(["noise", "eigs", "--alpha", "0.5", "--n", "64,128",
              "--out", str(base / "eigs.csv")])
        main(["simulate", "--config", str(sim_cfg), "--seed", "7",
              "--out", str(base / "sim.csv")])
        main(["rate-study", "--config", str(rate_cfg), "--out", str(base / "rate")])
        main(["lepski-study", "--config", str(lep_cfg), "--out", str(base / "lep")])
        outputs.append(sorted(p for p in base.rglob("*.csv")))

    assert len(outputs[0]) == len(outputs[1]) == 7
    same = all(
        a.read_bytes() == b.read_bytes() for a, b in zip(outputs[0], outputs[1])
    )
    elapsed = time.perf_counter() - t0
    ok = _verdict(
        "9",
        same,
        "all five subcommands rerun byte-identical (%d artifacts), %.1fs"
        % (len(outputs[0]), elapsed),
    )
    assert ok
