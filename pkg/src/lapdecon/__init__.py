"""Adaptive deconvolution of causal (one-sided) convolution data.

Reconstructs a source f from noisy samples of q(t) = integral of
g(t - x) f(x) over [0, t], where the convolution kernel g has a rational
Laplace transform and the errors may be long-range dependent Gaussian.
The inversion is explicit (derivatives of q plus an exponential memory
correction); derivatives are estimated by higher-order kernel smoothing
with adaptively selected bandwidths.
"""

from .estimator import (
    EstimateResult,
    ExperimentDesign,
    LepskiConfig,
    deconvolve,
    kernel_estimate,
    lepski_grid,
    lepski_select,
    oracle_bandwidth,
)
from .harness import (
    FixedPolicy,
    LepskiPolicy,
    OraclePolicy,
    lepski_tail_study,
    mc_risk,
    rate_study,
    risk_decomposition,
    simulate,
)
from .kernels import DerivKernel, build_kernel
from .laplace import (
    RationalLaplaceKernel,
    forward_convolve,
    impulse_response,
    inversion_coefficients,
    reconstruct,
    validate_kernel,
)
from .noise import NoiseModel, autocovariance, eigen_envelope, sample_noise
from .truths import constant_truth, kink_truth, smooth_truth, zero_truth

__version__ = "0.1.0"

__all__ = [
    "DerivKernel",
    "EstimateResult",
    "ExperimentDesign",
    "FixedPolicy",
    "LepskiConfig",
    "LepskiPolicy",
    "NoiseModel",
    "OraclePolicy",
    "RationalLaplaceKernel",
    "__version__",
    "autocovariance",
    "build_kernel",
    "constant_truth",
    "deconvolve",
    "eigen_envelope",
    "forward_convolve",
    "impulse_response",
    "inversion_coefficients",
    "kernel_estimate",
    "kink_truth",
    "lepski_grid",
    "lepski_select",
    "lepski_tail_study",
    "mc_risk",
    "oracle_bandwidth",
    "rate_study",
    "reconstruct",
    "risk_decomposition",
    "sample_noise",
    "simulate",
    "smooth_truth",
    "validate_kernel",
    "zero_truth",
]
