"""Stationary Gaussian noise with long-range dependence.

The error process is fractional Gaussian noise: increments of fractional
Brownian motion with Hurst index H = 1 - alpha/2, so that the covariance
decays like k^-alpha and the largest eigenvalue of the n x n covariance
matrix grows like n^(1-alpha).  alpha = 1 recovers white noise.

Sampling is exact through circulant embedding of the Toeplitz covariance
(size 2(n-1)) with a spectral square root, reducing a draw to two FFTs.
The embedding spectrum of fractional Gaussian noise is nonnegative, but a
dense symmetric factorization is kept as a guarded fallback.  Every draw
is a fixed linear map applied to iid standard normals from a named
counter-based generator, so results are reproducible from the seed alone.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cholesky, eigh, toeplitz

__all__ = [
    "CovarianceSpec",
    "EmbeddingFailure",
    "NoiseModel",
    "RNG_ALGORITHM",
    "autocovariance",
    "covariance_matrix",
    "eigen_envelope",
    "make_rng",
    "sample_noise",
]

#: Identifier of the generator algorithm, recorded in output metadata.
RNG_ALGORITHM = "numpy.Philox"

#: Embedding eigenvalues above this (relative) floor count as nonnegative.
EMBED_TOL = -1e-10


class EmbeddingFailure(RuntimeError):
    """Neither the circulant embedding nor the dense fallback produced a root."""


@dataclass(frozen=True)
class NoiseModel:
    """Noise process specification.

    ``kind`` is ``"fgn"`` (fractional Gaussian noise with memory parameter
    ``alpha`` in (0, 1]) or ``"iid"`` (white noise; requires alpha = 1).
    ``sigma`` scales the marginal standard deviation.
    """

    kind: str = "fgn"
    alpha: float = 1.0
    sigma: float = 1.0

    def __post_init__(self):
        if self.kind not in ("fgn", "iid"):
            raise ValueError("kind must be 'fgn' or 'iid', got %r" % (self.kind,))
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError("alpha must lie in (0, 1], got %r" % (self.alpha,))
        if self.kind == "iid" and self.alpha != 1.0:
            raise ValueError("iid noise fixes alpha = 1")
        if self.sigma < 0.0:
            raise ValueError("sigma must be nonnegative")

    @property
    def hurst(self) -> float:
        return 1.0 - self.alpha / 2.0


@dataclass(frozen=True)
class CovarianceSpec:
    """Unit-variance autocovariance sequence gamma(0), ..., gamma(n-1)."""

    autocov: tuple[float, ...]


def autocovariance(model: NoiseModel, n: int) -> CovarianceSpec:
    """Autocovariance of the unit-variance noise at lags 0 .. n-1.

    For fractional Gaussian noise,
    gamma(k) = (|k+1|^2H - 2|k|^2H + |k-1|^2H) / 2.
    """
    if n < 1:
        raise ValueError("n must be positive")
    if model.kind == "iid" or model.alpha == 1.0:
        gamma = np.zeros(n)
        gamma[0] = 1.0
    else:
        k = np.arange(n, dtype=float)
        two_h = 2.0 * model.hurst
        gamma = 0.5 * (
            np.abs(k + 1) ** two_h - 2.0 * np.abs(k) ** two_h + np.abs(k - 1) ** two_h
        )
    return CovarianceSpec(tuple(float(v) for v in gamma))


def covariance_matrix(spec: CovarianceSpec) -> np.ndarray:
    """Dense Toeplitz covariance matrix for a given autocovariance."""
    return toeplitz(np.asarray(spec.autocov))


def make_rng(seed) -> np.random.Generator:
    """Counter-based generator from a seed or seed tuple.

    Replicate streams are derived by passing ``(seed, replicate_index)``
    (or any tuple extension); distinct tuples give independent streams.
    """
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def _embedding_spectrum(gamma: np.ndarray) -> np.ndarray:
    """Eigenvalues of the size-2(n-1) circulant extension of a Toeplitz row."""
    row = np.concatenate([gamma, gamma[-2:0:-1]])
    return np.fft.fft(row).real


def _draw_embedded(gamma: np.ndarray, rng: np.random.Generator, reps: int) -> np.ndarray:
    n = gamma.size
    m = 2 * (n - 1)
    spec = _embedding_spectrum(gamma)
    if spec.min() < EMBED_TOL * max(1.0, spec.max()):
        raise EmbeddingFailure(
            "circulant embedding spectrum has minimum %g" % spec.min()
        )
    root = np.sqrt(np.clip(spec, 0.0, None))
    v = rng.standard_normal((reps, m))
    z = np.empty((reps, m), dtype=complex)
    z[:, 0] = v[:, 0]
    z[:, n - 1] = v[:, 1]
    half = v[:, 2 : 2 + (n - 2)] if n > 2 else np.empty((reps, 0))
    other = v[:, 2 + (n - 2) :]
    if n > 2:
        z[:, 1 : n - 1] = (half + 1j * other) / np.sqrt(2.0)
        z[:, n:] = np.conj(z[:, n - 2 : 0 : -1])
    return np.sqrt(m) * np.fft.ifft(root * z, axis=1).real[:, :n]


def _draw_dense(gamma: np.ndarray, rng: np.random.Generator, reps: int) -> np.ndarray:
    cov = toeplitz(gamma)
    try:
        factor = cholesky(cov, lower=True)
    except np.linalg.LinAlgError:
        vals, vecs = eigh(cov)
        if vals.min() < -1e-8 * max(1.0, vals.max()):
            raise EmbeddingFailure("covariance is not positive semidefinite")
        factor = vecs * np.sqrt(np.clip(vals, 0.0, None))
    return rng.standard_normal((reps, gamma.size)) @ factor.T


def sample_noise(model: NoiseModel, n: int, seed, reps: int | None = None) -> np.ndarray:
    """Draw the noise vector (sigma times unit-variance correlated normals).

    Parameters
    ----------
    model : NoiseModel
    n : int
        Length of the vector.
    seed : int or tuple of int
        Generator seed; the same seed reproduces the draw bit for bit.
    reps : int, optional
        When given, return ``reps`` independent vectors (shape (reps, n))
        drawn from the single stream seeded as above.
    """
    if n < 1:
        raise ValueError("n must be positive")
    rng = make_rng(seed)
    count = 1 if reps is None else int(reps)
    gamma = np.asarray(autocovariance(model, n).autocov)
    if n == 1:
        out = rng.standard_normal((count, 1))
    else:
        try:
            out = _draw_embedded(gamma, rng, count)
        except EmbeddingFailure as exc:
            warnings.warn(
                "circulant embedding failed (%s); using dense factorization" % exc,
                RuntimeWarning,
            )
            out = _draw_dense(gamma, rng, count)
    out = model.sigma * out
    if reps is None:
        return out[0]
    return out


@dataclass(frozen=True)
class EigenEnvelope:
    """Extreme covariance eigenvalues across sizes, with a log-log slope fit."""

    rows: tuple[tuple[int, float, float], ...]
    slope: float | None
    slope_stderr: float | None


def eigen_envelope(model: NoiseModel, sizes) -> EigenEnvelope:
    """Extreme eigenvalues of the covariance for each size in ``sizes``.

    Uses a dense symmetric eigensolver as the oracle and fits an ordinary
    least-squares slope of log(max eigenvalue) against log(n); the slope
    approaches 1 - alpha for fractional Gaussian noise.
    """
    rows = []
    for n in sizes:
        gamma = np.asarray(autocovariance(model, int(n)).autocov)
        vals = eigh(toeplitz(gamma), eigvals_only=True)
        rows.append((int(n), float(vals[0]), float(vals[-1])))
    slope = stderr = None
    if len(rows) >= 2:
        x = np.log([r[0] for r in rows])
        y = np.log([r[2] for r in rows])
        slope, _, stderr = _ols_line(x, y)
    return EigenEnvelope(tuple(rows), slope, stderr)


def _ols_line(x: np.ndarray, y: np.ndarray):
    """Least-squares slope, intercept, and slope standard error."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    xbar = x.mean()
    sxx = float(np.sum((x - xbar) ** 2))
    if sxx == 0.0:
        raise ValueError("degenerate abscissae")
    slope = float(np.sum((x - xbar) * (y - y.mean())) / sxx)
    intercept = float(y.mean() - slope * xbar)
    if x.size > 2:
        resid = y - (intercept + slope * x)
        stderr = float(np.sqrt(np.sum(resid**2) / (x.size - 2) / sxx))
    else:
        stderr = None
    return slope, intercept, stderr
