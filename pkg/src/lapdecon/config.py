"""Flat key = value experiment configuration.

Config files are plain text: one ``section.key = value`` per line, ``#``
comments, blank lines ignored.  Values are strings until a typed getter
interprets them; list-valued keys are whitespace or comma separated.
Polynomial coefficients are written constant term first.

The raw file bytes are hashed (sha256) at load time and the hash is
stamped into every output artifact, so results can be traced back to the
exact configuration that produced them.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

from .estimator import LepskiConfig
from .laplace import RationalLaplaceKernel
from .noise import NoiseModel

__all__ = [
    "Config",
    "ConfigError",
    "kernel_from_config",
    "lepski_from_config",
    "load_config",
    "noise_from_config",
    "parse_config",
]


class ConfigError(ValueError):
    """Malformed or inconsistent configuration input."""


def parse_config(text: str) -> dict[str, str]:
    """Parse flat key = value lines; duplicate keys are an error."""
    entries: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("line %d: expected 'key = value', got %r" % (lineno, raw))
        key, value = line.split("=", 1)
        key = key.strip()
        value = value.strip()
        if not key:
            raise ConfigError("line %d: empty key" % lineno)
        if key in entries:
            raise ConfigError("line %d: duplicate key %r" % (lineno, key))
        entries[key] = value
    return entries


@dataclass(frozen=True)
class Config:
    """Parsed configuration plus the hash of its source text."""

    entries: dict[str, str]
    sha256: str
    source: str = field(default="", repr=False)

    def __contains__(self, key: str) -> bool:
        return key in self.entries

    def get(self, key: str, default: str | None = None) -> str:
        if key in self.entries:
            return self.entries[key]
        if default is None:
            raise ConfigError("missing required key %r" % (key,))
        return default

    def get_int(self, key: str, default: int | None = None) -> int:
        raw = self.get(key, None if default is None else str(default))
        try:
            return int(raw)
        except ValueError:
            raise ConfigError("key %r: expected integer, got %r" % (key, raw)) from None

    def get_float(self, key: str, default: float | None = None) -> float:
        raw = self.get(key, None if default is None else repr(default))
        try:
            return float(raw)
        except ValueError:
            raise ConfigError("key %r: expected number, got %r" % (key, raw)) from None

    def get_bool(self, key: str, default: bool | None = None) -> bool:
        raw = self.get(key, None if default is None else str(default)).lower()
        if raw in ("1", "true", "yes", "on"):
            return True
        if raw in ("0", "false", "no", "off"):
            return False
        raise ConfigError("key %r: expected boolean, got %r" % (key, raw))

    def _split(self, key: str, default: str | None) -> list[str]:
        raw = self.get(key, default)
        return raw.replace(",", " ").split()

    def get_ints(self, key: str, default: str | None = None) -> list[int]:
        try:
            return [int(tok) for tok in self._split(key, default)]
        except ValueError:
            raise ConfigError("key %r: expected integer list" % (key,)) from None

    def get_floats(self, key: str, default: str | None = None) -> list[float]:
        try:
            return [float(tok) for tok in self._split(key, default)]
        except ValueError:
            raise ConfigError("key %r: expected number list" % (key,)) from None


def load_config(path: str) -> Config:
    with open(path, "rb") as fh:
        data = fh.read()
    text = data.decode("utf-8")
    digest = hashlib.sha256(data).hexdigest()
    return Config(parse_config(text), digest, text)


def kernel_from_config(cfg: Config) -> RationalLaplaceKernel:
    """Convolution kernel from g.numer / g.denom (constant term first)."""
    num = cfg.get_floats("g.numer")
    den = cfg.get_floats("g.denom")
    return RationalLaplaceKernel(tuple(num), tuple(den))


def noise_from_config(cfg: Config) -> NoiseModel:
    return NoiseModel(
        kind=cfg.get("noise.kind", "fgn"),
        alpha=cfg.get_float("noise.alpha", 1.0),
        sigma=cfg.get_float("noise.sigma", 1.0),
    )


def lepski_from_config(cfg: Config, noise: NoiseModel | None = None) -> LepskiConfig:
    """Selection settings; noise level and memory default from the noise keys."""
    if noise is None:
        noise = noise_from_config(cfg)
    return LepskiConfig(
        a=cfg.get_float("lepski.a", 2.0),
        gamma_sq_factor=cfg.get_float("lepski.gamma_sq_factor", 4.0),
        sigma=noise.sigma,
        alpha=noise.alpha,
        use_resolution_floor=cfg.get_bool("lepski.use_resolution_floor", True),
    )
