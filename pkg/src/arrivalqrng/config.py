"""Shared value types: experiment parameters and bin distributions."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np


class DomainError(ValueError):
    """An argument lies outside the domain where an operation is defined."""


class DataError(ValueError):
    """Input data is malformed (bad file, out-of-range symbol, ...)."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Physical and digital parameters of one arrival-time QRNG setup.

    Parameters
    ----------
    t0_seconds : float
        TDC bin width (LSB) in seconds.
    n0 : int
        Bins per observation period, so the period is ``n0 * t0_seconds``.
    nd : int
        Dead time expressed in bins.
    lambda_per_second : float
        Mean detection rate of the signal.
    dark_rate_per_second : float
        Additive background rate; indistinguishable from signal.
    seed : int
        Seed for simulation runs.
    """

    t0_seconds: float
    n0: int
    nd: int
    lambda_per_second: float
    dark_rate_per_second: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not (math.isfinite(self.t0_seconds) and self.t0_seconds > 0):
            raise DomainError(f"t0_seconds must be finite and > 0, got {self.t0_seconds}")
        if int(self.n0) != self.n0 or self.n0 < 1:
            raise DomainError(f"n0 must be a positive integer, got {self.n0}")
        if int(self.nd) != self.nd or self.nd < 0:
            raise DomainError(f"nd must be a non-negative integer, got {self.nd}")
        if self.n0 <= 2 * self.nd:
            raise DomainError(f"n0={self.n0} must exceed 2*nd={2 * self.nd}")
        for name in ("lambda_per_second", "dark_rate_per_second"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise DomainError(f"{name} must be finite and >= 0, got {value}")
        if int(self.seed) != self.seed or self.seed < 0:
            raise DomainError(f"seed must be an unsigned integer, got {self.seed}")
        if not math.isfinite(self.mu):
            raise DomainError("mean occupancy per period is not finite")

    @classmethod
    def from_lambda_t0(cls, lambda_t0: float, n0: int, nd: int,
                       t0_seconds: float = 0.162e-9, **kwargs) -> ExperimentConfig:
        """Build a config from the dimensionless detection probability per bin."""
        if not (math.isfinite(lambda_t0) and lambda_t0 >= 0):
            raise DomainError(f"lambda_t0 must be finite and >= 0, got {lambda_t0}")
        return cls(t0_seconds=t0_seconds, n0=n0, nd=nd,
                   lambda_per_second=lambda_t0 / t0_seconds, **kwargs)

    @property
    def total_rate(self) -> float:
        return self.lambda_per_second + self.dark_rate_per_second

    @property
    def period_seconds(self) -> float:
        return self.n0 * self.t0_seconds

    @property
    def lambda_t0(self) -> float:
        """Expected detections per bin, signal plus dark counts."""
        return self.total_rate * self.t0_seconds

    @property
    def mu(self) -> float:
        """Expected detections per observation period."""
        return self.total_rate * self.period_seconds

    @property
    def dead_time_ratio(self) -> float:
        return self.nd / self.n0

    @property
    def symbol_count(self) -> int:
        """Number of distinct symbols left after cutting nd bins on both sides."""
        return self.n0 - 2 * self.nd

    @property
    def t0_femtoseconds(self) -> int:
        return int(round(self.t0_seconds * 1e15))


class DistributionKind(str, Enum):
    THEORETICAL_PROBABILITY = "theoretical-probability"
    EMPIRICAL_COUNT = "empirical-count"
    EMPIRICAL_FREQUENCY = "empirical-frequency"


_NORMALIZED_KINDS = (DistributionKind.THEORETICAL_PROBABILITY,
                     DistributionKind.EMPIRICAL_FREQUENCY)


@dataclass(frozen=True)
class BinDistribution:
    """Values over bins ``k = 1..n0``; ``values[k - 1]`` holds bin ``k``."""

    values: np.ndarray
    kind: DistributionKind = DistributionKind.THEORETICAL_PROBABILITY
    n0: int = field(init=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float if self.kind in _NORMALIZED_KINDS else None)
        if values.ndim != 1 or values.size == 0:
            raise DomainError("distribution must be a non-empty 1-d sequence")
        if np.any(values < 0):
            raise DomainError("distribution values must be non-negative")
        if self.kind in _NORMALIZED_KINDS:
            total = float(values.sum())
            if abs(total - 1.0) > 1e-12:
                raise DomainError(f"{self.kind.value} values sum to {total!r}, not 1")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "n0", int(values.size))

    def __getitem__(self, k: int) -> float:
        """Value at 1-based bin ``k``."""
        if not 1 <= k <= self.n0:
            raise DomainError(f"bin index {k} outside 1..{self.n0}")
        return self.values[k - 1]

    @property
    def total(self) -> float:
        return float(self.values.sum())

    @property
    def max(self) -> float:
        return float(self.values.max())

    def frequencies(self) -> BinDistribution:
        """Normalize an empirical count histogram to frequencies."""
        if self.kind is not DistributionKind.EMPIRICAL_COUNT:
            raise DomainError("only count histograms can be converted to frequencies")
        total = self.total
        if total <= 0:
            raise DomainError("empty histogram has no frequencies")
        freq = self.values / total
        # exact division can still leave the sum a few ulps off 1
        freq = freq / freq.sum()
        return BinDistribution(freq, DistributionKind.EMPIRICAL_FREQUENCY)
