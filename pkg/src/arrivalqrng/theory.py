"""Closed-form distributions for single-pulse arrival-time extraction.

Bins are 1-based (``k = 1..n0``) throughout this module. Dead time is
paralyzable: detections closer than ``nd`` bins merge into one pulse and
only its rising edge is registered.
"""

from __future__ import annotations

import logging
import math
from typing import NamedTuple

import numpy as np

from arrivalqrng.config import BinDistribution, DistributionKind, DomainError, ExperimentConfig

log = logging.getLogger(__name__)


def poisson_pmf(mean: float, count: int) -> float:
    """Probability of exactly ``count`` events for a Poisson mean, in log space."""
    if not math.isfinite(mean) or mean < 0:
        raise DomainError(f"Poisson mean must be finite and >= 0, got {mean}")
    if count < 0:
        raise DomainError(f"count must be >= 0, got {count}")
    if mean == 0:
        return 1.0 if count == 0 else 0.0
    return math.exp(-mean + count * math.log(mean) - math.lgamma(count + 1))


def first_arrival_bin_pmf(lambda_t0: float, n0: int, k: int) -> float:
    """Probability that the first detection of a period lands in bin ``k``.

    Exact discretization of the truncated exponential first-arrival density,
    without the small ``lambda_t0`` approximation.
    """
    if not lambda_t0 > 0:
        raise DomainError(f"lambda_t0 must be > 0, got {lambda_t0}")
    if not 1 <= k <= n0:
        raise DomainError(f"bin index {k} outside 1..{n0}")
    # e^{-a(k-1)} - e^{-ak} = -e^{-a(k-1)} * expm1(-a)
    return -math.exp(-lambda_t0 * (k - 1)) * math.expm1(-lambda_t0) / -math.expm1(-lambda_t0 * n0)


def first_arrival_distribution(lambda_t0: float, n0: int) -> BinDistribution:
    k = np.arange(1, n0 + 1)
    values = -np.exp(-lambda_t0 * (k - 1)) * np.expm1(-lambda_t0) / -np.expm1(-lambda_t0 * n0)
    return BinDistribution(values / math.fsum(values))


def conditional_uniform_pmf(n0: int) -> float:
    """Bin probability given exactly one detection and no dead time."""
    if n0 < 1:
        raise DomainError(f"n0 must be >= 1, got {n0}")
    return 1.0 / n0


def _series_limit(r: float) -> int:
    # K = ceil(T0 / td); the small slack keeps exact ratios like 1/0.1 at 10
    return math.ceil(1.0 / r - 1e-9)


def deadtime_count_pmf(mu: float, td_over_t0_period: float, m: int) -> float:
    """Probability of ``m`` registered pulses per period under dead time.

    Parameters
    ----------
    mu : float
        Mean detections per period.
    td_over_t0_period : float
        Dead time as a fraction of the period, in ``[0, 1)``.
    m : int
        Number of registered pulses.

    Returns
    -------
    float
        ``mu_r^m / m! * sum_i (-mu_r)^i / i! * (1 - (i+m-1) r)^(m+i)`` with
        ``mu_r = mu exp(-mu r)``; terms whose base is non-positive vanish.
    """
    r = td_over_t0_period
    if not math.isfinite(mu) or mu < 0:
        raise DomainError(f"mu must be finite and >= 0, got {mu}")
    if not 0 <= r < 1:
        raise DomainError(f"dead-time ratio must lie in [0, 1), got {r}")
    if m < 0:
        raise DomainError(f"m must be >= 0, got {m}")
    if r == 0:
        return poisson_pmf(mu, m)
    K = _series_limit(r)
    if m > K:
        return 0.0
    if mu == 0:
        return 1.0 if m == 0 else 0.0
    log_mur = math.log(mu) - mu * r
    terms = []
    for i in range(K - m + 1):
        base = 1.0 - (i + m - 1) * r
        if base <= 0:
            continue
        log_mag = (m + i) * log_mur - math.lgamma(m + 1) - math.lgamma(i + 1) + (m + i) * math.log(base)
        terms.append((-1) ** i * math.exp(log_mag))
    value = math.fsum(terms)
    if value < 0:
        log.debug("clamped negative series value %.3e (mu=%g, r=%g, m=%d)", value, mu, r, m)
        value = 0.0
    return value


def prob_single_pulse(mu: float, r: float) -> float:
    """Acceptance probability: exactly one registered pulse in a period."""
    return deadtime_count_pmf(mu, r, 1)


def merge_count_h(x: int, nd: int) -> int:
    """Placements of a second detection merging into a pulse ``x`` bins from the end."""
    if x > nd:
        return nd
    if x >= 0:
        return x
    return 0


def merge_count_h_prime(x: int, nd: int) -> float:
    """Placements of two further detections chaining into one pulse."""
    if x >= 2 * nd:
        return float(nd * nd)
    if x >= nd + 1:
        return nd * (x - nd) + (x - 1) * (2 * nd - x) / 2
    if x >= 2:
        return x * (x - 1) / 2
    return 0.0


def _h_array(x: np.ndarray, nd: int) -> np.ndarray:
    return np.clip(x, 0, nd).astype(float)


def _h_prime_array(x: np.ndarray, nd: int) -> np.ndarray:
    x = x.astype(float)
    return np.select(
        [x >= 2 * nd, x >= nd + 1, x >= 2],
        [float(nd * nd), nd * (x - nd) + (x - 1) * (2 * nd - x) / 2, x * (x - 1) / 2],
        default=0.0,
    )


def _one_pulse_prob(n: np.ndarray, k: np.ndarray, p0: float, pe: float, nd: int) -> np.ndarray:
    """p(n, k): one pulse with its edge in bin k of an n-bin window, up to 3 detections."""
    n = np.asarray(n)
    k = np.asarray(k)
    x = n - k
    value = (p0 ** (n - 1.0) * pe
             + p0 ** (n - 2.0) * pe**2 * _h_array(x, nd)
             + p0 ** (n - 3.0) * pe**3 * _h_prime_array(x, nd))
    return np.where(k > 0, value, 0.0)


def single_pulse_curve(cfg: ExperimentConfig) -> np.ndarray:
    """Unnormalized single-pulse probability for every bin ``k = 1..n0``.

    Sums three cases: a clean lead-in of ``nd`` bins, a detection in the
    lead-in masking the first ``i`` bins, and a lead-in pulse whose merged
    tail ends ``j + nd`` bins into the period.
    """
    n0, nd = cfg.n0, cfg.nd
    p0 = math.exp(-cfg.lambda_t0)
    pe = -math.expm1(-cfg.lambda_t0)
    k = np.arange(1, n0 + 1)
    total = p0**nd * _one_pulse_prob(n0, k, p0, pe, nd)
    if nd == 0:
        return total
    i = np.arange(1, nd + 1)[:, None]
    masked = _one_pulse_prob(n0 - i, k[None, :] - i, p0, pe, nd).sum(axis=0)
    # sum_{i=1}^{nd} p0^(nd-i) sum_{j=1}^{i} f(j) == sum_j f(j) * sum_{m=0}^{nd-j} p0^m
    j = np.arange(1, nd + 1)
    weights = np.array([math.fsum(p0 ** np.arange(nd - jj + 1)) for jj in j])[:, None]
    extended = (weights * _one_pulse_prob(n0 - j[:, None] - nd, k[None, :] - j[:, None] - nd,
                                          p0, pe, nd)).sum(axis=0)
    return total + p0**nd * pe * masked + p0**nd * pe**2 * extended


def single_pulse_bin_prob(cfg: ExperimentConfig, k: int) -> float:
    """Unnormalized probability that the lone pulse of a period sits in bin ``k``."""
    if not 1 <= k <= cfg.n0:
        raise DomainError(f"bin index {k} outside 1..{cfg.n0}")
    return float(single_pulse_curve(cfg)[k - 1])


def normalized_bin_distribution(cfg: ExperimentConfig) -> BinDistribution:
    """Bin distribution of accepted (single-pulse) periods."""
    curve = single_pulse_curve(cfg)
    total = math.fsum(curve)
    if total <= 0:
        raise DomainError("no signal: detection rate is zero")
    values = curve / total
    return BinDistribution(values / values.sum())


def truncate_distribution(dist: BinDistribution, nd: int) -> BinDistribution:
    """Keep bins ``nd+1 .. n0-nd`` and renormalize."""
    kept = _retained_slice(dist, nd)
    total = math.fsum(kept)
    if total <= 0:
        raise DomainError("retained bins carry no probability mass")
    values = kept / total
    return BinDistribution(values / values.sum(), dist.kind)


def _retained_slice(dist: BinDistribution, nd: int) -> np.ndarray:
    if nd < 0 or dist.n0 - 2 * nd < 1:
        raise DomainError(f"cutting nd={nd} from both sides of {dist.n0} bins leaves nothing")
    return dist.values[nd:dist.n0 - nd]


def min_entropy_per_bit(p_max: float, symbol_count: int) -> float:
    """Min-entropy normalized by ``log2(symbol_count)``."""
    if not 0 < p_max <= 1:
        raise DomainError(f"p_max must lie in (0, 1], got {p_max}")
    if symbol_count < 2:
        raise DomainError(f"symbol_count must be >= 2, got {symbol_count}")
    return -math.log2(p_max) / math.log2(symbol_count)


class RetainedFraction(NamedTuple):
    exact: float
    approximate: float


def retained_fraction(dist: BinDistribution, nd: int) -> RetainedFraction:
    """Probability mass surviving truncation, with the ``(n0-2nd)/n0`` approximation."""
    kept = _retained_slice(dist, nd)
    return RetainedFraction(math.fsum(kept) / dist.total, (dist.n0 - 2 * nd) / dist.n0)


class BitrateEstimate(NamedTuple):
    bits_per_symbol: float
    p_single_pulse: float
    retained_fraction: float
    exact_bps: float
    approximate_bps: float


def predicted_bitrate(cfg: ExperimentConfig) -> BitrateEstimate:
    """Expected output bitrate in bits per second.

    ``log2(n0 - 2nd) * P(one pulse) / T0 * retained``; ``exact_bps`` uses the
    summed retained mass, ``approximate_bps`` uses ``(n0 - 2nd) / n0``.
    """
    bits = math.log2(cfg.symbol_count) if cfg.symbol_count > 1 else 0.0
    approx_kept = cfg.symbol_count / cfg.n0
    if cfg.total_rate == 0:
        return BitrateEstimate(bits, 0.0, approx_kept, 0.0, 0.0)
    p1 = prob_single_pulse(cfg.mu, cfg.dead_time_ratio)
    kept = retained_fraction(normalized_bin_distribution(cfg), cfg.nd).exact
    rate = bits * p1 / cfg.period_seconds
    return BitrateEstimate(bits, p1, kept, rate * kept, rate * approx_kept)


def bitrate_sweep(cfg: ExperimentConfig, mus) -> list[BitrateEstimate]:
    """Predicted bitrate as the mean occupancy per period is varied."""
    out = []
    for mu in mus:
        rate = mu / cfg.period_seconds - cfg.dark_rate_per_second
        if rate < 0:
            raise DomainError(f"mu={mu} is below the dark-count floor")
        swept = ExperimentConfig(cfg.t0_seconds, cfg.n0, cfg.nd, rate,
                                 cfg.dark_rate_per_second, cfg.seed)
        out.append(predicted_bitrate(swept))
    return out
