"""Monte Carlo detector: Poisson arrivals, TDC quantization, paralyzable dead time.

Time is handled in TDC ticks (one tick = ``t0``). The tick axis is split into
fixed blocks of ``BLOCK_PERIODS`` periods; block ``b`` draws from its own
PCG64 substream ``SeedSequence(seed, spawn_key=(b,))``, so the output does not
depend on how many workers generate the blocks.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from arrivalqrng.config import DataError, DomainError, ExperimentConfig
from arrivalqrng.extractor import PeriodRecords

BLOCK_PERIODS = 1 << 16
GENERATOR_ID = f"numpy.PCG64/SeedSequence(seed,spawn_key=(block,))/block_periods={BLOCK_PERIODS}"


@dataclass(frozen=True)
class TimestampStream:
    """Strictly increasing detector event ticks."""

    t0_femtoseconds: int
    ticks: np.ndarray

    def __post_init__(self):
        ticks = np.ascontiguousarray(self.ticks, dtype=np.uint64)
        if self.t0_femtoseconds <= 0:
            raise DomainError(f"t0_femtoseconds must be positive, got {self.t0_femtoseconds}")
        bad = _first_non_increasing(ticks)
        if bad is not None:
            raise DataError(f"ticks not strictly increasing at record {bad}")
        object.__setattr__(self, "ticks", ticks)

    def __len__(self):
        return int(self.ticks.size)

    def times_seconds(self) -> np.ndarray:
        return self.ticks.astype(float) * (self.t0_femtoseconds * 1e-15)


@dataclass(frozen=True)
class PulseTrain:
    """Rising edges of (possibly merged) pulses."""

    edges: np.ndarray
    merged_multiplicities: np.ndarray

    def __len__(self):
        return int(self.edges.size)


def _first_non_increasing(ticks: np.ndarray) -> int | None:
    if ticks.size < 2:
        return None
    bad = np.flatnonzero(ticks[1:] <= ticks[:-1])
    return int(bad[0]) + 1 if bad.size else None


def _block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(block,))))


def _block_arrivals(rate_per_tick: float, seed: int, block: int, n_periods: int, n0: int) -> np.ndarray:
    """Quantized event ticks of one block, relative to the block start."""
    length = n_periods * n0
    if rate_per_tick == 0:
        return np.empty(0, dtype=np.int64)
    rng = _block_rng(seed, block)
    expected = rate_per_tick * length
    chunk = int(expected + 8 * math.sqrt(expected) + 16)
    scale = 1.0 / rate_per_tick
    times = np.cumsum(rng.exponential(scale, chunk))
    while times[-1] < length:
        more = np.cumsum(rng.exponential(scale, chunk)) + times[-1]
        times = np.concatenate([times, more])
    times = times[times < length]
    # same-tick detections are unresolvable by the TDC
    return np.unique(np.floor(times).astype(np.int64))


def _block_sizes(duration_periods: int):
    full, rest = divmod(duration_periods, BLOCK_PERIODS)
    return [BLOCK_PERIODS] * full + ([rest] if rest else [])


def _generate_blocks(cfg: ExperimentConfig, duration_periods: int, seed: int, workers: int):
    rate = cfg.total_rate * cfg.t0_seconds
    sizes = _block_sizes(duration_periods)

    def run(b):
        return _block_arrivals(rate, seed, b, sizes[b], cfg.n0) + b * BLOCK_PERIODS * cfg.n0

    if workers <= 1:
        return [run(b) for b in range(len(sizes))]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, range(len(sizes))))


def generate_arrivals(cfg: ExperimentConfig, duration_periods: int, seed: int | None = None,
                      workers: int = 1) -> TimestampStream:
    """Homogeneous Poisson detections over ``duration_periods`` periods.

    Exponential inter-arrival times are drawn in continuous time at rate
    ``lambda + dark``, then floored to ticks. Events at or past
    ``duration_periods * n0`` ticks are dropped.
    """
    if duration_periods < 1:
        raise DomainError(f"duration_periods must be >= 1, got {duration_periods}")
    seed = cfg.seed if seed is None else seed
    blocks = _generate_blocks(cfg, duration_periods, seed, workers)
    ticks = np.concatenate(blocks) if blocks else np.empty(0, dtype=np.int64)
    return TimestampStream(cfg.t0_femtoseconds, ticks.astype(np.uint64))


def _edge_mask(ticks: np.ndarray, nd_ticks: int, previous_tick: int | None) -> np.ndarray:
    ticks = ticks.astype(np.int64, copy=False)
    if ticks.size == 0:
        return np.zeros(0, dtype=bool)
    first_gap = nd_ticks + 1 if previous_tick is None else ticks[0] - previous_tick
    gaps = np.diff(ticks, prepend=ticks[0] - first_gap)
    # paralyzable: each detection extends the pulse over [t, t + nd], so a
    # detection opens a new pulse only if it lies more than nd after the previous one
    return gaps > nd_ticks


def merge_dead_time(events: TimestampStream | np.ndarray, nd_ticks: int,
                    previous_tick: int | None = None) -> PulseTrain:
    """Merge detections into pulses and return their rising edges.

    ``previous_tick`` is the last detection before ``events`` (if any); it lets
    consecutive chunks be merged independently with identical results.
    """
    ticks = events.ticks if isinstance(events, TimestampStream) else np.asarray(events)
    if nd_ticks < 0:
        raise DomainError(f"nd_ticks must be >= 0, got {nd_ticks}")
    mask = _edge_mask(ticks, nd_ticks, previous_tick)
    starts = np.flatnonzero(mask)
    # detections continuing a pulse from before the chunk are not counted
    multiplicities = np.diff(np.append(starts, ticks.size))
    return PulseTrain(np.asarray(ticks)[mask].astype(np.uint64), multiplicities.astype(np.int64))


def segment_periods(pulses: PulseTrain, n0: int, period_count: int,
                    first_period: int = 0) -> PeriodRecords:
    """Count edges per period window ``[p*n0, (p+1)*n0)`` and locate lone edges."""
    if n0 < 1:
        raise DomainError(f"n0 must be >= 1, got {n0}")
    edges = pulses.edges.astype(np.int64, copy=False)
    period = edges // n0 - first_period
    inside = (period >= 0) & (period < period_count)
    edges, period = edges[inside], period[inside]
    counts = np.bincount(period, minlength=period_count)
    bins = np.zeros(period_count, dtype=np.int32)
    lone = counts[period] == 1
    bins[period[lone]] = edges[lone] % n0 + 1
    return PeriodRecords(counts.astype(np.int64), bins,
                         np.arange(first_period, first_period + period_count, dtype=np.int64))


def iter_records(cfg: ExperimentConfig, period_count: int, seed: int | None = None, workers: int = 1,
                 batch_blocks: int = 32) -> Iterator[PeriodRecords]:
    """Yield period records for consecutive batches of ``batch_blocks`` blocks.

    Memory stays bounded by one batch; concatenating the batches gives
    exactly ``simulate_records(cfg, period_count, seed)``.
    """
    if period_count < 1:
        raise DomainError(f"period_count must be >= 1, got {period_count}")
    seed = cfg.seed if seed is None else seed
    rate = cfg.total_rate * cfg.t0_seconds
    sizes = _block_sizes(period_count)
    previous = None
    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for first in range(0, len(sizes), batch_blocks):
            blocks = range(first, min(first + batch_blocks, len(sizes)))

            def run(b):
                return _block_arrivals(rate, seed, b, sizes[b], cfg.n0) + b * BLOCK_PERIODS * cfg.n0

            ticks = list(pool.map(run, blocks)) if pool else [run(b) for b in blocks]
            ticks = np.concatenate(ticks)
            pulses = merge_dead_time(ticks, cfg.nd, previous)
            if ticks.size:
                previous = int(ticks[-1])
            n_periods = sum(sizes[b] for b in blocks)
            yield segment_periods(pulses, cfg.n0, n_periods, first * BLOCK_PERIODS)
    finally:
        if pool:
            pool.shutdown()


@dataclass
class SimulationSummary:
    """Mergeable per-run tallies: edge-count histogram and single-pulse bin histogram."""

    periods: int
    edge_count_hist: np.ndarray
    bin_counts: np.ndarray

    @classmethod
    def empty(cls, n0: int, max_count: int = 3) -> SimulationSummary:
        return cls(0, np.zeros(max_count + 1, dtype=np.int64), np.zeros(n0, dtype=np.int64))

    def add(self, records: PeriodRecords):
        max_count = self.edge_count_hist.size - 1
        self.periods += len(records)
        self.edge_count_hist += np.bincount(np.minimum(records.edge_count, max_count), minlength=max_count + 1)
        lone = records.bin_k[records.edge_count == 1]
        self.bin_counts += np.bincount(lone - 1, minlength=self.bin_counts.size)

    def merge(self, other: SimulationSummary) -> SimulationSummary:
        return SimulationSummary(self.periods + other.periods, self.edge_count_hist + other.edge_count_hist,
                                 self.bin_counts + other.bin_counts)

    @property
    def accepted(self) -> int:
        return int(self.edge_count_hist[1])

    @property
    def acceptance_ratio(self) -> float:
        return self.accepted / self.periods if self.periods else 0.0


def summarize(cfg: ExperimentConfig, period_count: int, seed: int | None = None,
              workers: int = 1) -> SimulationSummary:
    summary = SimulationSummary.empty(cfg.n0)
    for records in iter_records(cfg, period_count, seed, workers):
        summary.add(records)
    return summary


def simulate_records(cfg: ExperimentConfig, period_count: int, seed: int | None = None,
                     workers: int = 1) -> PeriodRecords:
    """Generate, merge and segment ``period_count`` periods."""
    return PeriodRecords.concatenate(list(iter_records(cfg, period_count, seed, workers)))


def records_from_ticks(ticks: np.ndarray, n0: int, nd: int, period_count: int,
                       workers: int = 1) -> PeriodRecords:
    """Merge and segment a tick stream in parallel chunks of whole blocks.

    Each chunk is merged with the last tick of the preceding chunk, which
    makes the chunked result identical to one sequential pass.
    """
    ticks = np.asarray(ticks).astype(np.int64, copy=False)
    sizes = _block_sizes(period_count)
    starts = np.cumsum([0] + sizes)
    cuts = np.searchsorted(ticks, starts * n0)

    def run(b):
        lo, hi = cuts[b], cuts[b + 1]
        prev = int(ticks[lo - 1]) if lo > 0 else None
        pulses = merge_dead_time(ticks[lo:hi], nd, prev)
        return segment_periods(pulses, n0, sizes[b], int(starts[b]))

    if workers <= 1:
        parts = [run(b) for b in range(len(sizes))]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, range(len(sizes))))
    return PeriodRecords.concatenate(parts)
