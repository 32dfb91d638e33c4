"""From period records to raw output symbols and bits. No whitening of any kind."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np

from arrivalqrng.config import DomainError


class PeriodRecord(NamedTuple):
    period_index: int
    edge_count: int
    bin_k: int | None


@dataclass(frozen=True)
class PeriodRecords:
    """Columnar batch of period records.

    ``bin_k`` is 0 wherever ``edge_count != 1``; otherwise a 1-based bin index.
    """

    edge_count: np.ndarray
    bin_k: np.ndarray
    period_index: np.ndarray

    def __len__(self):
        return int(self.edge_count.size)

    def __iter__(self):
        for p, c, k in zip(self.period_index.tolist(), self.edge_count.tolist(), self.bin_k.tolist()):
            yield PeriodRecord(p, c, k if c == 1 else None)

    @classmethod
    def from_records(cls, records: Iterable[PeriodRecord]) -> PeriodRecords:
        records = list(records)
        return cls(np.array([r.edge_count for r in records], dtype=np.int64),
                   np.array([r.bin_k if r.edge_count == 1 else 0 for r in records], dtype=np.int32),
                   np.array([r.period_index for r in records], dtype=np.int64))

    @classmethod
    def concatenate(cls, parts: list[PeriodRecords]) -> PeriodRecords:
        if not parts:
            return cls(np.zeros(0, np.int64), np.zeros(0, np.int32), np.zeros(0, np.int64))
        return cls(np.concatenate([p.edge_count for p in parts]),
                   np.concatenate([p.bin_k for p in parts]),
                   np.concatenate([p.period_index for p in parts]))

    def count_distribution(self, max_count: int = 3) -> np.ndarray:
        """Fraction of periods with 0, 1, ..., ``max_count`` or more edges."""
        clipped = np.minimum(self.edge_count, max_count)
        return np.bincount(clipped, minlength=max_count + 1) / max(len(self), 1)


class Selection(NamedTuple):
    bins: np.ndarray
    acceptance_ratio: float
    total_periods: int


def select_single_pulse(records: PeriodRecords | Iterable[PeriodRecord]) -> Selection:
    """Bin indices of periods holding exactly one edge, in period order."""
    if not isinstance(records, PeriodRecords):
        records = PeriodRecords.from_records(records)
    keep = records.edge_count == 1
    total = len(records)
    ratio = float(keep.sum()) / total if total else 0.0
    return Selection(records.bin_k[keep].astype(np.int64), ratio, total)


@dataclass(frozen=True)
class SymbolStream:
    """Output symbols ``0 .. 2**bit_width - 1`` with the bookkeeping that produced them.

    ``acceptance_ratio`` is accepted/total periods (NaN when unknown),
    ``retained_fraction`` is kept/accepted after truncation and
    ``discarded_fraction`` counts truncated symbols dropped to fit ``bit_width``.
    """

    symbols: np.ndarray
    bit_width: int
    symbol_range: int
    acceptance_ratio: float
    retained_fraction: float
    discarded_fraction: float = 0.0

    @property
    def n_symbols(self) -> int:
        return int(self.symbols.size)


def symbol_bit_width(symbol_range: int) -> int:
    return int(math.floor(math.log2(symbol_range)))


def truncate_and_pack(ks, n0: int, nd: int, acceptance_ratio: float = float("nan")) -> SymbolStream:
    """Drop bins within ``nd`` of either period edge and shift to ``k - (nd + 1)``.

    With a retained range that is not a power of two, symbols are emitted at
    ``floor(log2(n0 - 2nd))`` bits and the ones that do not fit are dropped.
    """
    symbol_range = n0 - 2 * nd
    if symbol_range < 2:
        raise DomainError(f"n0 - 2*nd = {symbol_range}; need at least 2 symbols")
    ks = np.asarray(ks, dtype=np.int64)
    inside = (ks >= nd + 1) & (ks <= n0 - nd)
    shifted = ks[inside] - (nd + 1)
    width = symbol_bit_width(symbol_range)
    fits = shifted < (1 << width)
    symbols = shifted[fits]
    dtype = np.uint8 if width <= 8 else np.uint16 if width <= 16 else np.uint32
    retained = float(inside.sum()) / ks.size if ks.size else 0.0
    discarded = float((~fits).sum()) / shifted.size if shifted.size else 0.0
    return SymbolStream(symbols.astype(dtype), width, symbol_range, acceptance_ratio, retained, discarded)


def symbols_to_bits(stream: SymbolStream | np.ndarray, bit_width: int | None = None) -> np.ndarray:
    """Unpack symbols MSB-first into a uint8 array of 0/1."""
    if isinstance(stream, SymbolStream):
        symbols, bit_width = stream.symbols, stream.bit_width
    else:
        symbols = np.asarray(stream)
    if bit_width is None or bit_width < 1:
        raise DomainError(f"bit width must be >= 1, got {bit_width}")
    symbols = symbols.astype(np.uint64)
    if symbols.size and int(symbols.max()) >= 1 << bit_width:
        raise AssertionError(f"symbol {int(symbols.max())} does not fit in {bit_width} bits")
    if bit_width == 8:
        return np.unpackbits(symbols.astype(np.uint8))
    shifts = np.arange(bit_width - 1, -1, -1, dtype=np.uint64)
    return ((symbols[:, None] >> shifts) & np.uint64(1)).astype(np.uint8).ravel()


def extract_symbols(records: PeriodRecords, n0: int, nd: int) -> SymbolStream:
    """Select single-pulse periods, then truncate and pack."""
    selection = select_single_pulse(records)
    return truncate_and_pack(selection.bins, n0, nd, selection.acceptance_ratio)
