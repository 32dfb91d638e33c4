"""Statistical qualification of symbol and bit streams.

Core battery: monobit, block frequency, runs (STS definitions), chi-square
uniformity over symbols and lag-1 serial correlation, plus Kuiper aggregation
of per-chunk p-values. ``erfc`` and the regularized upper incomplete gamma
come from ``scipy.special``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.special import erfc, gammaincc

from arrivalqrng import __version__
from arrivalqrng.config import BinDistribution, DataError, DistributionKind, DomainError

DEFAULT_ALPHA = 0.01


class TestResult(NamedTuple):
    statistic: float
    p_value: float


def histogram(symbols, n_symbols: int) -> BinDistribution:
    """Exact symbol counts; ``values[s]`` is the count of symbol ``s``."""
    symbols = np.asarray(symbols)
    if symbols.size:
        bad = np.flatnonzero((symbols < 0) | (symbols >= n_symbols))
        if bad.size:
            i = int(bad[0])
            raise DataError(f"symbol {symbols[i]} at index {i} is outside 0..{n_symbols - 1}")
    counts = np.bincount(symbols.astype(np.int64), minlength=n_symbols)
    return BinDistribution(counts, DistributionKind.EMPIRICAL_COUNT)


def empirical_min_entropy(hist: BinDistribution) -> float:
    """Per-bit min-entropy using the largest observed frequency."""
    total = hist.total
    if hist.kind is DistributionKind.EMPIRICAL_COUNT and total < 1:
        raise DomainError("empty histogram")
    if hist.n0 < 2:
        raise DomainError("need at least 2 bins")
    return -math.log2(hist.max / total) / math.log2(hist.n0)


def chi_square_p_value(statistic: float, df: int) -> float:
    return float(gammaincc(df / 2.0, statistic / 2.0))


class ChiSquareResult(NamedTuple):
    statistic: float
    p_value: float
    df: int
    low_expected: bool


def chi_square_uniformity(hist: BinDistribution, expected=None) -> ChiSquareResult:
    """Pearson chi-square of counts against uniform (or given) probabilities.

    ``low_expected`` flags any expected count below 5.
    """
    counts = np.asarray(hist.values, dtype=float)
    if counts.size < 2:
        raise DomainError("chi-square needs at least 2 bins")
    total = counts.sum()
    if expected is None:
        probs = np.full(counts.size, 1.0 / counts.size)
    else:
        probs = np.asarray(expected.values if isinstance(expected, BinDistribution) else expected, float)
        if probs.shape != counts.shape:
            raise DomainError("expected distribution has a different number of bins")
    exp = probs * total
    if np.any(exp <= 0):
        raise DomainError("expected counts must be positive")
    stat = float(np.sum((counts - exp) ** 2 / exp))
    df = counts.size - 1
    return ChiSquareResult(stat, chi_square_p_value(stat, df), df, bool(np.any(exp < 5)))


def _as_bits(bits) -> np.ndarray:
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.ndim != 1:
        raise DomainError("bits must be a 1-d sequence")
    return bits


def monobit_frequency(bits) -> TestResult:
    """Returns the normalized partial sum |S|/sqrt(n) and its p-value."""
    bits = _as_bits(bits)
    n = bits.size
    if n < 100:
        raise DomainError(f"monobit needs >= 100 bits, got {n}")
    s = 2 * int(np.count_nonzero(bits)) - n
    s_obs = abs(s) / math.sqrt(n)
    return TestResult(s_obs, float(erfc(s_obs / math.sqrt(2))))


def block_frequency(bits, block_len: int = 128) -> TestResult:
    bits = _as_bits(bits)
    n_blocks = bits.size // block_len
    if block_len < 1 or bits.size < 20 * block_len:
        raise DomainError(f"block frequency needs >= {20 * block_len} bits, got {bits.size}")
    ones = bits[: n_blocks * block_len].reshape(n_blocks, block_len).sum(axis=1, dtype=np.int64)
    pi = ones / block_len
    chi2 = float(4.0 * block_len * np.sum((pi - 0.5) ** 2))
    return TestResult(chi2, float(gammaincc(n_blocks / 2.0, chi2 / 2.0)))


def runs_test(bits) -> TestResult:
    """Total number of runs. Fails outright (p = 0) when the monobit prerequisite fails."""
    bits = _as_bits(bits)
    n = bits.size
    if n < 100:
        raise DomainError(f"runs test needs >= 100 bits, got {n}")
    pi = np.count_nonzero(bits) / n
    runs = int(np.count_nonzero(bits[1:] != bits[:-1])) + 1
    if abs(pi - 0.5) >= 2 / math.sqrt(n):
        return TestResult(float(runs), 0.0)
    p = erfc(abs(runs - 2 * n * pi * (1 - pi)) / (2 * math.sqrt(2 * n) * pi * (1 - pi)))
    return TestResult(float(runs), float(p))


def serial_correlation(symbols) -> float:
    """Lag-1 Pearson autocorrelation."""
    x = np.asarray(symbols, dtype=float)
    if x.size < 2:
        raise DomainError("serial correlation needs >= 2 symbols")
    a, b = x[:-1] - x[:-1].mean(), x[1:] - x[1:].mean()
    denom = math.sqrt(float(np.dot(a, a)) * float(np.dot(b, b)))
    if denom == 0:
        raise DomainError("zero variance")
    return max(-1.0, min(1.0, float(np.dot(a, b)) / denom))


def serial_correlation_test(symbols) -> TestResult:
    """Two-sided normal test of rho against 0, using rho*sqrt(n) ~ N(0, 1)."""
    rho = serial_correlation(symbols)
    n = len(symbols)
    return TestResult(rho, float(erfc(abs(rho) * math.sqrt(n) / math.sqrt(2))))


def kuiper_p_value(v: float, n: int) -> float:
    lam = (math.sqrt(n) + 0.155 + 0.24 / math.sqrt(n)) * v
    if lam < 0.4:
        # series converges poorly here and the tail probability is 1 to double precision
        return 1.0
    total = 0.0
    for j in range(1, 101):
        term = 2.0 * (4.0 * j * j * lam * lam - 1.0) * math.exp(-2.0 * j * j * lam * lam)
        total += term
        if abs(term) <= 1e-16 * abs(total):
            break
    return min(1.0, max(0.0, total))


def kuiper_aggregate(p_values) -> TestResult:
    """Kuiper's V = D+ + D- of p-values against U(0, 1)."""
    x = np.sort(np.asarray(p_values, dtype=float))
    n = x.size
    if n < 5:
        raise DomainError(f"Kuiper aggregation needs >= 5 p-values, got {n}")
    i = np.arange(1, n + 1)
    v = float(np.max(i / n - x) + np.max(x - (i - 1) / n))
    return TestResult(v, kuiper_p_value(v, n))


@dataclass
class TestEntry:
    name: str
    parameters: dict
    statistic: float
    p_value: float
    passed: bool


@dataclass
class TestReport:
    entries: list[TestEntry] = field(default_factory=list)
    alpha: float = DEFAULT_ALPHA
    metadata: dict = field(default_factory=dict)
    skipped: list[dict] = field(default_factory=list)

    def add(self, name: str, result, **parameters) -> TestEntry:
        p = float(result.p_value)
        if not 0.0 <= p <= 1.0:
            raise AssertionError(f"{name}: p-value {p} outside [0, 1]")
        entry = TestEntry(name, parameters, float(result.statistic), p, p >= self.alpha)
        self.entries.append(entry)
        return entry

    def skip(self, name: str, reason: str):
        self.skipped.append({"name": name, "reason": reason})

    @property
    def all_passed(self) -> bool:
        return all(e.passed for e in self.entries)

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "metadata": self.metadata,
                "entries": [asdict(e) for e in self.entries], "skipped": self.skipped}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, data: dict) -> TestReport:
        return cls([TestEntry(**e) for e in data["entries"]], data["alpha"],
                   data.get("metadata", {}), data.get("skipped", []))

    @classmethod
    def from_json(cls, text: str) -> TestReport:
        return cls.from_dict(json.loads(text))


def _chunk_p_values(bits: np.ndarray, chunks: int, test, **kwargs) -> list[float]:
    size = bits.size // chunks
    return [test(bits[c * size:(c + 1) * size], **kwargs).p_value for c in range(chunks)]


def run_battery(symbols, bit_width: int = 8, alpha: float = DEFAULT_ALPHA, block_len: int = 128,
                chunks: int = 100, metadata: dict | None = None) -> TestReport:
    """Run the core battery on a symbol stream and its MSB-first bit expansion.

    Per-chunk p-values of the three bit tests are aggregated with Kuiper's
    test when every chunk is long enough for them.
    """
    from arrivalqrng.extractor import symbols_to_bits

    symbols = np.asarray(symbols)
    bits = symbols_to_bits(symbols, bit_width)
    n_symbols = 1 << bit_width
    report = TestReport(alpha=alpha, metadata={
        "toolkit_version": __version__, "n_symbols": int(symbols.size), "n_bits": int(bits.size),
        "bit_width": bit_width, **(metadata or {})})

    bit_tests = [("monobit_frequency", monobit_frequency, {}, 100),
                 ("block_frequency", block_frequency, {"block_len": block_len}, 20 * block_len),
                 ("runs", runs_test, {}, 100)]
    for name, test, kwargs, min_bits in bit_tests:
        if bits.size < min_bits:
            report.skip(name, f"needs >= {min_bits} bits, got {bits.size}")
            continue
        report.add(name, test(bits, **kwargs), n_bits=int(bits.size), **kwargs)

    if symbols.size >= 5 * n_symbols:
        chi = chi_square_uniformity(histogram(symbols, n_symbols))
        report.add("chi_square_uniformity", chi, n_symbols=int(symbols.size), bins=n_symbols, df=chi.df)
    else:
        report.skip("chi_square_uniformity", f"needs >= {5 * n_symbols} symbols for 5 per bin, got {symbols.size}")

    try:
        report.add("serial_correlation", serial_correlation_test(symbols), n_symbols=int(symbols.size),
                   bound_4_over_sqrt_n=4 / math.sqrt(max(symbols.size, 1)))
    except DomainError as exc:
        report.skip("serial_correlation", str(exc))

    for name, test, kwargs, min_bits in bit_tests:
        if bits.size // chunks < min_bits:
            report.skip(f"kuiper[{name}]", f"needs {chunks} chunks of >= {min_bits} bits")
            continue
        pvals = _chunk_p_values(bits, chunks, test, **kwargs)
        report.add(f"kuiper[{name}]", kuiper_aggregate(pvals), chunks=chunks,
                   chunk_bits=int(bits.size // chunks), **kwargs)
    return report
