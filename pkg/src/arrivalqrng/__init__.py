"""Simulation, extraction and qualification for arrival-time QRNGs with dead time."""

__version__ = "0.1.0"

from arrivalqrng.config import BinDistribution, DataError, DistributionKind, DomainError, ExperimentConfig
from arrivalqrng.extractor import PeriodRecord, PeriodRecords, SymbolStream, truncate_and_pack
from arrivalqrng.simulator import TimestampStream, generate_arrivals, merge_dead_time, segment_periods

__all__ = [
    "BinDistribution",
    "DataError",
    "DistributionKind",
    "DomainError",
    "ExperimentConfig",
    "PeriodRecord",
    "PeriodRecords",
    "SymbolStream",
    "TimestampStream",
    "generate_arrivals",
    "merge_dead_time",
    "segment_periods",
    "truncate_and_pack",
    "__version__",
]
