import numpy as np
import pytest

from arrivalqrng.config import ExperimentConfig
from arrivalqrng.extractor import extract_symbols
from arrivalqrng.simulator import iter_records

# Experimental parameters: 0.162 ns bins, 320 bins per period, 32-bin dead time
REFERENCE_LAMBDA_T0 = 0.00068
REFERENCE_N0 = 320
REFERENCE_ND = 32
REFERENCE_T0_S = 0.162e-9
SEED = 20150812


@pytest.fixture
def reference_cfg():
    return ExperimentConfig.from_lambda_t0(REFERENCE_LAMBDA_T0, REFERENCE_N0, REFERENCE_ND, t0_seconds=REFERENCE_T0_S, seed=2015)


def reference_bytes(n_bytes, seed):
    """First ``n_bytes`` output bytes of a simulated run at the experimental parameters."""
    cfg = ExperimentConfig.from_lambda_t0(REFERENCE_LAMBDA_T0, REFERENCE_N0, REFERENCE_ND, t0_seconds=REFERENCE_T0_S)
    chunks, have = [], 0
    for records in iter_records(cfg, 80_000_000, seed=seed):
        sym = extract_symbols(records, REFERENCE_N0, REFERENCE_ND).symbols
        chunks.append(sym)
        have += sym.size
        if have >= n_bytes:
            break
    return np.concatenate(chunks)[:n_bytes]


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
