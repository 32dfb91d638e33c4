"""File formats: binary timestamp files, distribution CSVs, external-suite exports.

Timestamp file layout (little-endian)::

    offset  size  field
    0       8     magic b"QRNGTS01"
    8       2     format version (u16, currently 1)
    10      8     t0 in femtoseconds (u64)
    18      8     record count (u64)
    26      8*n   tick values (u64), strictly increasing

The headerless ``u64-ticks`` mode is just the record section. All writers go
through a temp file in the target directory followed by ``os.replace``.
"""

from __future__ import annotations

import csv
import io
import json
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from arrivalqrng.config import DataError
from arrivalqrng.simulator import TimestampStream

MAGIC = b"QRNGTS01"
VERSION = 1
HEADER = struct.Struct("<8sHQQ")
CSV_HEADER = ["bin", "theory_probability", "empirical_count", "empirical_frequency"]
STS_LINE_BITS = 1_000_000


def atomic_write(path, data: bytes | str):
    path = Path(path)
    if isinstance(data, str):
        data = data.encode()
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def encode_timestamp_file(stream: TimestampStream) -> bytes:
    header = HEADER.pack(MAGIC, VERSION, stream.t0_femtoseconds, len(stream))
    return header + stream.ticks.astype("<u8").tobytes()


def write_timestamp_file(path, stream: TimestampStream):
    atomic_write(path, encode_timestamp_file(stream))


def decode_timestamp_file(data: bytes) -> TimestampStream:
    if len(data) < HEADER.size:
        raise DataError(f"truncated header: file ends at offset {len(data)}, header needs {HEADER.size} bytes")
    magic, version, t0_fs, count = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise DataError(f"bad magic {magic!r} at offset 0, expected {MAGIC!r}")
    if version != VERSION:
        raise DataError(f"unsupported format version {version} at offset 8")
    if t0_fs == 0:
        raise DataError("t0 of 0 fs at offset 10")
    expected = HEADER.size + 8 * count
    if len(data) != expected:
        raise DataError(f"record count {count} implies {expected} bytes but data ends at offset {len(data)}")
    ticks = np.frombuffer(data, dtype="<u8", offset=HEADER.size)
    return TimestampStream(t0_fs, _check_monotone(ticks, HEADER.size))


def _check_monotone(ticks: np.ndarray, base_offset: int) -> np.ndarray:
    if ticks.size > 1:
        bad = np.flatnonzero(ticks[1:] <= ticks[:-1])
        if bad.size:
            i = int(bad[0]) + 1
            raise DataError(f"record {i} at offset {base_offset + 8 * i} is not strictly increasing "
                            f"({int(ticks[i])} after {int(ticks[i - 1])})")
    return ticks


def read_timestamp_file(path) -> TimestampStream:
    return decode_timestamp_file(Path(path).read_bytes())


def read_u64_ticks(path, t0_femtoseconds: int) -> TimestampStream:
    """Read a headerless little-endian u64 tick file."""
    data = Path(path).read_bytes()
    if len(data) % 8:
        raise DataError(f"u64-ticks file length {len(data)} is not a multiple of 8; trailing bytes at offset "
                        f"{len(data) - len(data) % 8}")
    return TimestampStream(t0_femtoseconds, _check_monotone(np.frombuffer(data, dtype="<u8"), 0))


def metadata_path(path) -> Path:
    return Path(str(path) + ".meta.json")


def write_metadata(path, metadata: dict):
    atomic_write(metadata_path(path), json.dumps(metadata, indent=2, sort_keys=True) + "\n")


def read_metadata(path) -> dict | None:
    meta = metadata_path(path)
    return json.loads(meta.read_text()) if meta.exists() else None


def distribution_csv(n0: int, theory=None, counts=None) -> str:
    """Fig.-3 style overlay: theory curve and/or empirical histogram per bin.

    ``theory`` may contain NaN for bins without a theoretical value.
    """
    theory = None if theory is None else np.asarray(theory, dtype=float)
    counts = None if counts is None else np.asarray(counts)
    for name, arr in (("theory", theory), ("counts", counts)):
        if arr is not None and arr.size != n0:
            raise DataError(f"{name} has {arr.size} bins, expected {n0}")
    total = counts.sum() if counts is not None else 0
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for k in range(n0):
        row = [k + 1, "", "", ""]
        if theory is not None and np.isfinite(theory[k]):
            row[1] = repr(float(theory[k]))
        if counts is not None:
            row[2] = int(counts[k])
            row[3] = repr(float(counts[k] / total)) if total else ""
        writer.writerow(row)
    return buf.getvalue()


def write_distribution_csv(path, n0: int, theory=None, counts=None):
    atomic_write(path, distribution_csv(n0, theory, counts))


def read_distribution_csv(path) -> dict[str, np.ndarray]:
    """Columns as float arrays (NaN for empty fields)."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != CSV_HEADER:
            raise DataError(f"unexpected CSV header {reader.fieldnames}")
        rows = list(reader)
    out = {}
    for col in CSV_HEADER:
        out[col] = np.array([float(r[col]) if r[col] != "" else np.nan for r in rows])
    return out


def bits_to_ascii(bits: np.ndarray, line_bits: int = STS_LINE_BITS) -> bytes:
    """'0'/'1' characters, one newline after every ``line_bits`` bits."""
    chars = (np.asarray(bits, dtype=np.uint8) + ord("0")).tobytes()
    return b"".join(chars[i:i + line_bits] + b"\n" for i in range(0, len(chars), line_bits))


def ascii_to_bits(data: bytes) -> np.ndarray:
    arr = np.frombuffer(data, dtype=np.uint8)
    arr = arr[~np.isin(arr, np.frombuffer(b" \t\r\n", dtype=np.uint8))]
    bad = np.flatnonzero((arr != ord("0")) & (arr != ord("1")))
    if bad.size:
        raise DataError(f"non-bit character {chr(arr[bad[0]])!r} in ASCII bit file")
    return (arr - ord("0")).astype(np.uint8)


def bits_to_bytes(bits: np.ndarray) -> bytes:
    """Pack MSB-first; a trailing partial byte is dropped."""
    bits = np.asarray(bits, dtype=np.uint8)
    return np.packbits(bits[: bits.size - bits.size % 8]).tobytes()


def symbols_to_text(symbols) -> str:
    return "".join(f"{int(s)}\n" for s in np.asarray(symbols).tolist())


def read_symbols_text(path) -> np.ndarray:
    text = Path(path).read_text().split()
    try:
        return np.array([int(t) for t in text], dtype=np.int64)
    except ValueError as exc:
        raise DataError(f"symbols file {path}: {exc}") from None
