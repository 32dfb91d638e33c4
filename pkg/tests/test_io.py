import struct

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from arrivalqrng import io
from arrivalqrng.config import DataError
from arrivalqrng.simulator import TimestampStream


@given(st.lists(st.integers(0, 2**64 - 1), max_size=100, unique=True).map(sorted),
       st.integers(1, 2**64 - 1))
def test_encode_decode_round_trip(ticks, t0_fs):
    stream = TimestampStream(t0_fs, np.array(ticks, dtype=np.uint64))
    back = io.decode_timestamp_file(io.encode_timestamp_file(stream))
    assert back.t0_femtoseconds == t0_fs
    assert back.ticks.tolist() == ticks


def test_header_layout():
    data = io.encode_timestamp_file(TimestampStream(162000, [1, 2]))
    assert data[:8] == b"QRNGTS01"
    assert struct.unpack_from("<HQQ", data, 8) == (1, 162000, 2)
    assert struct.unpack_from("<QQ", data, 26) == (1, 2)
    assert len(data) == 26 + 16


def test_file_round_trip(tmp_path):
    stream = TimestampStream(162000, np.arange(0, 3000, 3, dtype=np.uint64))
    path = tmp_path / "ts.bin"
    io.write_timestamp_file(path, stream)
    assert np.array_equal(io.read_timestamp_file(path).ticks, stream.ticks)
    assert [p.name for p in tmp_path.iterdir()] == ["ts.bin"]


def test_bad_magic():
    data = bytearray(io.encode_timestamp_file(TimestampStream(1, [1])))
    data[:8] = b"NOTMAGIC"
    with pytest.raises(DataError, match="bad magic.*offset 0"):
        io.decode_timestamp_file(bytes(data))


def test_bad_version():
    data = bytearray(io.encode_timestamp_file(TimestampStream(1, [1])))
    data[8] = 7
    with pytest.raises(DataError, match="version 7 at offset 8"):
        io.decode_timestamp_file(bytes(data))


def test_non_monotone_names_offset():
    data = io.HEADER.pack(io.MAGIC, 1, 162000, 3) + np.array([5, 9, 9], dtype="<u8").tobytes()
    with pytest.raises(DataError, match="record 2 at offset 42"):
        io.decode_timestamp_file(data)


def test_truncated():
    data = io.encode_timestamp_file(TimestampStream(1, [1, 2, 3]))
    with pytest.raises(DataError, match="record count"):
        io.decode_timestamp_file(data[:-4])
    with pytest.raises(DataError, match="truncated header"):
        io.decode_timestamp_file(data[:10])


def test_u64_ticks(tmp_path):
    path = tmp_path / "raw.u64"
    path.write_bytes(np.array([3, 7, 11], dtype="<u8").tobytes())
    assert io.read_u64_ticks(path, 1000).ticks.tolist() == [3, 7, 11]
    path.write_bytes(b"\x00" * 12)
    with pytest.raises(DataError, match="multiple of 8"):
        io.read_u64_ticks(path, 1000)


def test_distribution_csv(tmp_path):
    path = tmp_path / "d.csv"
    theory = np.array([0.25, np.nan, 0.75])
    io.write_distribution_csv(path, 3, theory=theory, counts=np.array([1, 0, 3]))
    lines = path.read_text().splitlines()
    assert lines[0] == "bin,theory_probability,empirical_count,empirical_frequency"
    assert lines[2] == "2,,0,0.0"
    cols = io.read_distribution_csv(path)
    assert cols["bin"].tolist() == [1, 2, 3]
    assert cols["empirical_frequency"].tolist() == [0.25, 0.0, 0.75]
    assert np.isnan(cols["theory_probability"][1])


def test_distribution_csv_wrong_length():
    with pytest.raises(DataError):
        io.distribution_csv(4, theory=np.ones(3))


@given(st.lists(st.integers(0, 1), max_size=3000))
def test_ascii_bits_round_trip(bits):
    text = io.bits_to_ascii(np.array(bits, dtype=np.uint8), line_bits=1000)
    assert io.ascii_to_bits(text).tolist() == bits
    assert all(len(line) <= 1000 for line in text.splitlines())


def test_ascii_rejects_garbage():
    with pytest.raises(DataError):
        io.ascii_to_bits(b"0102")


def test_bits_to_bytes_msb_first():
    assert io.bits_to_bytes(np.array([0, 1, 0, 1, 1, 0, 1, 0, 1])) == b"\x5a"
