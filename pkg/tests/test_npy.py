"""NPY v1.0 format layer: round trips, interop with numpy, loud rejection."""

from __future__ import annotations

import struct

import numpy as np
import pytest

from spectrune.errors import FormatError, IoError, ShapeError
from spectrune.npy import FLOAT_DESCRS, INT_DESCRS, read_npy, write_npy


def test_round_trip_exact_values(tmp_path):
    rng = np.random.default_rng(0)
    arr = rng.standard_normal((7, 5))
    path = tmp_path / "a.npy"
    write_npy(path, arr)
    back = read_npy(path, FLOAT_DESCRS, ndim=2)
    assert back.dtype == np.float64
    assert np.array_equal(back, arr)


def test_round_trip_is_byte_identical_for_float64(tmp_path):
    # oracle: the format has one canonical encoding per float64 array,
    # so write(read(f)) must reproduce f byte for byte
    rng = np.random.default_rng(1)
    for i in range(100):
        arr = rng.standard_normal((rng.integers(1, 20), rng.integers(1, 20)))
        first = tmp_path / f"first_{i}.npy"
        second = tmp_path / f"second_{i}.npy"
        write_npy(first, arr)
        write_npy(second, read_npy(first, FLOAT_DESCRS))
        assert first.read_bytes() == second.read_bytes()


def test_numpy_reads_our_files(tmp_path):
    rng = np.random.default_rng(2)
    for dtype in (np.float32, np.float64, np.int64):
        arr = (rng.standard_normal((4, 3)) * 10).astype(dtype)
        path = tmp_path / f"ours_{np.dtype(dtype).name}.npy"
        write_npy(path, arr)
        loaded = np.load(path)
        assert loaded.dtype == arr.dtype
        assert np.array_equal(loaded, arr)


def test_we_read_numpy_files(tmp_path):
    rng = np.random.default_rng(3)
    arr32 = rng.standard_normal((6, 2)).astype(np.float32)
    arr64 = rng.standard_normal((2, 6))
    for arr, name in ((arr32, "f32"), (arr64, "f64")):
        path = tmp_path / f"np_{name}.npy"
        np.save(path, arr)
        back = read_npy(path, FLOAT_DESCRS, ndim=2)
        assert np.array_equal(back, arr)


def test_header_is_64_byte_aligned(tmp_path):
    path = tmp_path / "aligned.npy"
    write_npy(path, np.zeros((3, 3)))
    raw = path.read_bytes()
    (header_len,) = struct.unpack("<H", raw[8:10])
    assert (10 + header_len) % 64 == 0
    assert raw[:6] == b"\x93NUMPY"
    assert raw[6:8] == b"\x01\x00"


def test_rejects_bad_magic(tmp_path):
    path = tmp_path / "bad.npy"
    path.write_bytes(b"NOTNPY" + b"\x00" * 64)
    with pytest.raises(FormatError, match="magic"):
        read_npy(path, FLOAT_DESCRS)


def test_rejects_other_versions(tmp_path):
    path = tmp_path / "v2.npy"
    header = b"{'descr': '<f8', 'fortran_order': False, 'shape': (1, 1), }      \n"
    path.write_bytes(
        b"\x93NUMPY\x02\x00"
        + struct.pack("<I", len(header))
        + header
        + np.zeros(1).tobytes()
    )
    with pytest.raises(FormatError, match="version"):
        read_npy(path, FLOAT_DESCRS)


def test_rejects_malformed_header_dict(tmp_path):
    path = tmp_path / "garbage.npy"
    header = b"{'descr': '<f8', 'fortran_order':"  # cut mid-literal
    path.write_bytes(b"\x93NUMPY\x01\x00" + struct.pack("<H", len(header)) + header)
    with pytest.raises(FormatError, match="header"):
        read_npy(path, FLOAT_DESCRS)


def test_rejects_wrong_header_keys(tmp_path):
    path = tmp_path / "keys.npy"
    header = b"{'descr': '<f8', 'shape': (1,), }\n"
    path.write_bytes(
        b"\x93NUMPY\x01\x00" + struct.pack("<H", len(header)) + header
        + np.zeros(1).tobytes()
    )
    with pytest.raises(FormatError, match="keys"):
        read_npy(path, FLOAT_DESCRS)


def test_rejects_disallowed_dtype_instead_of_casting(tmp_path):
    path = tmp_path / "ints.npy"
    np.save(path, np.arange(6, dtype=np.int64).reshape(2, 3))
    with pytest.raises(FormatError, match="refusing to cast"):
        read_npy(path, FLOAT_DESCRS)
    # and the integer allow-list takes it
    assert read_npy(path, INT_DESCRS, ndim=2).sum() == 15


def test_rejects_fortran_order(tmp_path):
    path = tmp_path / "fortran.npy"
    np.save(path, np.asfortranarray(np.arange(6.0).reshape(2, 3)))
    with pytest.raises(FormatError, match="fortran_order"):
        read_npy(path, FLOAT_DESCRS)


def test_rejects_wrong_rank(tmp_path):
    path = tmp_path / "cube.npy"
    write_npy(path, np.zeros((2, 2, 2)))
    with pytest.raises(ShapeError, match="2-D"):
        read_npy(path, FLOAT_DESCRS, ndim=2)


def test_rejects_truncated_payload(tmp_path):
    path = tmp_path / "trunc.npy"
    write_npy(path, np.ones((4, 4)))
    raw = path.read_bytes()
    path.write_bytes(raw[:-8])
    with pytest.raises(FormatError, match="payload"):
        read_npy(path, FLOAT_DESCRS)


def test_rejects_trailing_bytes(tmp_path):
    path = tmp_path / "extra.npy"
    write_npy(path, np.ones((4, 4)))
    path.write_bytes(path.read_bytes() + b"junk")
    with pytest.raises(FormatError, match="payload"):
        read_npy(path, FLOAT_DESCRS)


def test_missing_file_is_io_error(tmp_path):
    with pytest.raises(IoError):
        read_npy(tmp_path / "nope.npy", FLOAT_DESCRS)


def test_result_is_writable_copy(tmp_path):
    path = tmp_path / "w.npy"
    write_npy(path, np.zeros((2, 2)))
    out = read_npy(path, FLOAT_DESCRS)
    out[0, 0] = 1.0  # must not raise
