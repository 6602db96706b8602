"""Byte-level reader/writer for the NPY v1.0 array format.

Layout of a v1.0 file:

    offset 0   6 bytes   magic  \\x93NUMPY
    offset 6   2 bytes   version, major=1 minor=0
    offset 8   2 bytes   header length, little-endian uint16
    offset 10  N bytes   ASCII header: a Python dict literal with exactly the
                         keys 'descr', 'fortran_order', 'shape', padded with
                         spaces and terminated by a newline
    then                 raw array payload, row-major

The writer always emits little-endian payloads with the preamble padded to a
64-byte boundary (what current tooling produces). The reader accepts any
v1.0 file whose dtype is in the caller's allow-list; Fortran-ordered files
and other format versions are rejected loudly rather than converted.
"""

from __future__ import annotations

import ast
import struct
from pathlib import Path

import numpy as np

from spectrune.errors import FormatError, IoError, ShapeError

MAGIC = b"\x93NUMPY"
VERSION = b"\x01\x00"
HEADER_ALIGN = 64

FLOAT_DESCRS = ("<f4", "<f8")
INT_DESCRS = ("<i4", "<i8")


def format_header(descr: str, shape: tuple[int, ...]) -> bytes:
    """Build the padded ASCII header for a C-ordered little-endian array."""
    body = "{'descr': '%s', 'fortran_order': False, 'shape': %s, }" % (
        descr,
        repr(tuple(int(s) for s in shape)),
    )
    # magic + version + 2-byte length + header must land on a 64-byte boundary
    preamble = len(MAGIC) + len(VERSION) + 2
    pad = (-(preamble + len(body) + 1)) % HEADER_ALIGN
    return (body + " " * pad + "\n").encode("latin1")


def write_npy(path: Path | str, array: np.ndarray) -> None:
    """Write ``array`` to ``path`` as NPY v1.0 (little-endian, C order).

    Raises:
        IoError: destination cannot be written.
    """
    arr = np.ascontiguousarray(array)
    if arr.dtype.byteorder == ">":
        arr = arr.astype(arr.dtype.newbyteorder("<"))
    header = format_header(arr.dtype.str, arr.shape)
    try:
        with open(path, "wb") as fh:
            fh.write(MAGIC)
            fh.write(VERSION)
            fh.write(struct.pack("<H", len(header)))
            fh.write(header)
            fh.write(arr.tobytes(order="C"))
    except OSError as exc:
        raise IoError(f"cannot write array file {path}: {exc}") from exc


def read_npy(
    path: Path | str,
    allowed_descrs: tuple[str, ...],
    ndim: int | None = None,
) -> np.ndarray:
    """Read an NPY v1.0 file, validating dtype and dimensionality.

    Args:
        path: file to read.
        allowed_descrs: dtype descriptors accepted verbatim (e.g. ``'<f8'``);
            anything else is rejected with FormatError, never cast.
        ndim: required array rank, or None to accept any.

    Returns:
        A fresh, writable ndarray in C order with the file's exact values.

    Raises:
        IoError: file unreadable.
        FormatError: bad magic/version/header/dtype or payload size mismatch.
        ShapeError: rank differs from ``ndim``.
    """
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise IoError(f"cannot read array file {path}: {exc}") from exc

    if len(raw) < 10 or raw[:6] != MAGIC:
        raise FormatError(f"{path}: not an NPY file (bad magic)")
    if raw[6:8] != VERSION:
        raise FormatError(
            f"{path}: unsupported NPY version {raw[6]}.{raw[7]} (need 1.0)"
        )
    (header_len,) = struct.unpack("<H", raw[8:10])
    header_end = 10 + header_len
    if len(raw) < header_end:
        raise FormatError(f"{path}: truncated NPY header")

    try:
        header = ast.literal_eval(raw[10:header_end].decode("latin1"))
    except (ValueError, SyntaxError) as exc:
        raise FormatError(f"{path}: malformed NPY header: {exc}") from exc
    if not isinstance(header, dict) or set(header) != {
        "descr",
        "fortran_order",
        "shape",
    }:
        raise FormatError(f"{path}: NPY header has wrong keys: {header!r}")

    descr = header["descr"]
    if descr not in allowed_descrs:
        raise FormatError(
            f"{path}: dtype {descr!r} not accepted (expected one of "
            f"{list(allowed_descrs)}); refusing to cast"
        )
    if header["fortran_order"] is not False:
        raise FormatError(f"{path}: fortran_order must be False")

    shape = header["shape"]
    if not isinstance(shape, tuple) or not all(
        isinstance(s, int) and s >= 0 for s in shape
    ):
        raise FormatError(f"{path}: invalid shape {shape!r}")
    if ndim is not None and len(shape) != ndim:
        raise ShapeError(
            f"{path}: expected a {ndim}-D array, file has shape {shape}"
        )

    dtype = np.dtype(descr)
    count = 1
    for s in shape:
        count *= s
    payload = raw[header_end:]
    expected = count * dtype.itemsize
    if len(payload) != expected:
        raise FormatError(
            f"{path}: payload is {len(payload)} bytes, shape {shape} with "
            f"dtype {descr} needs {expected}"
        )
    return np.frombuffer(payload, dtype=dtype).reshape(shape).copy()
