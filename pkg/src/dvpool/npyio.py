"""Minimal NPY v1.0 reader/writer and label loading.

Only the subset the pipeline needs: little-endian ``<f8`` / ``<f4`` / ``<i8``,
C-order, format version 1.0. Everything else is rejected with a descriptive
error, and ``write_npy(read_npy(b)) == b`` on accepted input.
"""

from __future__ import annotations

import ast
import struct
from pathlib import Path

import numpy as np

MAGIC = b"\x93NUMPY"

_DTYPES = {"<f8": np.float64, "<f4": np.float32, "<i8": np.int64}
_DESCRS = {np.dtype(np.float64): "<f8", np.dtype(np.float32): "<f4",
           np.dtype(np.int64): "<i8"}


class NpyFormatError(ValueError):
    """Raised for malformed or unsupported NPY content."""


def write_npy(arr: np.ndarray) -> bytes:
    """Serialize a C-order float64/float32/int64 array as NPY v1.0 bytes."""
    arr = np.asarray(arr)
    if arr.dtype not in _DESCRS:
        raise NpyFormatError(
            f"unsupported dtype {arr.dtype}; expected one of {sorted(_DTYPES)}"
        )
    # tobytes(order="C") below serializes any layout in C order; the header
    # shape is layout-independent, so no contiguity normalization is needed
    # (ascontiguousarray would also promote 0-d arrays to 1-d).
    header = "{'descr': '%s', 'fortran_order': False, 'shape': %s, }" % (
        _DESCRS[arr.dtype], repr(arr.shape)
    )
    # Pad so magic + version + length field + header is a multiple of 64,
    # with a trailing newline.
    unpadded = len(MAGIC) + 2 + 2 + len(header) + 1
    header = header + " " * (-unpadded % 64) + "\n"
    if len(header) > 0xFFFF:
        raise NpyFormatError("header too large for NPY v1.0")
    out = bytearray()
    out += MAGIC
    out += bytes((1, 0))
    out += struct.pack("<H", len(header))
    out += header.encode("latin1")
    out += arr.tobytes(order="C")
    return bytes(out)


def read_npy(buf: bytes) -> np.ndarray:
    """Parse NPY v1.0 bytes into an ndarray, validating the supported subset."""
    if len(buf) < len(MAGIC) + 4:
        raise NpyFormatError("truncated NPY: missing header")
    if buf[: len(MAGIC)] != MAGIC:
        raise NpyFormatError("bad magic: not an NPY file")
    major, minor = buf[6], buf[7]
    if (major, minor) != (1, 0):
        raise NpyFormatError(f"unsupported NPY version {major}.{minor}; only 1.0 is accepted")
    (header_len,) = struct.unpack("<H", buf[8:10])
    header_end = 10 + header_len
    if len(buf) < header_end:
        raise NpyFormatError("truncated NPY: header shorter than declared")
    try:
        header = ast.literal_eval(buf[10:header_end].decode("latin1"))
    except (ValueError, SyntaxError) as exc:
        raise NpyFormatError(f"unparseable NPY header: {exc}") from None
    if not isinstance(header, dict) or set(header) != {"descr", "fortran_order", "shape"}:
        raise NpyFormatError("NPY header must define exactly descr, fortran_order, shape")
    descr = header["descr"]
    if descr not in _DTYPES:
        raise NpyFormatError(
            f"unsupported dtype {descr!r}; expected one of {sorted(_DTYPES)}"
        )
    if header["fortran_order"] is not False:
        raise NpyFormatError("Fortran-order arrays are not supported; re-export in C order")
    shape = header["shape"]
    if not isinstance(shape, tuple) or not all(
        isinstance(s, int) and s >= 0 for s in shape
    ):
        raise NpyFormatError(f"invalid shape {shape!r} in NPY header")
    dtype = np.dtype(_DTYPES[descr])
    count = int(np.prod(shape, dtype=np.int64)) if shape else 1
    expected = count * dtype.itemsize
    payload = buf[header_end:]
    if len(payload) != expected:
        raise NpyFormatError(
            f"payload is {len(payload)} bytes but shape {shape} needs {expected}"
        )
    return np.frombuffer(payload, dtype=dtype).reshape(shape).copy()


def read_npy_file(path) -> np.ndarray:
    return read_npy(Path(path).read_bytes())


def write_npy_file(path, arr: np.ndarray) -> None:
    Path(path).write_bytes(write_npy(arr))


def _labels_from_array(arr: np.ndarray, source: str) -> np.ndarray:
    if arr.dtype != np.int64:
        raise NpyFormatError(f"{source}: labels must be int64, got {arr.dtype}")
    if arr.ndim != 1:
        raise NpyFormatError(f"{source}: labels must be 1D, got {arr.ndim} axes")
    if arr.size and arr.min() < 0:
        raise NpyFormatError(f"{source}: labels must be non-negative")
    return arr


def read_labels(path) -> np.ndarray:
    """Load 1D integer labels from an NPY i8 vector or a CSV with a `label` header."""
    path = Path(path)
    raw = path.read_bytes()
    if raw[: len(MAGIC)] == MAGIC:
        return _labels_from_array(read_npy(raw), str(path))
    lines = raw.decode("utf-8").splitlines()
    if not lines or lines[0].strip() != "label":
        raise NpyFormatError(f"{path}: label CSV must start with a 'label' header row")
    values = []
    for lineno, line in enumerate(lines[1:], start=2):
        text = line.strip()
        if not text:
            continue
        try:
            value = int(text, 10)
        except ValueError:
            raise NpyFormatError(
                f"{path}: line {lineno}: {text!r} is not an integer label"
            ) from None
        if value < 0:
            raise NpyFormatError(f"{path}: line {lineno}: labels must be non-negative")
        values.append(value)
    return np.asarray(values, dtype=np.int64)
