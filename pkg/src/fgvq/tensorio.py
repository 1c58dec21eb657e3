"""Binary interchange for dense feature maps and model parameters.

Two little-endian container formats, shared with the feature extractor:

``.fgt`` (single tensor)::

    magic "FGT1" | version u8 (0x01) | dtype u8 (0x01 = f32le)
    | rank u8 | rank x dim u32 | payload, row-major f32le

``.fgb`` (named bundle)::

    magic "FGB1" | version u8 (0x01) | entry count u32
    per entry: name length u16 | name bytes (UTF-8) | tensor record as above

No compression, no padding; the byte layout above is normative. Readers
bound the declared element count before allocating anything.
"""

from __future__ import annotations

import struct
from pathlib import Path
from typing import BinaryIO, Iterable, Mapping

import numpy as np

from .errors import (
    BoundsError,
    FormatError,
    InvalidInputError,
    TruncationError,
    UnsupportedFormatError,
)

TENSOR_MAGIC = b"FGT1"
BUNDLE_MAGIC = b"FGB1"
FORMAT_VERSION = 0x01
DTYPE_F32LE = 0x01

MAX_RANK = 8
MAX_ELEMENTS = 2**31
MAX_NAME_BYTES = 0xFFFF


def _check_writable(array: np.ndarray) -> np.ndarray:
    if np.asarray(array).ndim < 1:
        raise InvalidInputError("tensor rank must be >= 1 (got a scalar)")
    arr = np.ascontiguousarray(array, dtype="<f4")
    if arr.ndim > MAX_RANK:
        raise InvalidInputError(f"tensor rank {arr.ndim} exceeds the maximum of {MAX_RANK}")
    if arr.size > MAX_ELEMENTS:
        raise InvalidInputError(f"tensor has {arr.size} elements, limit is {MAX_ELEMENTS}")
    for dim in arr.shape:
        if dim > 0xFFFFFFFF:
            raise InvalidInputError(f"dimension {dim} does not fit in u32")
    return arr


def write_tensor(array: np.ndarray, sink: BinaryIO) -> int:
    """Write one tensor record to *sink*; returns the number of bytes written."""
    arr = _check_writable(array)
    header = TENSOR_MAGIC + bytes((FORMAT_VERSION, DTYPE_F32LE, arr.ndim))
    header += struct.pack(f"<{arr.ndim}I", *arr.shape)
    payload = arr.tobytes()
    sink.write(header)
    sink.write(payload)
    return len(header) + len(payload)


def _read_exact(source: BinaryIO, count: int, what: str) -> bytes:
    data = source.read(count)
    if len(data) != count:
        raise TruncationError(f"stream ended while reading {what} "
                              f"({len(data)} of {count} bytes)")
    return data


def read_tensor(source: BinaryIO) -> np.ndarray:
    """Read one tensor record; the inverse of :func:`write_tensor`."""
    magic = _read_exact(source, 4, "tensor magic")
    if magic != TENSOR_MAGIC:
        raise FormatError(f"bad tensor magic {magic!r}, expected {TENSOR_MAGIC!r}")
    version, dtype, rank = _read_exact(source, 3, "tensor header")
    if version != FORMAT_VERSION:
        raise UnsupportedFormatError(f"unsupported tensor format version {version}")
    if dtype != DTYPE_F32LE:
        raise UnsupportedFormatError(f"unsupported dtype byte {dtype:#04x}")
    if rank < 1 or rank > MAX_RANK:
        raise FormatError(f"tensor rank {rank} outside [1, {MAX_RANK}]")
    shape = struct.unpack(f"<{rank}I", _read_exact(source, 4 * rank, "tensor dims"))
    count = 1
    for dim in shape:
        count *= dim
    if count > MAX_ELEMENTS:
        raise BoundsError(f"declared shape {list(shape)} implies {count} elements, "
                          f"limit is {MAX_ELEMENTS}")
    payload = _read_exact(source, 4 * count, "tensor payload")
    return np.frombuffer(payload, dtype="<f4").reshape(shape).copy()


def write_bundle(entries: Mapping[str, np.ndarray] | Iterable[tuple[str, np.ndarray]],
                 sink: BinaryIO) -> int:
    """Write a named tensor bundle; entry order is preserved."""
    if isinstance(entries, Mapping):
        items = list(entries.items())
    else:
        items = list(entries)
    seen = set()
    for name, _ in items:
        if name in seen:
            raise InvalidInputError(f"duplicate bundle entry name {name!r}")
        seen.add(name)
    written = 0
    sink.write(BUNDLE_MAGIC + bytes((FORMAT_VERSION,)) + struct.pack("<I", len(items)))
    written += 9
    for name, array in items:
        encoded = name.encode("utf-8")
        if len(encoded) > MAX_NAME_BYTES:
            raise InvalidInputError(f"entry name longer than {MAX_NAME_BYTES} bytes")
        sink.write(struct.pack("<H", len(encoded)))
        sink.write(encoded)
        written += 2 + len(encoded)
        written += write_tensor(array, sink)
    return written


def read_bundle(source: BinaryIO) -> dict[str, np.ndarray]:
    """Read a bundle into an insertion-ordered dict; duplicate names are rejected."""
    magic = _read_exact(source, 4, "bundle magic")
    if magic != BUNDLE_MAGIC:
        raise FormatError(f"bad bundle magic {magic!r}, expected {BUNDLE_MAGIC!r}")
    (version,) = _read_exact(source, 1, "bundle version")
    if version != FORMAT_VERSION:
        raise UnsupportedFormatError(f"unsupported bundle format version {version}")
    (count,) = struct.unpack("<I", _read_exact(source, 4, "bundle entry count"))
    entries: dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,) = struct.unpack("<H", _read_exact(source, 2, "entry name length"))
        try:
            name = _read_exact(source, name_len, "entry name").decode("utf-8")
        except UnicodeDecodeError as exc:
            raise FormatError(f"entry name is not valid UTF-8: {exc}") from exc
        if name in entries:
            raise FormatError(f"duplicate bundle entry name {name!r}")
        entries[name] = read_tensor(source)
    return entries


def save_tensor(array: np.ndarray, path: str | Path) -> int:
    with open(path, "wb") as sink:
        return write_tensor(array, sink)


def load_tensor(path: str | Path) -> np.ndarray:
    with open(path, "rb") as source:
        return read_tensor(source)


def save_bundle(entries, path: str | Path) -> int:
    with open(path, "wb") as sink:
        return write_bundle(entries, sink)


def load_bundle(path: str | Path) -> dict[str, np.ndarray]:
    with open(path, "rb") as source:
        return read_bundle(source)
