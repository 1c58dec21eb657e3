"""Writer (and test-support reader) for the engine's tensor interchange.

Implements the normative byte layouts independently of the engine package:

``.fgt``: "FGT1" | version 0x01 | dtype 0x01 (f32le) | rank u8
          | rank x dim u32le | row-major f32le payload
``.fgb``: "FGB1" | version 0x01 | entry count u32le, then per entry
          u16le name length | UTF-8 name | embedded .fgt record
"""

from __future__ import annotations

import struct
from pathlib import Path
from typing import BinaryIO, Iterable, Mapping

import numpy as np

TENSOR_MAGIC = b"FGT1"
BUNDLE_MAGIC = b"FGB1"
VERSION = 0x01
DTYPE_F32LE = 0x01


def write_tensor(array: np.ndarray, sink: BinaryIO) -> int:
    arr = np.ascontiguousarray(array, dtype="<f4")
    if arr.ndim < 1 or arr.ndim > 8:
        raise ValueError(f"tensor rank must be in [1, 8], got {arr.ndim}")
    header = TENSOR_MAGIC + bytes((VERSION, DTYPE_F32LE, arr.ndim))
    header += struct.pack(f"<{arr.ndim}I", *arr.shape)
    sink.write(header)
    payload = arr.tobytes()
    sink.write(payload)
    return len(header) + len(payload)


def write_bundle(entries: Mapping[str, np.ndarray] | Iterable[tuple[str, np.ndarray]],
                 sink: BinaryIO) -> int:
    items = list(entries.items()) if isinstance(entries, Mapping) else list(entries)
    sink.write(BUNDLE_MAGIC + bytes((VERSION,)) + struct.pack("<I", len(items)))
    written = 9
    for name, array in items:
        encoded = name.encode("utf-8")
        sink.write(struct.pack("<H", len(encoded)))
        sink.write(encoded)
        written += 2 + len(encoded) + write_tensor(array, sink)
    return written


def read_tensor(source: BinaryIO) -> np.ndarray:
    magic = source.read(4)
    if magic != TENSOR_MAGIC:
        raise ValueError(f"bad tensor magic {magic!r}")
    version, dtype, rank = source.read(3)
    if version != VERSION or dtype != DTYPE_F32LE:
        raise ValueError(f"unsupported version/dtype {version}/{dtype}")
    shape = struct.unpack(f"<{rank}I", source.read(4 * rank))
    count = int(np.prod(shape, dtype=np.int64))
    payload = source.read(4 * count)
    if len(payload) != 4 * count:
        raise ValueError("truncated tensor payload")
    return np.frombuffer(payload, dtype="<f4").reshape(shape).copy()


def save_tensor(array: np.ndarray, path: str | Path) -> int:
    with open(path, "wb") as sink:
        return write_tensor(array, sink)


def save_bundle(entries, path: str | Path) -> int:
    with open(path, "wb") as sink:
        return write_bundle(entries, sink)


def load_tensor(path: str | Path) -> np.ndarray:
    with open(path, "rb") as source:
        return read_tensor(source)
