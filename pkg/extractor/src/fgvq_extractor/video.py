"""Minimal clip decoding to RGB frames, plus the shared sampling formula.

Supports the same inputs as the engine: a YUV4MPEG2 subset (C420jpeg,
C420mpeg2, C420, C444, Cmono) and lexicographically ordered PNG/PGM
sequences. YUV is converted with full-range BT.601 and nearest-neighbor
chroma upsampling; mono is replicated across channels.
"""

from __future__ import annotations

import glob
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import VideoFormatError

_Y4M_CHROMA = {b"420jpeg": "420", b"420mpeg2": "420", b"420": "420",
               b"444": "444", b"mono": "mono"}


def sample_frames(frame_count: int, num_samples: int) -> list[int]:
    """index_k = floor((k + 0.5) * N / T), clamped; identical to the engine."""
    if frame_count < 1 or num_samples < 1:
        raise ValueError("frame_count and num_samples must be >= 1")
    return [min((2 * k + 1) * frame_count // (2 * num_samples), frame_count - 1)
            for k in range(num_samples)]


def _yuv_to_rgb(y: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    yf = y.astype(np.float32)
    uf = u.astype(np.float32) - 128.0
    vf = v.astype(np.float32) - 128.0
    r = yf + 1.402 * vf
    g = yf - 0.344136 * uf - 0.714136 * vf
    b = yf + 1.772 * uf
    rgb = np.stack([r, g, b], axis=-1)
    return np.clip(np.rint(rgb), 0, 255).astype(np.uint8)


def _parse_y4m(data: bytes) -> list[np.ndarray]:
    header_end = data.find(b"\n")
    if header_end < 0:
        raise VideoFormatError("no Y4M header line")
    tokens = data[:header_end].split(b" ")
    if tokens[0] != b"YUV4MPEG2":
        raise VideoFormatError(f"bad Y4M signature {tokens[0][:16]!r}")
    width = height = 0
    chroma_tag = b"420jpeg"
    for token in tokens[1:]:
        if token.startswith(b"W"):
            width = int(token[1:])
        elif token.startswith(b"H"):
            height = int(token[1:])
        elif token.startswith(b"C"):
            chroma_tag = token[1:]
    if not width or not height:
        raise VideoFormatError("Y4M header missing W or H")
    if chroma_tag not in _Y4M_CHROMA:
        raise VideoFormatError(f"unsupported Y4M colorspace C{chroma_tag.decode()}")
    mode = _Y4M_CHROMA[chroma_tag]

    luma = width * height
    cw, ch = (width + 1) // 2, (height + 1) // 2
    chroma = {"420": cw * ch, "444": luma, "mono": 0}[mode]
    frame_size = luma + 2 * chroma

    frames = []
    offset = header_end + 1
    while offset < len(data):
        marker_end = data.find(b"\n", offset)
        if marker_end < 0 or not data[offset:marker_end].startswith(b"FRAME"):
            raise VideoFormatError(f"bad FRAME marker at frame {len(frames)}")
        offset = marker_end + 1
        if offset + frame_size > len(data):
            raise VideoFormatError(f"truncated frame {len(frames)}")
        y = np.frombuffer(data, np.uint8, luma, offset).reshape(height, width)
        if mode == "mono":
            frames.append(np.repeat(y[:, :, None], 3, axis=2))
        else:
            u = np.frombuffer(data, np.uint8, chroma, offset + luma)
            v = np.frombuffer(data, np.uint8, chroma, offset + luma + chroma)
            if mode == "420":
                u = u.reshape(ch, cw).repeat(2, axis=0)[:height].repeat(2, axis=1)[:, :width]
                v = v.reshape(ch, cw).repeat(2, axis=0)[:height].repeat(2, axis=1)[:, :width]
            else:
                u = u.reshape(height, width)
                v = v.reshape(height, width)
            frames.append(_yuv_to_rgb(y, u, v))
        offset += frame_size
    if not frames:
        raise VideoFormatError("clip contains no frames")
    return frames


def load_rgb_frames(path: str | Path) -> list[np.ndarray]:
    """All frames of a clip as (H, W, 3) uint8 RGB arrays."""
    path = str(path)
    if path.endswith(".y4m"):
        return _parse_y4m(Path(path).read_bytes())
    matches = sorted(glob.glob(path))
    if not matches:
        raise FileNotFoundError(f"no frames match {path!r}")
    frames = []
    for name in matches:
        with Image.open(name) as img:
            frames.append(np.asarray(img.convert("RGB"), dtype=np.uint8))
    if any(f.shape != frames[0].shape for f in frames):
        raise VideoFormatError("frames differ in size")
    return frames
