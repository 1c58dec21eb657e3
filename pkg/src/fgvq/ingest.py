"""Frame decoding, grayscale conversion, resizing, and temporal sampling.

Inputs are either a YUV4MPEG2 (.y4m) stream or a lexicographically ordered
image sequence (8-bit PNG/PGM). Decoded sequences keep only what the
analysis needs: the Y plane for YUV content, full RGB for image frames.
"""

from __future__ import annotations

import glob
import mmap
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import (
    DimensionMismatchError,
    FormatError,
    InputNotFoundError,
    TruncationError,
    UnsupportedColorspaceError,
)

Y4M_MAGIC = b"YUV4MPEG2"

# Y4M colorspace tags we decode; anything else is rejected rather than guessed.
_Y4M_COLORSPACES = {
    b"420jpeg": "yuv420",
    b"420mpeg2": "yuv420",
    b"420": "yuv420",
    b"444": "yuv444",
    b"mono": "mono",
}

COLORSPACES = ("yuv420", "yuv444", "mono", "rgb8")

# Rec. 601 luma weights; the 8-bit JPEG/consumer-video convention.
_LUMA_R, _LUMA_G, _LUMA_B = 0.299, 0.587, 0.114

FRAME_SIZE = 224


@dataclass
class FrameSequence:
    """Decoded frames sharing one geometry and colorspace.

    ``frames`` holds per-frame uint8 arrays: the Y plane with shape (h, w)
    for yuv420/yuv444/mono, or (h, w, 3) for rgb8.
    """

    width: int
    height: int
    colorspace: str
    frames: list[np.ndarray]

    @property
    def frame_count(self) -> int:
        return len(self.frames)

    def gray_frame(self, index: int) -> np.ndarray:
        """Grayscale frame at native resolution, values in [0, 1]."""
        return to_grayscale(self.frames[index], self.colorspace)


@dataclass
class SamplingPlan:
    """Which frames are analyzed and the temporal window around each."""

    frames: int
    window_len: int
    sampled_indices: list[int]
    windows: list[list[int]]


def _plane_sizes(width: int, height: int, colorspace: str) -> tuple[int, int]:
    """(luma bytes, chroma bytes per plane) for one frame."""
    luma = width * height
    if colorspace == "yuv420":
        return luma, ((width + 1) // 2) * ((height + 1) // 2)
    if colorspace == "yuv444":
        return luma, luma
    if colorspace == "mono":
        return luma, 0
    raise ValueError(f"no plane geometry for colorspace {colorspace!r}")


def parse_y4m(stream: bytes | BinaryIO) -> FrameSequence:
    """Parse a YUV4MPEG2 stream, keeping the Y plane of every frame.

    Supported colorspace tags: C420jpeg, C420mpeg2, C420, C444, Cmono
    (absent C defaults to 420jpeg per the Y4M convention). Accepts bytes,
    a readable binary stream, or any buffer (e.g. an mmap); frames are
    zero-copy views into the buffer.
    """
    if isinstance(stream, (bytes, bytearray, mmap.mmap)):
        data = stream
    else:
        data = stream.read()

    header_end = data.find(b"\n")
    if header_end < 0:
        raise FormatError("no stream header line found")
    tokens = data[:header_end].split(b" ")
    if tokens[0] != Y4M_MAGIC:
        raise FormatError(f"bad stream signature {tokens[0][:16]!r}, expected {Y4M_MAGIC!r}")

    width = height = 0
    cs_tag = b"420jpeg"
    for token in tokens[1:]:
        if not token:
            continue
        key, value = token[:1], token[1:]
        if key == b"W":
            width = _positive_int(value, "width")
        elif key == b"H":
            height = _positive_int(value, "height")
        elif key == b"C":
            cs_tag = value
        # F (rate), I (interlacing), A (aspect), X (comment) are irrelevant here.
    if width == 0 or height == 0:
        raise FormatError("header is missing the W or H tag")
    if cs_tag not in _Y4M_COLORSPACES:
        raise UnsupportedColorspaceError(f"unsupported colorspace tag C{cs_tag.decode('ascii', 'replace')}")
    colorspace = _Y4M_COLORSPACES[cs_tag]

    luma_size, chroma_size = _plane_sizes(width, height, colorspace)
    frame_size = luma_size + 2 * chroma_size

    frames: list[np.ndarray] = []
    offset = header_end + 1
    while offset < len(data):
        marker_end = data.find(b"\n", offset)
        if marker_end < 0:
            raise TruncationError(f"frame {len(frames)}: unterminated FRAME marker",
                                  index=len(frames))
        marker = data[offset:marker_end]
        if marker != b"FRAME" and not marker.startswith(b"FRAME "):
            raise FormatError(f"frame {len(frames)}: expected FRAME marker, got {marker[:16]!r}")
        offset = marker_end + 1
        if offset + frame_size > len(data):
            raise TruncationError(
                f"frame {len(frames)}: payload truncated "
                f"({len(data) - offset} of {frame_size} bytes)",
                index=len(frames))
        luma = np.frombuffer(data, dtype=np.uint8, count=luma_size, offset=offset)
        frames.append(luma.reshape(height, width))
        offset += frame_size

    if not frames:
        raise FormatError("stream contains no frames")
    return FrameSequence(width=width, height=height, colorspace=colorspace, frames=frames)


def _positive_int(raw: bytes, what: str) -> int:
    try:
        value = int(raw)
    except ValueError:
        raise FormatError(f"malformed {what} tag {raw!r}") from None
    if value <= 0:
        raise FormatError(f"{what} must be positive, got {value}")
    return value


def load_image_sequence(path_pattern: str | Path) -> FrameSequence:
    """Load a lexicographically ordered 8-bit PNG/PGM sequence.

    All-grayscale inputs decode as ``mono``; anything else decodes as
    ``rgb8`` (grayscale frames are expanded to three channels).
    """
    paths = sorted(glob.glob(str(path_pattern)))
    if not paths:
        raise InputNotFoundError(f"no files match {str(path_pattern)!r}")

    raw_frames: list[np.ndarray] = []
    width = height = -1
    any_color = False
    for path in paths:
        try:
            with Image.open(path) as img:
                if img.mode == "L":
                    arr = np.asarray(img, dtype=np.uint8)
                elif img.mode in ("RGB", "RGBA", "P"):
                    arr = np.asarray(img.convert("RGB"), dtype=np.uint8)
                    any_color = True
                else:
                    raise FormatError(f"{path}: unsupported image mode {img.mode!r} "
                                      "(8-bit grayscale or RGB required)")
        except UnidentifiedImageError as exc:
            raise FormatError(f"{path}: not a decodable image") from exc
        if width < 0:
            height, width = arr.shape[:2]
        elif arr.shape[:2] != (height, width):
            raise DimensionMismatchError(
                f"{path}: {arr.shape[1]}x{arr.shape[0]} differs from first frame "
                f"{width}x{height}")
        raw_frames.append(arr)

    if any_color:
        frames = [f if f.ndim == 3 else np.repeat(f[:, :, None], 3, axis=2)
                  for f in raw_frames]
        colorspace = "rgb8"
    else:
        frames = raw_frames
        colorspace = "mono"
    return FrameSequence(width=width, height=height, colorspace=colorspace, frames=frames)


def to_grayscale(frame: np.ndarray, colorspace: str) -> np.ndarray:
    """Convert one decoded frame to grayscale float64 in [0, 1].

    rgb8 uses Rec. 601 luma; YUV colorspaces pass the stored Y plane
    through; mono is a straight rescale.
    """
    if colorspace == "rgb8":
        rgb = frame.astype(np.float64)
        luma = _LUMA_R * rgb[:, :, 0] + _LUMA_G * rgb[:, :, 1] + _LUMA_B * rgb[:, :, 2]
        return luma / 255.0
    if colorspace in ("yuv420", "yuv444", "mono"):
        return frame.astype(np.float64) / 255.0
    raise ValueError(f"unknown colorspace {colorspace!r}")


def _bilinear_coords(src_h: int, src_w: int, out_h: int, out_w: int):
    """Corner indices and fractional weights for half-pixel-center sampling."""
    ys = (np.arange(out_h) + 0.5) * (src_h / out_h) - 0.5
    xs = (np.arange(out_w) + 0.5) * (src_w / out_w) - 0.5
    ys = np.clip(ys, 0.0, src_h - 1.0)
    xs = np.clip(xs, 0.0, src_w - 1.0)
    y0 = np.floor(ys).astype(np.intp)
    x0 = np.floor(xs).astype(np.intp)
    y1 = np.minimum(y0 + 1, src_h - 1)
    x1 = np.minimum(x0 + 1, src_w - 1)
    return y0, y1, x0, x1, (ys - y0)[:, None], (xs - x0)[None, :]


def _bilinear_blend(a, b, c, d, fy, fx) -> np.ndarray:
    out = (a * (1.0 - fx) + b * fx) * (1.0 - fy) + (c * (1.0 - fx) + d * fx) * fy
    # The sampled corners bound every output; clipping to them keeps the
    # result inside [min(input), max(input)] despite round-off.
    lo = min(a.min(), b.min(), c.min(), d.min())
    hi = max(a.max(), b.max(), c.max(), d.max())
    return np.clip(out, lo, hi)


def resize_bilinear(gray: np.ndarray, out_height: int = FRAME_SIZE,
                    out_width: int = FRAME_SIZE) -> np.ndarray:
    """Bilinear resample with half-pixel center alignment and border clamp.

    Output values are clamped to the input range, so interpolation round-off
    can never step outside [min(input), max(input)].
    """
    src_h, src_w = gray.shape
    if (src_h, src_w) == (out_height, out_width):
        return gray.astype(np.float64, copy=True)
    y0, y1, x0, x1, fy, fx = _bilinear_coords(src_h, src_w, out_height, out_width)
    src = gray.astype(np.float64, copy=False)
    return _bilinear_blend(src[y0[:, None], x0], src[y0[:, None], x1],
                           src[y1[:, None], x0], src[y1[:, None], x1], fy, fx)


def gray_frame_224(sequence: FrameSequence, index: int) -> np.ndarray:
    """Grayscale 224x224 view of one frame; fused gather-convert-resample.

    Equivalent (to float32 round-off) to ``resize_bilinear(to_grayscale(f))``
    but only touches the sampled corner pixels and blends in float32, which
    matters when decoding high-resolution clips. Frequency analysis runs in
    float64 downstream either way.
    """
    frame = sequence.frames[index]
    if (sequence.height, sequence.width) == (FRAME_SIZE, FRAME_SIZE):
        return to_grayscale(frame, sequence.colorspace)
    y0, y1, x0, x1, fy, fx = _bilinear_coords(sequence.height, sequence.width,
                                              FRAME_SIZE, FRAME_SIZE)
    fy = fy.astype(np.float32)
    fx = fx.astype(np.float32)
    if sequence.colorspace == "rgb8":
        corners = [_corner_luma(frame, y, x)
                   for y, x in ((y0, x0), (y0, x1), (y1, x0), (y1, x1))]
        return _bilinear_blend(*corners, fy, fx)
    rows0 = frame[y0]  # contiguous row copies keep the column gathers cache-hot
    rows1 = frame[y1]
    a = rows0[:, x0].astype(np.float32)
    b = rows0[:, x1].astype(np.float32)
    c = rows1[:, x0].astype(np.float32)
    d = rows1[:, x1].astype(np.float32)
    return _bilinear_blend(a, b, c, d, fy, fx) / np.float32(255.0)


def _corner_luma(frame: np.ndarray, ys: np.ndarray, xs: np.ndarray) -> np.ndarray:
    rgb = frame[ys[:, None], xs].astype(np.float32)
    luma = (np.float32(_LUMA_R) * rgb[:, :, 0] + np.float32(_LUMA_G) * rgb[:, :, 1]
            + np.float32(_LUMA_B) * rgb[:, :, 2])
    return luma / np.float32(255.0)


def sample_frames(frame_count: int, num_samples: int) -> list[int]:
    """Centered uniform sampling: index_k = floor((k + 0.5) * N / T).

    Duplicates appear when the clip has fewer frames than samples.
    """
    if frame_count < 1 or num_samples < 1:
        raise ValueError("frame_count and num_samples must be >= 1")
    return [min((2 * k + 1) * frame_count // (2 * num_samples), frame_count - 1)
            for k in range(num_samples)]


def window_for(sample_index: int, frame_count: int, window_len: int) -> list[int]:
    """Temporal window centered on a sampled frame, clamped to the clip.

    Clips shorter than the window use every frame and repeat the last index
    until the window is full.
    """
    if not 0 <= sample_index < frame_count:
        raise ValueError(f"sample index {sample_index} outside [0, {frame_count - 1}]")
    if window_len < 1:
        raise ValueError("window_len must be >= 1")
    if frame_count < window_len:
        window = list(range(frame_count))
        window += [frame_count - 1] * (window_len - frame_count)
        return window
    start = max(0, min(sample_index - (window_len - 1) // 2, frame_count - window_len))
    return list(range(start, start + window_len))


def build_sampling_plan(frame_count: int, num_samples: int = 16,
                        window_len: int = 6) -> SamplingPlan:
    """Sampled indices plus their temporal windows for one clip."""
    sampled = sample_frames(frame_count, num_samples)
    windows = [window_for(i, frame_count, window_len) for i in sampled]
    return SamplingPlan(frames=num_samples, window_len=window_len,
                        sampled_indices=sampled, windows=windows)
