"""Frequency-domain distortion cues and the 14x14 artifact/structure maps.

Each 224x224 grayscale frame is split into non-overlapping 16x16 blocks.
An orthonormal 2D DCT-II per block yields low/mid/high AC energy ratios,
which drive four block-level cues:

  ringing    - edge-dense blocks with strong mid/high-frequency energy
  blur       - missing mid/high energy, gated by local gradient strength
  blockiness - intensity jumps across the 16-pixel block lattice
  temporal   - motion and flicker from an FFT over block means in a window

Cues are min-max normalized per frame, averaged, and renormalized into the
artifact-aware map; the structure-aware map is its complement.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, InvalidWindowError

BLOCK_SIZE = 16
GRID_SIZE = 14
FRAME_SIZE = BLOCK_SIZE * GRID_SIZE  # 224

# Anti-diagonal AC band split by s = u + v (DC excluded everywhere).
LOW_BAND = (1, 5)
MID_BAND = (6, 15)
HIGH_BAND = (16, 30)

DEFAULT_EDGE_THRESHOLD = 0.2   # fraction of the frame-max gradient magnitude
DEFAULT_MIN_EDGE_RATIO = 0.05  # ringing is suppressed below this edge density
DEFAULT_BLOCKINESS_SIGMA = 1.0
EPS_ENERGY = 1e-12
EPS_RATIO = 1e-8
# Cue spans at or below this are treated as constant, so float dust from a
# degenerate frame can never be stretched into a full-scale cue.
EPS_SPAN = 1e-12


@dataclass
class BandRatios:
    """Fractions of a block's AC energy in the low/mid/high bands."""

    r_low: float
    r_mid: float
    r_high: float


@dataclass
class WeightMapPair:
    """Artifact-aware map and its structure-aware complement (both 14x14)."""

    w_art: np.ndarray
    w_str: np.ndarray


def _dct_matrix(n: int) -> np.ndarray:
    # Orthonormal DCT-II: row 0 scaled by sqrt(1/n), the rest by sqrt(2/n).
    k = np.arange(n)[:, None]
    x = np.arange(n)[None, :]
    m = np.sqrt(2.0 / n) * np.cos(np.pi * (2 * x + 1) * k / (2 * n))
    m[0, :] = np.sqrt(1.0 / n)
    return m


_DCT16 = _dct_matrix(BLOCK_SIZE)


def _band_masks() -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    u = np.arange(BLOCK_SIZE)[:, None]
    v = np.arange(BLOCK_SIZE)[None, :]
    s = u + v
    low = (s >= LOW_BAND[0]) & (s <= LOW_BAND[1])
    mid = (s >= MID_BAND[0]) & (s <= MID_BAND[1])
    high = (s >= HIGH_BAND[0]) & (s <= HIGH_BAND[1])
    ac = s >= 1
    return low, mid, high, ac


_LOW_MASK, _MID_MASK, _HIGH_MASK, _AC_MASK = _band_masks()

# (256, 4) projection of per-coefficient power onto [low, mid, high, ac] sums.
_BAND_PROJECTION = np.stack([m.ravel().astype(np.float64)
                             for m in (_LOW_MASK, _MID_MASK, _HIGH_MASK, _AC_MASK)],
                            axis=1)

# (14, 224) block-averaging operator: block_mean(f) = _POOL @ f @ _POOL.T.
_POOL = np.kron(np.eye(GRID_SIZE), np.full((1, BLOCK_SIZE), 1.0 / BLOCK_SIZE))


def dct2_16(block: np.ndarray) -> np.ndarray:
    """Orthonormal 2D DCT-II of one 16x16 block."""
    if block.shape != (BLOCK_SIZE, BLOCK_SIZE):
        raise DimensionMismatchError(f"expected a 16x16 block, got {block.shape}")
    return _DCT16 @ np.asarray(block, dtype=np.float64) @ _DCT16.T


def band_ratios(coeffs: np.ndarray) -> BandRatios:
    """Low/mid/high AC energy fractions of one coefficient block.

    An AC-silent block (total AC energy below 1e-12) yields (0, 0, 0).
    """
    power = np.asarray(coeffs, dtype=np.float64) ** 2
    total = float(power[_AC_MASK].sum())
    if total < EPS_ENERGY:
        return BandRatios(0.0, 0.0, 0.0)
    return BandRatios(
        r_low=float(power[_LOW_MASK].sum() / total),
        r_mid=float(power[_MID_MASK].sum() / total),
        r_high=float(power[_HIGH_MASK].sum() / total),
    )


def _frame_blocks(frame: np.ndarray) -> np.ndarray:
    """(196, 16, 16) view of a 224x224 frame in row-major block order."""
    if frame.shape != (FRAME_SIZE, FRAME_SIZE):
        raise DimensionMismatchError(f"expected a {FRAME_SIZE}x{FRAME_SIZE} frame, "
                                     f"got {frame.shape}")
    blocks = frame.reshape(GRID_SIZE, BLOCK_SIZE, GRID_SIZE, BLOCK_SIZE)
    return blocks.transpose(0, 2, 1, 3).reshape(-1, BLOCK_SIZE, BLOCK_SIZE)


def _block_mean(frame: np.ndarray) -> np.ndarray:
    return _POOL @ frame @ _POOL.T


def band_ratio_grids(frame: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-block (14x14) low/mid/high AC energy ratios of a frame."""
    blocks = _frame_blocks(np.asarray(frame, dtype=np.float64))
    count = blocks.shape[0]
    # Separable transform as two plain gemms; the result lands transposed
    # per block, which the band projection tolerates (s = u + v is symmetric).
    rows = (blocks.reshape(-1, BLOCK_SIZE) @ _DCT16.T).reshape(count, BLOCK_SIZE,
                                                               BLOCK_SIZE)
    coeffs_t = np.ascontiguousarray(rows.transpose(0, 2, 1)).reshape(-1, BLOCK_SIZE)
    coeffs_t = coeffs_t @ _DCT16.T
    power = np.square(coeffs_t, out=coeffs_t).reshape(count, -1)
    low, mid, high, total = (power @ _BAND_PROJECTION).T
    silent = total < EPS_ENERGY
    total = np.where(silent, 1.0, total)
    shape = (GRID_SIZE, GRID_SIZE)
    r_low = np.where(silent, 0.0, low / total).reshape(shape)
    r_mid = np.where(silent, 0.0, mid / total).reshape(shape)
    r_high = np.where(silent, 0.0, high / total).reshape(shape)
    return r_low, r_mid, r_high


def sobel_gradient(frame: np.ndarray,
                   edge_threshold: float = DEFAULT_EDGE_THRESHOLD
                   ) -> tuple[np.ndarray, np.ndarray]:
    """3x3 Sobel magnitude (replicate border) and its thresholded edge mask.

    The mask marks pixels whose magnitude exceeds ``edge_threshold`` times
    the frame maximum; a flat frame yields an all-false mask.
    """
    src = np.asarray(frame, dtype=np.float64)
    p = np.pad(src, 1, mode="edge")
    # Shared central differences cancel exactly on flat fields.
    dx = p[:, 2:] - p[:, :-2]
    gx = dx[:-2] + dx[2:]
    gx += dx[1:-1]
    gx += dx[1:-1]
    dy = p[2:, :] - p[:-2, :]
    gy = dy[:, :-2] + dy[:, 2:]
    gy += dy[:, 1:-1]
    gy += dy[:, 1:-1]
    gx *= gx
    gy *= gy
    gx += gy
    magnitude = np.sqrt(gx, out=gx)
    peak = magnitude.max()
    if peak > 0.0:
        edge_mask = magnitude > edge_threshold * peak
    else:
        edge_mask = np.zeros_like(magnitude, dtype=bool)
    return magnitude, edge_mask


def ringing_cue(r_mid: np.ndarray, r_high: np.ndarray, edge_mask: np.ndarray,
                min_edge_ratio: float = DEFAULT_MIN_EDGE_RATIO) -> np.ndarray:
    """Edge density times mid+high energy, zeroed where edges are scarce."""
    rho = _block_mean(edge_mask.astype(np.float64))
    cue = rho * (r_mid + r_high)
    cue[rho < min_edge_ratio] = 0.0
    return cue


def blur_cue(r_mid: np.ndarray, r_high: np.ndarray,
             magnitude: np.ndarray) -> np.ndarray:
    """Missing mid/high energy, modulated by relative block gradient strength."""
    raw = np.clip(1.0 - (0.5 * r_mid + r_high), 0.0, 1.0)
    block_grad = _block_mean(magnitude)
    peak = block_grad.max()
    if peak <= 0.0:
        return np.zeros_like(raw)
    return raw * (block_grad / peak)


def _gaussian_kernel(sigma: float, radius: int = 2) -> np.ndarray:
    ax = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-(ax[:, None] ** 2 + ax[None, :] ** 2) / (2.0 * sigma * sigma))
    return k / k.sum()


def _smooth_renormalized(grid: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    # Zero-pad, then divide by the in-grid kernel mass so border cells keep scale.
    radius = kernel.shape[0] // 2
    padded = np.pad(grid, radius)
    support = np.pad(np.ones_like(grid), radius)
    num = np.zeros_like(grid)
    den = np.zeros_like(grid)
    n = grid.shape[0]
    for i in range(kernel.shape[0]):
        for j in range(kernel.shape[1]):
            num += kernel[i, j] * padded[i:i + n, j:j + n]
            den += kernel[i, j] * support[i:i + n, j:j + n]
    return num / den


def blockiness_cue(frame: np.ndarray,
                   sigma: float = DEFAULT_BLOCKINESS_SIGMA) -> np.ndarray:
    """Mean intensity jump across the 16-pixel block lattice, smoothed.

    Boundary strengths are averaged over each block's existing neighbors,
    then the 14x14 map is smoothed with a 5x5 Gaussian whose kernel is
    renormalized at the grid borders.
    """
    src = np.asarray(frame, dtype=np.float64)
    if src.shape != (FRAME_SIZE, FRAME_SIZE):
        raise DimensionMismatchError(f"expected a {FRAME_SIZE}x{FRAME_SIZE} frame, "
                                     f"got {src.shape}")
    edges = np.arange(1, GRID_SIZE) * BLOCK_SIZE  # internal boundary lines

    # vertical boundaries: strength per (block row, boundary)
    v_diff = np.abs(src[:, edges] - src[:, edges - 1])
    v_strength = v_diff.reshape(GRID_SIZE, BLOCK_SIZE, GRID_SIZE - 1).mean(axis=1)
    # horizontal boundaries: strength per (boundary, block column)
    h_diff = np.abs(src[edges, :] - src[edges - 1, :])
    h_strength = h_diff.reshape(GRID_SIZE - 1, GRID_SIZE, BLOCK_SIZE).mean(axis=2)

    acc = np.zeros((GRID_SIZE, GRID_SIZE))
    cnt = np.zeros((GRID_SIZE, GRID_SIZE))
    acc[:, 1:] += v_strength   # each block's left boundary
    cnt[:, 1:] += 1.0
    acc[:, :-1] += v_strength  # right boundary
    cnt[:, :-1] += 1.0
    acc[1:, :] += h_strength   # top boundary
    cnt[1:, :] += 1.0
    acc[:-1, :] += h_strength  # bottom boundary
    cnt[:-1, :] += 1.0
    raw = acc / cnt

    return _smooth_renormalized(raw, _gaussian_kernel(sigma))


def temporal_cue(window: list[np.ndarray] | np.ndarray) -> np.ndarray:
    """Motion and flicker from an FFT over block means within the window.

    Per grid cell: motion is non-DC over DC energy (clamped to 1), flicker
    is the high-bin share of the one-sided non-DC spectrum, and the cue is
    their equal-weight mean.
    """
    frames = [np.asarray(f, dtype=np.float64) for f in window]
    if len(frames) < 2:
        raise InvalidWindowError(f"temporal window needs >= 2 frames, got {len(frames)}")
    return temporal_cue_from_means(np.stack([_block_mean(f) for f in frames]))


def temporal_cue_from_means(means: np.ndarray) -> np.ndarray:
    """Temporal cue from precomputed per-frame block-mean grids (L x 14 x 14)."""
    length = means.shape[0]
    if length < 2:
        raise InvalidWindowError(f"temporal window needs >= 2 frames, got {length}")
    power = np.abs(np.fft.fft(means, axis=0)) ** 2

    dc = power[0]
    non_dc = power[1:].sum(axis=0)
    motion = np.minimum(non_dc / (dc + EPS_RATIO), 1.0)

    half = length // 2
    low_cut = length // 4  # one-sided bins above this count as high frequency
    high = np.zeros_like(dc)
    for k in range(1, half + 1):
        folded = power[k] + (power[length - k] if k != length - k else 0.0)
        if k > low_cut:
            high += folded
    flicker = high / (non_dc + EPS_RATIO)
    return 0.5 * motion + 0.5 * flicker


def _minmax(grid: np.ndarray) -> np.ndarray:
    lo = grid.min()
    span = grid.max() - lo
    if span <= EPS_SPAN:
        return np.zeros_like(grid)
    return np.clip((grid - lo) / span, 0.0, 1.0)


def build_weight_maps(ringing: np.ndarray, blur: np.ndarray,
                      blockiness: np.ndarray, temporal: np.ndarray) -> WeightMapPair:
    """Aggregate the four cues into the artifact/structure weight maps.

    Each cue is min-max normalized per frame (a constant cue contributes
    zeros); the artifact map is the renormalized equal-weight mean, falling
    back to uniform 0.5 when even that mean is constant.
    """
    cues = [ringing, blur, blockiness, temporal]
    mean = sum(_minmax(c) for c in cues) / 4.0
    span = mean.max() - mean.min()
    if span <= EPS_SPAN:
        w_art = np.full_like(mean, 0.5)
    else:
        w_art = _minmax(mean)
    return WeightMapPair(w_art=w_art, w_str=1.0 - w_art)


def spatial_cues(frame: np.ndarray,
                 edge_threshold: float = DEFAULT_EDGE_THRESHOLD,
                 min_edge_ratio: float = DEFAULT_MIN_EDGE_RATIO,
                 blockiness_sigma: float = DEFAULT_BLOCKINESS_SIGMA
                 ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(ringing, blur, blockiness) cues of one 224x224 grayscale frame."""
    src = np.asarray(frame, dtype=np.float64)
    _, r_mid, r_high = band_ratio_grids(src)
    magnitude, edge_mask = sobel_gradient(src, edge_threshold)
    ringing = ringing_cue(r_mid, r_high, edge_mask, min_edge_ratio)
    blur = blur_cue(r_mid, r_high, magnitude)
    blocky = blockiness_cue(src, blockiness_sigma)
    return ringing, blur, blocky


def weight_maps_for_frame(frame: np.ndarray,
                          window: list[np.ndarray] | np.ndarray,
                          edge_threshold: float = DEFAULT_EDGE_THRESHOLD,
                          min_edge_ratio: float = DEFAULT_MIN_EDGE_RATIO,
                          blockiness_sigma: float = DEFAULT_BLOCKINESS_SIGMA
                          ) -> WeightMapPair:
    """Weight maps for one sampled frame and its temporal window.

    Spatial cues come from the sampled frame itself; the temporal cue spans
    the window frames (which include the sampled frame).
    """
    ringing, blur, blocky = spatial_cues(frame, edge_threshold, min_edge_ratio,
                                         blockiness_sigma)
    return build_weight_maps(ringing, blur, blocky, temporal_cue(window))


def block_mean_grid(frame: np.ndarray) -> np.ndarray:
    """14x14 per-block means of a 224x224 frame (temporal-cue input)."""
    if np.asarray(frame).shape != (FRAME_SIZE, FRAME_SIZE):
        raise DimensionMismatchError(f"expected a {FRAME_SIZE}x{FRAME_SIZE} frame, "
                                     f"got {np.asarray(frame).shape}")
    return _block_mean(np.asarray(frame, dtype=np.float64))


def weight_map_pgm_bytes(grid: np.ndarray) -> bytes:
    """Encode a weight map as binary PGM (P5, maxval 255, value = round(w*255))."""
    levels = np.rint(np.asarray(grid, dtype=np.float64) * 255.0).astype(np.uint8)
    header = f"P5\n{grid.shape[1]} {grid.shape[0]}\n255\n".encode("ascii")
    return header + levels.tobytes()


def weight_map_csv_text(grid: np.ndarray) -> str:
    """Encode a weight map as CSV: 14 rows of 14 values, 6 decimal places."""
    out = io.StringIO()
    for row in np.asarray(grid, dtype=np.float64):
        out.write(",".join(f"{v:.6f}" for v in row))
        out.write("\n")
    return out.getvalue()
