"""Spatial and temporal pooling of dense per-frame feature maps.

Three branches share one C x H x W feature map per frame: weighted pooling
under the artifact map, weighted pooling under the structure map, and plain
global average pooling. Branch features are then averaged over the sampled
frames.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, InvalidWeightsError

BRANCHES = ("art", "str", "raw")

EPS_WEIGHT_SUM = 1e-12


@dataclass
class FrameFeature:
    """Pooled per-frame feature vector, tagged with its branch."""

    vector: np.ndarray
    branch: str


@dataclass
class VideoFeature:
    """Temporally pooled per-video feature vector for one branch."""

    vector: np.ndarray
    branch: str


def _check_branch(branch: str) -> str:
    if branch not in BRANCHES:
        raise InvalidInputError(f"unknown branch {branch!r}, expected one of {BRANCHES}")
    return branch


def _as_feature_map(feature_map: np.ndarray) -> np.ndarray:
    # float32 maps are pooled in float32 (large tensors stay cheap);
    # everything else is promoted to float64.
    fmap = np.asarray(feature_map)
    if fmap.dtype != np.float32:
        fmap = fmap.astype(np.float64, copy=False)
    if fmap.ndim != 3 or fmap.shape[0] < 1:
        raise InvalidInputError(f"feature map must be C x H x W, got shape {fmap.shape}")
    return fmap


def weighted_pool(feature_map: np.ndarray, weights: np.ndarray,
                  branch: str = "art") -> FrameFeature:
    """Spatially pool a feature map under normalized non-negative weights.

    Weights are normalized by their sum; an all-zero weight map falls back
    to uniform weighting, which makes the result equal global pooling. Each
    channel is clamped to its own value range so round-off cannot leave the
    convex hull.
    """
    _check_branch(branch)
    fmap = _as_feature_map(feature_map)
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != fmap.shape[1:]:
        raise InvalidInputError(f"weights {w.shape} do not match feature map "
                                f"spatial dims {fmap.shape[1:]}")
    if np.any(w < 0.0):
        raise InvalidWeightsError("pooling weights must be non-negative")

    total = w.sum()
    if total < EPS_WEIGHT_SUM:
        normalized = np.full(w.size, 1.0 / w.size)
    else:
        normalized = (w / total).ravel()

    flat = fmap.reshape(fmap.shape[0], -1)
    pooled = flat @ normalized.astype(fmap.dtype, copy=False)
    pooled = np.clip(pooled, flat.min(axis=1), flat.max(axis=1))
    return FrameFeature(vector=pooled, branch=branch)


def global_pool(feature_map: np.ndarray, branch: str = "raw") -> FrameFeature:
    """Global average pooling over the spatial grid."""
    _check_branch(branch)
    fmap = _as_feature_map(feature_map)
    return FrameFeature(vector=fmap.reshape(fmap.shape[0], -1).mean(axis=1),
                        branch=branch)


def temporal_pool(frame_features: list[FrameFeature]) -> VideoFeature:
    """Arithmetic mean of same-branch frame features over the clip."""
    if not frame_features:
        raise InvalidInputError("temporal pooling needs at least one frame feature")
    branch = frame_features[0].branch
    length = frame_features[0].vector.shape[0]
    for feat in frame_features:
        if feat.branch != branch:
            raise InvalidInputError(f"branch mismatch: {feat.branch!r} vs {branch!r}")
        if feat.vector.shape != (length,):
            raise InvalidInputError(f"feature length mismatch: {feat.vector.shape} "
                                    f"vs ({length},)")
    stacked = np.stack([f.vector for f in frame_features])
    return VideoFeature(vector=stacked.mean(axis=0), branch=branch)
