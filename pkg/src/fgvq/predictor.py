"""Branch score heads, gated fusion, and the end-to-end video score.

Each pooled branch feature goes through its own three-layer MLP head
(ReLU hidden layers; dropout is identity at inference). A small gate
network turns weight-map and feature statistics into softmax weights that
fuse the three branch scores into the final quality score.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import freqprior, ingest, pooling, tensorio
from .errors import InvalidInputError, InvalidModelError
from .freqprior import WeightMapPair
from .ingest import FrameSequence, SamplingPlan

DEFAULT_CHANNELS = 768
DEFAULT_HIDDEN1 = 256
DEFAULT_HIDDEN2 = 64
GATE_HIDDEN = 16
GATE_INPUTS = 3

WEIGHT_SUM_TOL = 1e-6

# Canonical .fgb entry names; "meta" holds [channels, hidden1, hidden2].
HEAD_NAMES = ("head_art", "head_str", "head_raw")
HEAD_PARAMS = ("w1", "b1", "w2", "b2", "w3", "b3")
GATE_PARAMS = ("w1", "b1", "w2", "b2")
META_ENTRY = "meta"


@dataclass(frozen=True)
class MlpHead:
    """Three-layer scoring head: two ReLU hidden layers, linear output."""

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    w3: np.ndarray
    b3: float


@dataclass(frozen=True)
class GateNet:
    """Two-layer gate mapping 3 statistics to 3 fusion logits."""

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray


@dataclass(frozen=True)
class GateStats:
    """Inputs to the gate: weight-map means and raw-feature activation."""

    mean_w_art: float
    mean_w_str: float
    mean_abs_raw: float


@dataclass(frozen=True)
class ModelBundle:
    """All inference parameters plus the dimensions they were built for."""

    head_art: MlpHead
    head_str: MlpHead
    head_raw: MlpHead
    gate: GateNet
    channels: int
    hidden1: int
    hidden2: int


@dataclass
class PredictionResult:
    """Fused score plus the per-branch and gate diagnostics."""

    score: float
    q_art: float
    q_str: float
    q_raw: float
    alpha: float
    beta: float
    gamma: float
    stats: GateStats


def _relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def mlp_forward(head: MlpHead, feature: np.ndarray) -> float:
    """Branch score for one video feature; dropout is identity at inference."""
    vec = np.asarray(feature, dtype=np.float64)
    if vec.ndim != 1 or head.w1.shape[1] != vec.shape[0]:
        raise InvalidModelError(f"head expects input of length {head.w1.shape[1]}, "
                                f"got shape {vec.shape}")
    h1 = _relu(head.w1 @ vec + head.b1)
    h2 = _relu(head.w2 @ h1 + head.b2)
    return float((head.w3 @ h2)[0] + head.b3)


def gate_stats(weight_maps: Sequence[WeightMapPair],
               feature_maps: np.ndarray) -> GateStats:
    """Temporal means of the map averages and of |feature| over the clip."""
    maps = list(weight_maps)
    features = np.asarray(feature_maps)
    if not maps:
        raise InvalidInputError("gate statistics need at least one frame")
    if features.ndim != 4 or features.shape[0] != len(maps):
        raise InvalidInputError(f"expected {len(maps)} feature maps, "
                                f"got shape {features.shape}")
    mean_art = float(np.mean([m.w_art.mean() for m in maps]))
    mean_str = float(np.mean([m.w_str.mean() for m in maps]))
    return GateStats(mean_w_art=mean_art, mean_w_str=mean_str,
                     mean_abs_raw=float(np.abs(features).mean(dtype=np.float64)))


def gate_forward(gate: GateNet, stats: GateStats) -> tuple[float, float, float]:
    """Softmax-normalized fusion weights (alpha, beta, gamma)."""
    x = np.array([stats.mean_w_art, stats.mean_w_str, stats.mean_abs_raw])
    logits = gate.w2 @ _relu(gate.w1 @ x + gate.b1) + gate.b2
    shifted = np.exp(logits - logits.max())
    weights = shifted / shifted.sum()
    return float(weights[0]), float(weights[1]), float(weights[2])


def fuse(q_art: float, q_str: float, q_raw: float,
         alpha: float, beta: float, gamma: float) -> float:
    """Convex combination of the branch scores under the gate weights."""
    if abs(alpha + beta + gamma - 1.0) > WEIGHT_SUM_TOL:
        raise InvalidInputError(f"fusion weights must sum to 1, "
                                f"got {alpha + beta + gamma!r}")
    return alpha * q_art + beta * q_str + gamma * q_raw


def _bundle_array(entries: dict[str, np.ndarray], name: str,
                  shape: tuple[int, ...]) -> np.ndarray:
    if name not in entries:
        raise InvalidModelError(f"model bundle is missing entry {name!r}")
    array = np.asarray(entries[name], dtype=np.float64)
    if array.shape != shape:
        raise InvalidModelError(f"entry {name!r} has shape {array.shape}, "
                                f"expected {shape}")
    return array


def bundle_to_model(entries: dict[str, np.ndarray]) -> ModelBundle:
    """Assemble a model from canonical bundle entries, validating shapes."""
    meta = _bundle_array(entries, META_ENTRY, (3,))
    channels, hidden1, hidden2 = (int(v) for v in meta)
    if min(channels, hidden1, hidden2) < 1:
        raise InvalidModelError(f"meta dimensions must be positive, got {meta}")

    def head(prefix: str) -> MlpHead:
        return MlpHead(
            w1=_bundle_array(entries, f"{prefix}.w1", (hidden1, channels)),
            b1=_bundle_array(entries, f"{prefix}.b1", (hidden1,)),
            w2=_bundle_array(entries, f"{prefix}.w2", (hidden2, hidden1)),
            b2=_bundle_array(entries, f"{prefix}.b2", (hidden2,)),
            w3=_bundle_array(entries, f"{prefix}.w3", (1, hidden2)),
            b3=float(_bundle_array(entries, f"{prefix}.b3", (1,))[0]),
        )

    gate = GateNet(
        w1=_bundle_array(entries, "gate.w1", (GATE_HIDDEN, GATE_INPUTS)),
        b1=_bundle_array(entries, "gate.b1", (GATE_HIDDEN,)),
        w2=_bundle_array(entries, "gate.w2", (GATE_INPUTS, GATE_HIDDEN)),
        b2=_bundle_array(entries, "gate.b2", (GATE_INPUTS,)),
    )
    return ModelBundle(head_art=head("head_art"), head_str=head("head_str"),
                       head_raw=head("head_raw"), gate=gate,
                       channels=channels, hidden1=hidden1, hidden2=hidden2)


def model_to_entries(model: ModelBundle) -> dict[str, np.ndarray]:
    """Inverse of :func:`bundle_to_model`, for writing .fgb files."""
    entries: dict[str, np.ndarray] = {}
    for name, head in zip(HEAD_NAMES, (model.head_art, model.head_str, model.head_raw)):
        entries[f"{name}.w1"] = head.w1
        entries[f"{name}.b1"] = head.b1
        entries[f"{name}.w2"] = head.w2
        entries[f"{name}.b2"] = head.b2
        entries[f"{name}.w3"] = head.w3
        entries[f"{name}.b3"] = np.array([head.b3])
    entries["gate.w1"] = model.gate.w1
    entries["gate.b1"] = model.gate.b1
    entries["gate.w2"] = model.gate.w2
    entries["gate.b2"] = model.gate.b2
    entries[META_ENTRY] = np.array([model.channels, model.hidden1, model.hidden2],
                                   dtype=np.float64)
    return entries


def load_model(path: str | Path) -> ModelBundle:
    return bundle_to_model(tensorio.load_bundle(path))


def _gray_cache(sequence: FrameSequence, plan: SamplingPlan) -> dict[int, np.ndarray]:
    needed = sorted(set(plan.sampled_indices) | {i for w in plan.windows for i in w})
    return {index: ingest.gray_frame_224(sequence, index) for index in needed}


def compute_weight_maps(sequence: FrameSequence, plan: SamplingPlan,
                        threads: int | None = None) -> list[WeightMapPair]:
    """Weight maps for every sampled frame; parallel across frames.

    Block means are computed once per distinct frame and shared across the
    overlapping windows. Results are collected by frame position, so the
    output is identical for any thread count.
    """
    for index in plan.sampled_indices:
        if not 0 <= index < sequence.frame_count:
            raise InvalidInputError(f"sampled index {index} outside clip of "
                                    f"{sequence.frame_count} frames")
    gray = _gray_cache(sequence, plan)
    means = {index: freqprior.block_mean_grid(frame) for index, frame in gray.items()}

    def one(position: int) -> WeightMapPair:
        frame = gray[plan.sampled_indices[position]]
        window_means = np.stack([means[i] for i in plan.windows[position]])
        ringing, blur, blocky = freqprior.spatial_cues(frame)
        temporal = freqprior.temporal_cue_from_means(window_means)
        return freqprior.build_weight_maps(ringing, blur, blocky, temporal)

    workers = threads if threads and threads > 0 else (os.cpu_count() or 1)
    if workers == 1:
        return [one(p) for p in range(len(plan.sampled_indices))]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, range(len(plan.sampled_indices))))


def predict_video(sequence: FrameSequence, features: np.ndarray,
                  model: ModelBundle, plan: SamplingPlan,
                  threads: int | None = None) -> PredictionResult:
    """Full pipeline: weight maps, three pooled branches, heads, gated fusion.

    Feature tensors are pooled in their own precision (float32 files stay
    float32 until the per-branch vectors reach the heads).
    """
    feats = np.asarray(features)
    expected = (plan.frames, model.channels, freqprior.GRID_SIZE, freqprior.GRID_SIZE)
    if feats.shape != expected:
        raise InvalidInputError(f"feature tensor shape {tuple(feats.shape)} does not "
                                f"match expected {expected}")

    maps = compute_weight_maps(sequence, plan, threads=threads)
    art_feats = [pooling.weighted_pool(feats[t], maps[t].w_art, branch="art")
                 for t in range(plan.frames)]
    str_feats = [pooling.weighted_pool(feats[t], maps[t].w_str, branch="str")
                 for t in range(plan.frames)]
    raw_feats = [pooling.global_pool(feats[t]) for t in range(plan.frames)]

    q_art = mlp_forward(model.head_art, pooling.temporal_pool(art_feats).vector)
    q_str = mlp_forward(model.head_str, pooling.temporal_pool(str_feats).vector)
    q_raw = mlp_forward(model.head_raw, pooling.temporal_pool(raw_feats).vector)

    stats = gate_stats(maps, feats)
    alpha, beta, gamma = gate_forward(model.gate, stats)
    score = fuse(q_art, q_str, q_raw, alpha, beta, gamma)
    return PredictionResult(score=score, q_art=q_art, q_str=q_str, q_raw=q_raw,
                            alpha=alpha, beta=beta, gamma=gamma, stats=stats)
