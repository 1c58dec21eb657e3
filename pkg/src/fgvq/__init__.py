"""Frequency-guided no-reference quality engine for short-form video.

The engine decodes frames, derives artifact- and structure-aware 14x14
weight maps from block-DCT statistics, pools externally supplied dense
feature maps through three branches, and fuses three MLP head scores
through a learned gate into a single quality score.
"""

from .freqprior import WeightMapPair, build_weight_maps, weight_maps_for_frame
from .ingest import (
    FrameSequence,
    SamplingPlan,
    build_sampling_plan,
    load_image_sequence,
    parse_y4m,
)
from .metrics import plcc, srcc
from .pooling import global_pool, temporal_pool, weighted_pool
from .predictor import (
    ModelBundle,
    PredictionResult,
    load_model,
    predict_video,
)
from .tensorio import load_bundle, load_tensor, save_bundle, save_tensor

__version__ = "0.1.0"

__all__ = [
    "FrameSequence",
    "ModelBundle",
    "PredictionResult",
    "SamplingPlan",
    "WeightMapPair",
    "build_sampling_plan",
    "build_weight_maps",
    "global_pool",
    "load_bundle",
    "load_image_sequence",
    "load_model",
    "load_tensor",
    "parse_y4m",
    "plcc",
    "predict_video",
    "save_bundle",
    "save_tensor",
    "srcc",
    "temporal_pool",
    "weight_maps_for_frame",
    "weighted_pool",
    "__version__",
]
