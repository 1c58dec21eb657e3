"""Feature and model exporter feeding the fgvq quality engine.

Runs a CLIP ViT-B/16 vision encoder over uniformly sampled frames, captures
the final-block patch-token maps as C x 14 x 14 tensors, and writes them in
the engine's .fgt/.fgb interchange formats together with a JSON manifest.
"""

from .encoder import VisionEncoder, extract_features
from .export import export_model
from .video import load_rgb_frames, sample_frames

__version__ = "0.1.0"

__all__ = [
    "VisionEncoder",
    "export_model",
    "extract_features",
    "load_rgb_frames",
    "sample_frames",
    "__version__",
]
