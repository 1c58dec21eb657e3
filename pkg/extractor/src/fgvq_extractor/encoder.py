"""CLIP ViT-B/16 vision encoder wrapper producing dense 14x14 feature maps.

The dense map is the final transformer block's patch tokens (class token
dropped) in patch raster order, reshaped to C x 14 x 14. Inference is
pinned to one torch thread so repeated extraction of the same clip is
bitwise identical.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import torch
from transformers import CLIPImageProcessor, CLIPVisionConfig, CLIPVisionModel

from . import tensorio, video
from .errors import EncoderEnvironmentError

GRID_SIZE = 14
PATCH_SIZE = 16
BATCH_SIZE = 4


@dataclass
class ExtractionManifest:
    """Sidecar record tying a feature file to its provenance."""

    video_id: str
    frames: int
    channels: int
    grid: int
    frame_count: int
    sampled_indices: list[int]
    preprocessing: dict = field(default_factory=dict)
    encoder: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2) + "\n"


class VisionEncoder:
    """ViT-B/16 vision tower, either pretrained or seeded-random.

    ``weights`` names a local checkpoint directory (or hub id when a cache
    is available); ``random_init_seed`` builds the same architecture with
    seeded random parameters for air-gapped and test use.
    """

    def __init__(self, weights: str | None = None,
                 random_init_seed: int | None = None):
        if (weights is None) == (random_init_seed is None):
            raise ValueError("give exactly one of weights or random_init_seed")
        config = CLIPVisionConfig(patch_size=PATCH_SIZE)
        if weights is not None:
            try:
                self.model = CLIPVisionModel.from_pretrained(weights)
            except Exception as exc:
                raise EncoderEnvironmentError(
                    f"could not load encoder weights from {weights!r}: {exc}") from exc
            self.weights_id = str(weights)
        else:
            torch.manual_seed(random_init_seed)
            self.model = CLIPVisionModel(config)
            self.weights_id = f"random-init(seed={random_init_seed})"
        self.model.eval()
        cfg = self.model.config
        if cfg.image_size // cfg.patch_size != GRID_SIZE:
            raise EncoderEnvironmentError(
                f"encoder grid {cfg.image_size}/{cfg.patch_size} != {GRID_SIZE}")
        self.channels = cfg.hidden_size
        self.processor = CLIPImageProcessor()

    def preprocessing_descriptor(self) -> dict:
        return {
            "resize_shortest_edge": 224,
            "center_crop": [224, 224],
            "resample": "bicubic",
            "normalize_mean": list(self.processor.image_mean),
            "normalize_std": list(self.processor.image_std),
        }

    def encoder_descriptor(self) -> dict:
        cfg = self.model.config
        return {
            "architecture": "clip-vision-transformer",
            "patch_size": cfg.patch_size,
            "hidden_size": cfg.hidden_size,
            "layers": cfg.num_hidden_layers,
            "feature_source": "final_block_patch_tokens",
            "class_token": "dropped",
            "weights": self.weights_id,
        }

    def encode(self, frames: list[np.ndarray]) -> np.ndarray:
        """(T, C, 14, 14) float32 dense maps for a list of RGB frames."""
        torch.set_num_threads(1)  # fixed reduction order: bitwise repeatable
        maps = []
        with torch.inference_mode():
            for start in range(0, len(frames), BATCH_SIZE):
                batch = frames[start:start + BATCH_SIZE]
                pixels = self.processor(images=batch, return_tensors="pt")["pixel_values"]
                hidden = self.model(pixel_values=pixels).last_hidden_state
                patches = hidden[:, 1:, :]  # drop the class token
                grid = patches.reshape(len(batch), GRID_SIZE, GRID_SIZE, self.channels)
                maps.append(grid.permute(0, 3, 1, 2).contiguous().numpy())
        return np.concatenate(maps, axis=0).astype(np.float32)


def extract_features(video_path: str | Path, frames: int = 16,
                     out_path: str | Path | None = None,
                     encoder: VisionEncoder | None = None,
                     weights: str | None = None,
                     random_init_seed: int | None = None
                     ) -> tuple[np.ndarray, ExtractionManifest]:
    """Sample a clip, run the encoder, and write features plus manifest.

    When ``out_path`` is given, the tensor goes there and the manifest to
    the same name with a .json suffix.
    """
    rgb = video.load_rgb_frames(video_path)
    indices = video.sample_frames(len(rgb), frames)
    if encoder is None:
        encoder = VisionEncoder(weights=weights, random_init_seed=random_init_seed)
    features = encoder.encode([rgb[i] for i in indices])

    manifest = ExtractionManifest(
        video_id=Path(str(video_path)).stem,
        frames=frames,
        channels=encoder.channels,
        grid=GRID_SIZE,
        frame_count=len(rgb),
        sampled_indices=indices,
        preprocessing=encoder.preprocessing_descriptor(),
        encoder=encoder.encoder_descriptor(),
    )
    if out_path is not None:
        out_path = Path(out_path)
        tensorio.save_tensor(features, out_path)
        out_path.with_suffix(out_path.suffix + ".json").write_text(
            manifest.to_json(), encoding="utf-8")
    return features, manifest
