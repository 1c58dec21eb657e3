from __future__ import annotations

import io
import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest
import torch

from fgvq_extractor import encoder, export, tensorio, video
from fgvq_extractor.errors import ExportError, VideoFormatError


def _write_y4m(path: Path, frames_y: np.ndarray, colorspace: str = "mono") -> Path:
    count, height, width = frames_y.shape
    tag = {"mono": "Cmono", "yuv420": "C420jpeg"}[colorspace]
    chunks = [f"YUV4MPEG2 W{width} H{height} F24:1 {tag}\n".encode()]
    chroma = b"\x80" * (((width + 1) // 2) * ((height + 1) // 2))
    for t in range(count):
        chunks.append(b"FRAME\n")
        chunks.append(frames_y[t].tobytes())
        if colorspace == "yuv420":
            chunks.append(chroma * 2)
    path.write_bytes(b"".join(chunks))
    return path


@pytest.fixture(scope="session")
def test_clip(tmp_path_factory) -> Path:
    """A 2-second clip: 48 frames at 24 fps, 192x108, moving gradient."""
    rng = np.random.RandomState(77)
    frames = rng.randint(0, 120, size=(48, 108, 192)).astype(np.uint8)
    ramp = np.linspace(0, 120, 192, dtype=np.uint8)[None, :]
    for t in range(48):
        frames[t] = np.clip(frames[t] + np.roll(ramp, 4 * t, axis=1), 0, 255)
    return _write_y4m(tmp_path_factory.mktemp("clip") / "clip.y4m", frames, "yuv420")


@pytest.fixture(scope="session")
def shared_encoder() -> encoder.VisionEncoder:
    return encoder.VisionEncoder(random_init_seed=7)


@pytest.fixture(scope="session")
def extraction(test_clip, shared_encoder, tmp_path_factory):
    out = tmp_path_factory.mktemp("features") / "clip.fgt"
    features, manifest = encoder.extract_features(test_clip, frames=16,
                                                  out_path=out, encoder=shared_encoder)
    return out, features, manifest


def _run_engine(*argv: str) -> subprocess.CompletedProcess:
    return subprocess.run([sys.executable, "-m", "fgvq.cli", *argv],
                          capture_output=True, text=True)


class TestSampling:
    def test_matches_engine_formula_on_random_pairs(self):
        from fgvq.ingest import sample_frames as engine_sample_frames
        rng = np.random.RandomState(123)
        for _ in range(100):
            n = int(rng.randint(1, 2000))
            t = int(rng.randint(1, 64))
            assert video.sample_frames(n, t) == engine_sample_frames(n, t)

    def test_short_clip_duplicates(self):
        assert video.sample_frames(8, 16) == [0, 0, 1, 1, 2, 2, 3, 3,
                                              4, 4, 5, 5, 6, 6, 7, 7]


class TestVideoDecoding:
    def test_mono_replicates_channels(self, tmp_path):
        frames = np.arange(2 * 4 * 4, dtype=np.uint8).reshape(2, 4, 4)
        clip = _write_y4m(tmp_path / "m.y4m", frames, "mono")
        rgb = video.load_rgb_frames(clip)
        assert rgb[0].shape == (4, 4, 3)
        np.testing.assert_array_equal(rgb[1][:, :, 0], frames[1])
        np.testing.assert_array_equal(rgb[1][:, :, 1], frames[1])

    def test_neutral_chroma_is_grayscale(self, tmp_path):
        frames = np.full((1, 8, 8), 90, dtype=np.uint8)
        clip = _write_y4m(tmp_path / "g.y4m", frames, "yuv420")
        rgb = video.load_rgb_frames(clip)
        np.testing.assert_array_equal(rgb[0][:, :, 0], 90)
        np.testing.assert_array_equal(rgb[0][:, :, 1], 90)
        np.testing.assert_array_equal(rgb[0][:, :, 2], 90)

    def test_bad_signature(self, tmp_path):
        bad = tmp_path / "bad.y4m"
        bad.write_bytes(b"YUVXMPEG2 W4 H4\n")
        with pytest.raises(VideoFormatError):
            video.load_rgb_frames(bad)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            video.load_rgb_frames(tmp_path / "absent_*.png")


class TestExtraction:
    def test_shape_is_16_768_14_14(self, extraction):
        _, features, _ = extraction
        assert features.shape == (16, 768, 14, 14)
        assert features.dtype == np.float32
        assert np.isfinite(features).all()

    def test_file_round_trips(self, extraction):
        out, features, _ = extraction
        np.testing.assert_array_equal(tensorio.load_tensor(out), features)

    def test_repeated_extraction_is_bitwise_identical(self, test_clip, shared_encoder,
                                                      extraction, tmp_path):
        out, _, _ = extraction
        again = tmp_path / "again.fgt"
        encoder.extract_features(test_clip, frames=16, out_path=again,
                                 encoder=shared_encoder)
        assert again.read_bytes() == out.read_bytes()

    def test_manifest_contents(self, extraction, test_clip):
        out, _, manifest = extraction
        sidecar = json.loads(Path(str(out) + ".json").read_text())
        assert sidecar["video_id"] == "clip"
        assert sidecar["frames"] == 16
        assert sidecar["channels"] == 768
        assert sidecar["frame_count"] == 48
        assert sidecar["sampled_indices"] == video.sample_frames(48, 16)
        assert sidecar["preprocessing"]["normalize_mean"] == [0.48145466, 0.4578275,
                                                              0.40821073]
        assert sidecar["encoder"]["feature_source"] == "final_block_patch_tokens"
        assert manifest.sampled_indices == sidecar["sampled_indices"]

    def test_patch_token_raster_order(self, shared_encoder):
        # perturbing exactly one 16x16 patch must change exactly one patch
        # token, at the raster-order position our 14x14 reshape assumes
        row, col = 0, 13
        base = np.full((224, 224, 3), 32, dtype=np.uint8)
        changed = base.copy()
        changed[16 * row:16 * row + 16, 16 * col:16 * col + 16] = 255
        processor = shared_encoder.processor
        embeddings = shared_encoder.model.embeddings
        with torch.inference_mode():
            e0 = embeddings(processor(images=[base], return_tensors="pt")["pixel_values"])[0]
            e1 = embeddings(processor(images=[changed], return_tensors="pt")["pixel_values"])[0]
        token_diff = (e0 - e1).abs().sum(dim=1)
        changed_tokens = torch.nonzero(token_diff > 1e-6).flatten().tolist()
        assert changed_tokens == [1 + 14 * row + col]  # +1 skips the class token


class TestPrimaryInterop:
    def test_primary_scores_extracted_features(self, extraction, test_clip, tmp_path):
        out, _, _ = extraction
        model_path = tmp_path / "model.fgb"
        export.export_model(model_path, seed=42)

        result = _run_engine("score", "--input", str(test_clip),
                             "--features", str(out), "--model", str(model_path),
                             "--no-timing")
        assert result.returncode == 0, result.stderr
        payload = json.loads(result.stdout)
        assert np.isfinite(payload["score"])
        assert abs(payload["alpha"] + payload["beta"] + payload["gamma"] - 1.0) < 1e-6

    def test_primary_loads_exported_model_with_all_entries(self, tmp_path):
        model_path = tmp_path / "model.fgb"
        entries = export.export_model(model_path, seed=42)
        assert len(entries) == 23

        result = _run_engine("inspect-model", "--model", str(model_path))
        assert result.returncode == 0, result.stderr
        names = {e["name"] for e in json.loads(result.stdout)["entries"]}
        assert names == set(entries)


class TestExportModel:
    def test_same_seed_same_bytes(self, tmp_path):
        export.export_model(tmp_path / "a.fgb", seed=42)
        export.export_model(tmp_path / "b.fgb", seed=42)
        assert (tmp_path / "a.fgb").read_bytes() == (tmp_path / "b.fgb").read_bytes()

    def test_checkpoint_export(self, tmp_path):
        entries = export.random_entries(5, channels=8, hidden1=6, hidden2=4)
        entries.pop("meta")
        state = {k: torch.tensor(v) for k, v in entries.items()}
        torch.save(state, tmp_path / "ckpt.pt")
        written = export.export_model(tmp_path / "m.fgb", checkpoint=tmp_path / "ckpt.pt")
        assert written["meta"].tolist() == [8.0, 6.0, 4.0]

    def test_checkpoint_missing_gate_parameter(self, tmp_path):
        entries = export.random_entries(6, channels=8, hidden1=6, hidden2=4)
        entries.pop("meta")
        entries.pop("gate.w1")
        torch.save({k: torch.tensor(v) for k, v in entries.items()},
                   tmp_path / "ckpt.pt")
        with pytest.raises(ExportError, match="gate.w1"):
            export.export_model(tmp_path / "m.fgb", checkpoint=tmp_path / "ckpt.pt")


class TestTensorWriter:
    def test_byte_exact_example(self):
        sink = io.BytesIO()
        tensorio.write_tensor(np.array([1.0, 2.0], dtype=np.float32), sink)
        assert sink.getvalue() == bytes([0x46, 0x47, 0x54, 0x31, 0x01, 0x01, 0x01,
                                         0x02, 0x00, 0x00, 0x00,
                                         0x00, 0x00, 0x80, 0x3F,
                                         0x00, 0x00, 0x00, 0x40])

    def test_bundle_reads_back_in_engine(self, tmp_path):
        from fgvq import tensorio as engine_tensorio
        entries = {"a.w": np.arange(6, dtype=np.float32).reshape(2, 3)}
        tensorio.save_bundle(entries, tmp_path / "x.fgb")
        back = engine_tensorio.load_bundle(tmp_path / "x.fgb")
        np.testing.assert_array_equal(back["a.w"], entries["a.w"])
