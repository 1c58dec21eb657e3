"""Export scoring-head and gate parameters as an engine model bundle.

The bundle uses the engine's canonical entry names: six tensors per head
(``head_art.w1`` .. ``head_art.b3``, same for ``head_str``/``head_raw``),
four gate tensors (``gate.w1`` .. ``gate.b2``), and a ``meta`` tensor
holding [channels, hidden1, hidden2].
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import torch

from . import tensorio
from .errors import ExportError

HEAD_NAMES = ("head_art", "head_str", "head_raw")
HEAD_PARAMS = ("w1", "b1", "w2", "b2", "w3", "b3")
GATE_PARAMS = ("w1", "b1", "w2", "b2")
GATE_HIDDEN = 16
GATE_INPUTS = 3

DEFAULT_CHANNELS = 768
DEFAULT_HIDDEN1 = 256
DEFAULT_HIDDEN2 = 64


def parameter_names() -> list[str]:
    names = [f"{head}.{param}" for head in HEAD_NAMES for param in HEAD_PARAMS]
    names += [f"gate.{param}" for param in GATE_PARAMS]
    return names


def random_entries(seed: int, channels: int = DEFAULT_CHANNELS,
                   hidden1: int = DEFAULT_HIDDEN1,
                   hidden2: int = DEFAULT_HIDDEN2) -> dict[str, np.ndarray]:
    """Seeded random initialization of all heads and the gate."""
    rng = np.random.RandomState(seed)
    entries: dict[str, np.ndarray] = {}
    for head in HEAD_NAMES:
        entries[f"{head}.w1"] = rng.standard_normal((hidden1, channels)) / np.sqrt(channels)
        entries[f"{head}.b1"] = np.zeros(hidden1)
        entries[f"{head}.w2"] = rng.standard_normal((hidden2, hidden1)) / np.sqrt(hidden1)
        entries[f"{head}.b2"] = np.zeros(hidden2)
        entries[f"{head}.w3"] = rng.standard_normal((1, hidden2)) / np.sqrt(hidden2)
        entries[f"{head}.b3"] = np.zeros(1)
    entries["gate.w1"] = rng.standard_normal((GATE_HIDDEN, GATE_INPUTS)) / np.sqrt(GATE_INPUTS)
    entries["gate.b1"] = np.zeros(GATE_HIDDEN)
    entries["gate.w2"] = rng.standard_normal((GATE_INPUTS, GATE_HIDDEN)) / np.sqrt(GATE_HIDDEN)
    entries["gate.b2"] = np.zeros(GATE_INPUTS)
    entries["meta"] = np.array([channels, hidden1, hidden2], dtype=np.float64)
    return entries


def entries_from_checkpoint(checkpoint_path: str | Path) -> dict[str, np.ndarray]:
    """Read a torch checkpoint whose keys are the canonical entry names."""
    state = torch.load(checkpoint_path, map_location="cpu", weights_only=False)
    if hasattr(state, "state_dict"):
        state = state.state_dict()
    entries: dict[str, np.ndarray] = {}
    for name in parameter_names():
        if name not in state:
            raise ExportError(f"checkpoint is missing parameter {name!r}")
        value = state[name]
        if isinstance(value, torch.Tensor):
            value = value.detach().cpu().numpy()
        entries[name] = np.asarray(value, dtype=np.float64)
    hidden1, channels = entries["head_art.w1"].shape
    hidden2 = entries["head_art.w2"].shape[0]
    entries["meta"] = np.array([channels, hidden1, hidden2], dtype=np.float64)
    return entries


def export_model(out_path: str | Path, seed: int | None = None,
                 checkpoint: str | Path | None = None,
                 channels: int = DEFAULT_CHANNELS,
                 hidden1: int = DEFAULT_HIDDEN1,
                 hidden2: int = DEFAULT_HIDDEN2) -> dict[str, np.ndarray]:
    """Write a .fgb bundle from a checkpoint or a seeded random init."""
    if (seed is None) == (checkpoint is None):
        raise ValueError("give exactly one of seed or checkpoint")
    if checkpoint is not None:
        entries = entries_from_checkpoint(checkpoint)
    else:
        entries = random_entries(seed, channels, hidden1, hidden2)
    tensorio.save_bundle(entries, out_path)
    return entries
