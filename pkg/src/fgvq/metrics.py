"""Rank and linear correlation between predicted and subjective scores.

SRCC is Pearson correlation on average ranks (so ties are handled
correctly); PLCC is the plain product-moment correlation. Both return 0 by
convention when either side is constant, keeping batch evaluation total.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .errors import FormatError, InsufficientDataError, InvalidInputError, UnmatchedIdsError

EPS_VARIANCE = 1e-12


def _as_pair(predictions, ground_truth) -> tuple[np.ndarray, np.ndarray]:
    preds = np.asarray(predictions, dtype=np.float64).ravel()
    gts = np.asarray(ground_truth, dtype=np.float64).ravel()
    if preds.shape != gts.shape:
        raise InvalidInputError(f"length mismatch: {preds.size} predictions vs "
                                f"{gts.size} ground-truth values")
    if preds.size < 2:
        raise InsufficientDataError(f"need at least 2 score pairs, got {preds.size}")
    if not (np.isfinite(preds).all() and np.isfinite(gts).all()):
        raise InvalidInputError("scores must be finite")
    return preds, gts


def average_ranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks; tied values share the mean of their rank span."""
    order = np.argsort(values, kind="mergesort")
    ranks = np.empty(values.size, dtype=np.float64)
    i = 0
    while i < values.size:
        j = i
        while j + 1 < values.size and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    xc = x - x.mean()
    yc = y - y.mean()
    vx = float(np.mean(xc * xc))
    vy = float(np.mean(yc * yc))
    if vx < EPS_VARIANCE or vy < EPS_VARIANCE:
        return 0.0
    r = float(np.mean(xc * yc) / np.sqrt(vx * vy))
    return min(1.0, max(-1.0, r))


def srcc(predictions, ground_truth) -> float:
    """Spearman rank correlation; 0 when either rank vector is constant."""
    preds, gts = _as_pair(predictions, ground_truth)
    return _pearson(average_ranks(preds), average_ranks(gts))


def plcc(predictions, ground_truth) -> float:
    """Pearson linear correlation; 0 when either variance is below 1e-12."""
    preds, gts = _as_pair(predictions, ground_truth)
    return _pearson(preds, gts)


def read_score_csv(path: str | Path) -> dict[str, float]:
    """Read an `id,score` CSV (header required, UTF-8) into an ordered dict."""
    scores: dict[str, float] = {}
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header[:2]] != ["id", "score"]:
            raise FormatError(f"{path}: expected header 'id,score', got {header!r}")
        for line_no, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) < 2:
                raise FormatError(f"{path}:{line_no}: expected 'id,score', got {row!r}")
            key = row[0].strip()
            try:
                value = float(row[1])
            except ValueError:
                raise FormatError(f"{path}:{line_no}: malformed score {row[1]!r}") from None
            if key in scores:
                raise FormatError(f"{path}:{line_no}: duplicate id {key!r}")
            scores[key] = value
    return scores


def join_scores(predictions: dict[str, float],
                ground_truth: dict[str, float]) -> tuple[np.ndarray, np.ndarray]:
    """Align two id->score maps; ids present on only one side are an error."""
    unmatched = sorted(set(predictions) ^ set(ground_truth))
    if unmatched:
        raise UnmatchedIdsError(f"{len(unmatched)} ids present on only one side",
                                ids=unmatched)
    ids = [key for key in predictions]
    preds = np.array([predictions[key] for key in ids])
    gts = np.array([ground_truth[key] for key in ids])
    return preds, gts
