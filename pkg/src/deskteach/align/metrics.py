"""Pair classification and its summary metrics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .encoders import Embedding


@dataclass
class PairVerdict:
    label: str   # "same" | "different"
    score: float # cosine similarity


def cosine_np(a: np.ndarray, b: np.ndarray) -> float:
    na, nb = float(np.linalg.norm(a)), float(np.linalg.norm(b))
    if na == 0 or nb == 0:
        raise ValueError("zero-norm vector")
    return float(np.dot(a, b) / (na * nb))


def classify_pair(e_h: Embedding, e_r: Embedding, decision_threshold: float) -> PairVerdict:
    score = cosine_np(e_h.vector, e_r.vector)
    return PairVerdict("same" if score >= decision_threshold else "different", score)


def eval_metrics(predictions, labels) -> tuple[float, float, float, float]:
    """(precision, recall, F1, accuracy) for boolean/same-different sequences.

    F1 is defined as 0 when precision + recall is 0.
    """
    preds = [_as_bool(p) for p in predictions]
    labs = [_as_bool(l) for l in labels]
    if len(preds) != len(labs):
        raise ValueError("predictions and labels must have equal length")
    if not preds:
        raise ValueError("empty input")
    tp = sum(p and l for p, l in zip(preds, labs))
    fp = sum(p and not l for p, l in zip(preds, labs))
    fn = sum(not p and l for p, l in zip(preds, labs))
    tn = sum(not p and not l for p, l in zip(preds, labs))
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    accuracy = (tp + tn) / len(preds)
    return precision, recall, f1, accuracy


def _as_bool(x) -> bool:
    if isinstance(x, str):
        if x == "same":
            return True
        if x == "different":
            return False
        raise ValueError(f"unknown label {x!r}")
    if isinstance(x, (int, np.integer)) and x in (-1, 1):
        return x == 1
    return bool(x)
