"""Cosine embedding loss for cross-embodiment pairs, plus demo downsampling.

For a (human, robot) embedding pair the loss is ``1 - cos`` when the pair
shows the same skill and ``max(0, cos - margin)`` when it does not. It
depends on the embeddings only through their directions.
"""

from __future__ import annotations

import numpy as np
import torch

from ..sim.demos import Demonstration


def downsample(demo: Demonstration, target_T: int) -> Demonstration:
    """Resample a demonstration to exactly target_T frames.

    Frame indices are the rounded linspace over [0, T-1]; the first and
    last frames are always retained, and short demos repeat frames.
    """
    if demo.T < 2:
        raise ValueError("demonstration must have T >= 2")
    if target_T < 2:
        raise ValueError("target_T must be >= 2")
    idx = downsample_indices(demo.T, target_T)
    return Demonstration(
        embodiment=demo.embodiment,
        frames=demo.frames[idx],
        proprio=None if demo.proprio is None else demo.proprio[idx],
        actions=None if demo.actions is None else demo.actions[idx],
        skill_id=demo.skill_id,
    )


def downsample_indices(T: int, target_T: int) -> np.ndarray:
    return np.rint(np.linspace(0, T - 1, target_T)).astype(np.int64)


def _check_nonzero(v: torch.Tensor, name: str) -> None:
    norms = torch.linalg.vector_norm(v, dim=-1)
    if torch.any(norms == 0):
        raise ValueError(f"{name} has zero norm; cosine undefined")


def cosine(e_h: torch.Tensor, e_r: torch.Tensor) -> torch.Tensor:
    _check_nonzero(e_h, "e_h")
    _check_nonzero(e_r, "e_r")
    num = (e_h * e_r).sum(-1)
    den = torch.linalg.vector_norm(e_h, dim=-1) * torch.linalg.vector_norm(e_r, dim=-1)
    return num / den


def pair_loss(e_h: torch.Tensor, e_r: torch.Tensor, y: int, margin: float) -> torch.Tensor:
    """Loss for one pair; y is +1 (same skill) or -1 (different)."""
    if y not in (1, -1):
        raise ValueError("y must be +1 or -1")
    cos = cosine(e_h, e_r)
    if y == 1:
        return 1.0 - cos
    return torch.clamp(cos - margin, min=0.0)


def pair_loss_batch(e_h: torch.Tensor, e_r: torch.Tensor, y: torch.Tensor, margin: float) -> torch.Tensor:
    """Mean loss over a batch; y is a (B,) tensor of +1/-1."""
    cos = cosine(e_h, e_r)
    pos = 1.0 - cos
    neg = torch.clamp(cos - margin, min=0.0)
    return torch.where(y > 0, pos, neg).mean()
