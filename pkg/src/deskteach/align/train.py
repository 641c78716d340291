"""Joint training of the two alignment encoders on labeled pairs."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch

from ..seeding import rng_for, torch_seed_for
from ..torchutil import configure_torch_cpu
from ..sim.demos import Demonstration
from .encoders import AlignmentEncoderConfig, AlignmentModel
from .loss import pair_loss_batch

DEFAULT_STEPS = 2000
BATCH_SIZE = 16
LEARNING_RATE = 1e-4


@dataclass
class PairLabel:
    human_demo: Demonstration
    robot_demo: Demonstration
    y: int  # +1 same skill, -1 different

    def __post_init__(self) -> None:
        if self.human_demo.embodiment != "human" or self.robot_demo.embodiment != "robot":
            raise ValueError("PairLabel wants (human, robot) demonstrations in that order")
        same = self.human_demo.skill_id == self.robot_demo.skill_id
        if self.y != (1 if same else -1):
            raise ValueError("label y must be +1 exactly when skill ids match")


@dataclass
class TrainLog:
    losses: list[float] = field(default_factory=list)

    @property
    def initial_mean(self) -> float:
        k = max(1, len(self.losses) // 20)
        return float(np.mean(self.losses[:k]))

    @property
    def final_mean(self) -> float:
        k = max(1, len(self.losses) // 20)
        return float(np.mean(self.losses[-k:]))


class _DemoCache:
    """Unique demonstrations preprocessed once, stacked per batch on demand."""

    def __init__(self, model: AlignmentModel):
        self.model = model
        self._cache: dict[int, tuple[torch.Tensor, torch.Tensor | None]] = {}

    def get(self, demo: Demonstration) -> tuple[torch.Tensor, torch.Tensor | None]:
        key = id(demo)
        if key not in self._cache:
            self._cache[key] = self.model.preprocess(demo)
        return self._cache[key]

    def stack(self, demos: list[Demonstration]) -> tuple[torch.Tensor, torch.Tensor | None]:
        items = [self.get(d) for d in demos]
        frames = torch.stack([f for f, _ in items])
        props = [p for _, p in items]
        proprio = torch.stack(props) if props[0] is not None else None
        return frames, proprio


def train_alignment(
    dataset: list[PairLabel],
    config: AlignmentEncoderConfig,
    seed: int,
    steps: int = DEFAULT_STEPS,
    batch_size: int = BATCH_SIZE,
    lr: float = LEARNING_RATE,
    progress_cb=None,
) -> tuple[AlignmentModel, TrainLog]:
    """Train E_human/E_robot jointly; deterministic given the seed."""
    configure_torch_cpu()
    positives = [p for p in dataset if p.y == 1]
    negatives = [p for p in dataset if p.y == -1]
    if not positives or not negatives:
        raise ValueError("dataset must contain both positive and negative pairs")

    torch.manual_seed(torch_seed_for("align-init", seed))
    model = AlignmentModel(config)
    model.train()
    optim = torch.optim.Adam(model.parameters(), lr=lr)
    rng = rng_for("align-batches", seed)
    cache = _DemoCache(model)
    log = TrainLog()

    half = batch_size // 2
    for step_i in range(steps):
        batch = [positives[i] for i in rng.integers(len(positives), size=half)]
        batch += [negatives[i] for i in rng.integers(len(negatives), size=batch_size - half)]
        h_frames, _ = cache.stack([p.human_demo for p in batch])
        r_frames, r_prop = cache.stack([p.robot_demo for p in batch])
        y = torch.tensor([p.y for p in batch], dtype=torch.float32)

        e_h = model.human(h_frames, None)
        e_r = model.robot(r_frames, r_prop)
        loss = pair_loss_batch(e_h, e_r, y, config.train_margin)
        optim.zero_grad()
        loss.backward()
        optim.step()
        log.losses.append(float(loss.detach()))
        if progress_cb is not None and (step_i + 1) % 50 == 0:
            progress_cb((step_i + 1) / steps)

    model.eval()
    return model, log
