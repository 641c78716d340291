"""Experiment configuration: one JSON-serializable object drives data
generation, training, and all three evaluation protocols."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from ..align.encoders import AlignmentEncoderConfig
from ..policy.act import ActConfig
from ..policy.gmm import GmmPolicyConfig


@dataclass
class ExperimentConfig:
    seed: int = 0
    world_seed: int = 0
    catalog_size: int = 8
    n_pretrain_skills: int = 4
    n_fewshot_skills: int = 2
    demos_per_pretrain: int = 200
    demos_per_fewshot: int = 5
    demo_noise: float = 0.05
    fewshot_demo_noise: float = 0.02
    rollouts_per_skill: int = 50
    max_rollout_steps: int = 80
    eval_seed_base: int = 10_000

    pretrain_steps: int = 5000
    finetune_steps: int = 2000
    pretrain_lr: float = 1e-4
    finetune_lr: float = 1e-4
    policy_batch: int = 8

    gmm_pretrain_steps: int = 5000
    gmm_finetune_steps: int = 2000

    align_tasks: int = 20
    align_demos_per_task: int = 12
    align_steps: int = 2000
    align_splits: int = 5
    align_train_fraction: float = 0.8
    align_pos_pairs_per_task: int = 24
    align_world_seed: int = 1

    semantic_threshold: float = 0.95
    skill_threshold: float = 0.7

    demos_required: int = 5
    episode_budget: int = 200

    act: dict = field(default_factory=dict)    # ActConfig overrides
    gmm: dict = field(default_factory=dict)    # GmmPolicyConfig overrides
    align: dict = field(default_factory=dict)  # AlignmentEncoderConfig overrides

    output_dir: str = "runs"

    def __post_init__(self) -> None:
        if self.rollouts_per_skill < 1:
            raise ValueError("rollouts_per_skill must be >= 1")
        if self.n_pretrain_skills + self.n_fewshot_skills > self.catalog_size:
            raise ValueError("catalog too small for requested skill counts")

    def act_config(self) -> ActConfig:
        return ActConfig.desk_profile(**self.act)

    def gmm_config(self) -> GmmPolicyConfig:
        return GmmPolicyConfig(**self.gmm)

    def align_config(self) -> AlignmentEncoderConfig:
        return AlignmentEncoderConfig.desk_profile(**self.align)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=1, sort_keys=True)

    @classmethod
    def from_file(cls, path: str | Path) -> "ExperimentConfig":
        data = json.loads(Path(path).read_text())
        return cls(**data)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json())
