"""The alignment evaluation protocol: k-split pair classification metrics.

Demonstrations are split by trajectory within each task (80/20 by
default); encoders train on pairs drawn from the train trajectories and
are scored on held-out pairs at the decision threshold, reporting
precision/recall/F1/accuracy as mean and standard deviation over splits.
"""

from __future__ import annotations

import json
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..align.encoders import AlignmentModel
from ..align.metrics import classify_pair, eval_metrics
from ..align.train import PairLabel, train_alignment
from ..seeding import rng_for
from ..sim.catalog import World, make_world
from ..sim.demos import Demonstration, generate_demo
from .config import ExperimentConfig

METRIC_NAMES = ("precision", "recall", "f1", "accuracy")


@dataclass
class AlignmentReport:
    run_id: str
    config: dict
    per_split: list[dict] = field(default_factory=list)
    mean: dict = field(default_factory=dict)
    std: dict = field(default_factory=dict)
    wall_clock_s: float = 0.0

    def save(self, out_dir: str | Path) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        path = out / f"alignment_{self.run_id}.json"
        path.write_text(json.dumps(self.__dict__, indent=1, sort_keys=True))
        return path


def build_demo_pool(config: ExperimentConfig, world: World, specs) -> dict[str, dict[str, list[Demonstration]]]:
    pool: dict[str, dict[str, list[Demonstration]]] = {}
    for spec in specs:
        pool[spec.skill_id] = {
            "human": [generate_demo(world, spec, "human", i, config.demo_noise)
                      for i in range(config.align_demos_per_task)],
            "robot": [generate_demo(world, spec, "robot", i, config.demo_noise)
                      for i in range(config.align_demos_per_task)],
        }
    return pool


def _make_pairs(pool, task_ids, idx_by_task, n_pos_per_task, rng) -> list[PairLabel]:
    pairs: list[PairLabel] = []
    for task in task_ids:
        h_idx = idx_by_task[task]["human"]
        r_idx = idx_by_task[task]["robot"]
        for _ in range(n_pos_per_task):
            h = pool[task]["human"][h_idx[int(rng.integers(len(h_idx)))]]
            r = pool[task]["robot"][r_idx[int(rng.integers(len(r_idx)))]]
            pairs.append(PairLabel(h, r, 1))
        for _ in range(n_pos_per_task):
            other = task_ids[int(rng.integers(len(task_ids)))]
            while other == task:
                other = task_ids[int(rng.integers(len(task_ids)))]
            h = pool[task]["human"][h_idx[int(rng.integers(len(h_idx)))]]
            ro_idx = idx_by_task[other]["robot"]
            r = pool[other]["robot"][ro_idx[int(rng.integers(len(ro_idx)))]]
            pairs.append(PairLabel(h, r, -1))
    return pairs


def run_alignment(
    config: ExperimentConfig,
    out_dir: str | Path | None = None,
    pool=None,
    progress_cb=None,
) -> AlignmentReport:
    if config.align_tasks < 2:
        raise ValueError("alignment evaluation needs at least 2 tasks")
    t0 = time.time()
    world, catalog = make_world(config.align_world_seed, config.align_tasks)
    if pool is None:
        pool = build_demo_pool(config, world, catalog)
    task_ids = sorted(pool)
    n = config.align_demos_per_task
    n_train = max(1, int(round(config.align_train_fraction * n)))
    align_cfg = config.align_config()

    report = AlignmentReport(run_id=uuid.uuid4().hex[:10], config=json.loads(config.to_json()))
    for split in range(config.align_splits):
        rng = rng_for("align-split", config.seed, split)
        idx_train: dict[str, dict[str, list[int]]] = {}
        idx_eval: dict[str, dict[str, list[int]]] = {}
        for task in task_ids:
            idx_train[task] = {}
            idx_eval[task] = {}
            for emb in ("human", "robot"):
                perm = rng.permutation(n).tolist()
                idx_train[task][emb] = perm[:n_train]
                idx_eval[task][emb] = perm[n_train:]

        train_pairs = _make_pairs(pool, task_ids, idx_train,
                                  config.align_pos_pairs_per_task, rng)
        eval_pairs = _make_pairs(pool, task_ids, idx_eval,
                                 max(4, config.align_pos_pairs_per_task // 2), rng)

        model, _ = train_alignment(train_pairs, align_cfg, seed=config.seed * 1000 + split,
                                   steps=config.align_steps)
        preds, labels = [], []
        cache: dict[int, np.ndarray] = {}

        def embed(demo):
            key = id(demo)
            if key not in cache:
                cache[key] = model.encode(demo)
            return cache[key]

        for pair in eval_pairs:
            verdict = classify_pair(embed(pair.human_demo), embed(pair.robot_demo),
                                    align_cfg.decision_threshold)
            preds.append(verdict.label == "same")
            labels.append(pair.y == 1)
        p, r, f1, acc = eval_metrics(preds, labels)
        report.per_split.append(dict(zip(METRIC_NAMES, (p, r, f1, acc))))
        if progress_cb is not None:
            progress_cb((split + 1) / config.align_splits, f"split {split + 1}")

    for name in METRIC_NAMES:
        vals = [s[name] for s in report.per_split]
        report.mean[name] = float(np.mean(vals))
        report.std[name] = float(np.std(vals))
    report.wall_clock_s = time.time() - t0
    if out_dir is not None:
        report.save(out_dir)
    return report
