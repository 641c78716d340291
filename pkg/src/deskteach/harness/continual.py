"""The continual-learning evaluation protocol.

For each of the three policies (adapter finetuning, full finetuning, the
language-conditioned mixture baseline): pretrain on the pretrain skills,
evaluate them, finetune on the fewshot skills, then re-evaluate both skill
sets. Adapter finetuning runs continually on one parameter store; the
full-finetune baseline finetunes each fewshot skill from the pretrained
checkpoint (measuring how far the pretrain skills collapse afterwards);
the mixture baseline adds one adapter per fewshot skill on a frozen base.
"""

from __future__ import annotations

import json
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..library.text_embed import TrigramTextEmbedder
from ..policy.act import ActLoraPolicy
from ..policy.gmm import GmmRolloutPolicy, finetune_gmm_skill, train_gmm_baseline
from ..policy.train import (
    adapter_hash,
    base_hash,
    finetune_full,
    finetune_skill,
    pretrain,
    success_rate,
)
from ..sim.catalog import SkillSpec, World
from ..sim.demos import Demonstration, rollout
from .config import ExperimentConfig

MODELS = ("act_lora", "act_full_ft", "gmm_baseline")


@dataclass
class RunRecord:
    run_id: str
    config: dict
    tables: dict = field(default_factory=dict)   # model -> {"pre": {skill: SR}, "post": {...}}
    summary: dict = field(default_factory=dict)
    loss_logs: dict = field(default_factory=dict)
    checkpoints: dict = field(default_factory=dict)
    wall_clock_s: float = 0.0

    def save(self, out_dir: str | Path) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        path = out / f"run_{self.run_id}.json"
        path.write_text(json.dumps({
            "run_id": self.run_id,
            "config": self.config,
            "tables": self.tables,
            "summary": self.summary,
            "loss_logs": self.loss_logs,
            "checkpoints": self.checkpoints,
            "wall_clock_s": self.wall_clock_s,
        }, indent=1, sort_keys=True))
        return path


def _gmm_sr(model, text_vec, world, spec, n, max_steps, seed_base, adapter_id=None) -> float:
    wins = 0
    for i in range(n):
        policy = GmmRolloutPolicy(model, text_vec, adapter_id)
        wins += rollout(world, policy, spec, seed_base + i, max_steps).success
    return wins / n


def run_continual(
    config: ExperimentConfig,
    world: World,
    pre_specs: list[SkillSpec],
    few_specs: list[SkillSpec],
    demos: dict[str, list[Demonstration]],
    out_dir: str | Path | None = None,
    progress_cb=None,
) -> tuple[RunRecord, dict]:
    t_start = time.time()
    record = RunRecord(run_id=uuid.uuid4().hex[:10], config=json.loads(config.to_json()))
    n_roll = config.rollouts_per_skill
    max_steps = config.max_rollout_steps
    seed_base = config.eval_seed_base
    act_cfg = config.act_config()

    def note(msg, frac):
        if progress_cb is not None:
            progress_cb(frac, msg)

    # ---- shared pretraining (adapter policy == full-ft policy at this point)
    note("pretraining chunked policy", 0.0)
    pre_demos = {s.skill_id: demos[s.skill_id] for s in pre_specs}
    act_model, act_log = pretrain(
        pre_demos, act_cfg, seed=config.seed, steps=config.pretrain_steps,
        lr=config.pretrain_lr, batch_size=config.policy_batch)
    record.loss_logs["act_pretrain"] = {"initial": act_log.initial_mean, "final": act_log.final_mean}

    note("evaluating pretrain skills", 0.15)
    pre_sr = {s.skill_id: success_rate(act_model, s.skill_id, world, s, n_roll, max_steps, seed_base)
              for s in pre_specs}
    record.tables["act_lora"] = {"pre": dict(pre_sr)}
    record.tables["act_full_ft"] = {"pre": dict(pre_sr)}

    # ---- adapter finetuning, sequential on one store ----------------------
    note("adapter finetuning", 0.3)
    lora_model = act_model
    hashes_before = {"base": base_hash(lora_model)}
    hashes_before.update({s.skill_id: adapter_hash(lora_model, s.skill_id) for s in pre_specs})
    for spec in few_specs:
        lora_model, ft_log = finetune_skill(
            lora_model, spec.skill_id, demos[spec.skill_id], seed=config.seed,
            steps=config.finetune_steps, lr=config.finetune_lr, batch_size=config.policy_batch)
        record.loss_logs[f"act_lora_ft_{spec.skill_id}"] = {
            "initial": ft_log.initial_mean, "final": ft_log.final_mean}
    frozen_ok = base_hash(lora_model) == hashes_before["base"] and all(
        adapter_hash(lora_model, s.skill_id) == hashes_before[s.skill_id] for s in pre_specs)

    note("evaluating adapter policy", 0.45)
    record.tables["act_lora"]["post"] = {
        s.skill_id: success_rate(lora_model, s.skill_id, world, s, n_roll, max_steps, seed_base)
        for s in pre_specs}
    record.tables["act_lora"]["fewshot"] = {
        s.skill_id: success_rate(lora_model, s.skill_id, world, s, n_roll, max_steps, seed_base)
        for s in few_specs}
    record.summary["act_lora_frozen_base"] = frozen_ok

    # ---- full finetuning baseline: fresh copy per fewshot skill -----------
    note("full-finetune baseline", 0.6)
    full_post_pre: dict[str, list[float]] = {s.skill_id: [] for s in pre_specs}
    full_few: dict[str, float] = {}
    for spec in few_specs:
        ft_model, _ = finetune_full(
            act_model, spec.skill_id, demos[spec.skill_id], seed=config.seed,
            steps=config.finetune_steps, lr=config.finetune_lr, batch_size=config.policy_batch)
        full_few[spec.skill_id] = success_rate(ft_model, spec.skill_id, world, spec,
                                               n_roll, max_steps, seed_base)
        for s in pre_specs:
            full_post_pre[s.skill_id].append(
                success_rate(ft_model, s.skill_id, world, s, n_roll, max_steps, seed_base))
    record.tables["act_full_ft"]["post"] = {k: float(np.mean(v)) for k, v in full_post_pre.items()}
    record.tables["act_full_ft"]["fewshot"] = full_few

    # ---- mixture baseline --------------------------------------------------
    note("mixture baseline", 0.75)
    embedder = TrigramTextEmbedder()
    texts = {s.skill_id: embedder.embed(s.description) for s in pre_specs + few_specs}
    gmm_data = {s.skill_id: (texts[s.skill_id], demos[s.skill_id]) for s in pre_specs}
    gmm_model, gmm_log = train_gmm_baseline(
        gmm_data, config.gmm_config(), seed=config.seed, steps=config.gmm_pretrain_steps)
    record.loss_logs["gmm_pretrain"] = {"initial": gmm_log.initial_mean, "final": gmm_log.final_mean}
    gmm_pre = {s.skill_id: _gmm_sr(gmm_model, texts[s.skill_id], world, s, n_roll, max_steps, seed_base)
               for s in pre_specs}
    for spec in few_specs:
        gmm_model, _ = finetune_gmm_skill(
            gmm_model, spec.skill_id, texts[spec.skill_id], demos[spec.skill_id],
            seed=config.seed, steps=config.gmm_finetune_steps)
    gmm_post = {s.skill_id: _gmm_sr(gmm_model, texts[s.skill_id], world, s, n_roll, max_steps, seed_base)
                for s in pre_specs}
    gmm_few = {s.skill_id: _gmm_sr(gmm_model, texts[s.skill_id], world, s, n_roll, max_steps,
                                   seed_base, adapter_id=s.skill_id)
               for s in few_specs}
    record.tables["gmm_baseline"] = {"pre": gmm_pre, "post": gmm_post, "fewshot": gmm_few}

    # ---- summary -----------------------------------------------------------
    def mean(d: dict) -> float:
        return float(np.mean(list(d.values()))) if d else 0.0

    for model in MODELS:
        t = record.tables[model]
        record.summary[model] = {
            "pretrain_sr_pre": mean(t["pre"]),
            "pretrain_sr_post": mean(t["post"]),
            "fewshot_sr": mean(t["fewshot"]),
        }
    record.wall_clock_s = time.time() - t_start

    if out_dir is not None:
        out = Path(out_dir)
        ck = out / f"ckpt_{record.run_id}"
        lora_model.save(ck / "act_lora")
        record.checkpoints["act_lora"] = str(ck / "act_lora")
        record.save(out)
    note("done", 1.0)
    artifacts = {"act_lora": lora_model, "act_pretrained": act_model, "gmm": gmm_model}
    return record, artifacts
