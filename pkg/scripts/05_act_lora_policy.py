"""Chunked-action policy with per-skill adapters: the non-forgetting story.

Pretrains a small policy on two skills, then teaches a third with the base
frozen. The base and prior adapters are bit-identical afterwards, so old
skills provably cannot degrade, while a full finetune of the same new
skill visibly rewrites the base.

This is a miniature of `deskteach run-continual` (which uses the full
desk-scale budgets and 50-rollout success-rate tables).

Run:  python3 scripts/05_act_lora_policy.py   (~4 minutes on one CPU core)
"""

import numpy as np

from deskteach.policy import (
    ActConfig,
    adapter_hash,
    base_hash,
    finetune_full,
    finetune_skill,
    predict_chunk,
    pretrain,
)
from deskteach.sim import generate_demo, make_world

world, catalog = make_world(seed=0, skill_catalog_size=8)
old_skills = [s for s in catalog if s.difficulty_tag == "pretrain"][:2]
new_skill = [s for s in catalog if s.difficulty_tag == "fewshot"][0]

config = ActConfig.desk_profile()
demos = {s.skill_id: [generate_demo(world, s, "robot", i, 0.05) for i in range(20)]
         for s in old_skills}
model, log = pretrain(demos, config, seed=0, steps=600)
print(f"pretrained 2 skills, loss {log.initial_mean:.2f} -> {log.final_mean:.3f}")
print("adapters:", sorted(model.adapter_ids))

# A fresh adapter starts as the identity: its B matrix is zero, so the
# adapted forward equals the base forward exactly.
probe = demos[old_skills[0].skill_id][0]
before = predict_chunk(model, old_skills[0].skill_id, probe.frames[0], probe.proprio[0])
print(f"\npredicted chunk shape: {before.shape}, bounded: {np.abs(before).max() <= 1.0}")

# Teach the new skill with the base frozen.
new_demos = [generate_demo(world, new_skill, "robot", i, 0.02) for i in range(5)]
b0 = base_hash(model)
a0 = adapter_hash(model, old_skills[0].skill_id)
taught, _ = finetune_skill(model, new_skill.skill_id, new_demos, seed=1, steps=400)
print("\nafter frozen-base finetune:")
print("  base hash unchanged:        ", base_hash(taught) == b0)
print("  old adapter hash unchanged: ", adapter_hash(taught, old_skills[0].skill_id) == a0)
after = predict_chunk(taught, old_skills[0].skill_id, probe.frames[0], probe.proprio[0])
print("  old-skill chunk bit-identical:", np.array_equal(before, after))

# The full-finetune baseline rewrites the base: old skills are not safe.
clobbered, _ = finetune_full(model, new_skill.skill_id, new_demos, seed=1, steps=400)
print("\nafter full finetune (baseline):")
print("  base hash unchanged:", base_hash(clobbered) == b0)
drift = np.abs(predict_chunk(clobbered, old_skills[0].skill_id, probe.frames[0], probe.proprio[0]) - before).max()
print(f"  old-skill chunk drift: {drift:.4f}")
