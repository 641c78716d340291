"""Training the cross-embodiment alignment encoders.

Two sequence encoders map human enactments and robot trajectories into one
latent space with a cosine embedding loss: same-skill pairs are pulled to
cosine 1, different-skill pairs are pushed below a margin. A small run
here; the full five-split protocol is `deskteach run-alignment`.

Run:  python3 scripts/03_alignment.py       (~2 minutes on one CPU core)
"""

import numpy as np
import torch

from deskteach.align import (
    AlignmentEncoderConfig,
    PairLabel,
    classify_pair,
    eval_metrics,
    pair_loss,
    train_alignment,
)
from deskteach.sim import generate_demo, make_world

# The loss itself, on toy vectors: positives pay 1 - cos, negatives pay the
# excess of cos over the training margin.
e = torch.tensor([1.0, 0.0])
print("loss(same, identical)      =", float(pair_loss(e, e, +1, 0.5)))
print("loss(diff, cos 0.9, m 0.5) =", float(pair_loss(e, torch.tensor([0.9, np.sqrt(0.19)]), -1, 0.5)))

# Build a small paired dataset: 4 skills x 6 demos per embodiment.
world, catalog = make_world(seed=0, skill_catalog_size=8)
skills = catalog[:4]
human = {s.skill_id: [generate_demo(world, s, "human", i, 0.05) for i in range(6)] for s in skills}
robot = {s.skill_id: [generate_demo(world, s, "robot", i, 0.05) for i in range(6)] for s in skills}

pairs = []
ids = [s.skill_id for s in skills]
for t, sid in enumerate(ids):
    for i in range(6):
        pairs.append(PairLabel(human[sid][i], robot[sid][i], +1))
        pairs.append(PairLabel(human[sid][i], robot[ids[(t + 1) % len(ids)]][i], -1))

config = AlignmentEncoderConfig.desk_profile()
model, log = train_alignment(pairs, config, seed=0, steps=400)
print(f"\ntrained 400 steps: loss {log.initial_mean:.3f} -> {log.final_mean:.3f}")

# Score held-out pairs at the decision threshold.
preds, labels = [], []
for t, sid in enumerate(ids):
    h = model.encode(generate_demo(world, world.spec(sid), "human", 100 + t, 0.05))
    r_same = model.encode(generate_demo(world, world.spec(sid), "robot", 200 + t, 0.05))
    other = ids[(t + 2) % len(ids)]
    r_diff = model.encode(generate_demo(world, world.spec(other), "robot", 300 + t, 0.05))
    for emb, label in ((r_same, True), (r_diff, False)):
        verdict = classify_pair(h, emb, config.decision_threshold)
        preds.append(verdict.label == "same")
        labels.append(label)
        print(f"  {sid:14s} vs {'same ' if label else 'other'}: cos={verdict.score:+.3f} -> {verdict.label}")

p, r, f1, acc = eval_metrics(preds, labels)
print(f"\nheld-out: precision={p:.2f} recall={r:.2f} F1={f1:.2f} accuracy={acc:.2f}")
