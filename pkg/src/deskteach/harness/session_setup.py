"""Building a ready-to-talk agent from a config, with optional checkpoints.

Without checkpoints this trains everything from scratch at the budgets in
the config, so callers wanting a quick agent should pass a small config.
"""

from __future__ import annotations

from pathlib import Path

from ..align.encoders import AlignmentModel
from ..align.train import PairLabel, train_alignment
from ..policy.act import ActLoraPolicy
from ..policy.train import pretrain
from ..sim.catalog import make_world
from ..sim.demos import generate_demo
from .config import ExperimentConfig
from .datagen import select_skills
from .episode import SkillAgent, build_library
from .jobs import JobManager

ACT_CKPT = "act_lora"
ALIGN_CKPT = "alignment"


def save_agent_checkpoints(agent: SkillAgent, out_dir: str | Path) -> Path:
    out = Path(out_dir)
    agent.act_model.save(out / ACT_CKPT)
    agent.library.aligner.save(out / ALIGN_CKPT)
    return out


def prepare_agent(
    config: ExperimentConfig,
    checkpoint_dir: str | Path | None = None,
    act_model: ActLoraPolicy | None = None,
    aligner: AlignmentModel | None = None,
    demos: dict | None = None,
    jobs: JobManager | None = None,
) -> SkillAgent:
    world, catalog = make_world(config.world_seed, config.catalog_size)
    pre, _few = select_skills(config, catalog)

    if checkpoint_dir is not None:
        ck = Path(checkpoint_dir)
        if act_model is None and (ck / ACT_CKPT / "weights.json").exists():
            act_model = ActLoraPolicy.load(ck / ACT_CKPT)
        if aligner is None and (ck / ALIGN_CKPT / "weights.json").exists():
            aligner = AlignmentModel.load(ck / ALIGN_CKPT)

    if act_model is None:
        if demos is None:
            demos = {s.skill_id: [generate_demo(world, s, "robot", i, config.demo_noise)
                                  for i in range(config.demos_per_pretrain)]
                     for s in pre}
        act_model, _ = pretrain(
            {s.skill_id: demos[s.skill_id] for s in pre}, config.act_config(),
            seed=config.seed, steps=config.pretrain_steps, lr=config.pretrain_lr,
            batch_size=config.policy_batch)

    if aligner is None:
        pairs = []
        n = min(6, config.align_demos_per_task)
        human = {s.skill_id: [generate_demo(world, s, "human", i, config.demo_noise)
                              for i in range(n)] for s in pre}
        robot = {s.skill_id: [generate_demo(world, s, "robot", i, config.demo_noise)
                              for i in range(n)] for s in pre}
        ids = [s.skill_id for s in pre]
        for t, sid in enumerate(ids):
            for i in range(n):
                pairs.append(PairLabel(human[sid][i], robot[sid][i], 1))
                other = ids[(t + 1) % len(ids)]
                pairs.append(PairLabel(human[sid][i], robot[other][i], -1))
        aligner, _ = train_alignment(pairs, config.align_config(), seed=config.seed,
                                     steps=config.align_steps)

    library = build_library(config, aligner, act_model, world, pre)
    return SkillAgent(config, world, library, act_model, jobs=jobs)
