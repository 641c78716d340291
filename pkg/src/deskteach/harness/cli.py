"""Command-line entry points.

Subcommands: generate-data, validate-data, run-continual, run-alignment,
episode, serve. Every run is reproducible from (config JSON, seed).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import ExperimentConfig


def _load_config(args) -> ExperimentConfig:
    if args.config:
        config = ExperimentConfig.from_file(args.config)
    else:
        config = ExperimentConfig()
    if args.seed is not None:
        config.seed = args.seed
    if getattr(args, "out", None):
        config.output_dir = args.out
    return config


def cmd_generate_data(args) -> int:
    from .datagen import generate_dataset, index_hash

    config = _load_config(args)
    out = generate_dataset(config, args.dataset, force=args.force)
    print(f"dataset written to {out} (index sha256 {index_hash(out)[:16]})")
    return 0


def cmd_validate_data(args) -> int:
    from .datagen import validate_dataset

    problems = validate_dataset(args.dataset)
    if not problems:
        print("dataset valid")
        return 0
    for p in problems:
        print(f"INVALID: {p}")
    return 1


def cmd_run_continual(args) -> int:
    from ..sim.catalog import make_world
    from .continual import run_continual
    from .datagen import DatasetError, load_dataset, select_skills

    config = _load_config(args)
    try:
        index, demos = load_dataset(args.dataset)
    except DatasetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    world, catalog = make_world(index["world_seed"], index["catalog_size"])
    pre, few = select_skills(config, catalog)
    record, _ = run_continual(
        config, world, pre, few, demos, out_dir=config.output_dir,
        progress_cb=lambda frac, msg: print(f"[{frac:5.0%}] {msg}"))
    print(json.dumps(record.summary, indent=1, sort_keys=True))
    print(f"run record: run_{record.run_id}.json in {config.output_dir}")
    return 0


def cmd_run_alignment(args) -> int:
    from .alignment_run import run_alignment

    config = _load_config(args)
    report = run_alignment(
        config, out_dir=config.output_dir,
        progress_cb=lambda frac, msg: print(f"[{frac:5.0%}] {msg}"))
    print("metric     mean    std")
    for name in ("precision", "recall", "f1", "accuracy"):
        print(f"{name:9s} {report.mean[name]:.4f} {report.std[name]:.4f}")
    return 0


def cmd_episode(args) -> int:
    from .episode import (
        InteractiveUser,
        make_scripted_user,
        run_episode,
        write_episode_log,
    )
    from .session_setup import prepare_agent

    config = _load_config(args)
    agent = prepare_agent(config, checkpoint_dir=args.checkpoints)
    instruction = args.instruction or " then ".join(
        s.description for s in agent.world.catalog[: config.n_pretrain_skills])
    if args.user == "interactive":
        user = InteractiveUser(agent, instruction=None if args.instruction is None else instruction)
    else:
        user = make_scripted_user(args.user, instruction, agent)
    log = run_episode(agent, user)
    out = Path(config.output_dir) / "episode.jsonl"
    write_episode_log(log, out)
    print(f"episode {log.status}; {len(log.outcomes)} tasks, "
          f"{log.finetunes} finetunes; log at {out}")
    return 0 if log.status == "done" else 1


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    config = _load_config(args)
    app = create_app(config, checkpoint_dir=args.checkpoints)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="deskteach",
                                     description="desk-scale interactive continual skill learning")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, dataset=False):
        p.add_argument("--config", help="experiment config JSON")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", help="output directory")
        if dataset:
            p.add_argument("--dataset", required=True, help="dataset directory")

    p = sub.add_parser("generate-data", help="write demonstrations + index manifest")
    common(p, dataset=True)
    p.add_argument("--force", action="store_true", help="overwrite non-empty output")
    p.set_defaults(fn=cmd_generate_data)

    p = sub.add_parser("validate-data", help="check every demo against the format contract")
    p.add_argument("--dataset", required=True)
    p.set_defaults(fn=cmd_validate_data)

    p = sub.add_parser("run-continual", help="three-policy continual-learning table")
    common(p, dataset=True)
    p.set_defaults(fn=cmd_run_continual)

    p = sub.add_parser("run-alignment", help="k-split alignment metrics table")
    common(p)
    p.set_defaults(fn=cmd_run_alignment)

    p = sub.add_parser("episode", help="run one dialogue episode")
    common(p)
    p.add_argument("--user", default="always-agree",
                   choices=["always-agree", "always-reject", "teach-one-skill", "interactive"])
    p.add_argument("--instruction", default=None)
    p.add_argument("--checkpoints", default=None,
                   help="directory with trained checkpoints (trains small ones if absent)")
    p.set_defaults(fn=cmd_episode)

    p = sub.add_parser("serve", help="HTTP service for dialogue sessions")
    common(p)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8321)
    p.add_argument("--checkpoints", default=None)
    p.set_defaults(fn=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
