"""Dataset generation, validation, and loading on top of the demo format.

A dataset directory holds one demo directory per (skill, embodiment, seed)
plus ``index.json`` describing every entry; the index is canonical JSON, so
regenerating with the same config yields an identical manifest hash.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

from ..sim.catalog import SkillSpec, World, make_world
from ..sim.demos import Demonstration, generate_demo
from ..sim.storage import read_demo, validate_demo_dir, write_demo
from .config import ExperimentConfig

DATASET_FORMAT_VERSION = 1


class DatasetError(ValueError):
    pass


def select_skills(config: ExperimentConfig, catalog: list[SkillSpec]) -> tuple[list[SkillSpec], list[SkillSpec]]:
    pre = [s for s in catalog if s.difficulty_tag == "pretrain"][: config.n_pretrain_skills]
    few = [s for s in catalog if s.difficulty_tag == "fewshot"][: config.n_fewshot_skills]
    if len(pre) < config.n_pretrain_skills or len(few) < config.n_fewshot_skills:
        raise DatasetError("catalog does not contain enough skills of each difficulty")
    return pre, few


def plan_entries(config: ExperimentConfig, pre: list[SkillSpec], few: list[SkillSpec]) -> list[dict]:
    entries = []
    for spec in pre:
        for i in range(config.demos_per_pretrain):
            entries.append({"skill_id": spec.skill_id, "difficulty": "pretrain",
                            "embodiment": "robot", "seed": i, "noise": config.demo_noise})
    for spec in few:
        for i in range(config.demos_per_fewshot):
            entries.append({"skill_id": spec.skill_id, "difficulty": "fewshot",
                            "embodiment": "robot", "seed": i, "noise": config.fewshot_demo_noise})
    for e in entries:
        e["path"] = f"demos/{e['skill_id']}/{e['embodiment']}_{e['seed']:05d}"
    return entries


def generate_dataset(config: ExperimentConfig, out_dir: str | Path, force: bool = False) -> Path:
    out = Path(out_dir)
    if out.exists() and any(out.iterdir()) and not force:
        raise DatasetError(f"{out}: output directory not empty (use force to overwrite)")
    world, catalog = make_world(config.world_seed, config.catalog_size)
    pre, few = select_skills(config, catalog)
    entries = plan_entries(config, pre, few)
    for e in entries:
        spec = world.spec(e["skill_id"])
        demo = generate_demo(world, spec, e["embodiment"], e["seed"], e["noise"])
        write_demo(demo, out / e["path"])
    index = {
        "format_version": DATASET_FORMAT_VERSION,
        "world_seed": config.world_seed,
        "catalog_size": config.catalog_size,
        "entries": entries,
        "config": json.loads(config.to_json()),
    }
    (out / "index.json").write_text(json.dumps(index, indent=1, sort_keys=True))
    return out


def index_hash(dataset_dir: str | Path) -> str:
    text = (Path(dataset_dir) / "index.json").read_text()
    return hashlib.sha256(text.encode()).hexdigest()


def validate_dataset(dataset_dir: str | Path) -> list[str]:
    """Every contract violation across the dataset (empty list = valid)."""
    root = Path(dataset_dir)
    problems: list[str] = []
    index_file = root / "index.json"
    if not index_file.exists():
        return [f"{index_file}: missing dataset index"]
    try:
        index = json.loads(index_file.read_text())
    except json.JSONDecodeError as exc:
        return [f"{index_file}: corrupted index ({exc})"]
    if index.get("format_version") != DATASET_FORMAT_VERSION:
        return [f"{index_file}: unsupported format_version {index.get('format_version')!r}"]
    for e in index["entries"]:
        problems.extend(validate_demo_dir(root / e["path"]))
    return problems


def load_dataset(dataset_dir: str | Path) -> tuple[dict, dict[str, list[Demonstration]]]:
    """(index, demos grouped by skill_id, robot embodiment only)."""
    root = Path(dataset_dir)
    index_file = root / "index.json"
    if not index_file.exists():
        raise DatasetError(f"{index_file}: missing dataset index; run generate-data first")
    index = json.loads(index_file.read_text())
    demos: dict[str, list[Demonstration]] = {}
    for e in index["entries"]:
        demo = read_demo(root / e["path"])
        demos.setdefault(e["skill_id"], []).append(demo)
    return index, demos
