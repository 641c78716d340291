"""Skill catalog and deterministic episode initialization.

A catalog is a seed-keyed family of tabletop skills: reach a colored shape,
push a block in a compass direction, or carry a shape to a corner. Each
skill carries a scripted-expert parameterization (waypoint template plus a
seed-drawn lateral approach offset, so different catalog seeds produce
visibly different expert arcs) and a success predicate over the final
world state. Pretrain-tagged skills randomize the object layout per
episode; fewshot-tagged skills use one fixed layout drawn at catalog
build time.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ..seeding import rng_for
from .world import (
    COLORS,
    CORNERS,
    DIRECTIONS,
    SHAPES,
    ObjectState,
    WorldState,
    place_success,
    push_success,
    reach_success,
)

N_SCENE_OBJECTS = 3
OBJECT_MIN_SEPARATION = 0.16
OBJECT_BOX = (0.15, 0.85)
START_BOX = ((0.35, 0.65), (0.08, 0.20))
PUSH_CLEARANCE = 0.30  # room the block needs along the push direction

DIRECTION_PHRASES = {
    "left": "to the left",
    "right": "to the right",
    "up": "upward",
    "down": "downward",
}


@dataclass
class SkillSpec:
    skill_id: str
    description: str
    template: str                     # "reach" | "push" | "pick-place"
    color: str
    shape: str
    direction: str | None = None      # push only
    corner: str | None = None         # pick-place only
    approach_offset: np.ndarray = field(default_factory=lambda: np.zeros(2))
    difficulty_tag: str = "pretrain"  # "pretrain" | "fewshot"
    fixed_layout: dict[str, Any] | None = None
    default_noise: float = 0.05

    def waypoint_schema(self) -> tuple:
        """Hashable summary of the expert parameterization (for catalog diffs)."""
        return (
            self.template,
            self.color,
            self.shape,
            self.direction,
            self.corner,
            tuple(np.round(self.approach_offset, 6)),
        )

    def success(self, state: WorldState) -> bool:
        if self.template == "reach":
            return reach_success(state, "target")
        if self.template == "push":
            assert self.direction is not None
            return push_success(state, "target", self.direction)
        if self.template == "pick-place":
            assert self.corner is not None
            return place_success(state, "target", self.corner)
        raise ValueError(f"unknown template {self.template!r}")


def _fewshot_count(n: int) -> int:
    if n < 4:
        return 1
    if n <= 12:
        return 2
    return max(2, n // 5)


def _reach_spec(color: str, shape: str, rng: np.random.Generator) -> SkillSpec:
    return SkillSpec(
        skill_id=f"reach-{color}",
        description=f"reach the {color} {shape}",
        template="reach",
        color=color,
        shape=shape,
        approach_offset=rng.normal(0.0, 0.06, 2),
    )


def _push_spec(direction: str, color: str, rng: np.random.Generator) -> SkillSpec:
    return SkillSpec(
        skill_id=f"push-{direction}",
        description=f"push the {color} block {DIRECTION_PHRASES[direction]}",
        template="push",
        color=color,
        shape="square",
        direction=direction,
        approach_offset=rng.normal(0.0, 0.04, 2),
    )


def _pick_spec(shape: str, corner: str, color: str, rng: np.random.Generator) -> SkillSpec:
    return SkillSpec(
        skill_id=f"pick-place-{shape}-{corner}",
        description=f"move the {color} {shape} to the {corner} corner",
        template="pick-place",
        color=color,
        shape=shape,
        corner=corner,
        approach_offset=rng.normal(0.0, 0.05, 2),
    )


class World:
    """A deterministic generator of episodes for one skill catalog."""

    def __init__(self, seed: int, catalog: list[SkillSpec]):
        self.seed = seed
        self.catalog = catalog
        self._by_id = {s.skill_id: s for s in catalog}

    def spec(self, skill_id: str) -> SkillSpec:
        return self._by_id[skill_id]

    def episode_rng(self, spec: SkillSpec, episode_seed: int) -> np.random.Generator:
        return rng_for("episode", self.seed, spec.skill_id, episode_seed)

    def init_state(self, spec: SkillSpec, episode_seed: int) -> WorldState:
        if spec.fixed_layout is not None:
            return _state_from_layout(spec.fixed_layout)
        rng = self.episode_rng(spec, episode_seed)
        return _sample_scene(spec, rng)

    def success(self, spec: SkillSpec, state: WorldState) -> bool:
        return spec.success(state)


def make_world(seed: int, skill_catalog_size: int = 8) -> tuple[World, list[SkillSpec]]:
    """Build a deterministic catalog. Same seed, same catalog, same episodes."""
    if skill_catalog_size < 2:
        raise ValueError("skill_catalog_size must be >= 2")

    rng = rng_for("catalog", seed)
    colors = list(COLORS)
    shapes = list(SHAPES)
    directions = list(DIRECTIONS)
    rng.shuffle(colors)
    rng.shuffle(shapes)
    rng.shuffle(directions)

    reach_pool = [(c, shapes[i % len(shapes)]) for i, c in enumerate(colors)]
    push_pool = [(d, colors[i % len(colors)]) for i, d in enumerate(directions)]
    pick_pool = [(s, k) for s in shapes for k in CORNERS]

    n_fewshot = _fewshot_count(skill_catalog_size)
    n_pretrain = skill_catalog_size - n_fewshot
    max_size = len(reach_pool) + len(push_pool) + len(pick_pool)
    if skill_catalog_size > max_size:
        raise ValueError(f"skill_catalog_size must be <= {max_size}")

    specs: list[SkillSpec] = []
    reach_i = push_i = pick_i = 0
    for i in range(n_pretrain):
        want_push = i % 2 == 1
        if want_push and push_i < len(push_pool):
            d, c = push_pool[push_i]
            push_i += 1
            specs.append(_push_spec(d, c, rng))
        elif reach_i < len(reach_pool):
            c, s = reach_pool[reach_i]
            reach_i += 1
            specs.append(_reach_spec(c, s, rng))
        elif push_i < len(push_pool):
            d, c = push_pool[push_i]
            push_i += 1
            specs.append(_push_spec(d, c, rng))
        else:
            s, k = pick_pool[pick_i]
            pick_i += 1
            specs.append(_pick_spec(s, k, colors[pick_i % len(colors)], rng))

    # Fewshot skills come from the tail of the pick pool so they never
    # collide with pretrain picks, and they get a fixed layout.
    for j in range(n_fewshot):
        s, k = pick_pool[len(pick_pool) - 1 - j]
        spec = _pick_spec(s, k, colors[(j * 3 + 1) % len(colors)], rng)
        spec.difficulty_tag = "fewshot"
        spec.fixed_layout = _draw_layout(spec, rng)
        specs.append(spec)

    ids = [s.skill_id for s in specs]
    if len(set(ids)) != len(ids):
        raise RuntimeError(f"catalog ids collide: {ids}")
    return World(seed, specs), specs


# ---------------------------------------------------------------------------
# Scene sampling


def _distractor_palette(spec: SkillSpec) -> tuple[list[str], list[str]]:
    """(allowed colors, allowed shapes) for distractors of this skill."""
    if spec.template in ("reach", "push"):
        colors = [c for c in COLORS if c != spec.color]
        shapes = list(SHAPES)
    else:  # pick-place keys on shape
        colors = list(COLORS)
        shapes = [s for s in SHAPES if s != spec.shape]
    return colors, shapes


def _sample_positions(spec: SkillSpec, rng: np.random.Generator, effector: np.ndarray) -> list[np.ndarray]:
    lo, hi = OBJECT_BOX
    positions: list[np.ndarray] = []
    for idx in range(N_SCENE_OBJECTS):
        for _ in range(200):
            pos = rng.uniform(lo, hi, 2)
            if idx == 0 and spec.template == "push":
                d = np.asarray(DIRECTIONS[spec.direction])
                ahead = pos + d * PUSH_CLEARANCE
                if np.any(ahead < 0.05) or np.any(ahead > 0.95):
                    continue
            if float(np.linalg.norm(pos - effector)) < 0.14:
                continue
            if all(float(np.linalg.norm(pos - p)) >= OBJECT_MIN_SEPARATION for p in positions):
                positions.append(pos)
                break
        else:
            raise RuntimeError(f"could not place object {idx} for {spec.skill_id}")
    return positions


def _sample_scene(spec: SkillSpec, rng: np.random.Generator) -> WorldState:
    (sx_lo, sx_hi), (sy_lo, sy_hi) = START_BOX
    effector = np.array([rng.uniform(sx_lo, sx_hi), rng.uniform(sy_lo, sy_hi)])
    positions = _sample_positions(spec, rng, effector)

    colors, shapes = _distractor_palette(spec)
    objects = [
        ObjectState("target", spec.shape, spec.color, positions[0].copy(), positions[0].copy())
    ]
    for i in range(1, N_SCENE_OBJECTS):
        color = colors[int(rng.integers(len(colors)))]
        shape = shapes[int(rng.integers(len(shapes)))]
        if spec.template == "pick-place" and color == spec.color and shape == spec.shape:
            shape = shapes[0]
        objects.append(ObjectState(f"dist{i - 1}", shape, color, positions[i].copy(), positions[i].copy()))
    return WorldState(effector=effector, gripper=0.0, objects=objects)


def _draw_layout(spec: SkillSpec, rng: np.random.Generator) -> dict[str, Any]:
    state = _sample_scene(spec, rng)
    return {
        "effector": state.effector.tolist(),
        "objects": [
            {
                "object_id": o.object_id,
                "shape": o.shape,
                "color": o.color,
                "position": o.position.tolist(),
            }
            for o in state.objects
        ],
    }


def _state_from_layout(layout: dict[str, Any]) -> WorldState:
    objects = [
        ObjectState(
            object_id=o["object_id"],
            shape=o["shape"],
            color=o["color"],
            position=np.asarray(o["position"], dtype=np.float64),
            init_position=np.asarray(o["position"], dtype=np.float64),
        )
        for o in layout["objects"]
    ]
    return WorldState(
        effector=np.asarray(layout["effector"], dtype=np.float64),
        gripper=0.0,
        objects=objects,
    )
