"""Synthetic two-embodiment tabletop world."""

from .catalog import SkillSpec, World, make_world
from .demos import (
    Demonstration,
    RolloutResult,
    generate_demo,
    latent_trajectory,
    rollout,
    rollout_to_demo,
)
from .expert import ExpertRolloutPolicy, ScriptedExpert
from .render import IMAGE_SIZE, render_frame
from .storage import DemoFormatError, read_demo, validate_demo_dir, write_demo
from .world import ACTION_DIM, MAX_SPEED, ObjectState, WorldState, step

__all__ = [
    "ACTION_DIM",
    "Demonstration",
    "DemoFormatError",
    "ExpertRolloutPolicy",
    "IMAGE_SIZE",
    "MAX_SPEED",
    "ObjectState",
    "RolloutResult",
    "ScriptedExpert",
    "SkillSpec",
    "World",
    "WorldState",
    "generate_demo",
    "latent_trajectory",
    "make_world",
    "read_demo",
    "render_frame",
    "rollout",
    "rollout_to_demo",
    "step",
    "validate_demo_dir",
    "write_demo",
]
