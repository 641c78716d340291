"""Demonstration generation and policy rollouts.

A demonstration is derived from a single latent expert trajectory; the two
embodiments render the same latent states with their own cameras. That is
what makes (human, robot) demos of one (skill, seed) a true cross-embodiment
pair: identical motion, different appearance, and the human copy carries no
proprioception or actions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..seeding import rng_for
from .catalog import SkillSpec, World
from .expert import ScriptedExpert
from .render import render_frame
from .world import WorldState, step

MAX_DEMO_STEPS = 80
# Short hold tail. The L1 chunk loss is a median regressor: flooding the
# data with stay-put zeros (longer holds) drags underfit predictions
# toward zero everywhere and the policy stalls mid-transit.
HOLD_STEPS = 4
DEFAULT_MAX_ROLLOUT_STEPS = 80
HUMAN_JITTER_PX = 1.8


@dataclass
class Demonstration:
    embodiment: str                    # "human" | "robot"
    frames: np.ndarray                 # (T, 64, 64, 3) uint8
    proprio: np.ndarray | None         # (T, 3) float32, robot only
    actions: np.ndarray | None         # (T, 3) float32, robot only
    skill_id: str

    def __post_init__(self) -> None:
        if self.embodiment not in ("human", "robot"):
            raise ValueError(f"unknown embodiment {self.embodiment!r}")
        if self.frames.dtype != np.uint8 or self.frames.ndim != 4:
            raise ValueError("frames must be (T, H, W, C) uint8")
        if self.T < 2:
            raise ValueError("demonstrations need T >= 2")
        if self.embodiment == "human":
            if self.proprio is not None or self.actions is not None:
                raise ValueError("human demonstrations carry no proprio/actions")
        else:
            if self.proprio is None or self.actions is None:
                raise ValueError("robot demonstrations need proprio and actions")
            if len(self.proprio) != self.T or len(self.actions) != self.T:
                raise ValueError("frames, proprio, actions must share length T")

    @property
    def T(self) -> int:
        return int(self.frames.shape[0])


@dataclass
class RolloutResult:
    success: bool
    steps: int
    states: list[WorldState]
    actions: list[np.ndarray]
    frames: np.ndarray | None = None   # (steps, 64, 64, 3) uint8 when recorded
    reason: str = "ok"


def latent_trajectory(
    world: World, spec: SkillSpec, episode_seed: int, noise_scale: float
) -> tuple[list[WorldState], list[np.ndarray], list[np.ndarray]]:
    """Run the scripted expert once; shared by both embodiments of a demo."""
    expert = ScriptedExpert(world, spec, episode_seed, noise_scale)
    state = world.init_state(spec, episode_seed)
    states: list[WorldState] = []
    actions: list[np.ndarray] = []
    held_still = 0
    while len(actions) < MAX_DEMO_STEPS:
        states.append(state)
        action = expert.act(state)
        actions.append(action)
        state = step(state, action)
        if expert.done:
            held_still += 1
            if held_still >= HOLD_STEPS:
                break
    return states, actions, expert.latent_waypoints


def generate_demo(
    world: World,
    spec: SkillSpec,
    embodiment: str,
    episode_seed: int,
    noise_scale: float = 0.0,
) -> Demonstration:
    if embodiment not in ("human", "robot"):
        raise ValueError(f"unknown embodiment {embodiment!r}")
    if noise_scale < 0 or noise_scale > 0.2:
        raise ValueError("noise_scale must be in [0, 0.2]")

    states, actions, _ = latent_trajectory(world, spec, episode_seed, noise_scale)
    T = len(actions)

    if embodiment == "human":
        jrng = rng_for("render", world.seed, spec.skill_id, episode_seed, "human")
        jitters = jrng.uniform(-HUMAN_JITTER_PX, HUMAN_JITTER_PX, (T, 2))
    else:
        jitters = np.zeros((T, 2))

    frames = np.stack(
        [
            render_frame(states[t], spec, embodiment, (float(jitters[t, 0]), float(jitters[t, 1])))
            for t in range(T)
        ]
    )
    if embodiment == "human":
        return Demonstration("human", frames, None, None, spec.skill_id)
    proprio = np.stack([s.proprio() for s in states[:T]]).astype(np.float32)
    acts = np.stack(actions).astype(np.float32)
    return Demonstration("robot", frames, proprio, acts, spec.skill_id)


def rollout(
    world: World,
    policy,
    spec: SkillSpec,
    episode_seed: int,
    max_steps: int = DEFAULT_MAX_ROLLOUT_STEPS,
    record_frames: bool = False,
) -> RolloutResult:
    """Step the world with policy actions until success or the step budget.

    The policy sees what a robot camera sees: the rendered frame plus
    proprioception. A non-finite action aborts the episode as a failure.
    """
    if max_steps < 1:
        raise ValueError("max_steps must be >= 1")
    if hasattr(policy, "reset"):
        policy.reset(episode_seed)

    state = world.init_state(spec, episode_seed)
    states = [state]
    actions: list[np.ndarray] = []
    frames: list[np.ndarray] = []
    success = False
    reason = "max_steps"
    for _ in range(max_steps):
        frame = render_frame(state, spec, "robot")
        if record_frames:
            frames.append(frame)
        action = np.asarray(policy.act(frame, state.proprio()), dtype=np.float64)
        if action.shape != (3,) or not np.all(np.isfinite(action)):
            reason = "non_finite_action"
            break
        action = np.clip(action, -1.0, 1.0)
        actions.append(action)
        state = step(state, action)
        states.append(state)
        if world.success(spec, state):
            success = True
            reason = "success"
            break
    return RolloutResult(
        success=success,
        steps=len(actions),
        states=states,
        actions=actions,
        frames=np.stack(frames) if record_frames and frames else None,
        reason=reason,
    )


def rollout_to_demo(result: RolloutResult, world: World, spec: SkillSpec) -> Demonstration:
    """Package a recorded rollout as a robot demonstration (teleoperation path)."""
    T = len(result.actions)
    if T < 2:
        raise ValueError("rollout too short to form a demonstration")
    frames = result.frames
    if frames is None:
        frames = np.stack([render_frame(s, spec, "robot") for s in result.states[:T]])
    proprio = np.stack([s.proprio() for s in result.states[:T]]).astype(np.float32)
    actions = np.stack(result.actions).astype(np.float32)
    return Demonstration("robot", frames, proprio, actions, spec.skill_id)
