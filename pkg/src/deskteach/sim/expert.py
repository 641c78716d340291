"""Scripted waypoint experts for every catalog skill.

An expert is a closed-loop servo through a short segment plan: detour via
points (jittered under nonzero noise), object-tracking approaches, a
displacement-conditioned push, gripper dwells, and retreats. At zero noise
the expert reaches the skill's success predicate with probability 1; under
noise, via points get Gaussian jitter and every emitted action gets
Gaussian perturbation, which is what gives training demonstrations their
variety.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..seeding import rng_for
from .catalog import SkillSpec, World
from .world import CORNERS, DIRECTIONS, MAX_SPEED, WorldState

OPEN, CLOSE = -1.0, 1.0
ACTION_NOISE_FACTOR = 0.6
PUSH_OVERSHOOT = 0.185
# Push geometry, in the block's frame (along push direction, lateral).
# The sub-goal is a pure function of the current relative geometry, which
# keeps the demonstrated action a function of the observable state:
#   ahead of the block      -> swing to a staging corner diagonally behind
#   behind but off the line -> back-align to a point behind the center
#   behind and centered     -> push a carrot just behind the block center,
#                              so lateral error shrinks and the effector
#                              cannot overshoot the block.
PUSH_STAGE_BEHIND = 0.18
PUSH_STAGE_LATERAL = 0.20
PUSH_ALIGN_BEHIND = 0.16
PUSH_AHEAD_GATE = 0.01
PUSH_LAT_GATE = 0.05
PUSH_CARROT = 0.04


@dataclass
class MoveTo:
    target: Callable[[WorldState], np.ndarray]
    tol: float
    gripper: float


@dataclass
class Dwell:
    steps: int
    gripper: float


@dataclass
class PushUntil:
    direction: np.ndarray
    displacement: float
    gripper: float = OPEN


Segment = MoveTo | Dwell | PushUntil


def _static(point: np.ndarray) -> Callable[[WorldState], np.ndarray]:
    frozen = np.asarray(point, dtype=np.float64).copy()
    return lambda state: frozen


def _track_target(state: WorldState) -> np.ndarray:
    return state.object_by_id("target").position


def _perp(direction: np.ndarray) -> np.ndarray:
    return np.array([-direction[1], direction[0]])


class ScriptedExpert:
    """Servo controller for one episode of one skill."""

    def __init__(self, world: World, spec: SkillSpec, episode_seed: int, noise_scale: float = 0.0):
        if noise_scale < 0 or noise_scale > 0.2:
            raise ValueError("noise_scale must be in [0, 0.2]")
        self.spec = spec
        self.noise_scale = noise_scale
        self.rng = rng_for("expert", world.seed, spec.skill_id, episode_seed, float(noise_scale))
        state0 = world.init_state(spec, episode_seed)
        self.plan, self.latent_waypoints = self._build_plan(spec, state0)
        self._seg = 0
        self._dwelled = 0
        self._gripper = OPEN

    def _jittered(self, point: np.ndarray, scale: float = 1.0) -> np.ndarray:
        if self.noise_scale > 0:
            point = point + self.rng.normal(0.0, self.noise_scale * scale, 2)
        return np.clip(point, 0.02, 0.98)

    def _build_plan(self, spec: SkillSpec, state0: WorldState) -> tuple[list[Segment], list[np.ndarray]]:
        start = state0.effector
        target0 = state0.object_by_id("target").init_position
        waypoints: list[np.ndarray] = []

        def via(a: np.ndarray, b: np.ndarray) -> np.ndarray:
            point = self._jittered((a + b) / 2.0 + spec.approach_offset)
            waypoints.append(point)
            return point

        if spec.template == "reach":
            plan: list[Segment] = [
                MoveTo(_static(via(start, target0)), 0.05, OPEN),
                MoveTo(_track_target, 0.07, OPEN),
            ]
        elif spec.template == "push":
            d = np.asarray(DIRECTIONS[spec.direction], dtype=np.float64)
            behind = np.clip(target0 - d * PUSH_STAGE_BEHIND, 0.02, 0.98)
            waypoints.append(behind)
            plan = [
                MoveTo(_static(via(start, behind)), 0.06, OPEN),
                PushUntil(d, PUSH_OVERSHOOT),
            ]
        elif spec.template == "pick-place":
            goal = np.asarray(CORNERS[spec.corner], dtype=np.float64)
            retreat = goal + (np.array([0.5, 0.5]) - goal) * 0.35
            waypoints.append(goal)
            plan = [
                MoveTo(_static(via(start, target0)), 0.05, OPEN),
                MoveTo(_track_target, 0.07, OPEN),
                Dwell(2, CLOSE),
                MoveTo(_static(goal), 0.015, CLOSE),
                Dwell(2, OPEN),
                MoveTo(_static(retreat), 0.05, OPEN),
            ]
        else:
            raise ValueError(f"unknown template {spec.template!r}")
        return plan, waypoints

    @property
    def done(self) -> bool:
        return self._seg >= len(self.plan)

    def act(self, state: WorldState) -> np.ndarray:
        """Next action for the current world state."""
        while not self.done:
            seg = self.plan[self._seg]
            if isinstance(seg, Dwell):
                if self._dwelled >= seg.steps:
                    self._advance()
                    continue
                self._dwelled += 1
                self._gripper = seg.gripper
                return self._emit(np.zeros(2), seg.gripper)
            if isinstance(seg, PushUntil):
                obj = state.object_by_id("target")
                disp = float(np.dot(obj.position - obj.init_position, seg.direction))
                if disp >= seg.displacement:
                    self._advance()
                    continue
                self._gripper = seg.gripper
                return self._emit(self._push_goal(state, obj, seg) - state.effector, seg.gripper)
            # MoveTo
            delta = seg.target(state) - state.effector
            if float(np.linalg.norm(delta)) <= seg.tol:
                self._advance()
                continue
            self._gripper = seg.gripper
            return self._emit(delta, seg.gripper)
        return self._emit(np.zeros(2), self._gripper)

    def _push_goal(self, state: WorldState, obj, seg: PushUntil) -> np.ndarray:
        """Sub-goal for the push, a pure function of relative geometry."""
        d = seg.direction
        rel = state.effector - obj.position
        along = float(np.dot(rel, d))
        lateral = float(np.dot(rel, _perp(d)))
        if along > PUSH_AHEAD_GATE:
            side = 1.0 if lateral >= 0 else -1.0
            goal = obj.position - d * PUSH_STAGE_BEHIND + _perp(d) * side * PUSH_STAGE_LATERAL
        elif abs(lateral) > PUSH_LAT_GATE:
            goal = obj.position - d * PUSH_ALIGN_BEHIND
        else:
            goal = obj.position - d * PUSH_CARROT
        return np.clip(goal, 0.02, 0.98)

    def _advance(self) -> None:
        self._seg += 1
        self._dwelled = 0

    def _emit(self, delta: np.ndarray, gripper: float) -> np.ndarray:
        v = delta / MAX_SPEED
        m = float(np.max(np.abs(v)))
        if m > 1.0:
            v = v / m
        action = np.array([v[0], v[1], gripper], dtype=np.float64)
        if self.noise_scale > 0:
            action = action + self.rng.normal(0.0, ACTION_NOISE_FACTOR * self.noise_scale, 3)
        return np.clip(action, -1.0, 1.0)


class ExpertRolloutPolicy:
    """Adapter making a scripted expert usable wherever a visuomotor policy is.

    The expert plans over world state, not pixels, so the adapter replays its
    own copy of the (deterministic) episode alongside the evaluator's.
    """

    def __init__(self, world: World, spec: SkillSpec, noise_scale: float = 0.0):
        self._world = world
        self._spec = spec
        self._noise = noise_scale
        self._expert: ScriptedExpert | None = None
        self._state: WorldState | None = None

    def reset(self, episode_seed: int) -> None:
        self._expert = ScriptedExpert(self._world, self._spec, episode_seed, self._noise)
        self._state = self._world.init_state(self._spec, episode_seed)

    def act(self, frame: np.ndarray, proprio: np.ndarray) -> np.ndarray:
        from .world import step as world_step

        assert self._expert is not None and self._state is not None, "call reset() first"
        action = self._expert.act(self._state)
        self._state = world_step(self._state, action)
        return action
