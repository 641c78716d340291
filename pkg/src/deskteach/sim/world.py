"""Tabletop world: state, dynamics, and skill success predicates.

The world is a unit square. An effector (a disc) moves with a commanded
planar velocity, a scalar gripper opens/closes, and a handful of colored
shapes sit on the table. Closing the gripper near an object grasps it;
a grasped object rides the effector; driving the effector into a free
object shoves it out of the way. Everything is a pure function of the
previous state and the action, so episodes are exactly reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

# Geometry/dynamics constants (world units; the table is [0,1]^2).
# GRASP_RADIUS must exceed CONTACT_DIST or objects get shoved out of reach
# of the gripper before it can latch; likewise REACH_SUCCESS_DIST must
# exceed CONTACT_DIST, the resting effector-object distance at contact.
MAX_SPEED = 0.05          # effector displacement per step at action magnitude 1
CONTACT_DIST = 0.065      # effector-object distance below which a free object is shoved
GRASP_RADIUS = 0.085      # max effector-object distance for a grasp to latch
ACTION_DIM = 3            # (vx, vy, gripper command), all in [-1, 1]
GRIPPER_CLOSED = 0.5      # gripper scalar at/above this counts as closed

SHAPES = ("circle", "square", "triangle", "diamond")

COLORS: dict[str, tuple[int, int, int]] = {
    "red": (214, 60, 56),
    "green": (70, 186, 80),
    "blue": (66, 100, 214),
    "yellow": (226, 210, 66),
    "magenta": (198, 72, 196),
    "cyan": (70, 196, 198),
    "orange": (236, 148, 52),
    "purple": (138, 70, 198),
}

CORNERS: dict[str, tuple[float, float]] = {
    "top-left": (0.14, 0.86),
    "top-right": (0.86, 0.86),
    "bottom-left": (0.14, 0.14),
    "bottom-right": (0.86, 0.14),
}

DIRECTIONS: dict[str, tuple[float, float]] = {
    "left": (-1.0, 0.0),
    "right": (1.0, 0.0),
    "up": (0.0, 1.0),
    "down": (0.0, -1.0),
}

PUSH_SUCCESS_DIST = 0.15  # required displacement of the block along the push direction
REACH_SUCCESS_DIST = 0.08
PLACE_SUCCESS_DIST = 0.07


@dataclass
class ObjectState:
    object_id: str
    shape: str
    color: str
    position: np.ndarray          # float64 (2,)
    init_position: np.ndarray     # float64 (2,), frozen at episode start
    held: bool = False

    def copy(self) -> "ObjectState":
        return ObjectState(
            object_id=self.object_id,
            shape=self.shape,
            color=self.color,
            position=self.position.copy(),
            init_position=self.init_position.copy(),
            held=self.held,
        )


@dataclass
class WorldState:
    effector: np.ndarray          # float64 (2,) in [0,1]^2
    gripper: float                # [0,1]; >= GRIPPER_CLOSED means closed
    objects: list[ObjectState] = field(default_factory=list)
    step_index: int = 0

    def copy(self) -> "WorldState":
        return WorldState(
            effector=self.effector.copy(),
            gripper=self.gripper,
            objects=[o.copy() for o in self.objects],
            step_index=self.step_index,
        )

    def object_by_id(self, object_id: str) -> ObjectState:
        for obj in self.objects:
            if obj.object_id == object_id:
                return obj
        raise KeyError(f"no object {object_id!r} in state")

    def held_object(self) -> ObjectState | None:
        for obj in self.objects:
            if obj.held:
                return obj
        return None

    def proprio(self) -> np.ndarray:
        return np.array([self.effector[0], self.effector[1], self.gripper], dtype=np.float32)


def clip_position(pos: np.ndarray) -> np.ndarray:
    return np.clip(pos, 0.0, 1.0)


def step(state: WorldState, action: np.ndarray) -> WorldState:
    """Apply one action. Pure: returns a new state, never mutates the input."""
    action = np.asarray(action, dtype=np.float64)
    if action.shape != (ACTION_DIM,):
        raise ValueError(f"action must have shape ({ACTION_DIM},), got {action.shape}")
    if not np.all(np.isfinite(action)):
        raise ValueError("non-finite action")
    action = np.clip(action, -1.0, 1.0)

    new = state.copy()
    new.effector = clip_position(new.effector + action[:2] * MAX_SPEED)

    was_closed = new.gripper >= GRIPPER_CLOSED
    new.gripper = float((action[2] + 1.0) / 2.0)
    now_closed = new.gripper >= GRIPPER_CLOSED

    held = new.held_object()
    released = None
    if now_closed and not was_closed and held is None:
        # Grasp latches only on the open->closed transition.
        best = None
        best_dist = GRASP_RADIUS
        for obj in new.objects:
            dist = float(np.linalg.norm(obj.position - new.effector))
            if dist <= best_dist:
                best, best_dist = obj, dist
        if best is not None:
            best.held = True
            held = best
    elif not now_closed and held is not None:
        held.held = False
        released = held
        held = None

    if held is not None:
        held.position = new.effector.copy()

    # Free objects are shoved out of the effector's contact disc. An object
    # released this very step rests where it was dropped.
    for obj in new.objects:
        if obj.held or obj is released:
            continue
        delta = obj.position - new.effector
        dist = float(np.linalg.norm(delta))
        if dist < CONTACT_DIST:
            direction = delta / dist if dist > 1e-9 else np.array([1.0, 0.0])
            obj.position = clip_position(new.effector + direction * CONTACT_DIST)

    new.step_index = state.step_index + 1
    return new


# ---------------------------------------------------------------------------
# Success predicates, dispatched on the skill template.


def reach_success(state: WorldState, target_id: str) -> bool:
    obj = state.object_by_id(target_id)
    return float(np.linalg.norm(state.effector - obj.position)) <= REACH_SUCCESS_DIST


def push_success(state: WorldState, target_id: str, direction: str) -> bool:
    obj = state.object_by_id(target_id)
    d = np.asarray(DIRECTIONS[direction], dtype=np.float64)
    displacement = float(np.dot(obj.position - obj.init_position, d))
    return displacement >= PUSH_SUCCESS_DIST


def place_success(state: WorldState, target_id: str, corner: str) -> bool:
    obj = state.object_by_id(target_id)
    goal = np.asarray(CORNERS[corner], dtype=np.float64)
    return (not obj.held) and float(np.linalg.norm(obj.position - goal)) <= PLACE_SUCCESS_DIST
