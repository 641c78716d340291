"""Rasterizer for 64x64 RGB observations of the tabletop world.

Both embodiments view the same latent scene. The robot camera draws a cool
gray table and a gripper disc; the human camera draws a warm table, a
hand-like sprite instead of the gripper, a warm color tint, and a small
per-frame camera jitter. All drawing is plain numpy masking, deterministic
given the state and jitter.
"""

from __future__ import annotations

import numpy as np

from .catalog import SkillSpec
from .world import COLORS, CORNERS, GRIPPER_CLOSED, WorldState

IMAGE_SIZE = 64

_ROWS, _COLS = np.mgrid[0:IMAGE_SIZE, 0:IMAGE_SIZE].astype(np.float64)

ROBOT_BG = (233, 233, 238)
HUMAN_BG = (246, 240, 226)
MARKER_COLOR = (92, 92, 98)
OBJECT_RADIUS_PX = 3.4
EFFECTOR_RADIUS_PX = 3.6
HAND_RADIUS_PX = 4.6

# Warm tint applied to object colors in the human camera.
_HUMAN_TINT = np.array([1.08, 0.97, 0.86])


def _to_px(pos: np.ndarray, jitter: tuple[float, float]) -> tuple[float, float]:
    col = pos[0] * (IMAGE_SIZE - 1) + jitter[0]
    row = (1.0 - pos[1]) * (IMAGE_SIZE - 1) + jitter[1]
    return row, col


def _shape_mask(shape: str, row: float, col: float, r: float) -> np.ndarray:
    dy = _ROWS - row
    dx = _COLS - col
    if shape == "circle":
        return dx * dx + dy * dy <= r * r
    if shape == "square":
        return np.maximum(np.abs(dx), np.abs(dy)) <= r * 0.92
    if shape == "triangle":
        return (dy >= -r) & (dy <= r * 0.85) & (np.abs(dx) <= (dy + r) * 0.6)
    if shape == "diamond":
        return np.abs(dx) + np.abs(dy) <= r * 1.25
    raise ValueError(f"unknown shape {shape!r}")


def _paint(img: np.ndarray, mask: np.ndarray, color: tuple[int, int, int] | np.ndarray) -> None:
    img[mask] = np.asarray(color, dtype=np.uint8)


def render_frame(
    state: WorldState,
    spec: SkillSpec,
    embodiment: str,
    jitter: tuple[float, float] = (0.0, 0.0),
) -> np.ndarray:
    """Render one uint8 (64, 64, 3) frame."""
    if embodiment not in ("human", "robot"):
        raise ValueError(f"unknown embodiment {embodiment!r}")
    human = embodiment == "human"
    img = np.empty((IMAGE_SIZE, IMAGE_SIZE, 3), dtype=np.uint8)
    img[:] = HUMAN_BG if human else ROBOT_BG

    if spec.template == "pick-place":
        row, col = _to_px(np.asarray(CORNERS[spec.corner]), jitter)
        dy = np.abs(_ROWS - row)
        dx = np.abs(_COLS - col)
        _paint(img, (dy <= 0.8) & (dx <= 3.6), MARKER_COLOR)
        _paint(img, (dx <= 0.8) & (dy <= 3.6), MARKER_COLOR)

    for obj in state.objects:
        color = np.asarray(COLORS[obj.color], dtype=np.float64)
        if human:
            color = np.clip(color * _HUMAN_TINT, 0, 255)
        row, col = _to_px(obj.position, jitter)
        _paint(img, _shape_mask(obj.shape, row, col, OBJECT_RADIUS_PX), color.astype(np.uint8))

    row, col = _to_px(state.effector, jitter)
    closed = state.gripper >= GRIPPER_CLOSED
    if human:
        # Hand sprite: skin-tone disc with a darker wedge of fingers on top.
        _paint(img, _shape_mask("circle", row, col, HAND_RADIUS_PX), (224, 182, 148))
        _paint(img, _shape_mask("triangle", row - 3.0, col, 3.0), (198, 150, 116))
        if closed:
            _paint(img, _shape_mask("circle", row, col, 1.6), (120, 84, 62))
    else:
        _paint(img, _shape_mask("circle", row, col, EFFECTOR_RADIUS_PX), (70, 72, 80))
        inner = (36, 36, 40) if closed else (235, 235, 240)
        _paint(img, _shape_mask("circle", row, col, 1.7), inner)
    return img
