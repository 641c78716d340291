"""On-disk demonstration format.

One directory per demonstration:

    manifest.json   skill_id, embodiment, T, array shapes, dtype tags, format_version
    frames.f32      (T, 64, 64, 3) float32 little-endian, row-major, values in [0, 1]
    proprio.f32     (T, 3) float32 little-endian (robot demos only)
    actions.f32     (T, 3) float32 little-endian (robot demos only)

Every module that reads demonstrations goes through this format.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .demos import Demonstration

FORMAT_VERSION = 1
DTYPE_TAG = "float32-le"
_DT = np.dtype("<f4")


class DemoFormatError(ValueError):
    """A demonstration directory violates the on-disk contract."""

    def __init__(self, message: str, file: str | None = None):
        super().__init__(message if file is None else f"{file}: {message}")
        self.file = file


def write_demo(demo: Demonstration, path: str | Path) -> Path:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    frames = (demo.frames.astype(np.float32) / 255.0).astype(_DT)
    shapes: dict[str, list[int] | None] = {"frames": list(frames.shape)}
    frames.tofile(path / "frames.f32")
    if demo.embodiment == "robot":
        demo.proprio.astype(_DT).tofile(path / "proprio.f32")
        demo.actions.astype(_DT).tofile(path / "actions.f32")
        shapes["proprio"] = list(demo.proprio.shape)
        shapes["actions"] = list(demo.actions.shape)
    else:
        shapes["proprio"] = None
        shapes["actions"] = None
    manifest = {
        "format_version": FORMAT_VERSION,
        "skill_id": demo.skill_id,
        "embodiment": demo.embodiment,
        "T": demo.T,
        "shapes": shapes,
        "dtype": DTYPE_TAG,
    }
    (path / "manifest.json").write_text(json.dumps(manifest, indent=1))
    return path


def _read_blob(path: Path, name: str, shape: list[int]) -> np.ndarray:
    blob = path / name
    if not blob.exists():
        raise DemoFormatError("missing array blob", file=str(blob))
    expected = int(np.prod(shape)) * 4
    actual = blob.stat().st_size
    if actual != expected:
        raise DemoFormatError(f"blob has {actual} bytes, manifest implies {expected}", file=str(blob))
    return np.fromfile(blob, dtype=_DT).reshape(shape)


def read_manifest(path: str | Path) -> dict:
    path = Path(path)
    mf = path / "manifest.json"
    if not mf.exists():
        raise DemoFormatError("missing manifest.json", file=str(mf))
    try:
        manifest = json.loads(mf.read_text())
    except json.JSONDecodeError as exc:
        raise DemoFormatError(f"manifest is not valid JSON ({exc})", file=str(mf)) from exc
    if manifest.get("format_version") != FORMAT_VERSION:
        raise DemoFormatError(
            f"format_version {manifest.get('format_version')!r} != {FORMAT_VERSION}", file=str(mf)
        )
    if manifest.get("dtype") != DTYPE_TAG:
        raise DemoFormatError(f"dtype tag {manifest.get('dtype')!r} != {DTYPE_TAG!r}", file=str(mf))
    for key in ("skill_id", "embodiment", "T", "shapes"):
        if key not in manifest:
            raise DemoFormatError(f"manifest missing key {key!r}", file=str(mf))
    return manifest


def read_demo(path: str | Path) -> Demonstration:
    path = Path(path)
    manifest = read_manifest(path)
    shapes = manifest["shapes"]
    frames_f = _read_blob(path, "frames.f32", shapes["frames"])
    if frames_f.size and (frames_f.min() < 0.0 or frames_f.max() > 1.0):
        raise DemoFormatError("frame values outside [0, 1]", file=str(path / "frames.f32"))
    frames = np.clip(np.rint(frames_f * 255.0), 0, 255).astype(np.uint8)
    proprio = actions = None
    if manifest["embodiment"] == "robot":
        if shapes.get("proprio") is None or shapes.get("actions") is None:
            raise DemoFormatError("robot demo manifest lacks proprio/actions shapes",
                                  file=str(path / "manifest.json"))
        proprio = _read_blob(path, "proprio.f32", shapes["proprio"])
        actions = _read_blob(path, "actions.f32", shapes["actions"])
    try:
        return Demonstration(manifest["embodiment"], frames, proprio, actions, manifest["skill_id"])
    except ValueError as exc:
        raise DemoFormatError(str(exc), file=str(path / "manifest.json")) from exc


def validate_demo_dir(path: str | Path) -> list[str]:
    """All contract violations in one demo directory (empty list = valid)."""
    try:
        read_demo(path)
    except DemoFormatError as exc:
        return [str(exc)]
    return []
