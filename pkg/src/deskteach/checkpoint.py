"""Checkpoint directory format shared by all trained models.

A checkpoint is a directory holding ``weights.json`` (array names, shapes,
dtype tags, format_version, plus arbitrary extra metadata) and one raw
little-endian float32 blob per named array. Arrays round-trip bit-exactly.
Adapters and base weights live in separate named blobs, so subsets of a
parameter store can ship independently.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

FORMAT_VERSION = 1
_DT = np.dtype("<f4")


class CheckpointError(ValueError):
    pass


def _blob_name(array_name: str) -> str:
    if "/" in array_name or "\\" in array_name or array_name.startswith("."):
        raise CheckpointError(f"array name {array_name!r} is not a safe file name")
    return f"{array_name}.f32"


def save_arrays(path: str | Path, arrays: dict[str, np.ndarray], extra: dict | None = None) -> Path:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    manifest: dict = {"format_version": FORMAT_VERSION, "arrays": {}, "extra": extra or {}}
    for name, arr in sorted(arrays.items()):
        arr = np.asarray(arr)
        if arr.dtype != np.float32:
            raise CheckpointError(f"{name}: checkpoints store float32 only, got {arr.dtype}")
        arr.astype(_DT).tofile(path / _blob_name(name))
        manifest["arrays"][name] = {"shape": list(arr.shape), "dtype": "float32-le"}
    (path / "weights.json").write_text(json.dumps(manifest, indent=1))
    return path


def load_arrays(path: str | Path) -> tuple[dict[str, np.ndarray], dict]:
    path = Path(path)
    mf = path / "weights.json"
    if not mf.exists():
        raise CheckpointError(f"{mf}: missing weights manifest")
    manifest = json.loads(mf.read_text())
    if manifest.get("format_version") != FORMAT_VERSION:
        raise CheckpointError(f"{mf}: format_version {manifest.get('format_version')!r} unsupported")
    arrays: dict[str, np.ndarray] = {}
    for name, meta in manifest["arrays"].items():
        blob = path / _blob_name(name)
        if not blob.exists():
            raise CheckpointError(f"{blob}: missing blob")
        shape = meta["shape"]
        expected = int(np.prod(shape)) * 4 if shape else 4
        if blob.stat().st_size != expected:
            raise CheckpointError(f"{blob}: has {blob.stat().st_size} bytes, manifest implies {expected}")
        arrays[name] = np.fromfile(blob, dtype=_DT).reshape(shape)
    return arrays, manifest.get("extra", {})
