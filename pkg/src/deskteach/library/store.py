"""The queryable skill library.

Stores learned skills as (description, reference robot trajectory, adapter
id) with two precomputed embeddings each: a semantic one from the text
embedder and a skill one from the robot trajectory encoder. Answers
"do I know this?" by cosine argmax in either space, and persists to a
directory (manifest + per-skill demo directories + embedding blobs).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..align.encoders import AlignmentModel, Embedding
from ..align.metrics import cosine_np
from ..sim.demos import Demonstration
from ..sim.storage import read_demo, write_demo
from .text_embed import TrigramTextEmbedder

LIBRARY_FORMAT_VERSION = 1
EXACT_MATCH_THRESHOLD = 0.999


class LibraryError(ValueError):
    pass


@dataclass
class LibraryConfig:
    semantic_threshold: float = 0.95  # proposal threshold in the text space
    skill_threshold: float = 0.7      # bound to the alignment decision threshold

    def __post_init__(self) -> None:
        for v in (self.semantic_threshold, self.skill_threshold):
            if not (0 < v <= 1):
                raise ValueError("thresholds must lie in (0, 1]")


@dataclass
class SkillRecord:
    skill_id: str
    description: str
    reference_trajectory: Demonstration
    semantic_embedding: np.ndarray
    skill_embedding: Embedding
    adapter_id: str


@dataclass
class MatchResult:
    best_skill: str | None
    score: float
    space: str                 # "semantic" | "skill"
    above_threshold: bool


class SkillLibrary:
    def __init__(
        self,
        config: LibraryConfig | None = None,
        text_embedder=None,
        aligner: AlignmentModel | None = None,
        adapter_registry=None,
    ):
        self.config = config or LibraryConfig()
        self.text_embedder = text_embedder or TrigramTextEmbedder()
        self.aligner = aligner
        self.adapter_registry = adapter_registry
        self._records: dict[str, SkillRecord] = {}

    def __len__(self) -> int:
        return len(self._records)

    def __contains__(self, skill_id: str) -> bool:
        return skill_id in self._records

    def records(self) -> list[SkillRecord]:
        return [self._records[k] for k in sorted(self._records)]

    def get(self, skill_id: str) -> SkillRecord:
        return self._records[skill_id]

    def text_embed(self, text: str) -> np.ndarray:
        return self.text_embedder.embed(text)

    # ------------------------------------------------------------------
    def add_skill(self, skill_id: str, description: str, trajectory: Demonstration,
                  adapter_id: str) -> SkillRecord:
        if skill_id in self._records:
            raise LibraryError(f"skill {skill_id!r} already in library")
        if trajectory.embodiment != "robot":
            raise LibraryError("reference trajectories must be robot demonstrations")
        if self.adapter_registry is not None and adapter_id not in self.adapter_registry:
            raise LibraryError(f"adapter {adapter_id!r} does not exist in the policy store")
        if self.aligner is None:
            raise LibraryError("library has no alignment encoders; cannot embed trajectory")
        record = SkillRecord(
            skill_id=skill_id,
            description=description,
            reference_trajectory=trajectory,
            semantic_embedding=self.text_embedder.embed(description),
            skill_embedding=self.aligner.encode(trajectory),
            adapter_id=adapter_id,
        )
        self._records[skill_id] = record
        return record

    # ------------------------------------------------------------------
    def _argmax(self, query: np.ndarray, space: str, threshold: float) -> MatchResult:
        best_id: str | None = None
        best_score = -1.0
        for skill_id in sorted(self._records):
            rec = self._records[skill_id]
            stored = rec.semantic_embedding if space == "semantic" else rec.skill_embedding.vector
            score = cosine_np(query, stored)
            if score > best_score:  # ties keep the lexicographically smallest id
                best_id, best_score = skill_id, score
        if best_id is None:
            return MatchResult(None, -1.0, space, False)
        return MatchResult(best_id, best_score, space, best_score >= threshold)

    def search_semantic(self, query_description: str) -> MatchResult:
        return self._argmax(self.text_embedder.embed(query_description), "semantic",
                            self.config.semantic_threshold)

    def search_skill(self, human_demo: Demonstration) -> MatchResult:
        if human_demo.embodiment != "human":
            raise LibraryError("skill-space search expects a human enactment; "
                               "robot trajectories are matched via their stored embeddings")
        if self.aligner is None:
            raise LibraryError("library has no alignment encoders")
        query = self.aligner.encode(human_demo).vector
        return self._argmax(query, "skill", self.config.skill_threshold)

    def exact_match(self, task_description: str) -> str | None:
        """Membership shortcut: cosine >= 0.999 in the semantic space."""
        result = self._argmax(self.text_embedder.embed(task_description), "semantic",
                              EXACT_MATCH_THRESHOLD)
        return result.best_skill if result.above_threshold else None

    # ------------------------------------------------------------------
    def persist(self, path: str | Path) -> Path:
        path = Path(path)
        path.mkdir(parents=True, exist_ok=True)
        records_meta = []
        for rec in self.records():
            demo_dir = f"demo_{rec.skill_id}"
            write_demo(rec.reference_trajectory, path / demo_dir)
            np.ascontiguousarray(rec.semantic_embedding, dtype="<f4").tofile(
                path / f"sem_{rec.skill_id}.f32")
            np.ascontiguousarray(rec.skill_embedding.vector, dtype="<f4").tofile(
                path / f"skill_{rec.skill_id}.f32")
            records_meta.append({
                "skill_id": rec.skill_id,
                "description": rec.description,
                "adapter_id": rec.adapter_id,
                "demo_dir": demo_dir,
                "semantic_dim": int(rec.semantic_embedding.shape[0]),
                "skill_dim": int(rec.skill_embedding.vector.shape[0]),
            })
        manifest = {
            "format_version": LIBRARY_FORMAT_VERSION,
            "embedder_id": self.text_embedder.embedder_id,
            "semantic_threshold": self.config.semantic_threshold,
            "skill_threshold": self.config.skill_threshold,
            "records": records_meta,
        }
        (path / "library.json").write_text(json.dumps(manifest, indent=1))
        return path

    @classmethod
    def load(cls, path: str | Path, text_embedder=None,
             aligner: AlignmentModel | None = None, adapter_registry=None) -> "SkillLibrary":
        path = Path(path)
        mf = path / "library.json"
        if not mf.exists():
            raise LibraryError(f"{mf}: missing library manifest")
        try:
            manifest = json.loads(mf.read_text())
        except json.JSONDecodeError as exc:
            raise LibraryError(f"{mf}: corrupted manifest ({exc})") from exc
        if manifest.get("format_version") != LIBRARY_FORMAT_VERSION:
            raise LibraryError(
                f"{mf}: format_version {manifest.get('format_version')!r} unsupported")
        lib = cls(
            LibraryConfig(manifest["semantic_threshold"], manifest["skill_threshold"]),
            text_embedder=text_embedder,
            aligner=aligner,
            adapter_registry=adapter_registry,
        )
        if manifest["embedder_id"] != lib.text_embedder.embedder_id:
            raise LibraryError(
                f"{mf}: library was built with embedder {manifest['embedder_id']!r}, "
                f"loaded with {lib.text_embedder.embedder_id!r}")
        for meta in manifest["records"]:
            demo = read_demo(path / meta["demo_dir"])
            sem = np.fromfile(path / f"sem_{meta['skill_id']}.f32", dtype="<f4")
            skl = np.fromfile(path / f"skill_{meta['skill_id']}.f32", dtype="<f4")
            if sem.shape[0] != meta["semantic_dim"] or skl.shape[0] != meta["skill_dim"]:
                raise LibraryError(f"embedding blob for {meta['skill_id']!r} has wrong size")
            lib._records[meta["skill_id"]] = SkillRecord(
                skill_id=meta["skill_id"],
                description=meta["description"],
                reference_trajectory=demo,
                semantic_embedding=sem,
                skill_embedding=Embedding(skl, "robot"),
                adapter_id=meta["adapter_id"],
            )
        return lib
