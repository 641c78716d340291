import numpy as np
import pytest

from deskteach.align.encoders import Embedding
from deskteach.library import LibraryConfig, LibraryError, SkillLibrary, TrigramTextEmbedder
from deskteach.seeding import rng_for
from deskteach.sim import generate_demo, make_world


class FakeAligner:
    """Deterministic per-skill unit vectors, identical across embodiments."""

    def encode(self, demo, embodiment=None):
        vec = rng_for("fake-align", demo.skill_id).normal(size=32)
        vec = (vec / np.linalg.norm(vec)).astype(np.float32)
        return Embedding(vec, demo.embodiment)


@pytest.fixture(scope="module")
def world_demos():
    world, catalog = make_world(0, 8)
    robot = {s.skill_id: generate_demo(world, s, "robot", 0, 0.0) for s in catalog}
    human = {s.skill_id: generate_demo(world, s, "human", 1, 0.0) for s in catalog}
    return world, catalog, robot, human


def build_library(catalog, robot, n=None, registry=None):
    lib = SkillLibrary(
        LibraryConfig(),
        aligner=FakeAligner(),
        adapter_registry=registry,
    )
    for spec in catalog[:n]:
        lib.add_skill(spec.skill_id, spec.description, robot[spec.skill_id],
                      adapter_id=f"adapter-{spec.skill_id}")
    return lib


class TestTextEmbed:
    def test_deterministic(self):
        emb = TrigramTextEmbedder()
        assert np.array_equal(emb.embed("slice cheese"), emb.embed("slice cheese"))

    def test_self_cosine_is_one(self):
        emb = TrigramTextEmbedder()
        for text in ("slice cheese", "push the cyan block to the right"):
            v = emb.embed(text)
            assert float(v @ v) == pytest.approx(1.0, abs=1e-6)

    def test_paraphrase_closer_than_unrelated(self):
        emb = TrigramTextEmbedder()
        base = emb.embed("slice cheese")
        near = float(base @ emb.embed("slice the cheese"))
        far = float(base @ emb.embed("open microwave"))
        assert near > far

    def test_unit_norm_fixed_dim(self):
        v = TrigramTextEmbedder().embed("anything at all")
        assert v.shape == (64,)
        assert float(np.linalg.norm(v)) == pytest.approx(1.0, abs=1e-6)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            TrigramTextEmbedder().embed("   ")


class TestAddSkill:
    def test_first_skill_searchable(self, world_demos):
        _, catalog, robot, _ = world_demos
        lib = build_library(catalog, robot, n=1)
        assert len(lib) == 1
        res = lib.search_semantic(catalog[0].description)
        assert res.best_skill == catalog[0].skill_id
        assert res.score == pytest.approx(1.0, abs=1e-6)
        assert res.above_threshold

    def test_missing_adapter_rejected(self, world_demos):
        _, catalog, robot, _ = world_demos
        lib = SkillLibrary(aligner=FakeAligner(), adapter_registry=set())
        with pytest.raises(LibraryError):
            lib.add_skill("x", "desc", robot[catalog[0].skill_id], "nope")

    def test_duplicate_rejected(self, world_demos):
        _, catalog, robot, _ = world_demos
        lib = build_library(catalog, robot, n=1)
        with pytest.raises(LibraryError):
            lib.add_skill(catalog[0].skill_id, "again", robot[catalog[0].skill_id], "a")

    def test_human_trajectory_rejected(self, world_demos):
        _, catalog, _, human = world_demos
        lib = SkillLibrary(aligner=FakeAligner())
        with pytest.raises(LibraryError):
            lib.add_skill("x", "desc", human[catalog[0].skill_id], "a")

    def test_each_description_is_own_argmax(self, world_demos):
        _, catalog, robot, _ = world_demos
        lib = build_library(catalog, robot)
        for spec in catalog:
            res = lib.search_semantic(spec.description)
            assert res.best_skill == spec.skill_id


class TestSearch:
    def test_empty_library_no_match(self):
        lib = SkillLibrary(aligner=FakeAligner())
        res = lib.search_semantic("anything")
        assert res.best_skill is None and not res.above_threshold

    def test_semantic_matches_bruteforce_oracle(self, world_demos):
        _, catalog, robot, _ = world_demos
        lib = build_library(catalog, robot)
        emb = lib.text_embedder
        for query in ("reach the thing", "push it", catalog[3].description, "zzz qqq"):
            res = lib.search_semantic(query)
            q = emb.embed(query)
            scores = {
                r.skill_id: float(q @ r.semantic_embedding / np.linalg.norm(r.semantic_embedding))
                for r in lib.records()
            }
            best = max(sorted(scores), key=lambda k: scores[k])
            assert res.best_skill == best
            assert res.score == pytest.approx(scores[best], abs=1e-6)

    def test_skill_search_finds_same_skill(self, world_demos):
        _, catalog, robot, human = world_demos
        lib = build_library(catalog, robot)
        res = lib.search_skill(human[catalog[2].skill_id])
        assert res.best_skill == catalog[2].skill_id
        assert res.score == pytest.approx(1.0, abs=1e-5)
        assert res.above_threshold

    def test_skill_search_rejects_robot_demo(self, world_demos):
        _, catalog, robot, _ = world_demos
        lib = build_library(catalog, robot)
        with pytest.raises(LibraryError):
            lib.search_skill(robot[catalog[0].skill_id])

    def test_threshold_monotonicity(self, world_demos):
        _, catalog, robot, _ = world_demos
        query = "reach the red thing"
        flags = []
        for thr in (0.2, 0.5, 0.9):
            lib = build_library(catalog, robot)
            lib.config.semantic_threshold = thr
            flags.append(lib.search_semantic(query).above_threshold)
        for lo, hi in zip(flags, flags[1:]):
            assert lo or not hi  # raising threshold never turns False into True

    def test_insertion_order_invariance(self, world_demos):
        _, catalog, robot, _ = world_demos
        lib_fwd = build_library(catalog, robot)
        lib_rev = build_library(list(reversed(catalog)), robot)
        for query in ("reach the circle", catalog[0].description):
            a = lib_fwd.search_semantic(query)
            b = lib_rev.search_semantic(query)
            assert (a.best_skill, a.score) == (b.best_skill, b.score)

    def test_exact_match_shortcut(self, world_demos):
        _, catalog, robot, _ = world_demos
        lib = build_library(catalog, robot)
        assert lib.exact_match(catalog[0].description) == catalog[0].skill_id
        assert lib.exact_match("definitely not a stored skill") is None


class TestPersistence:
    def test_round_trip_bit_exact(self, world_demos, tmp_path):
        _, catalog, robot, _ = world_demos
        lib = build_library(catalog, robot, n=3)
        lib.persist(tmp_path / "lib")
        loaded = SkillLibrary.load(tmp_path / "lib", aligner=FakeAligner())
        assert len(loaded) == len(lib)
        for rec, rec2 in zip(lib.records(), loaded.records()):
            assert rec.skill_id == rec2.skill_id
            assert rec.description == rec2.description
            assert rec.adapter_id == rec2.adapter_id
            assert np.array_equal(rec.semantic_embedding, rec2.semantic_embedding)
            assert np.array_equal(rec.skill_embedding.vector, rec2.skill_embedding.vector)
            assert np.array_equal(rec.reference_trajectory.frames, rec2.reference_trajectory.frames)

    def test_search_identical_after_round_trip(self, world_demos, tmp_path):
        _, catalog, robot, human = world_demos
        lib = build_library(catalog, robot, n=3)
        lib.persist(tmp_path / "lib")
        loaded = SkillLibrary.load(tmp_path / "lib", aligner=FakeAligner())
        for query in ("reach the circle", catalog[1].description):
            a, b = lib.search_semantic(query), loaded.search_semantic(query)
            assert (a.best_skill, a.score, a.above_threshold) == (b.best_skill, b.score, b.above_threshold)
        h = human[catalog[0].skill_id]
        a, b = lib.search_skill(h), loaded.search_skill(h)
        assert (a.best_skill, a.score) == (b.best_skill, b.score)

    def test_corrupt_manifest_rejected_and_library_untouched(self, world_demos, tmp_path):
        _, catalog, robot, _ = world_demos
        lib = build_library(catalog, robot, n=2)
        path = lib.persist(tmp_path / "lib")
        (path / "library.json").write_text("{broken")
        with pytest.raises(LibraryError):
            SkillLibrary.load(path, aligner=FakeAligner())
        assert len(lib) == 2  # in-memory library unaffected

    def test_version_mismatch_rejected(self, world_demos, tmp_path):
        _, catalog, robot, _ = world_demos
        lib = build_library(catalog, robot, n=1)
        path = lib.persist(tmp_path / "lib")
        text = (path / "library.json").read_text().replace('"format_version": 1', '"format_version": 9')
        (path / "library.json").write_text(text)
        with pytest.raises(LibraryError):
            SkillLibrary.load(path, aligner=FakeAligner())
