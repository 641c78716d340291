import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from deskteach.sim import (
    ExpertRolloutPolicy,
    generate_demo,
    latent_trajectory,
    make_world,
    read_demo,
    render_frame,
    rollout,
    step,
    validate_demo_dir,
    write_demo,
)
from deskteach.sim.storage import DemoFormatError


@pytest.fixture(scope="module")
def world8():
    return make_world(0, 8)


class TestCatalog:
    def test_same_seed_same_catalog(self):
        _, cat_a = make_world(0, 8)
        _, cat_b = make_world(0, 8)
        assert [s.skill_id for s in cat_a] == [s.skill_id for s in cat_b]
        assert [s.waypoint_schema() for s in cat_a] == [s.waypoint_schema() for s in cat_b]

    def test_first_frame_byte_identical(self):
        frames = []
        for _ in range(2):
            world, cat = make_world(0, 8)
            state = world.init_state(cat[0], 0)
            frames.append(render_frame(state, cat[0], "robot"))
        assert np.array_equal(frames[0], frames[1])

    def test_different_seeds_differ(self):
        _, cat_a = make_world(0, 8)
        _, cat_b = make_world(1, 8)
        schemas_a = {s.waypoint_schema() for s in cat_a}
        schemas_b = {s.waypoint_schema() for s in cat_b}
        assert schemas_a != schemas_b

    def test_rejects_tiny_catalog(self):
        with pytest.raises(ValueError):
            make_world(0, 1)

    def test_default_difficulty_mix(self, world8):
        _, catalog = world8
        tags = [s.difficulty_tag for s in catalog]
        assert tags.count("pretrain") >= 6
        assert tags.count("fewshot") >= 2

    def test_fewshot_layout_is_fixed(self, world8):
        world, catalog = world8
        spec = next(s for s in catalog if s.difficulty_tag == "fewshot")
        s1 = world.init_state(spec, 3)
        s2 = world.init_state(spec, 99)
        assert np.array_equal(s1.effector, s2.effector)
        for a, b in zip(s1.objects, s2.objects):
            assert np.array_equal(a.position, b.position)

    def test_pretrain_layout_randomizes(self, world8):
        world, catalog = world8
        spec = next(s for s in catalog if s.difficulty_tag == "pretrain")
        s1 = world.init_state(spec, 3)
        s2 = world.init_state(spec, 99)
        assert not np.array_equal(s1.object_by_id("target").position,
                                  s2.object_by_id("target").position)


class TestDynamics:
    def test_step_index_increments(self, world8):
        world, catalog = world8
        state = world.init_state(catalog[0], 0)
        nxt = step(state, np.array([0.3, -0.2, -1.0]))
        assert nxt.step_index == state.step_index + 1
        assert state.step_index == 0  # input untouched

    def test_positions_stay_in_bounds(self, world8):
        world, catalog = world8
        state = world.init_state(catalog[0], 0)
        for _ in range(60):
            state = step(state, np.array([1.0, 1.0, -1.0]))
        assert np.all(state.effector >= 0.0) and np.all(state.effector <= 1.0)
        for obj in state.objects:
            assert np.all(obj.position >= 0.0) and np.all(obj.position <= 1.0)

    def test_rejects_nonfinite_action(self, world8):
        world, catalog = world8
        state = world.init_state(catalog[0], 0)
        with pytest.raises(ValueError):
            step(state, np.array([np.nan, 0.0, 0.0]))

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 10_000))
    def test_at_most_one_object_held(self, seed):
        world, catalog = make_world(0, 8)
        spec = next(s for s in catalog if s.template == "pick-place")
        rng = np.random.default_rng(seed)
        state = world.init_state(spec, seed)
        for _ in range(30):
            state = step(state, rng.uniform(-1, 1, 3))
            assert sum(o.held for o in state.objects) <= 1


class TestDemos:
    def test_demo_determinism_bit_identical(self, world8):
        world, catalog = world8
        spec = catalog[0]
        demos = [generate_demo(world, spec, "human", 5, 0.05) for _ in range(2)]
        assert np.array_equal(demos[0].frames, demos[1].frames)
        demos = [generate_demo(world, spec, "robot", 5, 0.05) for _ in range(2)]
        assert np.array_equal(demos[0].frames, demos[1].frames)
        assert np.array_equal(demos[0].actions, demos[1].actions)
        assert np.array_equal(demos[0].proprio, demos[1].proprio)

    def test_zero_noise_robot_demo_succeeds(self, world8):
        world, catalog = world8
        spec = world.spec([s for s in catalog if s.template == "reach"][0].skill_id)
        states, actions, _ = latent_trajectory(world, spec, 3, 0.0)
        final = step(states[-1], actions[-1])
        assert spec.success(final) or spec.success(states[-1])

    def test_human_twin_shares_length_and_strips_controls(self, world8):
        world, catalog = world8
        spec = catalog[0]
        robot = generate_demo(world, spec, "robot", 3, 0.0)
        human = generate_demo(world, spec, "human", 3, 0.0)
        assert human.T == robot.T
        assert human.proprio is None and human.actions is None
        assert robot.proprio.shape == (robot.T, 3)
        assert robot.actions.shape == (robot.T, 3)

    def test_embodiment_pairing_same_latent(self, world8):
        world, catalog = world8
        spec = catalog[1]
        _, acts_a, wps_a = latent_trajectory(world, spec, 7, 0.05)
        _, acts_b, wps_b = latent_trajectory(world, spec, 7, 0.05)
        assert len(wps_a) == len(wps_b)
        for a, b in zip(wps_a, wps_b):
            assert np.array_equal(a, b)
        assert np.array_equal(np.stack(acts_a), np.stack(acts_b))

    def test_frames_are_uint8_rgb(self, world8):
        world, catalog = world8
        demo = generate_demo(world, catalog[0], "human", 0, 0.0)
        assert demo.frames.dtype == np.uint8
        assert demo.frames.shape[1:] == (64, 64, 3)

    def test_push_expert_noise_monte_carlo(self, world8):
        world, catalog = world8
        spec = [s for s in catalog if s.template == "push"][0]
        wins = sum(
            rollout(world, ExpertRolloutPolicy(world, spec, 0.05), spec, i).success
            for i in range(100)
        )
        assert wins / 100 >= 0.95

    def test_zero_noise_expert_succeeds_on_every_skill(self, world8):
        world, catalog = world8
        for spec in catalog:
            for ep in (0, 1, 2):
                res = rollout(world, ExpertRolloutPolicy(world, spec, 0.0), spec, ep)
                assert res.success, (spec.skill_id, ep, res.reason)

    def test_noise_out_of_range_rejected(self, world8):
        world, catalog = world8
        with pytest.raises(ValueError):
            generate_demo(world, catalog[0], "robot", 0, 0.5)


class TestRollout:
    def test_zero_action_policy_fails(self, world8):
        world, catalog = world8
        spec = [s for s in catalog if s.template == "reach"][0]

        class Still:
            def act(self, frame, proprio):
                return np.array([0.0, 0.0, -1.0])

        res = rollout(world, Still(), spec, 0, max_steps=40)
        assert not res.success and res.reason == "max_steps"

    def test_nonfinite_policy_marked_failure(self, world8):
        world, catalog = world8

        class Broken:
            def act(self, frame, proprio):
                return np.array([np.inf, 0.0, 0.0])

        res = rollout(world, Broken(), catalog[0], 0)
        assert not res.success and res.reason == "non_finite_action"

    def test_rollout_deterministic(self, world8):
        world, catalog = world8
        spec = catalog[2]
        r1 = rollout(world, ExpertRolloutPolicy(world, spec, 0.05), spec, 9)
        r2 = rollout(world, ExpertRolloutPolicy(world, spec, 0.05), spec, 9)
        assert r1.success == r2.success and r1.steps == r2.steps
        assert np.array_equal(np.stack(r1.actions), np.stack(r2.actions))


class TestStorage:
    def test_round_trip_bit_exact(self, world8, tmp_path):
        world, catalog = world8
        for embodiment in ("robot", "human"):
            demo = generate_demo(world, catalog[0], embodiment, 4, 0.05)
            loaded = read_demo(write_demo(demo, tmp_path / embodiment))
            assert np.array_equal(loaded.frames, demo.frames)
            if embodiment == "robot":
                assert np.array_equal(loaded.proprio, demo.proprio)
                assert np.array_equal(loaded.actions, demo.actions)
            assert loaded.skill_id == demo.skill_id

    def test_corrupt_blob_reported_with_file(self, world8, tmp_path):
        world, catalog = world8
        demo = generate_demo(world, catalog[0], "robot", 4, 0.0)
        path = write_demo(demo, tmp_path / "demo")
        blob = path / "actions.f32"
        blob.write_bytes(blob.read_bytes()[:-8])
        problems = validate_demo_dir(path)
        assert len(problems) == 1 and "actions.f32" in problems[0]

    def test_version_mismatch_rejected(self, world8, tmp_path):
        world, catalog = world8
        demo = generate_demo(world, catalog[0], "human", 4, 0.0)
        path = write_demo(demo, tmp_path / "demo")
        manifest = (path / "manifest.json").read_text().replace('"format_version": 1', '"format_version": 99')
        (path / "manifest.json").write_text(manifest)
        with pytest.raises(DemoFormatError):
            read_demo(path)

    def test_corrupt_manifest_rejected(self, world8, tmp_path):
        world, catalog = world8
        demo = generate_demo(world, catalog[0], "human", 4, 0.0)
        path = write_demo(demo, tmp_path / "demo")
        (path / "manifest.json").write_text("{not json")
        problems = validate_demo_dir(path)
        assert len(problems) == 1 and "manifest.json" in problems[0]
