import json
import time

import numpy as np
import pytest

from deskteach.harness import (
    ExperimentConfig,
    JobManager,
    generate_dataset,
    index_hash,
    load_dataset,
    make_scripted_user,
    run_episode,
    select_skills,
    validate_dataset,
    write_episode_log,
)
from deskteach.harness.datagen import DatasetError
from tests.conftest import tiny_config


class TestConfig:
    def test_json_round_trip(self, tmp_path):
        config = tiny_config(seed=7)
        config.save(tmp_path / "c.json")
        loaded = ExperimentConfig.from_file(tmp_path / "c.json")
        assert loaded == config

    def test_validation(self):
        with pytest.raises(ValueError):
            ExperimentConfig(rollouts_per_skill=0)
        with pytest.raises(ValueError):
            ExperimentConfig(catalog_size=4, n_pretrain_skills=4, n_fewshot_skills=2)


class TestDatagen:
    def test_generate_validate_load(self, tmp_path):
        config = tiny_config(demos_per_pretrain=3, demos_per_fewshot=2)
        out = generate_dataset(config, tmp_path / "ds")
        assert validate_dataset(out) == []
        index, demos = load_dataset(out)
        pre, few = select_skills(config, [s for s in _catalog(config)])
        assert len(demos[pre[0].skill_id]) == 3
        assert len(demos[few[0].skill_id]) == 2

    def test_index_hash_deterministic(self, tmp_path):
        config = tiny_config(demos_per_pretrain=2, demos_per_fewshot=1)
        h1 = index_hash(generate_dataset(config, tmp_path / "a"))
        h2 = index_hash(generate_dataset(config, tmp_path / "b"))
        assert h1 == h2

    def test_refuses_nonempty_without_force(self, tmp_path):
        config = tiny_config(demos_per_pretrain=1, demos_per_fewshot=1)
        out = generate_dataset(config, tmp_path / "ds")
        with pytest.raises(DatasetError):
            generate_dataset(config, out)
        generate_dataset(config, out, force=True)  # allowed with force

    def test_corrupt_blob_reported_precisely(self, tmp_path):
        config = tiny_config(demos_per_pretrain=2, demos_per_fewshot=1)
        out = generate_dataset(config, tmp_path / "ds")
        index = json.loads((out / "index.json").read_text())
        victim = out / index["entries"][0]["path"] / "frames.f32"
        victim.write_bytes(victim.read_bytes()[:-4])
        problems = validate_dataset(out)
        assert len(problems) == 1 and "frames.f32" in problems[0]
        assert index["entries"][0]["path"] in problems[0]

    def test_missing_dataset_error(self, tmp_path):
        with pytest.raises(DatasetError):
            load_dataset(tmp_path / "nope")


def _catalog(config):
    from deskteach.sim import make_world

    _, catalog = make_world(config.world_seed, config.catalog_size)
    return catalog


class TestJobs:
    def test_lifecycle_and_progress(self):
        jobs = JobManager()

        def work(progress):
            progress(0.5)
            return "result"

        job = jobs.submit("finetune", work)
        done = jobs.wait(job.job_id, timeout=10)
        assert done.state == "done"
        assert done.result == "result"
        assert done.progress == 1.0

    def test_failure_recorded(self):
        jobs = JobManager()

        def boom(progress):
            raise RuntimeError("nope")

        job = jobs.submit("pretrain", boom)
        done = jobs.wait(job.job_id, timeout=10)
        assert done.state == "failed"
        assert "nope" in done.message

    def test_states_only_move_forward(self):
        jobs = JobManager()
        job = jobs.submit("align-train", lambda p: time.sleep(0.05))
        jobs.wait(job.job_id, timeout=10)
        with pytest.raises(ValueError):
            job.advance("running")

    def test_sequential_single_writer(self):
        jobs = JobManager()
        order = []

        def make(i):
            def work(progress):
                order.append(("start", i))
                time.sleep(0.05)
                order.append(("end", i))
            return work

        a = jobs.submit("finetune", make(0))
        b = jobs.submit("finetune", make(1))
        jobs.wait(a.job_id, 10)
        jobs.wait(b.job_id, 10)
        assert order == [("start", 0), ("end", 0), ("start", 1), ("end", 1)]


class TestEpisodes:
    def test_all_known_plan_runs_clean(self, tiny_agent_factory):
        agent = tiny_agent_factory()
        known = [s.description for s in agent.world.catalog[:2]]
        user = make_scripted_user("always-agree", " then ".join(known), agent)
        log = run_episode(agent, user)
        assert log.status == "done"
        assert len(log.outcomes) == 2
        assert log.finetunes == 0
        assert log.questions_asked == 0

    def test_teach_one_skill_grows_library(self, tiny_agent_factory, tmp_path):
        agent = tiny_agent_factory()
        known = agent.world.catalog[0].description
        unknown = [s for s in agent.world.catalog if s.difficulty_tag == "fewshot"][0].description
        size_before = len(agent.library)
        user = make_scripted_user("teach-one-skill", f"{known} then {unknown}", agent)
        log = run_episode(agent, user)
        assert log.status == "done"
        assert log.finetunes == 1
        assert len(agent.library) == size_before + 1
        path = write_episode_log(log, tmp_path / "ep.jsonl")
        lines = [json.loads(l) for l in path.read_text().splitlines()]
        assert lines[-1]["node"] == "summary"
        assert all("node" in l and "event" in l for l in lines)

    def test_second_episode_asks_nothing(self, tiny_agent_factory):
        agent = tiny_agent_factory()
        unknown = [s for s in agent.world.catalog if s.difficulty_tag == "fewshot"][0].description
        plan = f"{agent.world.catalog[0].description} then {unknown}"
        log1 = run_episode(agent, make_scripted_user("teach-one-skill", plan, agent))
        assert log1.finetunes == 1
        log2 = run_episode(agent, make_scripted_user("teach-one-skill", plan, agent))
        assert log2.finetunes == 0
        assert log2.questions_asked == 0
        assert log2.status == "done"
