"""End-to-end episodes: the dialogue machine driving real components.

``SkillAgent`` bundles the world, the skill library, the adapter policy,
the alignment encoders, and a job manager, and implements the backend the
dialogue runner dispatches system requests to. Teaching a new skill runs
a tracked finetune job, swaps in the returned parameter store, and adds
the skill (with its reference trajectory and fresh adapter id) to the
library.
"""

from __future__ import annotations

import json
import re
import time
from dataclasses import dataclass
from pathlib import Path

from ..align.encoders import AlignmentModel
from ..dialog.machine import (
    DialogMachine,
    ExecutionResult,
    FinetuneResult,
    LookupResult,
    SkillSearchResult,
)
from ..dialog.runner import EpisodeLog, run_with_user
from ..dialog.users import ScriptedUser
from ..library.store import LibraryConfig, SkillLibrary
from ..policy.act import ActLoraPolicy
from ..policy.train import act_in_env, finetune_skill
from ..sim.catalog import SkillSpec, World
from ..sim.demos import generate_demo
from .config import ExperimentConfig
from .jobs import JobManager


def skill_id_for_task(task: str) -> str:
    slug = re.sub(r"[^a-z0-9]+", "-", task.lower()).strip("-")
    return f"taught-{slug}" if slug else "taught-skill"


class SkillAgent:
    """Implements the dialogue SkillBackend protocol over real components."""

    def __init__(
        self,
        config: ExperimentConfig,
        world: World,
        library: SkillLibrary,
        act_model: ActLoraPolicy,
        jobs: JobManager | None = None,
        execution_seed_base: int = 50_000,
    ):
        self.config = config
        self.world = world
        self.library = library
        self.act_model = act_model
        self.jobs = jobs or JobManager()
        self.execution_seed_base = execution_seed_base
        self._executions = 0
        self._spec_by_description = {s.description: s for s in world.catalog}

    # -- helpers -------------------------------------------------------------
    def spec_for_task(self, task: str) -> SkillSpec | None:
        if task in self._spec_by_description:
            return self._spec_by_description[task]
        # tolerate minor rephrasings: pick the catalog description with the
        # highest text-embedding cosine, if it is close enough
        best, best_score = None, 0.0
        query = self.library.text_embed(task)
        for desc, spec in self._spec_by_description.items():
            score = float(query @ self.library.text_embed(desc))
            if score > best_score:
                best, best_score = spec, score
        return best if best_score >= 0.8 else None

    # -- SkillBackend protocol -------------------------------------------------
    def lookup(self, task: str) -> LookupResult:
        exact = self.library.exact_match(task)
        res = self.library.search_semantic(task)
        return LookupResult(task, exact, res.best_skill, res.score, res.above_threshold)

    def skill_search(self, task: str, demo) -> SkillSearchResult:
        res = self.library.search_skill(demo)
        return SkillSearchResult(task, res.best_skill, res.score, res.above_threshold)

    def execute(self, task: str, skill_id: str) -> ExecutionResult:
        spec = self.spec_for_task(task)
        if spec is None or skill_id not in self.library:
            return ExecutionResult(task, skill_id, False)
        record = self.library.get(skill_id)
        seed = self.execution_seed_base + self._executions
        self._executions += 1
        result = act_in_env(self.act_model, record.adapter_id, self.world, spec, seed,
                            self.config.max_rollout_steps)
        return ExecutionResult(task, skill_id, result.success)

    def finetune(self, task: str, demos: list) -> FinetuneResult:
        job = self.start_finetune(task, demos)
        self.jobs.wait(job.job_id)
        done = self.jobs.get(job.job_id)
        if done.state != "done":
            return FinetuneResult(task, None, False, job_id=job.job_id)
        return FinetuneResult(task, done.result, True, job_id=job.job_id)

    def start_finetune(self, task: str, demos: list, on_done=None):
        """Submit the tracked finetune job; returns its JobStatus."""
        new_id = skill_id_for_task(task)

        def work(progress):
            model, _ = finetune_skill(
                self.act_model, new_id, demos, seed=self.config.seed,
                steps=self.config.finetune_steps, lr=self.config.finetune_lr,
                batch_size=self.config.policy_batch, progress_cb=progress)
            self.act_model = model
            self.library.adapter_registry = model
            self.library.add_skill(new_id, task, demos[0], adapter_id=new_id)
            return new_id

        return self.jobs.submit("finetune", work, on_done=on_done)


def build_library(config: ExperimentConfig, aligner: AlignmentModel,
                  act_model: ActLoraPolicy, world: World,
                  known_specs: list[SkillSpec]) -> SkillLibrary:
    """Populate a library with the policy's pretrained skills.

    The skill-space threshold is bound to the alignment model's decision
    threshold so the two never diverge."""
    library = SkillLibrary(
        LibraryConfig(config.semantic_threshold, aligner.config.decision_threshold),
        aligner=aligner,
        adapter_registry=act_model,
    )
    for spec in known_specs:
        reference = generate_demo(world, spec, "robot", 0, 0.0)
        library.add_skill(spec.skill_id, spec.description, reference, adapter_id=spec.skill_id)
    return library


def make_scripted_user(kind: str, instruction: str, agent: SkillAgent,
                       demo_seed_base: int = 70_000) -> ScriptedUser:
    """Scripted users for episode experiments.

    always-agree: accepts any proposal; teach-one-skill / always-reject:
    rejects proposals so unknown tasks are taught from demonstrations."""
    agree = kind in ("always-agree",)

    def enactment(task):
        spec = agent.spec_for_task(task)
        if spec is None:
            raise RuntimeError(f"no catalog skill matches task {task!r}")
        return generate_demo(agent.world, spec, "human", demo_seed_base, agent.config.demo_noise)

    def robot_demo(task, i):
        spec = agent.spec_for_task(task)
        if spec is None:
            raise RuntimeError(f"no catalog skill matches task {task!r}")
        return generate_demo(agent.world, spec, "robot", i, agent.config.fewshot_demo_noise)

    if kind not in ("always-agree", "always-reject", "teach-one-skill"):
        raise ValueError(f"unknown scripted user {kind!r}")
    return ScriptedUser(instruction, agree=agree,
                        enactment_provider=enactment, robot_demo_provider=robot_demo)


class InteractiveUser:
    """Plain-text prompt loop; demonstration requests fall back to scripted
    expert demos so a keyboard-only session can still teach skills."""

    def __init__(self, agent: SkillAgent, instruction: str | None = None):
        self.agent = agent
        self.instruction = instruction
        self._demo_count = 0

    def initial_instruction(self) -> str:
        if self.instruction is not None:
            return self.instruction
        return input("you> ")

    def respond(self, state, request):
        from ..dialog.machine import UserResponse

        if request.kind == "instruction":
            return UserResponse("instruction_list", text=input("you (tasks)> "))
        if request.kind == "agree_reject":
            return UserResponse("free_text", text=input("you (yes/no)> "))
        spec = self.agent.spec_for_task(request.task)
        if spec is None:
            return UserResponse("free_text", text="I cannot demonstrate that")
        if request.kind == "enactment":
            input("press enter to enact the task with your hand (scripted) > ")
            return UserResponse("enactment", demo=generate_demo(
                self.agent.world, spec, "human", 90_000, self.agent.config.demo_noise))
        input(f"press enter to teleoperate a demonstration ({request.payload} left) > ")
        self._demo_count += 1
        return UserResponse("robot_demo", demo=generate_demo(
            self.agent.world, spec, "robot", self._demo_count,
            self.agent.config.fewshot_demo_noise))


def run_episode(agent: SkillAgent, user, machine: DialogMachine | None = None,
                max_events: int | None = None) -> EpisodeLog:
    machine = machine or DialogMachine(demos_required=agent.config.demos_required)
    budget = max_events if max_events is not None else agent.config.episode_budget
    return run_with_user(machine, user, agent, max_events=budget)


def write_episode_log(log: EpisodeLog, path: str | Path) -> Path:
    """JSON lines, one event per line."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = []
    for i, (prev, label, node) in enumerate(log.transitions):
        lines.append(json.dumps({
            "ts": round(time.time(), 3),
            "node": node,
            "from": prev,
            "event": label,
            "utterance": log.utterances[i] if i < len(log.utterances) else "",
            "task": log.tasks[i] if i < len(log.tasks) else "",
        }))
    lines.append(json.dumps({
        "ts": round(time.time(), 3), "node": "summary", "event": log.status,
        "utterance": "", "task": "",
        "outcomes": list(map(list, log.outcomes)), "finetunes": log.finetunes,
    }))
    path.write_text("\n".join(lines) + "\n")
    return path
