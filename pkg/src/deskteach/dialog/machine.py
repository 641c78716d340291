"""Dialogue state machine for interactive skill acquisition.

The machine is pure: ``step(state, event)`` consumes one event (a user
response, a search result, or an execution/training result) and returns the
new state plus an output carrying the robot's utterance and at most one
pending request. Requests are dispatched by the runner: user-facing ones go
to the human, system ones to the skill/policy backend. Illegal events never
crash the machine; they leave the state unchanged and produce an
explanatory utterance.

Flow per task: an exact library member executes directly; otherwise a
semantic-space proposal (accept => execute); otherwise the machine asks for
a human enactment and searches skill space (accept => execute); otherwise
it collects robot demonstrations and finetunes a brand-new skill.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from typing import Any

from .language import LanguageGenerator, TemplateLanguageGenerator

# Nodes
AWAIT_INSTRUCTION = "AwaitInstruction"
PLAN_READY = "PlanReady"
DIRECT_EXECUTE = "DirectExecute"
PROPOSE_SEMANTIC = "ProposeSemantic"
AWAIT_ENACTMENT = "AwaitEnactment"
PROPOSE_SKILL_MATCH = "ProposeSkillMatch"
AWAIT_ROBOT_DEMOS = "AwaitRobotDemos"
FINETUNING = "Finetuning"
EXECUTING = "Executing"
DONE = "Done"
FAILED = "Failed"

NODES = (
    AWAIT_INSTRUCTION, PLAN_READY, DIRECT_EXECUTE, PROPOSE_SEMANTIC,
    AWAIT_ENACTMENT, PROPOSE_SKILL_MATCH, AWAIT_ROBOT_DEMOS, FINETUNING,
    EXECUTING, DONE, FAILED,
)

DEFAULT_DEMOS_REQUIRED = 5

AGREE_WORDS = {"yes", "y", "yeah", "yep", "sure", "ok", "okay", "agree", "correct", "right", "please do"}
REJECT_WORDS = {"no", "n", "nope", "never", "wrong", "reject", "incorrect", "don't", "dont"}


# ---------------------------------------------------------------------------
# Events


@dataclass
class UserResponse:
    kind: str            # instruction_list | agree | reject | enactment | robot_demo | free_text
    text: str = ""
    demo: Any = None     # Demonstration for enactment / robot_demo

    def __post_init__(self) -> None:
        if self.kind == "enactment" and getattr(self.demo, "embodiment", None) != "human":
            raise ValueError("enactment must carry a human demonstration")
        if self.kind == "robot_demo" and getattr(self.demo, "embodiment", None) != "robot":
            raise ValueError("robot_demo must carry a robot demonstration")


@dataclass
class LookupResult:
    """Combined membership + semantic search for one task."""
    task: str
    exact_skill: str | None
    best_skill: str | None
    score: float
    above_threshold: bool


@dataclass
class SkillSearchResult:
    task: str
    best_skill: str | None
    score: float
    above_threshold: bool


@dataclass
class ExecutionResult:
    task: str
    skill_id: str
    success: bool


@dataclass
class FinetuneResult:
    task: str
    skill_id: str | None
    success: bool
    job_id: str = ""


Event = UserResponse | LookupResult | SkillSearchResult | ExecutionResult | FinetuneResult


# ---------------------------------------------------------------------------
# Requests the machine hands to the runner


@dataclass
class Request:
    kind: str            # see below
    task: str = ""
    skill_id: str = ""
    payload: Any = None

# user-facing kinds: "instruction", "agree_reject", "enactment", "robot_demo"
# system kinds: "lookup", "skill_search", "execute", "finetune"
USER_REQUESTS = ("instruction", "agree_reject", "enactment", "robot_demo")
SYSTEM_REQUESTS = ("lookup", "skill_search", "execute", "finetune")


@dataclass
class StepOutput:
    utterance: str
    request: Request | None


@dataclass
class DialogState:
    node: str = AWAIT_INSTRUCTION
    action_list: tuple[str, ...] = ()
    current_task: str | None = None
    candidate_skill: str | None = None
    candidate_score: float = 0.0
    enactment: Any = None
    collected_demos: tuple = ()
    demos_required: int = DEFAULT_DEMOS_REQUIRED
    transcript: tuple[tuple[str, str], ...] = ()
    outcomes: tuple[tuple[str, str, bool], ...] = ()   # (task, skill_id, success)
    finetunes: int = 0
    fail_reason: str = ""

    def with_robot_line(self, utterance: str) -> "DialogState":
        return replace(self, transcript=self.transcript + (("robot", utterance),))

    def with_human_line(self, text: str) -> "DialogState":
        return replace(self, transcript=self.transcript + (("human", text),))


def parse_instruction(text: str) -> list[str]:
    """Template parser: strip a goal prefix before ':', then split on
    connectives and enumeration punctuation."""
    text = text.strip()
    if not text:
        return []
    if ":" in text:
        text = text.split(":", 1)[1]
    parts = re.split(r",|;|\bthen\b|\bafter that\b|\band\b", text)
    tasks = []
    for part in parts:
        task = re.sub(r"^\s*(first|next|finally|please)\b", "", part.strip(), flags=re.I).strip(" .!")
        if task:
            tasks.append(task)
    return tasks


def classify_reply(text: str) -> str:
    """agree | reject | unclear, by keyword matching."""
    words = set(re.findall(r"[a-z']+", text.lower()))
    if words & AGREE_WORDS and not words & REJECT_WORDS:
        return "agree"
    if words & REJECT_WORDS and not words & AGREE_WORDS:
        return "reject"
    return "unclear"


class DialogMachine:
    """Owns the transition function; holds no mutable session state."""

    def __init__(self, language: LanguageGenerator | None = None,
                 demos_required: int = DEFAULT_DEMOS_REQUIRED):
        self.language = language or TemplateLanguageGenerator()
        self.demos_required = demos_required

    # -- helpers -----------------------------------------------------------
    def _say(self, state: DialogState, need: str, **context) -> tuple[DialogState, str]:
        context.setdefault("task", state.current_task or "")
        context.setdefault("candidate", state.candidate_skill or "")
        utterance = self.language.generate(
            {"node": state.node, "tasks_left": len(state.action_list)}, need, **context
        )
        return state.with_robot_line(utterance), utterance

    def _advance_plan(self, state: DialogState) -> tuple[DialogState, StepOutput]:
        if not state.action_list:
            state = replace(state, node=DONE, current_task=None)
            state, utterance = self._say(state, "episode_done")
            return state, StepOutput(utterance, None)
        task = state.action_list[0]
        state = replace(state, node=PLAN_READY, current_task=task, candidate_skill=None,
                        candidate_score=0.0, enactment=None, collected_demos=())
        state, utterance = self._say(state, "working_on", task=task)
        return state, StepOutput(utterance, Request("lookup", task=task))

    def _pop_and_continue(self, state: DialogState, result: ExecutionResult) -> tuple[DialogState, StepOutput]:
        outcomes = state.outcomes + ((result.task, result.skill_id, result.success),)
        state = replace(state, outcomes=outcomes, action_list=state.action_list[1:])
        state, utterance = self._say(
            state, "execute_report", task=result.task,
            status="done" if result.success else "failed",
        )
        next_state, out = self._advance_plan(state)
        return next_state, StepOutput(f"{utterance} {out.utterance}", out.request)

    def _illegal(self, state: DialogState, event: Event) -> tuple[DialogState, StepOutput]:
        kind = getattr(event, "kind", type(event).__name__)
        state, utterance = self._say(state, "illegal_event", event_kind=str(kind))
        return state, StepOutput(utterance, self._reissue_request(state))

    def _reissue_request(self, state: DialogState) -> Request | None:
        """The pending request implied by the current node, for re-prompting."""
        if state.node == AWAIT_INSTRUCTION:
            return Request("instruction")
        if state.node in (PROPOSE_SEMANTIC, PROPOSE_SKILL_MATCH):
            return Request("agree_reject", task=state.current_task or "",
                           skill_id=state.candidate_skill or "")
        if state.node == AWAIT_ENACTMENT:
            return Request("enactment", task=state.current_task or "")
        if state.node == AWAIT_ROBOT_DEMOS:
            remaining = state.demos_required - len(state.collected_demos)
            return Request("robot_demo", task=state.current_task or "", payload=remaining)
        return None

    # -- entry points ------------------------------------------------------
    def start_episode(self, instruction: str) -> tuple[DialogState, StepOutput]:
        state = DialogState(demos_required=self.demos_required)
        if instruction:
            state = state.with_human_line(instruction)
        tasks = parse_instruction(instruction)
        if not tasks:
            state, utterance = self._say(state, "clarify_instruction")
            return state, StepOutput(utterance, Request("instruction"))
        state = replace(state, action_list=tuple(tasks))
        state, utterance = self._say(state, "plan_ack", plan=", ".join(tasks))
        next_state, out = self._advance_plan(state)
        return next_state, StepOutput(f"{utterance} {out.utterance}", out.request)

    def step(self, state: DialogState, event: Event) -> tuple[DialogState, StepOutput]:
        if isinstance(event, UserResponse):
            shown = event.text or event.kind
            state = state.with_human_line(shown)
        handler = getattr(self, f"_on_{_snake(state.node)}", None)
        if handler is None:
            return self._illegal(state, event)
        return handler(state, event)

    # -- per-node handlers ---------------------------------------------------
    def _on_await_instruction(self, state, event):
        if isinstance(event, UserResponse) and event.kind in ("instruction_list", "free_text"):
            tasks = parse_instruction(event.text)
            if not tasks:
                state, utterance = self._say(state, "clarify_instruction")
                return state, StepOutput(utterance, Request("instruction"))
            state = replace(state, action_list=tuple(tasks))
            return self._advance_plan(state)
        return self._illegal(state, event)

    def _on_plan_ready(self, state, event):
        if isinstance(event, LookupResult) and event.task == state.current_task:
            if event.exact_skill is not None:
                state = replace(state, node=DIRECT_EXECUTE, candidate_skill=event.exact_skill)
                state, utterance = self._say(state, "direct_execute", skill=event.exact_skill)
                return state, StepOutput(
                    utterance, Request("execute", task=event.task, skill_id=event.exact_skill))
            if event.above_threshold and event.best_skill is not None:
                state = replace(state, node=PROPOSE_SEMANTIC,
                                candidate_skill=event.best_skill, candidate_score=event.score)
                state, utterance = self._say(state, "propose_semantic", candidate=event.best_skill)
                return state, StepOutput(
                    utterance, Request("agree_reject", task=event.task, skill_id=event.best_skill))
            state = replace(state, node=AWAIT_ENACTMENT)
            state, utterance = self._say(state, "ask_enactment")
            return state, StepOutput(utterance, Request("enactment", task=event.task))
        return self._illegal(state, event)

    def _propose_reply(self, state, event, on_reject):
        if isinstance(event, UserResponse):
            verdict = event.kind if event.kind in ("agree", "reject") else (
                classify_reply(event.text) if event.kind == "free_text" else "illegal")
            if verdict == "agree":
                skill = state.candidate_skill
                state = replace(state, node=EXECUTING)
                state, utterance = self._say(state, "executing_skill", skill=skill)
                return state, StepOutput(
                    utterance, Request("execute", task=state.current_task or "", skill_id=skill))
            if verdict == "reject":
                return on_reject(state)
            if verdict == "unclear":
                state, utterance = self._say(state, "ask_again")
                return state, StepOutput(utterance, self._reissue_request(state))
        return self._illegal(state, event)

    def _on_propose_semantic(self, state, event):
        def rejected(state):
            state = replace(state, node=AWAIT_ENACTMENT, candidate_skill=None)
            state, utterance = self._say(state, "ask_enactment")
            return state, StepOutput(utterance, Request("enactment", task=state.current_task or ""))
        return self._propose_reply(state, event, rejected)

    def _on_await_enactment(self, state, event):
        if isinstance(event, UserResponse) and event.kind == "enactment":
            state = replace(state, enactment=event.demo)
            state, utterance = self._say(state, "enactment_received")
            return state, StepOutput(
                utterance, Request("skill_search", task=state.current_task or "", payload=event.demo))
        if isinstance(event, SkillSearchResult) and state.enactment is not None:
            if event.above_threshold and event.best_skill is not None:
                state = replace(state, node=PROPOSE_SKILL_MATCH,
                                candidate_skill=event.best_skill, candidate_score=event.score)
                state, utterance = self._say(state, "propose_skill", candidate=event.best_skill)
                return state, StepOutput(
                    utterance, Request("agree_reject", task=event.task, skill_id=event.best_skill))
            return self._request_demos(replace(state, candidate_skill=None))
        return self._illegal(state, event)

    def _request_demos(self, state) -> tuple[DialogState, StepOutput]:
        remaining = state.demos_required - len(state.collected_demos)
        state = replace(state, node=AWAIT_ROBOT_DEMOS)
        state, utterance = self._say(state, "ask_robot_demos", count=remaining)
        return state, StepOutput(
            utterance, Request("robot_demo", task=state.current_task or "", payload=remaining))

    def _on_propose_skill_match(self, state, event):
        def rejected(state):
            return self._request_demos(replace(state, candidate_skill=None))
        return self._propose_reply(state, event, rejected)

    def _on_await_robot_demos(self, state, event):
        if isinstance(event, UserResponse) and event.kind == "robot_demo":
            demos = state.collected_demos + (event.demo,)
            state = replace(state, collected_demos=demos)
            if len(demos) < state.demos_required:
                return self._request_demos(state)
            state = replace(state, node=FINETUNING)
            state, utterance = self._say(state, "finetune_started")
            return state, StepOutput(
                utterance,
                Request("finetune", task=state.current_task or "", payload=list(demos)),
            )
        return self._illegal(state, event)

    def _on_finetuning(self, state, event):
        if isinstance(event, FinetuneResult):
            if not event.success or event.skill_id is None:
                state = replace(state, node=FAILED, fail_reason="finetune_failed")
                state, utterance = self._say(state, "finetune_failed")
                return state, StepOutput(utterance, None)
            state = replace(state, node=EXECUTING, finetunes=state.finetunes + 1,
                            candidate_skill=event.skill_id)
            state, utterance = self._say(state, "finetune_done", skill=event.skill_id)
            return state, StepOutput(
                utterance, Request("execute", task=state.current_task or "", skill_id=event.skill_id))
        return self._illegal(state, event)

    def _on_direct_execute(self, state, event):
        if isinstance(event, ExecutionResult):
            return self._pop_and_continue(state, event)
        return self._illegal(state, event)

    def _on_executing(self, state, event):
        if isinstance(event, ExecutionResult):
            return self._pop_and_continue(state, event)
        return self._illegal(state, event)

    def _on_done(self, state, event):
        return self._illegal(state, event)

    def _on_failed(self, state, event):
        return self._illegal(state, event)


def _snake(node: str) -> str:
    return re.sub(r"(?<!^)(?=[A-Z])", "_", node).lower()
