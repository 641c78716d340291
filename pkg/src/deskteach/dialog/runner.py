"""Drives a dialogue session against a user model and a skill backend."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Protocol

from .machine import (
    DONE,
    FAILED,
    SYSTEM_REQUESTS,
    USER_REQUESTS,
    DialogMachine,
    DialogState,
    Event,
    ExecutionResult,
    FinetuneResult,
    LookupResult,
    Request,
    SkillSearchResult,
    StepOutput,
    UserResponse,
)

DEFAULT_EVENT_BUDGET = 200


class UserModel(Protocol):
    def initial_instruction(self) -> str: ...
    def respond(self, state: DialogState, request: Request) -> UserResponse: ...


class SkillBackend(Protocol):
    def lookup(self, task: str) -> LookupResult: ...
    def skill_search(self, task: str, demo) -> SkillSearchResult: ...
    def execute(self, task: str, skill_id: str) -> ExecutionResult: ...
    def finetune(self, task: str, demos: list) -> FinetuneResult: ...


@dataclass
class EpisodeLog:
    status: str = "running"            # done | failed | budget_exceeded
    transitions: list[tuple[str, str, str]] = field(default_factory=list)
    utterances: list[str] = field(default_factory=list)   # robot line per transition
    tasks: list[str] = field(default_factory=list)        # current task per transition
    transcript: tuple = ()
    outcomes: tuple = ()
    finetunes: int = 0
    events_used: int = 0
    final_state: DialogState | None = None

    @property
    def questions_asked(self) -> int:
        """User-facing requests beyond the initial instruction."""
        return sum(1 for _, label, _ in self.transitions if label.startswith("req:"))


def _event_label(event: Event) -> str:
    if isinstance(event, UserResponse):
        return event.kind
    return type(event).__name__


def dispatch_system(backend: SkillBackend, request: Request) -> Event:
    if request.kind == "lookup":
        return backend.lookup(request.task)
    if request.kind == "skill_search":
        return backend.skill_search(request.task, request.payload)
    if request.kind == "execute":
        return backend.execute(request.task, request.skill_id)
    if request.kind == "finetune":
        return backend.finetune(request.task, request.payload)
    raise ValueError(f"unknown system request {request.kind!r}")


def run_with_user(
    machine: DialogMachine,
    user: UserModel,
    backend: SkillBackend,
    max_events: int = DEFAULT_EVENT_BUDGET,
) -> EpisodeLog:
    """Loop the machine to Done/Failed; deterministic for scripted users."""
    log = EpisodeLog()
    state, out = machine.start_episode(user.initial_instruction())
    log.transitions.append(("start", "instruction", state.node))
    log.utterances.append(out.utterance)
    log.tasks.append(state.current_task or "")

    while state.node not in (DONE, FAILED):
        if log.events_used >= max_events:
            log.status = "budget_exceeded"
            state = DialogState(**{**state.__dict__, "node": FAILED, "fail_reason": "step_budget"})
            break
        request = out.request
        if request is None:
            log.status = "failed"
            state = DialogState(**{**state.__dict__, "node": FAILED, "fail_reason": "no_pending_request"})
            break
        if request.kind in USER_REQUESTS:
            event = user.respond(state, request)
            label = f"req:{request.kind}->{_event_label(event)}"
        else:
            event = dispatch_system(backend, request)
            label = _event_label(event)
        prev = state.node
        state, out = machine.step(state, event)
        log.transitions.append((prev, label, state.node))
        log.utterances.append(out.utterance)
        log.tasks.append(state.current_task or "")
        log.events_used += 1

    if log.status == "running":
        log.status = "done" if state.node == DONE else "failed"
    log.transcript = state.transcript
    log.outcomes = state.outcomes
    log.finetunes = state.finetunes
    log.final_state = state
    return log
