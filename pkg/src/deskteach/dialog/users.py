"""User models: scripted ones for tests and experiments, a random one for fuzzing."""

from __future__ import annotations

from typing import Callable

import numpy as np

from ..seeding import rng_for
from .machine import DialogState, Request, UserResponse


class ScriptedUser:
    """Deterministic user: fixed instruction, fixed agree/reject policy, and
    providers that supply demonstrations on request."""

    def __init__(
        self,
        instruction: str,
        agree: bool | Callable[[DialogState, Request], bool] = True,
        enactment_provider: Callable[[str], object] | None = None,
        robot_demo_provider: Callable[[str, int], object] | None = None,
    ):
        self.instruction = instruction
        self.agree = agree
        self.enactment_provider = enactment_provider
        self.robot_demo_provider = robot_demo_provider
        self._demo_counter: dict[str, int] = {}

    def initial_instruction(self) -> str:
        return self.instruction

    def respond(self, state: DialogState, request: Request) -> UserResponse:
        if request.kind == "instruction":
            return UserResponse("instruction_list", text=self.instruction)
        if request.kind == "agree_reject":
            agree = self.agree(state, request) if callable(self.agree) else self.agree
            return UserResponse("agree" if agree else "reject")
        if request.kind == "enactment":
            if self.enactment_provider is None:
                raise RuntimeError("scripted user has no enactment provider")
            return UserResponse("enactment", demo=self.enactment_provider(request.task))
        if request.kind == "robot_demo":
            if self.robot_demo_provider is None:
                raise RuntimeError("scripted user has no robot demo provider")
            idx = self._demo_counter.get(request.task, 0)
            self._demo_counter[request.task] = idx + 1
            return UserResponse("robot_demo", demo=self.robot_demo_provider(request.task, idx))
        raise ValueError(f"unknown user request {request.kind!r}")


class RandomUser:
    """Fuzzing user: replies with arbitrary response kinds, often illegal for
    the current node. Needs one human and one robot demo to hand out."""

    FREE_TEXTS = ("", "maybe", "yes", "no", "what?", "do the thing", "yes and no",
                  "place bread, slice cheese", "hmm " * 5)

    def __init__(self, seed: int, human_demo, robot_demo):
        self.rng = rng_for("random-user", seed)
        self.human_demo = human_demo
        self.robot_demo = robot_demo

    def initial_instruction(self) -> str:
        if self.rng.random() < 0.2:
            return ""
        n = int(self.rng.integers(1, 4))
        return ", ".join(f"task {self.rng.integers(100)}" for _ in range(n))

    def respond(self, state: DialogState, request: Request) -> UserResponse:
        kind = str(self.rng.choice(
            ["agree", "reject", "free_text", "enactment", "robot_demo", "instruction_list"]))
        if kind == "enactment":
            return UserResponse("enactment", demo=self.human_demo)
        if kind == "robot_demo":
            return UserResponse("robot_demo", demo=self.robot_demo)
        if kind in ("free_text", "instruction_list"):
            return UserResponse(kind, text=str(self.rng.choice(self.FREE_TEXTS)))
        return UserResponse(kind)
