"""Dialogue state machine, language generation, users, and the episode runner."""

from .language import LlmLanguageGenerator, TemplateLanguageGenerator
from .machine import (
    AWAIT_ENACTMENT,
    AWAIT_INSTRUCTION,
    AWAIT_ROBOT_DEMOS,
    DIRECT_EXECUTE,
    DONE,
    EXECUTING,
    FAILED,
    FINETUNING,
    NODES,
    PLAN_READY,
    PROPOSE_SEMANTIC,
    PROPOSE_SKILL_MATCH,
    DialogMachine,
    DialogState,
    ExecutionResult,
    FinetuneResult,
    LookupResult,
    Request,
    SkillSearchResult,
    StepOutput,
    UserResponse,
    classify_reply,
    parse_instruction,
)
from .runner import EpisodeLog, dispatch_system, run_with_user
from .users import RandomUser, ScriptedUser

__all__ = [
    "AWAIT_ENACTMENT", "AWAIT_INSTRUCTION", "AWAIT_ROBOT_DEMOS", "DIRECT_EXECUTE",
    "DONE", "EXECUTING", "FAILED", "FINETUNING", "NODES", "PLAN_READY",
    "PROPOSE_SEMANTIC", "PROPOSE_SKILL_MATCH",
    "DialogMachine", "DialogState", "EpisodeLog", "ExecutionResult",
    "FinetuneResult", "LlmLanguageGenerator", "LookupResult", "RandomUser",
    "Request", "ScriptedUser", "SkillSearchResult", "StepOutput",
    "TemplateLanguageGenerator", "UserResponse", "classify_reply",
    "dispatch_system", "parse_instruction", "run_with_user",
]
