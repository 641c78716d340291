"""Language generation behind the dialogue machine.

The default generator is a deterministic template per information need. An
optional live-LLM connector can be configured (endpoint in config, API key
via environment variable); any connector failure falls back to the template
so episodes always complete.
"""

from __future__ import annotations

import json
import os
import urllib.request
from typing import Protocol

LLM_KEY_ENV = "DESKTEACH_LLM_KEY"

TEMPLATES = {
    "clarify_instruction": "I could not find any tasks in that. What would you like me to do, step by step?",
    "plan_ack": "Got it. My plan: {plan}.",
    "working_on": "Working on '{task}'.",
    "direct_execute": "I know '{task}' and will do it now.",
    "propose_semantic": "For '{task}', my skill '{candidate}' sounds like the same thing. Shall I use it?",
    "ask_enactment": "I do not recognize '{task}'. Could you act it out with your hand so I can watch?",
    "enactment_received": "Thanks, let me compare that with what I can already do.",
    "propose_skill": "Your demonstration of '{task}' looks like my skill '{candidate}'. Shall I use it?",
    "ask_robot_demos": "I cannot do '{task}' yet. Please teleoperate the robot to show me; I need {count} more demonstration(s).",
    "finetune_started": "Thank you. I am training a new skill for '{task}' now; this may take a moment.",
    "finetune_done": "I learned a new skill '{skill}' for '{task}'. Executing it now.",
    "finetune_failed": "Training for '{task}' failed; I cannot continue this plan.",
    "executing_skill": "Executing '{skill}' for '{task}'.",
    "execute_report": "Task '{task}' {status}.",
    "episode_done": "All tasks are finished.",
    "ask_again": "Sorry, I did not catch that. Please answer yes or no for '{task}'.",
    "illegal_event": "I was not expecting '{event_kind}' right now; let us continue where we were.",
}


class LanguageGenerator(Protocol):
    def generate(self, state_summary: dict, need: str, **context) -> str: ...


class TemplateLanguageGenerator:
    """Fixed string per (need); always available, always nonempty."""

    def generate(self, state_summary: dict, need: str, **context) -> str:
        template = TEMPLATES.get(need)
        if template is None:
            raise KeyError(f"no utterance template for need {need!r}")
        out = template.format_map(_Defaulting(context))
        assert out.strip(), "generated utterance must be nonempty"
        return out


class _Defaulting(dict):
    def __missing__(self, key):
        return ""


class LlmLanguageGenerator:
    """Optional live connector; untested against a real endpoint by design.

    Prompts the endpoint with the machine's state summary and information
    need. On any failure (no credential, network, bad payload) it falls
    back to the deterministic template and records the fallback.
    """

    def __init__(self, endpoint: str, timeout: float = 5.0):
        self.endpoint = endpoint
        self.timeout = timeout
        self.template = TemplateLanguageGenerator()
        self.fallbacks = 0

    def generate(self, state_summary: dict, need: str, **context) -> str:
        fallback = self.template.generate(state_summary, need, **context)
        api_key = os.environ.get(LLM_KEY_ENV)
        if not api_key or not self.endpoint:
            self.fallbacks += 1
            return fallback
        try:
            body = json.dumps({
                "state": state_summary,
                "need": need,
                "context": context,
                "must_mention": [context.get("task", ""), str(context.get("count", ""))],
            }).encode()
            req = urllib.request.Request(
                self.endpoint, data=body,
                headers={"Content-Type": "application/json", "Authorization": f"Bearer {api_key}"},
            )
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                text = json.loads(resp.read().decode()).get("utterance", "")
            # The reply must carry the same information content as the template.
            task = context.get("task", "")
            if not text.strip() or (task and task not in text):
                raise ValueError("LLM reply missing required content")
            if "count" in context and str(context["count"]) not in text:
                raise ValueError("LLM reply missing required count")
            return text
        except Exception:
            self.fallbacks += 1
            return fallback
