"""HTTP service: dialogue sessions, demonstration upload/recording, skills,
jobs, and run records. JSON request/response bodies; demonstration payloads
are binary (multipart files in the demo directory format).

System requests from the dialogue machine are resolved server-side:
searches and executions synchronously, finetunes as tracked background
jobs (the session sits in the Finetuning node until its job completes).
"""

from __future__ import annotations

import base64
import json
import tempfile
import threading
import time
import uuid
from pathlib import Path

import numpy as np
from fastapi import FastAPI, File, UploadFile
from fastapi.responses import JSONResponse

from ..dialog.machine import (
    DONE,
    FAILED,
    SYSTEM_REQUESTS,
    DialogMachine,
    FinetuneResult,
    UserResponse,
)
from ..dialog.runner import dispatch_system
from ..sim.demos import Demonstration
from ..sim.render import render_frame
from ..sim.storage import DemoFormatError, read_demo
from ..sim.world import step as world_step
from .config import ExperimentConfig
from .episode import SkillAgent, skill_id_for_task
from .session_setup import prepare_agent

LONG_POLL_INTERVAL = 0.05


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": {"code": code, "message": message}})


class Recorder:
    """Step-by-step demonstration capture in the simulator."""

    def __init__(self, agent: SkillAgent, task: str, embodiment: str):
        spec = agent.spec_for_task(task)
        if spec is None:
            raise KeyError(task)
        self.agent = agent
        self.spec = spec
        self.embodiment = embodiment
        self.task = task
        self.state = agent.world.init_state(spec, int(time.time() * 1000) % 100_000)
        self.states = [self.state]
        self.actions: list[np.ndarray] = []

    def frame(self) -> np.ndarray:
        return render_frame(self.state, self.spec, self.embodiment)

    def step(self, action) -> None:
        action = np.asarray(action, dtype=np.float64)
        self.actions.append(action)
        self.state = world_step(self.state, action)
        self.states.append(self.state)

    def to_demo(self) -> Demonstration:
        T = len(self.actions)
        if T < 2:
            raise ValueError("recording too short")
        frames = np.stack([
            render_frame(s, self.spec, self.embodiment) for s in self.states[:T]
        ])
        if self.embodiment == "human":
            return Demonstration("human", frames, None, None, skill_id_for_task(self.task))
        proprio = np.stack([s.proprio() for s in self.states[:T]]).astype(np.float32)
        actions = np.stack(self.actions).astype(np.float32)
        return Demonstration("robot", frames, proprio, actions, skill_id_for_task(self.task))

    def view(self) -> dict:
        frame = self.frame()
        return {
            "frame_b64": base64.b64encode(frame.tobytes()).decode(),
            "frame_shape": list(frame.shape),
            "steps": len(self.actions),
            "proprio": self.state.proprio().tolist(),
            "embodiment": self.embodiment,
            "task": self.task,
        }


class Session:
    def __init__(self, machine: DialogMachine, instruction: str):
        self.session_id = uuid.uuid4().hex[:12]
        self.machine = machine
        self.lock = threading.RLock()
        self.state, self.out = machine.start_episode(instruction)
        self.recorder: Recorder | None = None
        self.waiting_job: str | None = None

    def pending(self) -> dict | None:
        req = self.out.request
        if req is None or req.kind in SYSTEM_REQUESTS:
            if self.state.node == "Finetuning":
                return {"kind": "training", "task": self.state.current_task or "",
                        "job_id": self.waiting_job}
            return None
        payload = {"kind": req.kind, "task": req.task}
        if req.kind == "robot_demo":
            payload["remaining"] = req.payload
        if req.kind == "agree_reject":
            payload["candidate"] = req.skill_id
        return payload

    def view(self) -> dict:
        return {
            "session_id": self.session_id,
            "node": self.state.node,
            "transcript": [{"speaker": s, "text": t} for s, t in self.state.transcript],
            "pending": self.pending(),
            "utterance": self.out.utterance,
            "outcomes": [{"task": t, "skill_id": s, "success": ok}
                         for t, s, ok in self.state.outcomes],
            "finetunes": self.state.finetunes,
            "tasks_left": list(self.state.action_list),
        }


def create_app(config: ExperimentConfig | None = None, checkpoint_dir=None,
               agent: SkillAgent | None = None) -> FastAPI:
    config = config or ExperimentConfig()
    if agent is None:
        agent = prepare_agent(config, checkpoint_dir=checkpoint_dir)
    machine = DialogMachine(demos_required=config.demos_required)
    sessions: dict[str, Session] = {}
    app = FastAPI(title="deskteach service")
    app.state.agent = agent

    def advance(sess: Session) -> None:
        """Resolve system requests until a user request, a job, or a terminal node."""
        while (sess.out.request is not None
               and sess.out.request.kind in SYSTEM_REQUESTS
               and sess.state.node not in (DONE, FAILED)):
            req = sess.out.request
            if req.kind == "finetune":
                job = agent.start_finetune(
                    req.task, req.payload,
                    on_done=lambda j, sid=sess.session_id: _job_done(sid, j))
                sess.waiting_job = job.job_id
                return
            event = dispatch_system(agent, req)
            sess.state, sess.out = machine.step(sess.state, event)

    def _job_done(session_id: str, job) -> None:
        sess = sessions.get(session_id)
        if sess is None:
            return
        with sess.lock:
            ok = job.state == "done"
            result = FinetuneResult(sess.state.current_task or "",
                                    job.result if ok else None, ok, job_id=job.job_id)
            sess.state, sess.out = machine.step(sess.state, result)
            sess.waiting_job = None
            advance(sess)

    def _get(session_id: str) -> Session | None:
        return sessions.get(session_id)

    # ------------------------------------------------------------- sessions
    @app.post("/sessions")
    def create_session(body: dict):
        instruction = str(body.get("instruction", ""))
        sess = Session(machine, instruction)
        sessions[sess.session_id] = sess
        with sess.lock:
            advance(sess)
            return sess.view()

    @app.get("/sessions")
    def list_sessions():
        return [s.view() for s in sessions.values()]

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        sess = _get(session_id)
        if sess is None:
            return _error(404, "unknown_session", f"no session {session_id}")
        with sess.lock:
            return sess.view()

    @app.post("/sessions/{session_id}/turns")
    def post_turn(session_id: str, body: dict):
        sess = _get(session_id)
        if sess is None:
            return _error(404, "unknown_session", f"no session {session_id}")
        kind = body.get("kind", "text")
        text = str(body.get("text", ""))
        if kind in ("agree", "reject"):
            event = UserResponse(kind)
        elif kind in ("text", "free_text", "instruction", "instruction_list"):
            resp_kind = "instruction_list" if sess.state.node == "AwaitInstruction" else "free_text"
            if not text.strip():
                return _error(422, "empty_text", "turn text must be nonempty")
            event = UserResponse(resp_kind, text=text)
        else:
            return _error(422, "bad_turn_kind", f"unknown turn kind {kind!r}")
        with sess.lock:
            sess.state, sess.out = machine.step(sess.state, event)
            advance(sess)
            return sess.view()

    @app.get("/sessions/{session_id}/pending")
    def poll_pending(session_id: str, timeout: float = 20.0):
        sess = _get(session_id)
        if sess is None:
            return _error(404, "unknown_session", f"no session {session_id}")
        deadline = time.time() + min(timeout, 55.0)
        while time.time() < deadline:
            with sess.lock:
                pending = sess.pending()
                if pending is not None and pending["kind"] != "training":
                    return {"pending": pending, "node": sess.state.node,
                            "utterance": sess.out.utterance}
                if sess.state.node in (DONE, FAILED):
                    return {"pending": None, "node": sess.state.node,
                            "utterance": sess.out.utterance}
            time.sleep(LONG_POLL_INTERVAL)
        with sess.lock:
            return {"pending": sess.pending(), "node": sess.state.node,
                    "utterance": sess.out.utterance}

    # ---------------------------------------------------- demonstrations
    def _submit_demo(sess: Session, demo: Demonstration):
        pending = sess.pending() or {}
        want = pending.get("kind")
        if want == "enactment":
            if demo.embodiment != "human":
                return _error(422, "wrong_embodiment", "enactment must be a human demonstration")
            event = UserResponse("enactment", demo=demo)
        elif want == "robot_demo":
            if demo.embodiment != "robot":
                return _error(422, "wrong_embodiment", "teaching needs robot demonstrations")
            event = UserResponse("robot_demo", demo=demo)
        else:
            return _error(409, "no_demo_requested", f"machine is not waiting for a demonstration "
                          f"(pending={want})")
        sess.state, sess.out = machine.step(sess.state, event)
        advance(sess)
        return sess.view()

    @app.post("/sessions/{session_id}/demos")
    async def upload_demo(session_id: str,
                          manifest: UploadFile = File(...),
                          frames: UploadFile = File(...),
                          proprio: UploadFile | None = File(None),
                          actions: UploadFile | None = File(None)):
        sess = _get(session_id)
        if sess is None:
            return _error(404, "unknown_session", f"no session {session_id}")
        with tempfile.TemporaryDirectory() as tmp:
            tmp_path = Path(tmp) / "demo"
            tmp_path.mkdir()
            (tmp_path / "manifest.json").write_bytes(await manifest.read())
            (tmp_path / "frames.f32").write_bytes(await frames.read())
            if proprio is not None:
                (tmp_path / "proprio.f32").write_bytes(await proprio.read())
            if actions is not None:
                (tmp_path / "actions.f32").write_bytes(await actions.read())
            try:
                demo = read_demo(tmp_path)
            except DemoFormatError as exc:
                return _error(422, "invalid_demonstration", str(exc))
        with sess.lock:
            return _submit_demo(sess, demo)

    # ------------------------------------------------------------ recorder
    @app.post("/sessions/{session_id}/recorder/start")
    def recorder_start(session_id: str, body: dict):
        sess = _get(session_id)
        if sess is None:
            return _error(404, "unknown_session", f"no session {session_id}")
        embodiment = body.get("embodiment", "")
        if embodiment not in ("human", "robot"):
            return _error(422, "bad_embodiment", "embodiment must be human or robot")
        with sess.lock:
            pending = sess.pending() or {}
            want = {"enactment": "human", "robot_demo": "robot"}.get(pending.get("kind"))
            if want is None:
                return _error(409, "no_demo_requested", "machine is not waiting for a demonstration")
            if want != embodiment:
                return _error(422, "wrong_embodiment", f"machine expects a {want} demonstration")
            try:
                sess.recorder = Recorder(agent, pending["task"], embodiment)
            except KeyError:
                return _error(409, "unknown_task", f"no simulator task for {pending['task']!r}")
            return sess.recorder.view()

    @app.post("/sessions/{session_id}/recorder/step")
    def recorder_step(session_id: str, body: dict):
        sess = _get(session_id)
        if sess is None:
            return _error(404, "unknown_session", f"no session {session_id}")
        with sess.lock:
            if sess.recorder is None:
                return _error(409, "no_recording", "start the recorder first")
            action = body.get("action")
            if (not isinstance(action, (list, tuple)) or len(action) != 3
                    or not all(isinstance(a, (int, float)) for a in action)
                    or not np.all(np.isfinite(action))):
                return _error(422, "bad_action", "action must be 3 finite numbers")
            sess.recorder.step(action)
            return sess.recorder.view()

    @app.post("/sessions/{session_id}/recorder/finish")
    def recorder_finish(session_id: str):
        sess = _get(session_id)
        if sess is None:
            return _error(404, "unknown_session", f"no session {session_id}")
        with sess.lock:
            if sess.recorder is None:
                return _error(409, "no_recording", "start the recorder first")
            try:
                demo = sess.recorder.to_demo()
            except ValueError:
                return _error(422, "recording_too_short", "record at least 2 steps before submitting")
            sess.recorder = None
            return _submit_demo(sess, demo)

    # ---------------------------------------------------------- skills/jobs
    @app.get("/skills")
    def list_skills():
        return [{"skill_id": r.skill_id, "description": r.description,
                 "adapter_id": r.adapter_id} for r in agent.library.records()]

    @app.get("/jobs")
    def list_jobs():
        return [j.view() for j in agent.jobs.list()]

    @app.get("/jobs/{job_id}")
    def get_job(job_id: str):
        try:
            return agent.jobs.get(job_id).view()
        except KeyError:
            return _error(404, "unknown_job", f"no job {job_id}")

    @app.get("/runs")
    def list_runs():
        out = Path(config.output_dir)
        if not out.exists():
            return []
        return [json.loads(p.read_text()) for p in sorted(out.glob("run_*.json"))]

    @app.get("/runs/{run_id}")
    def get_run(run_id: str):
        path = Path(config.output_dir) / f"run_{run_id}.json"
        if not path.exists():
            return _error(404, "unknown_run", f"no run {run_id}")
        return json.loads(path.read_text())

    return app
