"""Training-job tracking with a single background worker.

One job runs at a time per manager (the single-writer rule for parameter
stores); states only move forward: queued -> running -> done | failed.
"""

from __future__ import annotations

import threading
import traceback
import uuid
from dataclasses import dataclass, field
from typing import Any, Callable

_ORDER = {"queued": 0, "running": 1, "done": 2, "failed": 2}


@dataclass
class JobStatus:
    job_id: str
    kind: str                       # pretrain | finetune | align-train
    state: str = "queued"
    progress: float = 0.0
    message: str = ""
    result: Any = None

    def advance(self, state: str) -> None:
        if _ORDER[state] < _ORDER[self.state]:
            raise ValueError(f"job state cannot move {self.state} -> {state}")
        self.state = state

    def view(self) -> dict:
        return {
            "job_id": self.job_id,
            "kind": self.kind,
            "state": self.state,
            "progress": round(self.progress, 4),
            "message": self.message,
        }


class JobManager:
    def __init__(self):
        self._jobs: dict[str, JobStatus] = {}
        self._order: list[str] = []
        self._lock = threading.Lock()
        self._queue: list[tuple[JobStatus, Callable, Callable | None]] = []
        self._wake = threading.Condition(self._lock)
        self._worker: threading.Thread | None = None

    def submit(self, kind: str, fn: Callable[[Callable[[float], None]], Any],
               on_done: Callable[[JobStatus], None] | None = None) -> JobStatus:
        """fn receives a progress callback taking a fraction in [0, 1]."""
        job = JobStatus(job_id=uuid.uuid4().hex[:12], kind=kind)
        with self._lock:
            self._jobs[job.job_id] = job
            self._order.append(job.job_id)
            self._queue.append((job, fn, on_done))
            if self._worker is None or not self._worker.is_alive():
                self._worker = threading.Thread(target=self._run, daemon=True)
                self._worker.start()
            self._wake.notify_all()
        return job

    def _run(self) -> None:
        while True:
            with self._lock:
                if not self._queue:
                    return
                job, fn, on_done = self._queue.pop(0)
                job.advance("running")

            def progress(frac: float, job=job) -> None:
                job.progress = max(job.progress, min(1.0, float(frac)))

            try:
                job.result = fn(progress)
                job.progress = 1.0
                job.advance("done")
            except Exception as exc:  # noqa: BLE001 - job failures are data
                job.message = f"{type(exc).__name__}: {exc}"
                job.advance("failed")
                traceback.print_exc()
            if on_done is not None:
                try:
                    on_done(job)
                except Exception:
                    traceback.print_exc()

    def get(self, job_id: str) -> JobStatus:
        with self._lock:
            return self._jobs[job_id]

    def list(self) -> list[JobStatus]:
        with self._lock:
            return [self._jobs[j] for j in self._order]

    def wait(self, job_id: str, timeout: float = 3600.0) -> JobStatus:
        import time

        deadline = time.time() + timeout
        while time.time() < deadline:
            job = self.get(job_id)
            if job.state in ("done", "failed"):
                return job
            time.sleep(0.02)
        raise TimeoutError(f"job {job_id} did not finish in {timeout}s")
