/**
 * Typed client for the dialogue service JSON endpoints.
 * The console talks to the backend exclusively through this module.
 */

export interface TranscriptLine {
  speaker: string;
  text: string;
}

export interface Pending {
  kind: "instruction" | "agree_reject" | "enactment" | "robot_demo" | "training";
  task: string;
  remaining?: number;
  candidate?: string;
  job_id?: string | null;
}

export interface Outcome {
  task: string;
  skill_id: string;
  success: boolean;
}

export interface SessionView {
  session_id: string;
  node: string;
  transcript: TranscriptLine[];
  pending: Pending | null;
  utterance: string;
  outcomes: Outcome[];
  finetunes: number;
  tasks_left: string[];
}

export interface Skill {
  skill_id: string;
  description: string;
  adapter_id: string;
}

export interface Job {
  job_id: string;
  kind: string;
  state: "queued" | "running" | "done" | "failed";
  progress: number;
  message: string;
}

export interface RecorderView {
  frame_b64: string;
  frame_shape: number[];
  steps: number;
  proprio: number[];
  embodiment: string;
  task: string;
}

export interface PendingPoll {
  pending: Pending | null;
  node: string;
  utterance: string;
}

export class ServiceError extends Error {
  code: string;
  status: number;

  constructor(status: number, code: string, message: string) {
    super(message);
    this.code = code;
    this.status = status;
  }
}

type FetchLike = typeof fetch;

export class ServiceClient {
  baseUrl: string;
  private fetchImpl: FetchLike;

  constructor(baseUrl: string, fetchImpl: FetchLike = fetch) {
    this.baseUrl = baseUrl.replace(/\/$/, "");
    this.fetchImpl = fetchImpl;
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: {} };
    if (body !== undefined) {
      init.headers = { "Content-Type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const resp = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    const data = await resp.json().catch(() => ({}));
    if (!resp.ok) {
      const err = (data as { error?: { code?: string; message?: string } }).error ?? {};
      throw new ServiceError(resp.status, err.code ?? "unknown_error", err.message ?? resp.statusText);
    }
    return data as T;
  }

  createSession(instruction: string): Promise<SessionView> {
    return this.request("POST", "/sessions", { instruction });
  }

  getSession(sessionId: string): Promise<SessionView> {
    return this.request("GET", `/sessions/${sessionId}`);
  }

  listSessions(): Promise<SessionView[]> {
    return this.request("GET", "/sessions");
  }

  postTurn(sessionId: string, kind: "text" | "agree" | "reject", text = ""): Promise<SessionView> {
    return this.request("POST", `/sessions/${sessionId}/turns`, { kind, text });
  }

  pollPending(sessionId: string, timeoutS = 10): Promise<PendingPoll> {
    return this.request("GET", `/sessions/${sessionId}/pending?timeout=${timeoutS}`);
  }

  recorderStart(sessionId: string, embodiment: "human" | "robot"): Promise<RecorderView> {
    return this.request("POST", `/sessions/${sessionId}/recorder/start`, { embodiment });
  }

  recorderStep(sessionId: string, action: [number, number, number]): Promise<RecorderView> {
    return this.request("POST", `/sessions/${sessionId}/recorder/step`, { action });
  }

  recorderFinish(sessionId: string): Promise<SessionView> {
    return this.request("POST", `/sessions/${sessionId}/recorder/finish`);
  }

  listSkills(): Promise<Skill[]> {
    return this.request("GET", "/skills");
  }

  listJobs(): Promise<Job[]> {
    return this.request("GET", "/jobs");
  }

  getJob(jobId: string): Promise<Job> {
    return this.request("GET", `/jobs/${jobId}`);
  }
}
