/**
 * Session controller: all console state handling, DOM-free.
 *
 * The console itself is stateless with respect to learning; everything it
 * shows is refetched from the service, so killing and reloading the page
 * never loses dialogue, library, or job state.
 */

import { Job, Pending, ServiceClient, SessionView, Skill } from "./api";

export interface ConsoleSnapshot {
  session: SessionView | null;
  skills: Skill[];
  jobs: Job[];
  serviceReachable: boolean;
}

export type Listener = (snap: ConsoleSnapshot) => void;

export const JOB_POLL_MS = 500;

export class SessionController {
  client: ServiceClient;
  private session: SessionView | null = null;
  private skills: Skill[] = [];
  private jobs: Job[] = [];
  private reachable = true;
  private listeners: Listener[] = [];
  private timer: ReturnType<typeof setInterval> | null = null;

  constructor(client: ServiceClient) {
    this.client = client;
  }

  snapshot(): ConsoleSnapshot {
    return {
      session: this.session,
      skills: this.skills,
      jobs: this.jobs,
      serviceReachable: this.reachable,
    };
  }

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private emit(): void {
    const snap = this.snapshot();
    for (const l of this.listeners) l(snap);
  }

  /** Exactly one response affordance at a time, derived from the pending request. */
  affordance(): "instruction" | "agree_reject" | "free_text" | "record_human" | "record_robot" | "none" {
    const pending = this.session?.pending ?? null;
    if (!this.session || this.session.node === "Done" || this.session.node === "Failed") return "none";
    if (!pending) return "none";
    switch (pending.kind) {
      case "instruction":
        return "instruction";
      case "agree_reject":
        return "agree_reject";
      case "enactment":
        return "record_human";
      case "robot_demo":
        return "record_robot";
      case "training":
        return "none";
      default:
        return "free_text";
    }
  }

  async start(instruction: string): Promise<SessionView> {
    this.session = await this.client.createSession(instruction);
    this.emit();
    return this.session;
  }

  /** Reattach to an existing session (page reload path). */
  async resume(sessionId: string): Promise<SessionView> {
    this.session = await this.client.getSession(sessionId);
    this.emit();
    return this.session;
  }

  async reply(text: string): Promise<SessionView | null> {
    if (!this.session) throw new Error("no session");
    const trimmed = text.trim();
    if (!trimmed) return null; // client-side validation: never send empty turns
    this.session = await this.client.postTurn(this.session.session_id, "text", trimmed);
    this.emit();
    return this.session;
  }

  async agree(): Promise<SessionView> {
    if (!this.session) throw new Error("no session");
    this.session = await this.client.postTurn(this.session.session_id, "agree");
    this.emit();
    return this.session;
  }

  async reject(): Promise<SessionView> {
    if (!this.session) throw new Error("no session");
    this.session = await this.client.postTurn(this.session.session_id, "reject");
    this.emit();
    return this.session;
  }

  async refresh(): Promise<void> {
    try {
      const [skills, jobs] = await Promise.all([this.client.listSkills(), this.client.listJobs()]);
      this.skills = skills;
      this.jobs = jobs;
      if (this.session) {
        this.session = await this.client.getSession(this.session.session_id);
      }
      this.reachable = true;
    } catch {
      this.reachable = false; // stale-data banner; keep the last snapshot
    }
    this.emit();
  }

  /** Wait until the machine asks something of the user again (or finishes). */
  async waitForPrompt(timeoutS = 120): Promise<SessionView> {
    if (!this.session) throw new Error("no session");
    const deadline = Date.now() + timeoutS * 1000;
    while (Date.now() < deadline) {
      const poll = await this.client.pollPending(this.session.session_id, 5);
      if (poll.node === "Done" || poll.node === "Failed" || (poll.pending && poll.pending.kind !== "training")) {
        this.session = await this.client.getSession(this.session.session_id);
        this.emit();
        return this.session;
      }
      await this.refresh();
    }
    throw new Error("timed out waiting for the robot");
  }

  startPolling(intervalMs = JOB_POLL_MS): void {
    if (this.timer !== null) return;
    this.timer = setInterval(() => void this.refresh(), intervalMs);
  }

  stopPolling(): void {
    if (this.timer !== null) clearInterval(this.timer);
    this.timer = null;
  }
}
