import { describe, expect, it, vi } from "vitest";

import { ServiceClient, SessionView } from "../src/api";
import { SessionController } from "../src/controller";
import { actionFromInput, emptyInput, toggleGripper } from "../src/recorder";

function view(over: Partial<SessionView> = {}): SessionView {
  return {
    session_id: "s1",
    node: "ProposeSemantic",
    transcript: [{ speaker: "robot", text: "Shall I?" }],
    pending: { kind: "agree_reject", task: "slice cheese", candidate: "cut cheddar" },
    utterance: "Shall I?",
    outcomes: [],
    finetunes: 0,
    tasks_left: ["slice cheese"],
    ...over,
  };
}

function clientWith(handlers: Record<string, unknown>): ServiceClient {
  const fetchImpl = vi.fn(async (url: string, init?: RequestInit) => {
    const path = url.replace(/^http:\/\/[^/]+/, "").split("?")[0];
    const key = `${init?.method ?? "GET"} ${path}`;
    if (!(key in handlers)) throw new Error(`unexpected request ${key}`);
    const body = handlers[key];
    return { ok: true, status: 200, statusText: "OK", json: async () => body };
  }) as unknown as typeof fetch;
  return new ServiceClient("http://x:1", fetchImpl);
}

describe("SessionController", () => {
  it("derives a single affordance from the pending request", async () => {
    const controller = new SessionController(clientWith({ "POST /sessions": view() }));
    await controller.start("slice cheese");
    expect(controller.affordance()).toBe("agree_reject");
  });

  it("offers no affordance while training or when done", async () => {
    const training = view({ node: "Finetuning", pending: { kind: "training", task: "x" } });
    const controller = new SessionController(clientWith({ "POST /sessions": training }));
    await controller.start("x");
    expect(controller.affordance()).toBe("none");
    const done = view({ node: "Done", pending: null });
    const c2 = new SessionController(clientWith({ "POST /sessions": done }));
    await c2.start("x");
    expect(c2.affordance()).toBe("none");
  });

  it("maps demonstration requests to recorder modes", async () => {
    const enact = view({ node: "AwaitEnactment", pending: { kind: "enactment", task: "x" } });
    const controller = new SessionController(clientWith({ "POST /sessions": enact }));
    await controller.start("x");
    expect(controller.affordance()).toBe("record_human");
  });

  it("refuses to send empty replies client-side", async () => {
    const controller = new SessionController(clientWith({ "POST /sessions": view() }));
    await controller.start("x");
    const result = await controller.reply("   ");
    expect(result).toBeNull(); // no request sent: handler for POST turns absent
  });

  it("notifies subscribers and flags unreachable services", async () => {
    const controller = new SessionController(clientWith({ "POST /sessions": view() }));
    await controller.start("x");
    const seen: boolean[] = [];
    controller.subscribe((snap) => seen.push(snap.serviceReachable));
    await controller.refresh(); // listSkills/listJobs handlers missing -> unreachable
    expect(seen.at(-1)).toBe(false);
    expect(controller.snapshot().session?.session_id).toBe("s1"); // stale data kept
  });

  it("resume refetches the full session from the service", async () => {
    const resumed = view({ transcript: [{ speaker: "robot", text: "back" }] });
    const controller = new SessionController(clientWith({ "GET /sessions/s1": resumed }));
    const v = await controller.resume("s1");
    expect(v.transcript[0].text).toBe("back");
  });
});

describe("teleop input mapping", () => {
  it("maps keys to velocities and gripper to the third channel", () => {
    const input = emptyInput();
    input.keys.add("ArrowRight");
    input.keys.add("ArrowUp");
    expect(actionFromInput(input)).toEqual([1, 1, -1]);
    const gripped = toggleGripper(input);
    expect(actionFromInput(gripped)[2]).toBe(1);
  });

  it("maps pointer drags with screen-y inversion and clamps", () => {
    const input = emptyInput();
    input.pointer = { dx: 400, dy: -400 };
    expect(actionFromInput(input)).toEqual([1, 1, -1]);
    input.pointer = { dx: -20, dy: 20 };
    const [vx, vy] = actionFromInput(input);
    expect(vx).toBeCloseTo(-0.5);
    expect(vy).toBeCloseTo(-0.5);
  });
});
