import { describe, expect, it, vi } from "vitest";

import { ServiceClient, ServiceError, SessionView } from "../src/api";

function fakeView(over: Partial<SessionView> = {}): SessionView {
  return {
    session_id: "abc",
    node: "PlanReady",
    transcript: [],
    pending: null,
    utterance: "",
    outcomes: [],
    finetunes: 0,
    tasks_left: [],
    ...over,
  };
}

function fetchReturning(status: number, body: unknown) {
  return vi.fn(async () => ({
    ok: status >= 200 && status < 300,
    status,
    statusText: String(status),
    json: async () => body,
  })) as unknown as typeof fetch;
}

describe("ServiceClient", () => {
  it("posts instructions to create sessions", async () => {
    const fetchImpl = fetchReturning(200, fakeView());
    const client = new ServiceClient("http://x:1/", fetchImpl);
    const view = await client.createSession("wash the pan");
    expect(view.session_id).toBe("abc");
    const [url, init] = (fetchImpl as any).mock.calls[0];
    expect(url).toBe("http://x:1/sessions");
    expect(JSON.parse(init.body)).toEqual({ instruction: "wash the pan" });
  });

  it("raises typed errors with machine-readable codes", async () => {
    const fetchImpl = fetchReturning(422, { error: { code: "empty_text", message: "no" } });
    const client = new ServiceClient("http://x:1", fetchImpl);
    await expect(client.postTurn("abc", "text", "")).rejects.toMatchObject({
      code: "empty_text",
      status: 422,
    });
  });

  it("sends recorder actions as 3-vectors", async () => {
    const fetchImpl = fetchReturning(200, {
      frame_b64: "", frame_shape: [64, 64, 3], steps: 1, proprio: [0, 0, 0],
      embodiment: "robot", task: "t",
    });
    const client = new ServiceClient("http://x:1", fetchImpl);
    await client.recorderStep("abc", [0.5, -1, 1]);
    const [, init] = (fetchImpl as any).mock.calls[0];
    expect(JSON.parse(init.body)).toEqual({ action: [0.5, -1, 1] });
  });

  it("ServiceError is an Error", () => {
    const err = new ServiceError(404, "unknown_session", "nope");
    expect(err).toBeInstanceOf(Error);
    expect(err.code).toBe("unknown_session");
  });
});
