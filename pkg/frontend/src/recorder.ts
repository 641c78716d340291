/**
 * Teleoperation: keyboard/pointer input -> effector actions -> recorder
 * endpoints. Arrow keys (or WASD) set the planar velocity, the G key (or a
 * button) toggles the gripper, pointer drags map to a velocity vector.
 */

import { RecorderView, ServiceClient, SessionView } from "./api";

export interface InputState {
  keys: Set<string>;
  pointer: { dx: number; dy: number } | null; // pixels from drag origin
  gripperClosed: boolean;
}

export function emptyInput(): InputState {
  return { keys: new Set(), pointer: null, gripperClosed: false };
}

const POINTER_GAIN = 1 / 40; // 40px drag = full speed

/** Pure mapping from input state to a clamped (vx, vy, gripper) action. */
export function actionFromInput(input: InputState): [number, number, number] {
  let vx = 0;
  let vy = 0;
  const k = input.keys;
  if (k.has("ArrowLeft") || k.has("a")) vx -= 1;
  if (k.has("ArrowRight") || k.has("d")) vx += 1;
  if (k.has("ArrowUp") || k.has("w")) vy += 1;
  if (k.has("ArrowDown") || k.has("s")) vy -= 1;
  if (input.pointer) {
    vx += input.pointer.dx * POINTER_GAIN;
    vy -= input.pointer.dy * POINTER_GAIN; // screen y grows downward
  }
  const clamp = (v: number) => Math.max(-1, Math.min(1, v));
  return [clamp(vx), clamp(vy), input.gripperClosed ? 1 : -1];
}

export function toggleGripper(input: InputState): InputState {
  return { ...input, gripperClosed: !input.gripperClosed };
}

/** Decode the base64 raw RGB frame into bytes for canvas rendering. */
export function decodeFrame(view: RecorderView): Uint8ClampedArray {
  const raw = atob(view.frame_b64);
  const bytes = new Uint8ClampedArray(raw.length);
  for (let i = 0; i < raw.length; i++) bytes[i] = raw.charCodeAt(i);
  return bytes;
}

export class TeleopRecorder {
  client: ServiceClient;
  sessionId: string;
  view: RecorderView | null = null;

  constructor(client: ServiceClient, sessionId: string) {
    this.client = client;
    this.sessionId = sessionId;
  }

  async start(embodiment: "human" | "robot"): Promise<RecorderView> {
    this.view = await this.client.recorderStart(this.sessionId, embodiment);
    return this.view;
  }

  async step(input: InputState): Promise<RecorderView> {
    this.view = await this.client.recorderStep(this.sessionId, actionFromInput(input));
    return this.view;
  }

  get steps(): number {
    return this.view?.steps ?? 0;
  }

  /** Submitting an empty recording is blocked client-side. */
  canSubmit(): boolean {
    return this.steps >= 2;
  }

  async finish(): Promise<SessionView> {
    if (!this.canSubmit()) {
      throw new Error("record at least 2 steps before submitting");
    }
    const view = await this.client.recorderFinish(this.sessionId);
    this.view = null;
    return view;
  }
}
