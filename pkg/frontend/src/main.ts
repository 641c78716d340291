/**
 * Console bootstrap: one session at a time, all state behind the service.
 * The session id is kept in the URL hash so reloading the page reattaches
 * to the same session without losing anything.
 */

import { ServiceClient } from "./api";
import { SessionController } from "./controller";
import { TeleopRecorder, emptyInput, toggleGripper } from "./recorder";
import { renderFrame, renderJobs, renderSkills, renderStatus, renderTranscript } from "./views";

const SERVICE_URL = (window as unknown as { DESKTEACH_URL?: string }).DESKTEACH_URL ?? "http://127.0.0.1:8321";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

async function bootstrap(): Promise<void> {
  const client = new ServiceClient(SERVICE_URL);
  const controller = new SessionController(client);
  let recorder: TeleopRecorder | null = null;
  let input = emptyInput();

  const transcript = el<HTMLDivElement>("transcript");
  const status = el<HTMLDivElement>("status");
  const skills = el<HTMLTableSectionElement>("skills");
  const jobs = el<HTMLTableSectionElement>("jobs");
  const textbox = el<HTMLInputElement>("textbox");
  const send = el<HTMLButtonElement>("send");
  const agreeBtn = el<HTMLButtonElement>("agree");
  const rejectBtn = el<HTMLButtonElement>("reject");
  const recordPane = el<HTMLDivElement>("record-pane");
  const recordStart = el<HTMLButtonElement>("record-start");
  const recordSubmit = el<HTMLButtonElement>("record-submit");
  const gripBtn = el<HTMLButtonElement>("grip");
  const canvas = el<HTMLCanvasElement>("sim-canvas");

  controller.subscribe((snap) => {
    renderTranscript(transcript, snap);
    renderStatus(status, snap);
    renderSkills(skills, snap);
    renderJobs(jobs, snap);
    const mode = controller.affordance();
    // pending-request exclusivity: exactly one affordance enabled at a time
    textbox.disabled = !(mode === "instruction" || mode === "free_text" || mode === "agree_reject");
    send.disabled = textbox.disabled;
    agreeBtn.disabled = mode !== "agree_reject";
    rejectBtn.disabled = mode !== "agree_reject";
    recordPane.style.display = mode === "record_human" || mode === "record_robot" ? "block" : "none";
    recordStart.dataset.embodiment = mode === "record_human" ? "human" : "robot";
  });

  const hashId = window.location.hash.slice(1);
  if (hashId) {
    await controller.resume(hashId).catch(() => {
      window.location.hash = "";
    });
  }

  send.addEventListener("click", async () => {
    const text = textbox.value;
    if (!controller.snapshot().session) {
      const view = await controller.start(text);
      window.location.hash = view.session_id;
    } else {
      await controller.reply(text);
    }
    textbox.value = "";
  });
  agreeBtn.addEventListener("click", () => void controller.agree());
  rejectBtn.addEventListener("click", () => void controller.reject());

  recordStart.addEventListener("click", async () => {
    const session = controller.snapshot().session;
    if (!session) return;
    recorder = new TeleopRecorder(client, session.session_id);
    input = emptyInput();
    const view = await recorder.start(recordStart.dataset.embodiment as "human" | "robot");
    renderFrame(canvas, view);
  });
  recordSubmit.addEventListener("click", async () => {
    if (!recorder || !recorder.canSubmit()) return; // empty recordings blocked client-side
    await recorder.finish();
    recorder = null;
    await controller.refresh();
  });
  gripBtn.addEventListener("click", () => {
    input = toggleGripper(input);
  });

  window.addEventListener("keydown", (ev) => input.keys.add(ev.key));
  window.addEventListener("keyup", (ev) => input.keys.delete(ev.key));
  canvas.addEventListener("pointerdown", (ev) => {
    const origin = { x: ev.offsetX, y: ev.offsetY };
    const move = (m: PointerEvent) => {
      input.pointer = { dx: m.offsetX - origin.x, dy: m.offsetY - origin.y };
    };
    const up = () => {
      input.pointer = null;
      canvas.removeEventListener("pointermove", move);
      canvas.removeEventListener("pointerup", up);
    };
    canvas.addEventListener("pointermove", move);
    canvas.addEventListener("pointerup", up);
  });

  // 10 Hz teleop loop while a recording is live.
  setInterval(async () => {
    if (recorder && recorder.view) {
      const view = await recorder.step(input);
      renderFrame(canvas, view);
    }
  }, 100);

  controller.startPolling();
}

void bootstrap();
