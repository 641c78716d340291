/**
 * DOM rendering. Every robot utterance shown comes verbatim from the
 * service transcript; nothing is synthesized client-side.
 */

import { ConsoleSnapshot } from "./controller";
import { RecorderView } from "./api";
import { decodeFrame } from "./recorder";

export function renderTranscript(el: HTMLElement, snap: ConsoleSnapshot): void {
  const session = snap.session;
  el.innerHTML = "";
  if (!session) return;
  for (const line of session.transcript) {
    const div = document.createElement("div");
    div.className = `line ${line.speaker}`;
    div.textContent = `${line.speaker === "robot" ? "🤖" : "🧑"} ${line.text}`;
    el.appendChild(div);
  }
  el.scrollTop = el.scrollHeight;
}

export function renderStatus(el: HTMLElement, snap: ConsoleSnapshot): void {
  const session = snap.session;
  const banner = snap.serviceReachable ? "" : " ⚠ service unreachable, showing stale data";
  if (!session) {
    el.textContent = `no session${banner}`;
    return;
  }
  const pending = session.pending ? session.pending.kind : "none";
  el.textContent = `node: ${session.node} | pending: ${pending} | tasks left: ${session.tasks_left.length}${banner}`;
}

export function renderSkills(el: HTMLElement, snap: ConsoleSnapshot): void {
  el.innerHTML = "";
  for (const skill of snap.skills) {
    const row = document.createElement("tr");
    for (const cell of [skill.skill_id, skill.description, skill.adapter_id]) {
      const td = document.createElement("td");
      td.textContent = cell;
      row.appendChild(td);
    }
    el.appendChild(row);
  }
}

export function renderJobs(el: HTMLElement, snap: ConsoleSnapshot): void {
  el.innerHTML = "";
  for (const job of snap.jobs) {
    const row = document.createElement("tr");
    const cells = [job.job_id, job.kind, job.state, `${Math.round(job.progress * 100)}%`];
    for (const cell of cells) {
      const td = document.createElement("td");
      td.textContent = cell;
      row.appendChild(td);
    }
    el.appendChild(row);
  }
}

export function renderFrame(canvas: HTMLCanvasElement, view: RecorderView): void {
  const [h, w] = view.frame_shape;
  const rgb = decodeFrame(view);
  const rgba = new Uint8ClampedArray(w * h * 4);
  for (let i = 0; i < w * h; i++) {
    rgba[i * 4] = rgb[i * 3];
    rgba[i * 4 + 1] = rgb[i * 3 + 1];
    rgba[i * 4 + 2] = rgb[i * 3 + 2];
    rgba[i * 4 + 3] = 255;
  }
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const img = new ImageData(rgba, w, h);
  createImageBitmap(img).then((bitmap) => {
    ctx.imageSmoothingEnabled = false;
    ctx.drawImage(bitmap, 0, 0, canvas.width, canvas.height);
  });
}
