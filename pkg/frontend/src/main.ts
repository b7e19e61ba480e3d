// Browser wiring: WebSocket feed -> panel state -> DOM, plus the simulated
// glove driven by pointer holds on the hand map.

import { renderHandMapSvg } from "./handmap.js";
import {
  HEARTBEAT_INTERVAL_MS,
  PanelState,
  applyMessage,
  checkStale,
  initialState,
  onSocketClosed,
} from "./panel.js";
import { parseMessage } from "./protocol.js";
import { renderReportHtml } from "./reportview.js";
import { QuartetTarget, SAMPLE_MS, SimGlove } from "./simglove.js";
import { SensorId, concatFrames } from "./wire.js";

const $ = (id: string) => document.getElementById(id)!;

let state: PanelState = initialState();
const httpBase = location.origin;
let sendQueue: Uint8Array[] = [];

const glove = new SimGlove({ sink: (frame) => sendQueue.push(frame) });

function render(): void {
  $("handmap").innerHTML = renderHandMapSvg(state.snapshot);
  bindSites();
  $("connection").textContent = state.connection;
  $("connection").className = `conn conn-${state.connection}`;
  ($("banner") as HTMLElement).hidden = state.connection === "live";
  $("task").textContent = state.activeTask
    ? `${state.activeTask} — session ${state.sessionId}`
    : "no task running";
  $("presslog").innerHTML = state.pressLog
    .slice(-12)
    .reverse()
    .map(
      (p) =>
        `<li>${p.sensor} peak ${p.peak_raw} (${p.peak_quartet}), ` +
        `${p.duration_ms} ms${p.exceeds_safe_threshold ? " ⚠ over safe force" : ""}</li>`,
    )
    .join("");
  $("report").innerHTML = state.report ? renderReportHtml(state.report) : "";
  $("report-notice").textContent = state.reportNotice ?? "";
}

function bindSites(): void {
  if (!(($("simmode") as HTMLInputElement).checked)) return;
  $("handmap")
    .querySelectorAll<SVGGElement>("g.site")
    .forEach((el) => {
      const sensor = el.dataset.sensor as SensorId;
      el.addEventListener("pointerdown", (ev) => {
        ev.preventDefault();
        glove.press(sensor);
      });
      for (const evt of ["pointerup", "pointercancel", "pointerleave"]) {
        el.addEventListener(evt, () => glove.release(sensor));
      }
    });
}

function connect(): void {
  const scheme = location.protocol === "https:" ? "wss" : "ws";
  const ws = new WebSocket(`${scheme}://${location.host}/ws`);
  ws.onmessage = (ev) => {
    state = applyMessage(state, parseMessage(ev.data), Date.now());
    render();
  };
  ws.onclose = () => {
    state = onSocketClosed(state);
    render();
    setTimeout(connect, 1000); // retry; banner stays up while closed
  };
}

async function post(path: string, body?: unknown): Promise<Response> {
  return fetch(httpBase + path, {
    method: "POST",
    headers: body ? { "Content-Type": "application/json" } : {},
    body: body ? JSON.stringify(body) : undefined,
  });
}

function setupControls(): void {
  $("open").addEventListener("click", async () => {
    const sessionId = ($("session-id") as HTMLInputElement).value.trim();
    const participant = ($("participant") as HTMLInputElement).value.trim();
    const task = ($("task-select") as HTMLSelectElement).value;
    const resp = await post("/sessions", {
      session_id: sessionId,
      participant_id: participant,
      cohort: "VT",
      task,
    });
    if (resp.ok) glove.start();
  });
  $("finalize").addEventListener("click", async () => {
    glove.stop();
    const sessionId = ($("session-id") as HTMLInputElement).value.trim();
    await post(`/sessions/${sessionId}/finalize`);
  });
  $("score").addEventListener("click", async () => {
    const participant = ($("participant") as HTMLInputElement).value.trim();
    await post(`/participants/${participant}/report`);
  });
  $("quartet-target").addEventListener("change", (ev) => {
    const value = Number((ev.target as HTMLSelectElement).value);
    glove.setTargetQuartet(value as QuartetTarget);
  });
}

// 50 Hz glove ticks; outbound frames batch into one POST per flush interval.
setInterval(() => {
  if (glove.active && ($("simmode") as HTMLInputElement).checked) glove.tick();
}, SAMPLE_MS);

setInterval(async () => {
  if (sendQueue.length === 0) return;
  const batch = concatFrames(sendQueue);
  sendQueue = [];
  const sessionId = ($("session-id") as HTMLInputElement).value.trim();
  await fetch(`${httpBase}/sessions/${sessionId}/frames`, {
    method: "POST",
    headers: { "Content-Type": "application/octet-stream" },
    body: batch.buffer as ArrayBuffer, // concatFrames allocates exact-size
  });
}, 100);

setInterval(() => {
  const checked = checkStale(state, Date.now());
  if (checked !== state) {
    state = checked;
    render();
  }
}, HEARTBEAT_INTERVAL_MS / 5);

setupControls();
render();
connect();
