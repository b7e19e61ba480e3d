// Panel state: a pure reducer over engine messages. Rendering reads this
// state only; every score and color on screen originated at the server.

import {
  FeedbackMsg,
  PressMsg,
  ReportDoc,
  ReportSchemaError,
  SnapshotMsg,
  validateReport,
} from "./protocol.js";

export const HEARTBEAT_INTERVAL_MS = 5000;
export const PRESS_LOG_LIMIT = 50;

export type ConnectionState = "connecting" | "live" | "stale" | "closed";

export interface PanelState {
  connection: ConnectionState;
  lastMessageAtMs: number;
  sessionId: string | null;
  activeTask: string | null;
  snapshot: SnapshotMsg | null;
  pressLog: PressMsg[];
  report: ReportDoc | null;
  reportNotice: string | null; // schema mismatch or scoring error text
}

export function initialState(): PanelState {
  return {
    connection: "connecting",
    lastMessageAtMs: 0,
    sessionId: null,
    activeTask: null,
    snapshot: null,
    pressLog: [],
    report: null,
    reportNotice: null,
  };
}

export function applyMessage(
  state: PanelState,
  msg: FeedbackMsg,
  nowMs: number,
): PanelState {
  const next: PanelState = { ...state, connection: "live", lastMessageAtMs: nowMs };
  switch (msg.kind) {
    case "heartbeat":
      return next;
    case "task_started":
      return { ...next, sessionId: msg.session_id, activeTask: msg.task };
    case "snapshot":
      return { ...next, snapshot: msg };
    case "press_completed":
      return {
        ...next,
        pressLog: [...state.pressLog, msg].slice(-PRESS_LOG_LIMIT),
      };
    case "task_finalized":
      return state.sessionId === msg.session_id
        ? { ...next, activeTask: null }
        : next;
    case "report": {
      if (typeof msg.error === "string") {
        return { ...next, reportNotice: `assessment failed: ${msg.error}` };
      }
      try {
        return { ...next, report: validateReport(msg), reportNotice: null };
      } catch (e) {
        if (e instanceof ReportSchemaError) {
          return { ...next, reportNotice: e.message };
        }
        throw e;
      }
    }
  }
}

// Stream-loss banner: no message (heartbeats included) for one heartbeat
// interval marks the feed stale.
export function checkStale(state: PanelState, nowMs: number): PanelState {
  if (
    state.connection === "live" &&
    nowMs - state.lastMessageAtMs > HEARTBEAT_INTERVAL_MS
  ) {
    return { ...state, connection: "stale" };
  }
  return state;
}

export function onSocketClosed(state: PanelState): PanelState {
  return { ...state, connection: "closed" };
}
