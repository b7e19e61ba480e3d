// Typed view of the engine's WebSocket messages and report documents.
// The panel is a pure view: it validates shapes and echoes server values,
// it never recomputes scores, quartets or colors.

import { SENSOR_ORDER, SensorId } from "./wire.js";

export type Color = "green" | "amber" | "red";

export interface SensorReading {
  raw: number;
  quartet: string;
  color: Color;
  press_count: number;
  last_peak: number;
}

export interface SnapshotMsg {
  kind: "snapshot";
  session_id: string;
  t_ms: number;
  task: string;
  press_total: number;
  sensors: Record<SensorId, SensorReading>;
}

export interface PressMsg {
  kind: "press_completed";
  session_id: string;
  sensor: SensorId;
  onset_ms: number;
  release_ms: number;
  peak_raw: number;
  peak_quartet: string;
  duration_ms: number;
  peak_newtons?: number;
  exceeds_safe_threshold?: boolean;
}

export interface TaskStartedMsg {
  kind: "task_started";
  session_id: string;
  task: string;
  participant_id: string;
}

export interface TaskFinalizedMsg {
  kind: "task_finalized";
  session_id: string;
  task: string;
  press_total: number;
  frames: number;
  codec_errors: number;
  stored: string;
}

export interface ReportMsg {
  kind: "report";
  session_id: string;
  [key: string]: unknown; // a full report document or {participant_id, error}
}

export interface HeartbeatMsg {
  kind: "heartbeat";
}

export type FeedbackMsg =
  | SnapshotMsg
  | PressMsg
  | TaskStartedMsg
  | TaskFinalizedMsg
  | ReportMsg
  | HeartbeatMsg;

export function parseMessage(text: string): FeedbackMsg {
  const doc = JSON.parse(text);
  if (typeof doc !== "object" || doc === null || typeof doc.kind !== "string") {
    throw new Error("message without a kind");
  }
  return doc as FeedbackMsg;
}

// ---- report documents -----------------------------------------------------

export const REPORT_SCHEMA = "palp.report/1";
export const OSCE_LABELS = ["Fail", "Borderline", "Pass", "Good", "Excellent"];
export const CRITERIA = ["wrong_use", "correct_use", "force_transition"] as const;
export type CriterionName = (typeof CRITERIA)[number];

export class ReportSchemaError extends Error {}

export interface CriterionDoc {
  criterion: CriterionName;
  task: string;
  points: number;
  violation: { magnitude_pct: number; description: string } | null;
}

export interface TaskDoc {
  task: string;
  session_id: string;
  press_total: number;
  press_counts: Record<SensorId, number>;
  peaks: Record<SensorId, number[]>;
  durations_ms: Record<SensorId, number[]>;
  contributions_pct: Record<SensorId, number>;
  criteria: Partial<Record<CriterionName, CriterionDoc>>;
}

export interface ReportDoc {
  schema: string;
  engine_version: string;
  participant_id: string;
  tasks: Record<string, TaskDoc>;
  criterion_averages: Record<CriterionName, number>;
  total: number;
  osce: string;
  config: {
    segmentation: Record<string, number>;
    assessment: { penalty_slope: number; osce_cuts: number[] };
    quartet_bound: number;
  };
  provenance: { codec_errors: number };
}

function fail(path: string, why: string): never {
  throw new ReportSchemaError(`report field ${path}: ${why}`);
}

function requireNumber(value: unknown, path: string): number {
  if (typeof value !== "number" || !Number.isFinite(value)) fail(path, "not a number");
  return value;
}

function requireSensorMap(value: unknown, path: string): void {
  if (typeof value !== "object" || value === null) fail(path, "not an object");
  for (const sensor of SENSOR_ORDER) {
    if (!(sensor in (value as object))) fail(`${path}.${sensor}`, "missing sensor");
  }
}

// Structural validation only. Totals and averages are displayed as sent --
// recomputing them here would let the panel disagree with the engine.
export function validateReport(doc: unknown): ReportDoc {
  if (typeof doc !== "object" || doc === null) fail("$", "not an object");
  const d = doc as Record<string, unknown>;
  if (d.schema !== REPORT_SCHEMA) {
    throw new ReportSchemaError(
      `unknown report schema ${JSON.stringify(d.schema)}; this panel renders ${REPORT_SCHEMA}`,
    );
  }
  if (typeof d.engine_version !== "string") fail("engine_version", "not a string");
  if (typeof d.participant_id !== "string") fail("participant_id", "not a string");
  const total = requireNumber(d.total, "total");
  if (total < 0 || total > 30) fail("total", "outside [0, 30]");
  if (typeof d.osce !== "string" || !OSCE_LABELS.includes(d.osce)) {
    fail("osce", `not one of ${OSCE_LABELS.join("/")}`);
  }
  const tasks = d.tasks;
  if (typeof tasks !== "object" || tasks === null) fail("tasks", "not an object");
  for (const name of ["superficial", "deep", "liver"]) {
    const task = (tasks as Record<string, unknown>)[name];
    if (typeof task !== "object" || task === null) fail(`tasks.${name}`, "missing");
    const t = task as Record<string, unknown>;
    requireNumber(t.press_total, `tasks.${name}.press_total`);
    requireSensorMap(t.press_counts, `tasks.${name}.press_counts`);
    requireSensorMap(t.contributions_pct, `tasks.${name}.contributions_pct`);
    requireSensorMap(t.peaks, `tasks.${name}.peaks`);
    requireSensorMap(t.durations_ms, `tasks.${name}.durations_ms`);
    const criteria = t.criteria;
    if (typeof criteria !== "object" || criteria === null) {
      fail(`tasks.${name}.criteria`, "missing");
    }
    const expected = name === "liver"
      ? ["wrong_use", "correct_use"]
      : ["wrong_use", "correct_use", "force_transition"];
    for (const criterion of expected) {
      const c = (criteria as Record<string, unknown>)[criterion];
      if (typeof c !== "object" || c === null) {
        fail(`tasks.${name}.criteria.${criterion}`, "missing");
      }
      const points = requireNumber(
        (c as Record<string, unknown>).points,
        `tasks.${name}.criteria.${criterion}.points`,
      );
      if (points < 0 || points > 10) {
        fail(`tasks.${name}.criteria.${criterion}.points`, "outside [0, 10]");
      }
    }
  }
  const averages = d.criterion_averages;
  if (typeof averages !== "object" || averages === null) {
    fail("criterion_averages", "missing");
  }
  for (const criterion of CRITERIA) {
    requireNumber(
      (averages as Record<string, unknown>)[criterion],
      `criterion_averages.${criterion}`,
    );
  }
  const provenance = d.provenance;
  if (typeof provenance !== "object" || provenance === null) {
    fail("provenance", "missing");
  }
  requireNumber(
    (provenance as Record<string, unknown>).codec_errors,
    "provenance.codec_errors",
  );
  return doc as ReportDoc;
}
