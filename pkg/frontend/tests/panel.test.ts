import { readFileSync } from "node:fs";
import { describe, expect, it } from "vitest";

import { renderHandMapSvg, siteColors } from "../src/handmap.js";
import {
  HEARTBEAT_INTERVAL_MS,
  PRESS_LOG_LIMIT,
  applyMessage,
  checkStale,
  initialState,
  onSocketClosed,
} from "../src/panel.js";
import { FeedbackMsg, SnapshotMsg } from "../src/protocol.js";
import { SENSOR_ORDER } from "../src/wire.js";

const reports: unknown[] = JSON.parse(
  readFileSync(new URL("./fixtures/reports.json", import.meta.url), "utf-8"),
);

function snapshot(colors: Partial<Record<string, string>> = {}): SnapshotMsg {
  const sensors = Object.fromEntries(
    SENSOR_ORDER.map((s) => [
      s,
      {
        raw: 0,
        quartet: "Q1",
        color: (colors[s] ?? "green") as "green" | "amber" | "red",
        press_count: 0,
        last_peak: 0,
      },
    ]),
  ) as SnapshotMsg["sensors"];
  return {
    kind: "snapshot",
    session_id: "s",
    t_ms: 100,
    task: "superficial",
    press_total: 0,
    sensors,
  };
}

describe("panel state reducer", () => {
  it("tracks session, snapshot and press log", () => {
    let state = initialState();
    state = applyMessage(
      state,
      { kind: "task_started", session_id: "s", task: "deep", participant_id: "p" },
      1000,
    );
    expect(state.activeTask).toBe("deep");
    expect(state.connection).toBe("live");

    state = applyMessage(state, snapshot({ T1: "red" }), 1100);
    expect(state.snapshot!.sensors.T1.color).toBe("red");

    for (let i = 0; i < PRESS_LOG_LIMIT + 10; i++) {
      state = applyMessage(
        state,
        {
          kind: "press_completed",
          session_id: "s",
          sensor: "T1",
          onset_ms: i * 100,
          release_ms: i * 100 + 50,
          peak_raw: 200,
          peak_quartet: "Q2",
          duration_ms: 50,
        } as FeedbackMsg,
        1200 + i,
      );
    }
    expect(state.pressLog.length).toBe(PRESS_LOG_LIMIT);

    state = applyMessage(
      state,
      {
        kind: "task_finalized",
        session_id: "s",
        task: "deep",
        press_total: 3,
        frames: 100,
        codec_errors: 0,
        stored: "x",
      },
      2000,
    );
    expect(state.activeTask).toBeNull();
  });

  it("accepts valid reports and notices bad ones", () => {
    let state = initialState();
    const good = { kind: "report", session_id: "", ...(reports[0] as object) };
    state = applyMessage(state, good as FeedbackMsg, 1);
    expect(state.report!.total).toBeCloseTo((reports[0] as { total: number }).total);
    expect(state.reportNotice).toBeNull();

    const badSchema = { ...good, schema: "palp.report/99" };
    state = applyMessage(state, badSchema as FeedbackMsg, 2);
    expect(state.reportNotice).toMatch(/palp\.report\/99/);

    const failed = { kind: "report", session_id: "", participant_id: "p", error: "liver task: no press events recorded" };
    state = applyMessage(state, failed as FeedbackMsg, 3);
    expect(state.reportNotice).toMatch(/liver task/);
  });

  it("marks the feed stale after one silent heartbeat interval", () => {
    let state = initialState();
    state = applyMessage(state, { kind: "heartbeat" }, 10_000);
    expect(state.connection).toBe("live");
    expect(checkStale(state, 10_000 + HEARTBEAT_INTERVAL_MS).connection).toBe("live");
    expect(checkStale(state, 10_001 + HEARTBEAT_INTERVAL_MS).connection).toBe("stale");
    expect(onSocketClosed(state).connection).toBe("closed");
  });
});

describe("hand map rendering", () => {
  it("renders server colors verbatim and hatches error sensors", () => {
    const snap = snapshot({ T1: "red", E1: "amber" });
    const svg = renderHandMapSvg(snap);
    expect(svg).toContain('data-sensor="T1" data-color="red"');
    expect(svg).toContain('data-sensor="E1" data-color="amber"');
    // all three error sensors carry the hatch overlay
    expect((svg.match(/url\(#hatch\)/g) ?? []).length).toBe(3);
    const colors = siteColors(snap);
    for (const sensor of SENSOR_ORDER) {
      expect(colors[sensor]).toBe(snap.sensors[sensor].color);
    }
  });

  it("renders idle sites with no snapshot", () => {
    const svg = renderHandMapSvg(null);
    for (const sensor of SENSOR_ORDER) {
      expect(svg).toContain(`data-sensor="${sensor}" data-color="idle"`);
    }
  });
});
