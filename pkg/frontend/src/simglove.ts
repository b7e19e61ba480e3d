// Simulated glove: pointer holds on hand-map sites become real wire frames.
//
// Holding a site ramps that channel linearly toward the configured
// quartet's target level; releasing ramps it back to zero. While a session
// is open the glove ticks at 50 Hz and emits one encoded frame per tick
// (frames carry their own timestamps, so the engine segments identically
// whether ticks are wall-clock or batched). Multiple sites may be held.

import { SENSOR_ORDER, SensorId, WireFrame, encodeFrame } from "./wire.js";

export type QuartetTarget = 1 | 2 | 3 | 4;

// Mid-band levels per quartet (bands are 150 arb units wide, bound 600).
export const QUARTET_TARGET_RAW: Record<QuartetTarget, number> = {
  1: 75,
  2: 225,
  3: 375,
  4: 525,
};

export const SAMPLE_MS = 20;

export interface SimGloveOptions {
  sink: (frame: Uint8Array) => void;
  targetQuartet?: QuartetTarget;
  rampMs?: number; // time from 0 to the target level (and back)
}

export class SimGlove {
  private sink: (frame: Uint8Array) => void;
  private targetQuartet: QuartetTarget;
  private rampMs: number;
  private levels = new Map<SensorId, number>();
  private held = new Set<SensorId>();
  private seq = 0;
  private timestampMs = 0;
  private sessionOpen = false;
  framesSent = 0;

  constructor(opts: SimGloveOptions) {
    this.sink = opts.sink;
    this.targetQuartet = opts.targetQuartet ?? 2;
    this.rampMs = opts.rampMs ?? 160;
  }

  setTargetQuartet(q: QuartetTarget): void {
    this.targetQuartet = q;
  }

  start(): void {
    this.sessionOpen = true;
    this.seq = 0;
    this.timestampMs = 0;
    this.framesSent = 0;
    this.levels.clear();
    this.held.clear();
  }

  stop(): void {
    this.sessionOpen = false;
    this.held.clear();
    this.levels.clear();
  }

  get active(): boolean {
    return this.sessionOpen;
  }

  press(sensor: SensorId): void {
    if (!this.sessionOpen) return; // no session: input ignored
    this.held.add(sensor);
  }

  release(sensor: SensorId): void {
    this.held.delete(sensor);
  }

  releaseAll(): void {
    this.held.clear();
  }

  // Advance one 20 ms sample and emit a frame. Returns the frame, or null
  // when no session is open.
  tick(): Uint8Array | null {
    if (!this.sessionOpen) return null;
    const target = QUARTET_TARGET_RAW[this.targetQuartet];
    const step = target / Math.max(1, this.rampMs / SAMPLE_MS);
    const force: number[] = [];
    for (const sensor of SENSOR_ORDER) {
      let level = this.levels.get(sensor) ?? 0;
      if (this.held.has(sensor)) {
        level = Math.min(target, level + step);
      } else {
        level = Math.max(0, level - step);
      }
      this.levels.set(sensor, level);
      force.push(Math.round(level));
    }
    const frame: WireFrame = {
      seq: this.seq & 0xffff,
      timestampMs: this.timestampMs,
      force,
      orientation: [0, 0, 0],
      flags: 0,
    };
    this.seq += 1;
    this.timestampMs += SAMPLE_MS;
    const bytes = encodeFrame(frame);
    this.framesSent += 1;
    this.sink(bytes);
    return bytes;
  }

  // Convenience for scripted input: hold a site for holdMs, then let go and
  // keep ticking until every channel is quiet plus a settle tail.
  scriptPress(sensor: SensorId, holdMs: number, settleMs = 400): void {
    this.press(sensor);
    for (let t = 0; t < holdMs; t += SAMPLE_MS) this.tick();
    this.release(sensor);
    const quietTicks = (this.rampMs + settleMs) / SAMPLE_MS;
    for (let t = 0; t < quietTicks; t++) this.tick();
  }
}
