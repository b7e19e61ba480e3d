// Wire-frame encoder for the simulated glove: emits the same 42-byte
// little-endian frames the hardware glove sends, so the engine ingests
// sim-mode input unmodified.
//
// Layout: sync A5 5A | version 01 | seq u16 | timestamp_ms u32 |
// 12 x force u16 (10-bit values) | roll/pitch/yaw i16 centidegrees |
// flags u8 | CRC-16/CCITT-FALSE over the preceding 40 bytes.

export const SENSOR_ORDER = [
  "T1", "T2", "T3", "S1", "S2", "S3", "B1", "B2", "B3", "E1", "E2", "E3",
] as const;

export type SensorId = (typeof SENSOR_ORDER)[number];

export const FRAME_LEN = 42;
export const RAW_MAX = 1023;
const WIRE_VERSION = 1;

export interface WireFrame {
  seq: number;
  timestampMs: number;
  force: number[]; // 12 values, SENSOR_ORDER, 0..1023
  orientation: [number, number, number]; // roll/pitch/yaw, degrees
  flags: number;
}

let crcTable: Uint16Array | undefined;

function buildCrcTable(): Uint16Array {
  const table = new Uint16Array(256);
  for (let byte = 0; byte < 256; byte++) {
    let crc = byte << 8;
    for (let bit = 0; bit < 8; bit++) {
      crc = crc & 0x8000 ? ((crc << 1) ^ 0x1021) & 0xffff : (crc << 1) & 0xffff;
    }
    table[byte] = crc;
  }
  return table;
}

export function crc16CcittFalse(data: Uint8Array): number {
  if (!crcTable) crcTable = buildCrcTable();
  let crc = 0xffff;
  for (const byte of data) {
    crc = ((crc << 8) & 0xffff) ^ crcTable[((crc >> 8) ^ byte) & 0xff];
  }
  return crc;
}

function checkRange(name: string, value: number, lo: number, hi: number): void {
  if (!Number.isFinite(value) || value < lo || value > hi) {
    throw new RangeError(`${name} ${value} outside [${lo}, ${hi}]`);
  }
}

export function encodeFrame(frame: WireFrame): Uint8Array {
  if (frame.force.length !== 12) {
    throw new RangeError(`expected 12 force channels, got ${frame.force.length}`);
  }
  checkRange("seq", frame.seq, 0, 0xffff);
  checkRange("timestampMs", frame.timestampMs, 0, 0xffffffff);
  const out = new Uint8Array(FRAME_LEN);
  const view = new DataView(out.buffer);
  out[0] = 0xa5;
  out[1] = 0x5a;
  out[2] = WIRE_VERSION;
  view.setUint16(3, frame.seq, true);
  view.setUint32(5, frame.timestampMs >>> 0, true);
  frame.force.forEach((value, i) => {
    checkRange(`force[${i}]`, value, 0, RAW_MAX);
    view.setUint16(9 + 2 * i, Math.round(value), true);
  });
  frame.orientation.forEach((deg, i) => {
    const centi = Math.round(deg * 100);
    checkRange(["roll", "pitch", "yaw"][i], centi, -32768, 32767);
    view.setInt16(33 + 2 * i, centi, true);
  });
  checkRange("flags", frame.flags, 0, 0xff);
  out[39] = frame.flags;
  view.setUint16(40, crc16CcittFalse(out.subarray(0, 40)), true);
  return out;
}

export function concatFrames(frames: Uint8Array[]): Uint8Array {
  const out = new Uint8Array(frames.length * FRAME_LEN);
  frames.forEach((f, i) => out.set(f, i * FRAME_LEN));
  return out;
}
