// Hand diagram: 12 sensor sites on a palmar view of the right hand
// (fingers up, thumb on the viewer's left). Site colors come verbatim from
// the latest engine snapshot; error sensors are hatched at all times.
//
// The coordinate table below is the project's fixed layout asset
// (viewBox 0 0 100 130). Groups: fingertips T1-T3, index radial border
// S1-S3, finger bases B1-B3, thenar eminence E1/E2, hypothenar E3.

import { SENSOR_ORDER, SensorId } from "./wire.js";
import { Color, SnapshotMsg } from "./protocol.js";

export type SiteGroup = "fingertip" | "radial" | "base" | "thenar" | "hypothenar";

export interface Site {
  id: SensorId;
  x: number;
  y: number;
  group: SiteGroup;
  error: boolean;
}

export const HAND_LAYOUT: Site[] = [
  { id: "T1", x: 34, y: 12, group: "fingertip", error: false },
  { id: "T2", x: 52, y: 8, group: "fingertip", error: false },
  { id: "T3", x: 69, y: 12, group: "fingertip", error: false },
  { id: "S1", x: 24, y: 22, group: "radial", error: false },
  { id: "S2", x: 22, y: 34, group: "radial", error: false },
  { id: "S3", x: 20, y: 46, group: "radial", error: false },
  { id: "B1", x: 35, y: 52, group: "base", error: false },
  { id: "B2", x: 52, y: 48, group: "base", error: false },
  { id: "B3", x: 68, y: 52, group: "base", error: false },
  { id: "E1", x: 30, y: 78, group: "thenar", error: true },
  { id: "E2", x: 36, y: 94, group: "thenar", error: true },
  { id: "E3", x: 72, y: 88, group: "hypothenar", error: true },
];

export const COLOR_HEX: Record<Color | "idle", string> = {
  green: "#3a9e4d",
  amber: "#e0a526",
  red: "#d23c2e",
  idle: "#d8d8d8",
};

export const SITE_RADIUS = 7;

// Colors to render, copied from the snapshot with no reclassification.
export function siteColors(
  snapshot: SnapshotMsg | null,
): Record<SensorId, Color | "idle"> {
  const colors = {} as Record<SensorId, Color | "idle">;
  for (const sensor of SENSOR_ORDER) {
    colors[sensor] = snapshot ? snapshot.sensors[sensor].color : "idle";
  }
  return colors;
}

export function renderHandMapSvg(snapshot: SnapshotMsg | null): string {
  const colors = siteColors(snapshot);
  const circles = HAND_LAYOUT.map((site) => {
    const fill = COLOR_HEX[colors[site.id]];
    const hatch = site.error
      ? `<circle cx="${site.x}" cy="${site.y}" r="${SITE_RADIUS}" ` +
        `fill="url(#hatch)" pointer-events="none"/>`
      : "";
    const reading = snapshot ? snapshot.sensors[site.id] : null;
    const title = reading
      ? `${site.id}: ${reading.raw} (${reading.quartet}), ${reading.press_count} presses`
      : site.id;
    return (
      `<g class="site" data-sensor="${site.id}" data-color="${colors[site.id]}">` +
      `<circle cx="${site.x}" cy="${site.y}" r="${SITE_RADIUS}" fill="${fill}" ` +
      `stroke="#444" stroke-width="0.8"><title>${title}</title></circle>` +
      hatch +
      `<text x="${site.x}" y="${site.y + 1.8}" text-anchor="middle" ` +
      `font-size="5" fill="#222" pointer-events="none">${site.id}</text></g>`
    );
  }).join("\n    ");
  return `<svg viewBox="0 0 100 130" xmlns="http://www.w3.org/2000/svg">
  <defs>
    <pattern id="hatch" width="4" height="4" patternUnits="userSpaceOnUse"
             patternTransform="rotate(45)">
      <line x1="0" y1="0" x2="0" y2="4" stroke="#5c333a" stroke-width="1.2"/>
    </pattern>
  </defs>
  <path d="M16,50 C14,30 22,18 28,16 L30,8 C40,0 64,0 74,8 L76,16
           C84,20 90,34 86,54 C92,70 88,96 76,110 C62,124 40,124 28,110
           C16,96 12,70 16,50 Z"
        fill="#f4e3d3" stroke="#b9977d" stroke-width="1.5"/>
  <g class="sites">
    ${circles}
  </g>
</svg>`;
}
