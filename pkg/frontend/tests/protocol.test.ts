// Schema conformance: the panel must render any engine-produced report
// document without recomputation. The fixtures are 20 reports of varied
// shape generated by the engine itself.
import { readFileSync } from "node:fs";
import { describe, expect, it } from "vitest";

import {
  CRITERIA,
  ReportDoc,
  ReportSchemaError,
  parseMessage,
  validateReport,
} from "../src/protocol.js";
import { renderReportHtml } from "../src/reportview.js";
import { SENSOR_ORDER } from "../src/wire.js";

const reports: unknown[] = JSON.parse(
  readFileSync(new URL("./fixtures/reports.json", import.meta.url), "utf-8"),
);

describe("report schema", () => {
  it("accepts all 20 engine-produced reports", () => {
    expect(reports.length).toBe(20);
    for (const doc of reports) {
      expect(() => validateReport(doc)).not.toThrow();
    }
  });

  it("rejects unknown schema versions with a notice-worthy error", () => {
    const doc = { ...(reports[0] as Record<string, unknown>), schema: "palp.report/99" };
    expect(() => validateReport(doc)).toThrow(ReportSchemaError);
    expect(() => validateReport(doc)).toThrow(/palp\.report\/99/);
  });

  it("rejects structurally broken documents", () => {
    const base = reports[0] as Record<string, unknown>;
    expect(() => validateReport({ ...base, total: "thirty" })).toThrow(ReportSchemaError);
    expect(() => validateReport({ ...base, osce: "Stellar" })).toThrow(ReportSchemaError);
    const noLiver = { ...base, tasks: { ...(base.tasks as object) } } as Record<string, unknown>;
    delete (noLiver.tasks as Record<string, unknown>).liver;
    expect(() => validateReport(noLiver)).toThrow(ReportSchemaError);
  });
});

describe("report rendering echoes the document verbatim", () => {
  it.each(reports.map((doc, i) => [i, doc] as const))(
    "report fixture %i",
    (_i, raw) => {
      const doc = validateReport(raw);
      const html = renderReportHtml(doc);
      expect(html).toContain(`${doc.total.toFixed(2)}<span class="outof">/30</span>`);
      expect(html).toContain(`>${doc.osce}<`);
      for (const [taskName, task] of Object.entries(doc.tasks)) {
        expect(html).toContain(`data-task="${taskName}"`);
        for (const criterion of CRITERIA) {
          const score = task.criteria[criterion];
          if (!score) continue;
          expect(html).toContain(`${score.points.toFixed(2)}/10`);
          if (score.violation) {
            // descriptions can contain markup-significant characters
            expect(html).toContain(
              score.violation.description
                .replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;"),
            );
          }
        }
        for (const sensor of SENSOR_ORDER) {
          expect(html).toContain(
            `<span class="pct">${task.contributions_pct[sensor].toFixed(1)}%</span>`,
          );
        }
      }
    },
  );

  it("shows the provenance warning only for nonzero codec errors", () => {
    const doc = validateReport(reports[0]);
    expect(renderReportHtml(doc)).not.toContain("provenance-warning");
    const noisy: ReportDoc = { ...doc, provenance: { codec_errors: 3 } };
    const html = renderReportHtml(noisy);
    expect(html).toContain("provenance-warning");
    expect(html).toContain("3 corrupted");
  });
});

describe("message parsing", () => {
  it("parses typed feedback messages", () => {
    const msg = parseMessage('{"kind": "heartbeat"}');
    expect(msg.kind).toBe("heartbeat");
    expect(() => parseMessage('{"nokind": 1}')).toThrow();
    expect(() => parseMessage("not json")).toThrow();
  });
});
