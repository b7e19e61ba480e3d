// Report rendering: bars, badges and scores echo the report document
// verbatim; nothing is recomputed client-side.

import { CRITERIA, ReportDoc, TaskDoc } from "./protocol.js";
import { SENSOR_ORDER } from "./wire.js";

const esc = (s: string) =>
  s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");

function criterionRows(task: TaskDoc): string {
  return CRITERIA.filter((c) => task.criteria[c])
    .map((c) => {
      const score = task.criteria[c]!;
      const width = score.points * 10; // 0..10 points on a 0..100% bar
      const note = score.violation
        ? `<span class="violation">${esc(score.violation.description)}</span>`
        : "";
      return `<tr class="criterion" data-criterion="${c}">
        <td>${c.replace("_", " ")}</td>
        <td><div class="bar"><div class="fill" style="width:${width}%"></div></div></td>
        <td class="points">${score.points.toFixed(2)}/10</td>
        <td>${note}</td>
      </tr>`;
    })
    .join("\n");
}

function contributionBars(task: TaskDoc): string {
  return SENSOR_ORDER.map((sensor) => {
    const pct = task.contributions_pct[sensor];
    return `<div class="contrib" data-sensor="${sensor}">
      <span class="label">${sensor}</span>
      <div class="bar"><div class="fill" style="width:${pct}%"></div></div>
      <span class="pct">${pct.toFixed(1)}%</span>
    </div>`;
  }).join("\n");
}

export function renderReportHtml(doc: ReportDoc): string {
  const tasks = ["superficial", "deep", "liver"]
    .map((name) => {
      const task = doc.tasks[name];
      return `<section class="task" data-task="${name}">
      <h3>${name} — ${task.press_total} presses (session ${esc(task.session_id)})</h3>
      <table class="criteria">${criterionRows(task)}</table>
      <div class="contributions">${contributionBars(task)}</div>
    </section>`;
    })
    .join("\n");
  const codecWarning =
    doc.provenance.codec_errors > 0
      ? `<p class="provenance-warning">⚠ ${doc.provenance.codec_errors} corrupted ` +
        `frames were discarded during capture</p>`
      : "";
  const averages = CRITERIA.map(
    (c) =>
      `<span class="avg" data-criterion="${c}">${c.replace("_", " ")}: ` +
      `${doc.criterion_averages[c].toFixed(2)}</span>`,
  ).join(" · ");
  return `<article class="report">
  <header>
    <h2>Competency report — ${esc(doc.participant_id)}</h2>
    <div class="total">${doc.total.toFixed(2)}<span class="outof">/30</span></div>
    <div class="osce badge badge-${doc.osce.toLowerCase()}">${doc.osce}</div>
  </header>
  ${codecWarning}
  ${tasks}
  <footer>
    <div class="averages">${averages}</div>
    <div class="engine">engine ${esc(doc.engine_version)} · slope ${doc.config.assessment.penalty_slope}</div>
  </footer>
</article>`;
}
