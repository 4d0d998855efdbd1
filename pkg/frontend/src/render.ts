// Pure view builders: every function maps API payloads to HTML strings.
// All numbers on screen come verbatim from service fields (full precision in
// data-value attributes, rounding only in the visible text), so the console
// never recomputes a statistic.

import type { CohortEvent, DesignPayload, TrialView } from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

const fmt = (value: number, digits: number) =>
  `<span data-value="${value}">${value.toFixed(digits)}</span>`;

export function renderDoseLadder(view: TrialView): string {
  const { skeleton } = view.design;
  const rows = skeleton
    .map((guess, i) => {
      const dose = i + 1;
      const recommended = view.recommendation === dose;
      const admissible = view.admissible_doses.includes(dose);
      const classes = [
        recommended ? "recommended" : "",
        admissible ? "" : "inadmissible",
      ]
        .filter(Boolean)
        .join(" ");
      return `<tr class="${classes}" data-dose="${dose}">
        <td>d${dose}${recommended ? " &#9654;" : ""}</td>
        <td>${fmt(guess, 3)}</td>
        <td>${fmt(view.posterior_mean_tox[i], 4)}</td>
        <td>${fmt(view.criterion_values[i], 4)}</td>
      </tr>`;
    })
    .join("\n");
  return `<table class="ladder">
    <thead><tr><th>dose</th><th>prior guess</th><th>posterior mean tox</th><th>criterion</th></tr></thead>
    <tbody>${rows}</tbody>
  </table>`;
}

export function renderTimeline(view: TrialView): string {
  if (view.cohorts.length === 0) {
    return `<p class="empty">No cohorts recorded yet.</p>`;
  }
  const items = view.cohorts
    .map((cohort: CohortEvent) => {
      const dlts = cohort.outcomes.reduce((a, b) => a + b, 0);
      const override = cohort.override
        ? ` <span class="override">override (recommended d${cohort.recommended})</span>`
        : "";
      return `<li data-cohort="${cohort.index}">cohort ${cohort.index + 1}: dose d${cohort.dose}, ` +
        `outcomes [${cohort.outcomes.join(", ")}] (${dlts}/${cohort.outcomes.length} DLT)${override}</li>`;
    })
    .join("\n");
  return `<ol class="timeline">${items}</ol>`;
}

export function renderStatusBanner(view: TrialView): string {
  const counts = `${view.patients_treated} treated, ${view.dlt_total} DLTs`;
  if (view.terminated) {
    return `<div class="banner terminated">Trial terminated (${counts}). Final MTD: <strong>d${view.mtd}</strong></div>`;
  }
  if (view.complete) {
    return `<div class="banner complete">Maximum sample size reached (${counts}). Final MTD: <strong>d${view.mtd}</strong></div>`;
  }
  return `<div class="banner open">Open trial (${counts}). Next recommended dose: <strong>d${view.recommendation}</strong></div>`;
}

/** Per-dose posterior-mean curve with the target as a reference line. */
export function renderPosteriorChart(view: TrialView): string {
  if (view.patients_treated === 0) {
    return `<p class="empty chart-placeholder">The posterior curve appears after the first cohort.</p>`;
  }
  const width = 320;
  const height = 180;
  const pad = 28;
  const means = view.posterior_mean_tox;
  const n = means.length;
  const x = (i: number) => pad + (i * (width - 2 * pad)) / Math.max(n - 1, 1);
  const y = (p: number) => height - pad - p * (height - 2 * pad);
  const points = means.map((p, i) => `${x(i).toFixed(1)},${y(p).toFixed(1)}`).join(" ");
  const markers = means
    .map(
      (p, i) =>
        `<circle cx="${x(i).toFixed(1)}" cy="${y(p).toFixed(1)}" r="3" data-dose="${i + 1}" data-value="${p}"/>`,
    )
    .join("");
  const gammaY = y(view.design.gamma).toFixed(1);
  return `<svg class="posterior-chart" viewBox="0 0 ${width} ${height}" role="img" aria-label="posterior mean toxicity per dose">
    <line x1="${pad}" y1="${gammaY}" x2="${width - pad}" y2="${gammaY}" class="target" stroke-dasharray="4 3"/>
    <text x="${width - pad}" y="${Number(gammaY) - 4}" text-anchor="end" class="target-label">target ${view.design.gamma}</text>
    <polyline points="${points}" fill="none"/>
    ${markers}
  </svg>`;
}

export function renderCohortForm(view: TrialView): string {
  const options = view.admissible_doses
    .map((d) => `<option value="${d}" ${d === view.recommendation ? "selected" : ""}>d${d}</option>`)
    .join("");
  const all = view.design.skeleton.map((_, i) => i + 1);
  const overrideOptions = all
    .filter((d) => !view.admissible_doses.includes(d))
    .map((d) => `<option value="${d}">d${d} (override)</option>`)
    .join("");
  return `<form id="cohort-form">
    <label>dose <select name="dose">${options}${overrideOptions}</select></label>
    <label>outcomes <input name="outcomes" placeholder="e.g. 0 1 0" autocomplete="off"></label>
    <button type="submit">record cohort</button>
    <button type="button" id="terminate">terminate trial</button>
  </form>`;
}

export function renderWizard(presets: ReadonlyArray<DesignPayload>): string {
  const options = presets
    .map((p, i) => `<option value="${i}">${escapeHtml(p.name ?? `design ${i + 1}`)}</option>`)
    .join("");
  return `<form id="wizard">
    <h2>New trial</h2>
    <label>preset <select name="preset">${options}</select></label>
    <details><summary>design parameters</summary>
      <label>target toxicity <input name="gamma" type="number" step="0.01" min="0.01" max="0.49"></label>
      <label>skeleton (comma separated) <input name="skeleton"></label>
      <label>criterion asymmetry a <input name="a" type="number" step="0.05" min="0.05" max="1.95"></label>
      <label>cohort size <input name="cohort_size" type="number" min="1"></label>
      <label>max patients <input name="max_patients" type="number" min="1"></label>
    </details>
    <button type="submit">create trial</button>
  </form>`;
}

export function renderTrial(view: TrialView): string {
  return `<section class="trial" data-trial="${view.id}">
    <h2>${escapeHtml(view.design.name ?? view.id)}</h2>
    ${renderStatusBanner(view)}
    ${renderDoseLadder(view)}
    ${view.complete ? "" : renderCohortForm(view)}
    <h3>Posterior</h3>
    ${renderPosteriorChart(view)}
    <h3>Audit trail</h3>
    ${renderTimeline(view)}
  </section>`;
}
