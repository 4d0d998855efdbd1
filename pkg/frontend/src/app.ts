// Bootstrap: wires the wizard and conduct screens to the service. Every
// state change round-trips through the API and re-renders from the response;
// there is no optimistic update.

import { ApiError, TrialApi, resolveServiceUrl } from "./api.js";
import { PRESETS } from "./presets.js";
import { renderTrial, renderWizard } from "./render.js";
import type { DesignPayload, TrialView } from "./types.js";

const api = new TrialApi(resolveServiceUrl());

function el(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node;
}

function showError(message: string, retry?: () => void) {
  const box = el("errors");
  box.innerHTML = `<div class="error">${message}${retry ? ' <button id="retry">retry</button>' : ""}</div>`;
  if (retry) document.getElementById("retry")?.addEventListener("click", retry);
}

function clearError() {
  el("errors").innerHTML = "";
}

async function guarded(action: () => Promise<void>, retry?: () => void) {
  try {
    clearError();
    await action();
  } catch (err) {
    if (err instanceof ApiError) {
      showError(err.detail, retry);
    } else {
      showError(`service unreachable: ${String(err)}`, retry);
    }
  }
}

function designFromWizard(form: HTMLFormElement): DesignPayload {
  const data = new FormData(form);
  const preset = PRESETS[Number(data.get("preset") ?? 0)];
  const design: DesignPayload = JSON.parse(JSON.stringify(preset));
  const gamma = data.get("gamma");
  if (gamma) design.gamma = Number(gamma);
  const skeleton = data.get("skeleton");
  if (skeleton) design.skeleton = String(skeleton).split(",").map((s) => Number(s.trim()));
  const a = data.get("a");
  if (a && design.criterion?.kind === "cibp") design.criterion = { kind: "cibp", a: Number(a) };
  const cohort = data.get("cohort_size");
  if (cohort) design.cohort_size = Number(cohort);
  const maxPatients = data.get("max_patients");
  if (maxPatients) design.max_patients = Number(maxPatients);
  return design;
}

function parseOutcomes(raw: string): number[] {
  const values = raw.trim().split(/[\s,]+/).filter(Boolean).map(Number);
  if (values.length === 0 || values.some((v) => v !== 0 && v !== 1)) {
    throw new ApiError(0, "outcomes must be a list of 0/1 values, e.g. '0 1 0'");
  }
  return values;
}

function showTrial(view: TrialView) {
  el("main").innerHTML = renderTrial(view);
  const form = document.getElementById("cohort-form") as HTMLFormElement | null;
  form?.addEventListener("submit", (event) => {
    event.preventDefault();
    const data = new FormData(form);
    const submit = () =>
      guarded(async () => {
        const outcomes = parseOutcomes(String(data.get("outcomes") ?? ""));
        const next = await api.postCohort(view.id, {
          dose: Number(data.get("dose")),
          outcomes,
          override: !view.admissible_doses.includes(Number(data.get("dose"))),
          cohort_index: view.cohorts.length,
        });
        showTrial(next);
      }, submit);
    void submit();
  });
  document.getElementById("terminate")?.addEventListener("click", () => {
    const reason = window.prompt("termination reason?") ?? "";
    void guarded(async () => showTrial(await api.terminate(view.id, reason)));
  });
}

export function boot() {
  el("main").innerHTML = renderWizard(PRESETS);
  const wizard = document.getElementById("wizard") as HTMLFormElement;
  wizard.addEventListener("submit", (event) => {
    event.preventDefault();
    void guarded(async () => {
      const view = await api.createTrial(designFromWizard(wizard));
      showTrial(view);
    });
  });
}

if (typeof document !== "undefined" && document.getElementById("main")) {
  boot();
}
