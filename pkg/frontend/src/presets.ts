// Shipped design presets, matching the service's bundled configurations.

import type { DesignPayload } from "./types.js";

export const EVEROLIMUS_CIBP: DesignPayload = {
  name: "Everolimus CIBP(0.3)",
  gamma: 0.3,
  skeleton: [0.2, 0.3, 0.4],
  model: { kind: "power", prior_mean: 0.0, prior_var: 1.9, slope_scale: 0.44 },
  criterion: { kind: "cibp", a: 0.3, floor: 1.2e-6 },
  cohort_size: 3,
  max_patients: 21,
  no_skip: true,
  start_dose: 1,
};

export const EVEROLIMUS_CRM: DesignPayload = {
  ...EVEROLIMUS_CIBP,
  name: "Everolimus CRM",
  criterion: { kind: "sq-distance" },
};

export const SIX_DOSE_CIBP: DesignPayload = {
  name: "Six-dose CIBP(0.3)",
  gamma: 0.25,
  skeleton: [0.1567410211, 0.25, 0.3545004276, 0.4603431111, 0.5597078091, 0.6478244986],
  criterion: { kind: "cibp", a: 0.3 },
  cohort_size: 3,
  max_patients: 30,
  no_skip: true,
  start_dose: 1,
};

export const PRESETS: ReadonlyArray<DesignPayload> = [EVEROLIMUS_CIBP, EVEROLIMUS_CRM, SIX_DOSE_CIBP];
