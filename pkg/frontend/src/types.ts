// Wire types for the /v1 conduct API. Field names mirror the service JSON
// exactly; the UI never derives statistics from these, it only displays them.

export interface PowerModelSpec {
  kind: "power";
  prior_mean: number;
  prior_var: number;
  slope_scale: number;
}

export interface Logistic2ModelSpec {
  kind: "logistic2";
  prior_mean: [number, number];
  prior_cov: number[][];
  log_slope: boolean;
}

export interface CriterionSpec {
  kind: string;
  [param: string]: unknown;
}

export interface DesignPayload {
  name?: string;
  gamma: number;
  skeleton: number[];
  model?: PowerModelSpec | Logistic2ModelSpec;
  criterion?: CriterionSpec;
  cohort_size?: number;
  max_patients?: number;
  no_skip?: boolean;
  start_dose?: number;
  grid_nodes?: number | null;
}

export interface CohortEvent {
  type: "cohort";
  index: number;
  dose: number;
  outcomes: number[];
  recommended: number;
  override: boolean;
  time: string;
}

export interface TrialView {
  id: string;
  design: Required<Pick<DesignPayload, "name" | "gamma" | "skeleton">> & DesignPayload;
  patients_treated: number;
  dlt_total: number;
  highest_tried: number;
  complete: boolean;
  terminated: boolean;
  history: Array<[number, number]>;
  cohorts: CohortEvent[];
  posterior_mean_tox: number[];
  criterion_values: number[];
  admissible_doses: number[];
  recommendation: number | null;
  mtd: number | null;
}

export interface RecommendationView {
  id: string;
  complete: boolean;
  recommendation: number | null;
  mtd: number | null;
}
