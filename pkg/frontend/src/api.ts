// Thin typed client for the conduct service. Every mutation awaits the
// server; nothing is computed or cached client-side.

import type { DesignPayload, RecommendationView, TrialView } from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

export interface CohortRequest {
  dose: number;
  outcomes: number[];
  override?: boolean;
  cohort_index?: number;
}

export class TrialApi {
  constructor(
    private baseUrl: string = "",
    private fetchImpl: typeof fetch = globalThis.fetch?.bind(globalThis),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, {
      method,
      headers: body === undefined ? {} : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const payload = await response.json().catch(() => ({}));
    if (!response.ok) {
      const detail = (payload as { detail?: unknown }).detail;
      throw new ApiError(response.status, typeof detail === "string" ? detail : JSON.stringify(detail));
    }
    return payload as T;
  }

  createTrial(design: DesignPayload, id?: string): Promise<TrialView> {
    return this.request("POST", "/v1/trials", id === undefined ? { design } : { design, id });
  }

  getState(trialId: string): Promise<TrialView> {
    return this.request("GET", `/v1/trials/${trialId}`);
  }

  getRecommendation(trialId: string): Promise<RecommendationView> {
    return this.request("GET", `/v1/trials/${trialId}/recommendation`);
  }

  postCohort(trialId: string, cohort: CohortRequest): Promise<TrialView> {
    return this.request("POST", `/v1/trials/${trialId}/cohorts`, cohort);
  }

  terminate(trialId: string, reason: string): Promise<TrialView> {
    return this.request("POST", `/v1/trials/${trialId}/terminate`, { reason });
  }
}

/** Service URL resolution: runtime global, then meta tag, then same origin. */
export function resolveServiceUrl(): string {
  const fromGlobal = (globalThis as { ESCALATE_SERVICE_URL?: string }).ESCALATE_SERVICE_URL;
  if (fromGlobal) return fromGlobal;
  if (typeof document !== "undefined") {
    const meta = document.querySelector('meta[name="escalate-service"]');
    const content = meta?.getAttribute("content");
    if (content) return content;
  }
  return "";
}
