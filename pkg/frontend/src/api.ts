/**
 * Typed client for the riskcore JSON API.
 *
 * The client tracks the workspace version from every response header
 * and presents it back on mutations, so a concurrent change anywhere
 * else surfaces as a VersionConflictError instead of a silent
 * overwrite. All rate strings pass through untouched; nothing here
 * does arithmetic.
 */

export interface VerdictDoc {
  criterion_id: string;
  severity_class: string;
  actual_rate: string;
  actual_display: string;
  tolerable_rate: string;
  tolerable_display: string;
  status: "accepted" | "violated";
  boundary: boolean;
  required_reduction_factor?: string;
  required_reduction_display?: string;
}

export interface VerdictsView {
  workspace_version: number;
  phase: string;
  iteration: number;
  converged: boolean;
  report_path: string | null;
  summary: string;
  verdicts: VerdictDoc[];
  aggregates: AggregateDoc[];
}

export interface AggregateDoc {
  criterion_id: string;
  severity_class: string;
  rate: string;
  rate_display: string;
}

export interface HazardEventDoc {
  id: string;
  hazard_id: string;
  scenario_id: string;
  description: string;
  provenance: string;
  triggering_behavior: string;
}

export interface HazardLogEntryDoc {
  hazard_id: string;
  status: string;
  hazardous_event_ids: string[];
  events: HazardEventDoc[];
  history: { status: string; version: number; note?: string }[];
}

export interface SpecView {
  workspace_version: number;
  text: string;
  revision: number | null;
}

export interface StepResultDoc {
  action: string;
  status: "ok" | "violated" | "converged" | "blocked";
  summary: string;
  report_path: string | null;
  details: Record<string, unknown>;
}

export interface ResidualPreview {
  residual: string;
  residual_display: string;
  severity_class: string;
  tolerable_display?: string;
  would_accept?: boolean;
}

export interface MeasureWhatifResponse {
  measure: { id: string; kind: string };
  summary: string;
  residual_prediction: {
    criterion_id: string;
    severity_class: string;
    current: string;
    predicted: string;
    tolerable: string;
    would_accept: boolean;
  }[];
  iteration1: { accepted: boolean; summary: string };
  iteration2: { accepted: boolean; summary: string } | null;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly body: Record<string, unknown>,
  ) {
    super(typeof body.error === "string" ? body.error : `HTTP ${status}`);
  }
}

/** The workspace moved under us; reload before acting again. */
export class VersionConflictError extends ApiError {
  readonly currentVersion: string | null;

  constructor(body: Record<string, unknown>) {
    super(409, body);
    const version = body.workspace_version;
    this.currentVersion =
      typeof version === "string" || typeof version === "number"
        ? String(version)
        : null;
  }
}

export class ApiClient {
  /** Version from the last response; what If-Match will present. */
  version: string | null = null;

  constructor(private readonly base: string = "") {}

  private track(response: Response): void {
    const version = response.headers.get("X-Workspace-Version");
    if (version !== null) this.version = version;
  }

  private async parse(response: Response): Promise<Record<string, unknown>> {
    const text = await response.text();
    try {
      return text ? JSON.parse(text) : {};
    } catch {
      return { error: text };
    }
  }

  async get<T>(path: string): Promise<T> {
    const response = await fetch(this.base + path);
    this.track(response);
    const body = await this.parse(response);
    if (!response.ok) throw new ApiError(response.status, body);
    return body as T;
  }

  async post<T>(path: string, payload: unknown): Promise<T> {
    const headers: Record<string, string> = {
      "Content-Type": "application/json",
    };
    if (this.version !== null) headers["If-Match"] = this.version;
    const response = await fetch(this.base + path, {
      method: "POST",
      headers,
      body: JSON.stringify(payload),
    });
    this.track(response);
    const body = await this.parse(response);
    if (response.status === 409) throw new VersionConflictError(body);
    if (!response.ok) throw new ApiError(response.status, body);
    return body as T;
  }

  verdicts(): Promise<VerdictsView> {
    return this.get("/api/verdicts");
  }

  hazardLog(): Promise<HazardLogEntryDoc[]> {
    return this.get("/api/hazard-log");
  }

  spec(): Promise<SpecView> {
    return this.get("/api/spec");
  }

  whatifResidual(params: Record<string, string>): Promise<ResidualPreview> {
    return this.post("/api/whatif", params);
  }

  whatifMeasure(doc: Record<string, unknown>): Promise<MeasureWhatifResponse> {
    return this.post("/api/whatif", doc);
  }

  submitMeasure(
    doc: Record<string, unknown>,
    apply: boolean,
  ): Promise<{
    submitted: StepResultDoc;
    applied: StepResultDoc | null;
    workspace_version: number;
  }> {
    return this.post("/api/measures", { ...doc, apply });
  }

  iterate(): Promise<{ result: StepResultDoc; workspace_version: number }> {
    return this.post("/api/iterate", {});
  }

  run(
    maxIterations?: number,
  ): Promise<{ result: StepResultDoc; workspace_version: number }> {
    const payload: Record<string, unknown> = { run: true };
    if (maxIterations !== undefined) payload.max_iterations = maxIterations;
    return this.post("/api/iterate", payload);
  }
}
