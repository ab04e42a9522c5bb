/**
 * Dashboard state and the measure form model.
 *
 * Every number shown on screen is a string the server produced;
 * the only transforms allowed here are syntactic (slider position
 * to a fraction literal, comma lists to arrays). Risk arithmetic
 * stays on the other side of the API.
 */

import type {
  HazardLogEntryDoc,
  MeasureWhatifResponse,
  ResidualPreview,
  VerdictDoc,
  VerdictsView,
} from "./api.js";

export type BannerKind = "error" | "conflict" | "info";

export interface Banner {
  kind: BannerKind;
  message: string;
}

export type WhatifPreview =
  | { kind: "residual"; response: ResidualPreview }
  | { kind: "measure"; response: MeasureWhatifResponse };

export interface MeasureDraft {
  kind: "behavior_spec_delta" | "odd_restriction";
  payload: string;
  effectiveness: string;
  integrity: string;
  corruptRate: string;
  corruptSeverity: "" | "S0" | "S1" | "S2" | "S3";
  scope: string;
  goalId: string;
}

export interface DashboardState {
  workspaceVersion: string | null;
  verdicts: VerdictsView | null;
  hazardLog: HazardLogEntryDoc[];
  specRevision: number | null;
  selectedEventId: string | null;
  draft: MeasureDraft;
  preview: WhatifPreview | null;
  banner: Banner | null;
  busy: boolean;
}

export function initialState(): DashboardState {
  return {
    workspaceVersion: null,
    verdicts: null,
    hazardLog: [],
    specRevision: null,
    selectedEventId: null,
    draft: emptyDraft(),
    preview: null,
    banner: null,
    busy: false,
  };
}

export function emptyDraft(): MeasureDraft {
  return {
    kind: "behavior_spec_delta",
    payload: "",
    effectiveness: "999/1000",
    integrity: "999/1000",
    corruptRate: "0",
    corruptSeverity: "",
    scope: "",
    goalId: "",
  };
}

const DECIMAL = /^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$/;
const FRACTION = /^[+-]?\d+\s*\/\s*[1-9]\d*$/;

/** Syntax check only; the server decides whether the value is sane. */
export function isRateLiteral(text: string): boolean {
  const trimmed = text.trim();
  return DECIMAL.test(trimmed) || FRACTION.test(trimmed);
}

/** Slider position 0..1000 rendered as an exact fraction literal. */
export function sliderFraction(position: string | number): string {
  return `${position}/1000`;
}

export function parseScope(scope: string): string[] {
  return scope
    .split(",")
    .map((part) => part.trim())
    .filter((part) => part.length > 0);
}

export function validateDraft(draft: MeasureDraft): string[] {
  const problems: string[] = [];
  if (draft.payload.trim() === "") {
    problems.push("payload must not be empty");
  }
  for (const [label, value] of [
    ["effectiveness", draft.effectiveness],
    ["integrity", draft.integrity],
  ] as const) {
    if (!isRateLiteral(value)) {
      problems.push(`${label} is not a number or fraction: ${value || "(empty)"}`);
    }
  }
  if (draft.corruptRate.trim() !== "" && !isRateLiteral(draft.corruptRate)) {
    problems.push(`corrupt risk rate is not a number or fraction: ${draft.corruptRate}`);
  }
  return problems;
}

/** The JSON document POST /api/measures expects. Call after validateDraft. */
export function measureDocument(draft: MeasureDraft): Record<string, unknown> {
  const doc: Record<string, unknown> = {
    kind: draft.kind,
    payload: draft.payload,
    claimed_reduction_effectiveness: draft.effectiveness.trim(),
    integrity: draft.integrity.trim(),
  };
  const corrupt: Record<string, unknown> = {};
  if (draft.corruptRate.trim() !== "") corrupt.rate = draft.corruptRate.trim();
  if (draft.corruptSeverity !== "") corrupt.severity_class = draft.corruptSeverity;
  if (Object.keys(corrupt).length > 0) doc.corrupt_behavior_risk = corrupt;
  const scope = parseScope(draft.scope);
  if (scope.length > 0) doc.scenario_scope = scope;
  if (draft.goalId.trim() !== "") doc.goal_id = draft.goalId.trim();
  return doc;
}

export function violatedVerdicts(view: VerdictsView | null): VerdictDoc[] {
  if (view === null) return [];
  return view.verdicts.filter((verdict) => verdict.status === "violated");
}

export function selectedEvent(state: DashboardState) {
  for (const entry of state.hazardLog) {
    for (const event of entry.events) {
      if (event.id === state.selectedEventId) return event;
    }
  }
  return null;
}
