import { describe, expect, it } from "vitest";

import type { VerdictsView } from "../src/api.js";
import {
  emptyDraft,
  initialState,
  isRateLiteral,
  measureDocument,
  parseScope,
  selectedEvent,
  sliderFraction,
  validateDraft,
  violatedVerdicts,
} from "../src/state.js";

describe("rate literal syntax", () => {
  it.each(["0", "1", "1.25e-7", "4.64E-10", "999/1000", "0.5", ".5", "-3", "1e-11"])(
    "accepts %s",
    (text) => {
      expect(isRateLiteral(text)).toBe(true);
    },
  );

  it.each(["", "abc", "1/0", "1.2.3", "1e", "1/2/3", "0x10"])(
    "rejects %s",
    (text) => {
      expect(isRateLiteral(text)).toBe(false);
    },
  );
});

describe("slider positions", () => {
  it("become exact fraction literals, no float round trip", () => {
    expect(sliderFraction("999")).toBe("999/1000");
    expect(sliderFraction(0)).toBe("0/1000");
    expect(sliderFraction("1000")).toBe("1000/1000");
  });
});

describe("scope parsing", () => {
  it("splits on commas and drops blanks", () => {
    expect(parseScope("base, variant")).toEqual(["base", "variant"]);
    expect(parseScope("  variant ")).toEqual(["variant"]);
    expect(parseScope("")).toEqual([]);
    expect(parseScope(" , ,")).toEqual([]);
  });
});

describe("measure draft validation", () => {
  it("flags an empty payload", () => {
    const problems = validateDraft(emptyDraft());
    expect(problems).toContain("payload must not be empty");
  });

  it("flags malformed numeric fields by name", () => {
    const draft = { ...emptyDraft(), payload: "RULE x", effectiveness: "high" };
    const problems = validateDraft(draft);
    expect(problems).toHaveLength(1);
    expect(problems[0]).toContain("effectiveness");
    expect(problems[0]).toContain("high");
  });

  it("accepts a complete draft", () => {
    const draft = {
      ...emptyDraft(),
      payload: "RULE r: a => b",
      corruptRate: "1e-11",
    };
    expect(validateDraft(draft)).toEqual([]);
  });
});

describe("measure document mapping", () => {
  it("carries every field the API expects, nothing invented", () => {
    const doc = measureDocument({
      kind: "behavior_spec_delta",
      payload: "RULE r: a => b",
      effectiveness: "999/1000",
      integrity: "999/1000",
      corruptRate: "1e-11",
      corruptSeverity: "S3",
      scope: "variant",
      goalId: "",
    });
    expect(doc).toEqual({
      kind: "behavior_spec_delta",
      payload: "RULE r: a => b",
      claimed_reduction_effectiveness: "999/1000",
      integrity: "999/1000",
      corrupt_behavior_risk: { rate: "1e-11", severity_class: "S3" },
      scenario_scope: ["variant"],
    });
  });

  it("omits optional parts left blank", () => {
    const doc = measureDocument({ ...emptyDraft(), payload: "x", corruptRate: "" });
    expect(doc).not.toHaveProperty("corrupt_behavior_risk");
    expect(doc).not.toHaveProperty("scenario_scope");
    expect(doc).not.toHaveProperty("goal_id");
  });

  it("passes a goal id through when given", () => {
    const doc = measureDocument({ ...emptyDraft(), payload: "x", goalId: "SG-1" });
    expect(doc.goal_id).toBe("SG-1");
  });
});

const VIEW: VerdictsView = {
  workspace_version: 3,
  phase: "treatment",
  iteration: 1,
  converged: false,
  report_path: "reports/iter-1-target.report.json",
  summary: "1 criterion violated (PRB/S3): 1.25e-7 > 4.64e-10",
  verdicts: [
    {
      criterion_id: "PRB",
      severity_class: "S3",
      actual_rate: "1/8030000",
      actual_display: "1.25e-7",
      tolerable_rate: "1/2155750000",
      tolerable_display: "4.64e-10",
      status: "violated",
      boundary: true,
      required_reduction_display: "268.5",
    },
    {
      criterion_id: "PRB",
      severity_class: "S2",
      actual_rate: "0",
      actual_display: "0",
      tolerable_rate: "1/1000000",
      tolerable_display: "1e-6",
      status: "accepted",
      boundary: false,
    },
  ],
  aggregates: [],
};

describe("verdict selection", () => {
  it("filters to violated rows", () => {
    const violated = violatedVerdicts(VIEW);
    expect(violated).toHaveLength(1);
    expect(violated[0]?.severity_class).toBe("S3");
    expect(violatedVerdicts(null)).toEqual([]);
  });
});

describe("event selection", () => {
  it("finds the selected event across hazard log entries", () => {
    const state = initialState();
    state.hazardLog = [
      {
        hazard_id: "H-CROSSWALK",
        status: "open",
        hazardous_event_ids: ["HE-1"],
        events: [
          {
            id: "HE-1",
            hazard_id: "H-CROSSWALK",
            scenario_id: "base",
            description: "collides with a pedestrian",
            provenance: "target",
            triggering_behavior: "proceed",
          },
        ],
        history: [],
      },
    ];
    expect(selectedEvent(state)).toBeNull();
    state.selectedEventId = "HE-1";
    expect(selectedEvent(state)?.description).toBe("collides with a pedestrian");
  });
});
