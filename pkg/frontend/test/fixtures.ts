import type { HazardLogEntryDoc, VerdictsView } from "../src/api.js";

export function violatedView(): VerdictsView {
  return {
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
        required_reduction_factor: "215575/803",
        required_reduction_display: "268.5",
      },
    ],
    aggregates: [],
  };
}

export function acceptedView(): VerdictsView {
  const view = violatedView();
  view.phase = "done";
  view.converged = true;
  view.iteration = 2;
  view.summary = "converged: combined target and deviation risk accepted for all criteria";
  view.verdicts = [
    {
      criterion_id: "PRB",
      severity_class: "S3",
      actual_rate: "1/4000000000",
      actual_display: "2.5e-10",
      tolerable_rate: "1/2155750000",
      tolerable_display: "4.64e-10",
      status: "accepted",
      boundary: true,
    },
  ];
  return view;
}

export function hazardLog(status = "open"): HazardLogEntryDoc[] {
  const history: HazardLogEntryDoc["history"] = [{ status: "open", version: 2 }];
  if (status === "accepted") {
    history.push(
      { status: "goal_assigned", version: 4 },
      { status: "measures_specified", version: 4 },
      { status: "accepted", version: 8, note: "risk evaluation accepted" },
    );
  }
  return [
    {
      hazard_id: "H-CROSSWALK",
      status,
      hazardous_event_ids: ["HE-1"],
      events: [
        {
          id: "HE-1",
          hazard_id: "H-CROSSWALK",
          scenario_id: "crosswalk-base",
          description: "ego collides with a pedestrian in front of a crosswalk",
          provenance: "target",
          triggering_behavior: "proceed_through_crosswalk",
        },
      ],
      history,
    },
  ];
}
