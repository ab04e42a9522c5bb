"""The iterative risk management loop over a workspace.

The loop alternates two analysis passes until every acceptance criterion
is met.  Iteration 1 judges the risk of the *target behavior* itself;
once that is accepted, iteration 2 adds the risk of *deviations* from it
(guide-word perturbations of every planned action) and judges the sum.
Applying a safety measure changes the behavior specification, so it
always restarts the loop at iteration 1.

Engine state is a small phase machine persisted next to the reports::

    (analysis, i)   identify hazardous events for iteration i
    (evaluation, i) estimate, ascribe, aggregate, and judge those events
    (treatment, i)  a criterion is violated; measures are needed
    done            iteration 2 accepted; reports are final

Every step is one store transaction: either the workspace moves to the
next consistent state (events logged, report written, state advanced) or
nothing changes.  Any out-of-band workspace change makes the persisted
state stale, which resets the loop to (analysis, 1) on the next step.
Reports never contain wall-clock time, so identical workspaces produce
byte-identical reports.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Any, Iterable, Mapping

from .conditions import parse_condition
from .dsl import SpecError, parse_delta, serialize_spec
from .estimation import estimate_event_risk, lookup_parameters
from .evaluation import (
    EvaluationError,
    Finding,
    RiskAscription,
    Verdict,
    VerdictStatus,
    aggregate,
    all_accepted,
    ascribe,
    compare,
)
from .hazards import identify_deviation_events, identify_hazardous_events
from .inference import infer
from .model import (
    HazardousEvent,
    MeasureKind,
    RiskValue,
    SafetyGoal,
    SafetyMeasure,
    SeverityClass,
    WorkspaceModel,
)
from .rates import as_fraction, format_rate, fraction_str
from .traceability import coverage_table, requirement_links
from .store import (
    GOALS_PATH,
    HAZARD_LOG_PATH,
    MEASURES_PATH,
    REPORTS_DIR,
    SPEC_PATH,
    HazardLogEntry,
    HazardLogStatus,
    Workspace,
    validate_documents,
)
from .treatment import (
    MeasureApplicationError,
    ResidualModel,
    TreatmentError,
    apply_measures,
    derive_safety_goal,
    predicted_residual,
    scenario_excluded,
    specify_measure,
)

STATE_PATH = f"{REPORTS_DIR}/state.json"
FINAL_REPORT_PATH = f"{REPORTS_DIR}/final.report.json"

DEFAULT_MAX_ITERATIONS = 8

PHASE_ANALYSIS = "analysis"
PHASE_EVALUATION = "evaluation"
PHASE_TREATMENT = "treatment"
PHASE_DONE = "done"


class EngineError(Exception):
    """A step was asked to do something the workspace state cannot support."""


def _plural(count: int, noun: str) -> str:
    return f"{count} {noun}" if count == 1 else f"{count} {noun}s"


# ============================================================
# Persisted engine state
# ============================================================

@dataclass(frozen=True)
class EngineState:
    phase: str
    iteration: int
    workspace_version: int
    sequence: int
    pending_event_ids: tuple[str, ...] = ()
    pending_findings: tuple[Mapping[str, Any], ...] = ()
    last_target_report: str | None = None
    last_report: str | None = None

    def to_doc(self) -> dict[str, Any]:
        return {
            "schema_version": 1,
            "phase": self.phase,
            "iteration": self.iteration,
            "workspace_version": self.workspace_version,
            "sequence": self.sequence,
            "pending_event_ids": list(self.pending_event_ids),
            "pending_findings": [dict(f) for f in self.pending_findings],
            "last_target_report": self.last_target_report,
            "last_report": self.last_report,
        }

    @classmethod
    def from_doc(cls, doc: Mapping[str, Any]) -> "EngineState":
        return cls(
            phase=doc["phase"],
            iteration=doc["iteration"],
            workspace_version=doc["workspace_version"],
            sequence=doc["sequence"],
            pending_event_ids=tuple(doc.get("pending_event_ids", [])),
            pending_findings=tuple(doc.get("pending_findings", [])),
            last_target_report=doc.get("last_target_report"),
            last_report=doc.get("last_report"),
        )


@dataclass(frozen=True)
class StepResult:
    """Outcome of one engine step, shaped for the command line and the API."""

    action: str
    status: str  # ok | violated | converged | blocked
    summary: str
    report_path: str | None = None
    details: dict[str, Any] = field(default_factory=dict)

    @property
    def failed(self) -> bool:
        return self.status in ("violated", "blocked")

    def to_doc(self) -> dict[str, Any]:
        return {
            "action": self.action,
            "status": self.status,
            "summary": self.summary,
            "report_path": self.report_path,
            "details": self.details,
        }


def _finding_doc(finding: Finding) -> dict[str, Any]:
    return {
        "kind": finding.kind,
        "message": finding.message,
        "entity_ids": list(finding.entity_ids),
    }


# ============================================================
# Pure pipeline passes (no workspace access)
# ============================================================

def effective_scenarios(model: WorkspaceModel) -> tuple[list, list[Finding]]:
    """Scenarios in scope, after applied operating-domain restrictions."""
    measures = list(model.measures.values())
    scenarios, findings = [], []
    for scenario in sorted(model.scenarios.values(), key=lambda s: s.id):
        if scenario_excluded(scenario, measures):
            findings.append(
                Finding(
                    kind="scenario_excluded",
                    message=(
                        f"scenario {scenario.id!r} is outside the restricted "
                        "operating domain"
                    ),
                    entity_ids=(scenario.id,),
                )
            )
        else:
            scenarios.append(scenario)
    return scenarios, findings


def missing_inputs(model: WorkspaceModel) -> list[Finding]:
    """What the analysis still needs, enumerated rather than failed one by one."""
    gaps = []
    if model.spec is None or not (model.spec.facts or model.spec.actions):
        gaps.append(("behavior specification", SPEC_PATH))
    if not model.scenarios:
        gaps.append(("scenarios", "catalog/scenarios.json"))
    if not model.hazards:
        gaps.append(("hazards", "hazards/hazards.json"))
    if not model.criteria:
        gaps.append(("risk acceptance criteria", "criteria/criteria.json"))
    return [
        Finding(
            kind="missing_input",
            message=f"no {what} defined ({where})",
            entity_ids=(where,),
        )
        for what, where in gaps
    ]


def analysis_pass(
    model: WorkspaceModel, iteration: int
) -> tuple[list[HazardousEvent], list[Finding]]:
    """Identify hazardous events for one iteration of the loop."""
    findings = missing_inputs(model)
    scenarios, exclusion_findings = effective_scenarios(model)
    findings.extend(exclusion_findings)
    if model.spec is None or not scenarios:
        return [], findings

    behaviors = {
        scenario.id: infer(model.spec, scenario.asserted_facts)
        for scenario in scenarios
    }
    hazards = list(model.hazards.values())
    if iteration == 1:
        events, conflict_findings = identify_hazardous_events(
            hazards,
            scenarios,
            behaviors,
            conflicting_actions=[tuple(sorted(p)) for p in model.conflicting_actions],
        )
        findings.extend(conflict_findings)
    else:
        events = identify_deviation_events(hazards, scenarios, behaviors)
    return events, findings


@dataclass(frozen=True)
class EvaluationOutcome:
    risks: tuple[tuple[HazardousEvent, RiskValue, bool], ...]
    ascriptions: tuple[RiskAscription, ...]
    aggregates: Mapping[tuple[str, SeverityClass], Fraction]
    combined: Mapping[tuple[str, SeverityClass], Fraction]
    verdicts: tuple[Verdict, ...]
    findings: tuple[Finding, ...]

    @property
    def accepted(self) -> bool:
        return all_accepted(self.verdicts)


def evaluation_pass(
    model: WorkspaceModel,
    events: Iterable[HazardousEvent],
    carried_aggregates: Mapping[tuple[str, SeverityClass], Fraction] | None = None,
) -> EvaluationOutcome:
    """Estimate, ascribe, aggregate, and judge one iteration's events.

    ``carried_aggregates`` holds the accepted target-behavior risk when
    judging iteration 2: the criteria see the sum of both contributions.
    """
    findings: list[Finding] = []
    risks: list[tuple[HazardousEvent, RiskValue, bool]] = []
    for event in sorted(events, key=lambda e: e.id):
        scenario = model.scenarios[event.scenario_id]
        hazard = model.hazards[event.hazard_id]
        severity = model.harms[hazard.harm_id].severity_class
        params, fallback = lookup_parameters(
            model.risk_parameters,
            event,
            scenario.frequency_per_hour,
            scenario.controllability,
            severity,
        )
        if fallback:
            findings.append(
                Finding(
                    kind="parameter_fallback",
                    message=(
                        f"no risk parameters for event {event.id}; assuming the "
                        "behavior occurs whenever the scenario does"
                    ),
                    entity_ids=(event.id,),
                )
            )
        risks.append((event, estimate_event_risk(event, params), fallback))

    ascriptions, ascription_findings = ascribe(
        [(event, risk) for event, risk, _ in risks],
        model.criteria,
        model.ascription_rules,
        {s.id: s.use_case for s in model.scenarios.values()},
    )
    findings.extend(ascription_findings)
    own = aggregate(ascriptions)

    combined: dict[tuple[str, SeverityClass], Fraction] = {}
    for criterion in model.criteria.values():
        for severity in criterion.tolerable_rate_per_severity:
            combined[(criterion.id, severity)] = Fraction(0)
    for key, rate in own.items():
        combined[key] = combined.get(key, Fraction(0)) + rate
    if carried_aggregates:
        for key, rate in carried_aggregates.items():
            combined[key] = combined.get(key, Fraction(0)) + as_fraction(rate)

    verdicts = compare(combined, model.criteria)
    for verdict in verdicts:
        if verdict.boundary:
            findings.append(
                Finding(
                    kind="boundary_acceptance",
                    message=(
                        f"{verdict.criterion_id}/{verdict.severity_class.value} "
                        "accepted exactly at the tolerable rate"
                    ),
                    entity_ids=(verdict.criterion_id,),
                )
            )
    if not model.criteria:
        findings.append(
            Finding(
                kind="vacuous_acceptance",
                message="no acceptance criteria defined; nothing constrains the risk",
                entity_ids=(),
            )
        )
    return EvaluationOutcome(
        risks=tuple(risks),
        ascriptions=tuple(sorted(ascriptions, key=lambda a: (a.event_id, a.criterion_id))),
        aggregates=dict(own),
        combined=combined,
        verdicts=tuple(verdicts),
        findings=tuple(findings),
    )


def violation_summary(verdicts: Iterable[Verdict]) -> str:
    violated = [v for v in verdicts if v.status is VerdictStatus.VIOLATED]
    parts = [
        f"({v.criterion_id}/{v.severity_class.value}): "
        f"{format_rate(v.actual_rate)} > {format_rate(v.tolerable_rate)}"
        for v in violated
    ]
    noun = "criterion" if len(violated) == 1 else "criteria"
    return f"{len(violated)} {noun} violated " + "; ".join(parts)


# ============================================================
# Document shaping
# ============================================================

def _aggregates_doc(
    aggregates: Mapping[tuple[str, SeverityClass], Fraction]
) -> list[dict[str, Any]]:
    return [
        {
            "criterion_id": criterion_id,
            "severity_class": severity.value,
            "rate": fraction_str(rate),
            "rate_display": format_rate(rate),
        }
        for (criterion_id, severity), rate in sorted(
            aggregates.items(), key=lambda kv: (kv[0][0], kv[0][1].value)
        )
    ]


def _aggregates_from_doc(rows: Iterable[Mapping[str, Any]]):
    return {
        (row["criterion_id"], SeverityClass(row["severity_class"])): as_fraction(
            row["rate"]
        )
        for row in rows
    }


def _risks_doc(outcome: EvaluationOutcome) -> list[dict[str, Any]]:
    return [
        {
            "event_id": event.id,
            "rate": fraction_str(risk.rate),
            "rate_display": format_rate(risk.rate),
            "severity_class": risk.severity_class.value,
            "parameter_fallback": fallback,
        }
        for event, risk, fallback in outcome.risks
    ]


def _ascriptions_doc(outcome: EvaluationOutcome) -> list[dict[str, Any]]:
    return [
        {
            "event_id": ascription.event_id,
            "criterion_id": ascription.criterion_id,
            "rate": fraction_str(ascription.risk.rate),
            "severity_class": ascription.risk.severity_class.value,
        }
        for ascription in outcome.ascriptions
    ]


# ============================================================
# Engine
# ============================================================

class Engine:
    """Drives the risk management loop over one workspace."""

    def __init__(self, workspace: Workspace):
        self.workspace = workspace

    # ---- state ----

    def state(self) -> EngineState:
        """The persisted phase state, reset to (analysis, 1) when stale."""
        current = self.workspace.version()
        doc = self.workspace.read_document(STATE_PATH)
        if doc is None:
            return EngineState(PHASE_ANALYSIS, 1, current, 0)
        state = EngineState.from_doc(doc)
        if state.workspace_version != current:
            # the workspace changed under the loop; restart but keep the
            # report numbering and the last report pointer
            return EngineState(
                PHASE_ANALYSIS,
                1,
                current,
                state.sequence,
                last_report=state.last_report,
            )
        return state

    def _validation_block(self, action: str) -> StepResult | None:
        report = validate_documents(self.workspace.documents())
        if report.ok:
            return None
        return StepResult(
            action=action,
            status="blocked",
            summary=f"workspace invalid: {_plural(len(report.violations), 'violation')}",
            details={"violations": [str(v) for v in report.violations]},
        )

    # ---- steps ----

    def analyze(self) -> StepResult:
        blocked = self._validation_block("analyze")
        if blocked:
            return blocked
        state = self.state()
        if state.phase == PHASE_DONE:
            return StepResult("analyze", "blocked", "already converged; change the workspace to re-analyze")
        if state.phase != PHASE_ANALYSIS:
            return StepResult(
                "analyze",
                "blocked",
                f"nothing to analyze: the loop is in the {state.phase} phase",
            )

        model = self.workspace.model()
        events, findings = analysis_pass(model, state.iteration)
        scenarios, _ = effective_scenarios(model)
        source = (
            "the target behavior" if state.iteration == 1 else "guide-word deviations"
        )
        summary = (
            f"analysis (iteration {state.iteration}): identified "
            f"{_plural(len(events), 'hazardous event')} from {source} in "
            f"{_plural(len(scenarios), 'scenario')}"
        )

        def mutate(tx):
            log = tx.read(HAZARD_LOG_PATH)
            by_id = {doc["id"]: doc for doc in log.get("events", [])}
            for event in events:
                by_id[event.id] = event.to_doc()
            log["events"] = [by_id[eid] for eid in sorted(by_id)]
            new_ids = {e.hazard_id: set() for e in events}
            for event in events:
                new_ids[event.hazard_id].add(event.id)
            entries = []
            for doc in log.get("entries", []):
                entry = HazardLogEntry.from_doc(doc)
                if entry.hazard_id in new_ids:
                    merged = sorted(
                        set(entry.hazardous_event_ids) | new_ids[entry.hazard_id]
                    )
                    entry = entry.with_events(merged)
                entries.append(entry.to_doc())
            log["entries"] = entries
            tx.write(HAZARD_LOG_PATH, log)

            next_state = replace(
                state,
                phase=PHASE_EVALUATION,
                workspace_version=self.workspace.version() + 1,
                pending_event_ids=tuple(e.id for e in events),
                pending_findings=tuple(_finding_doc(f) for f in findings),
            )
            tx.write(STATE_PATH, next_state.to_doc())

        self.workspace.transact("analyze", mutate, note=summary)
        return StepResult(
            "analyze",
            "ok",
            summary,
            details={
                "events": [e.to_doc() for e in events],
                "findings": [_finding_doc(f) for f in findings],
            },
        )

    def evaluate(self) -> StepResult:
        blocked = self._validation_block("evaluate")
        if blocked:
            return blocked
        state = self.state()
        if state.phase != PHASE_EVALUATION:
            return StepResult(
                "evaluate",
                "blocked",
                f"nothing to evaluate: the loop is in the {state.phase} phase"
                + (" (run analyze first)" if state.phase == PHASE_ANALYSIS else ""),
            )

        model = self.workspace.model()
        events = [model.events[eid] for eid in state.pending_event_ids]
        carried = None
        if state.iteration == 2:
            if not state.last_target_report:
                return StepResult(
                    "evaluate", "blocked", "no accepted target-behavior report to combine with"
                )
            target_report = self.workspace.read_document(state.last_target_report)
            carried = _aggregates_from_doc(target_report["aggregates"])

        try:
            outcome = evaluation_pass(model, events, carried)
        except EvaluationError as err:
            return StepResult("evaluate", "blocked", str(err))

        findings = [
            Finding(f["kind"], f["message"], tuple(f.get("entity_ids", ())))
            for f in state.pending_findings
        ]
        findings.extend(outcome.findings)

        sequence = state.sequence + 1
        kind = "target" if state.iteration == 1 else "deviation"
        report_path = f"{REPORTS_DIR}/iter-{sequence}-{kind}.report.json"
        accepted = outcome.accepted
        if not accepted:
            summary = violation_summary(outcome.verdicts)
            status = "violated"
        elif state.iteration == 1:
            summary = (
                "target-behavior risk accepted for all criteria "
                f"({_plural(len(outcome.verdicts), 'verdict')})"
            )
            status = "ok"
        else:
            summary = "converged: combined target and deviation risk accepted for all criteria"
            status = "converged"

        report_doc = {
            "schema_version": 1,
            "kind": kind,
            "sequence": sequence,
            "iteration": state.iteration,
            "workspace_version": self.workspace.version(),
            "accepted": accepted,
            "events": [e.to_doc() for e in sorted(events, key=lambda e: e.id)],
            "risks": _risks_doc(outcome),
            "ascriptions": _ascriptions_doc(outcome),
            "aggregates": _aggregates_doc(outcome.combined),
            "verdicts": [v.to_doc() for v in outcome.verdicts],
            "findings": [_finding_doc(f) for f in findings],
            "summary": summary,
        }
        if state.iteration == 2:
            report_doc["components"] = {
                "target": _aggregates_doc(carried),
                "deviation": _aggregates_doc(outcome.aggregates),
            }

        def mutate(tx):
            tx.write(report_path, report_doc)
            new_version = self.workspace.version() + 1
            if not accepted:
                next_state = replace(
                    state,
                    phase=PHASE_TREATMENT,
                    workspace_version=new_version,
                    sequence=sequence,
                    pending_event_ids=(),
                    pending_findings=(),
                    last_report=report_path,
                )
            elif state.iteration == 1:
                next_state = replace(
                    state,
                    phase=PHASE_ANALYSIS,
                    iteration=2,
                    workspace_version=new_version,
                    sequence=sequence,
                    pending_event_ids=(),
                    pending_findings=(),
                    last_target_report=report_path,
                    last_report=report_path,
                )
            else:
                next_state = replace(
                    state,
                    phase=PHASE_DONE,
                    workspace_version=new_version,
                    sequence=sequence,
                    pending_event_ids=(),
                    pending_findings=(),
                    last_report=report_path,
                )
                self._finalize(tx, model, report_doc, next_state)
            tx.write(STATE_PATH, next_state.to_doc())

        self.workspace.transact("evaluate", mutate, note=summary)
        return StepResult(
            "evaluate",
            status,
            summary,
            # on convergence the final report is the authoritative pointer
            report_path=FINAL_REPORT_PATH if status == "converged" else report_path,
            details={"verdicts": report_doc["verdicts"], "findings": report_doc["findings"]},
        )

    def _finalize(self, tx, model: WorkspaceModel, report_doc, state: EngineState):
        """Write the final report and close out the hazard log."""
        log = tx.read(HAZARD_LOG_PATH)
        version = self.workspace.version() + 1
        entries = []
        for doc in log.get("entries", []):
            entry = HazardLogEntry.from_doc(doc)
            if entry.status in (HazardLogStatus.OPEN, HazardLogStatus.MEASURES_SPECIFIED):
                entry = entry.advance(
                    HazardLogStatus.ACCEPTED, version, note="risk evaluation accepted"
                )
            entries.append(entry.to_doc())
        log["entries"] = entries
        tx.write(HAZARD_LOG_PATH, log)

        iteration_reports = [
            path for path in self.workspace.report_paths() if path != FINAL_REPORT_PATH
        ]
        iteration_reports.append(f"{REPORTS_DIR}/iter-{state.sequence}-deviation.report.json")
        iteration_reports = sorted(
            set(iteration_reports),
            key=lambda p: int(p.split("iter-")[1].split("-")[0]),
        )
        final_doc = {
            "schema_version": 1,
            "kind": "final",
            "converged": True,
            "sequence": state.sequence,
            "workspace_version": self.workspace.version(),
            "iteration_reports": iteration_reports,
            "verdicts": report_doc["verdicts"],
            "residual_risk": report_doc["aggregates"],
            "components": report_doc.get("components", {}),
            "hazard_log": entries,
            "applied_measures": sorted(
                m.id for m in model.measures.values() if m.applied
            ),
            "summary": report_doc["summary"],
        }
        if model.spec is not None:
            final_doc["spec_version"] = model.spec.version
        tx.write(FINAL_REPORT_PATH, final_doc)

    def submit_measure(self, doc: Mapping[str, Any]) -> StepResult:
        """Register a safety measure (and its goal) against the open violation."""
        blocked = self._validation_block("measure")
        if blocked:
            return blocked
        state = self.state()
        if state.phase != PHASE_TREATMENT or not state.last_report:
            return StepResult(
                "measure",
                "blocked",
                "no violated evaluation to treat; run the loop first",
            )

        model = self.workspace.model()
        report = self.workspace.read_document(state.last_report)
        verdicts = report["verdicts"]
        violated = [v for v in verdicts if v["status"] == "violated"]
        if not violated:
            return StepResult("measure", "blocked", "last evaluation has no violation")

        implicated = sorted(
            {
                model.events[row["event_id"]].hazard_id
                for row in report["ascriptions"]
                if row["criterion_id"] in {v["criterion_id"] for v in violated}
            }
        )
        goal_id = doc.get("goal_id")
        if goal_id is None:
            if len(implicated) != 1:
                return StepResult(
                    "measure",
                    "blocked",
                    f"{_plural(len(implicated), 'hazard')} implicated; pass goal_id",
                )
            goal_id = f"SG-{implicated[0]}"

        try:
            goal, goal_is_new = self._goal_for(model, goal_id, implicated, report)
            measure_id = doc.get("id") or f"SM-{len(model.measures) + 1}"
            if measure_id in model.entity_kinds():
                raise EngineError(f"id {measure_id!r} is already taken")
            corrupt = doc.get("corrupt_behavior_risk", {})
            severity = corrupt.get("severity_class") or self._worst_severity(violated)
            measure, requirement, findings = specify_measure(
                goal,
                MeasureKind(doc["kind"]),
                doc["payload"],
                effectiveness=doc.get("claimed_reduction_effectiveness", "1"),
                integrity=doc.get("integrity", "1"),
                corrupt_risk=RiskValue(
                    as_fraction(corrupt.get("rate", 0)), SeverityClass(severity)
                ),
                measure_id=measure_id,
                requirement_statement=doc.get("requirement_statement"),
                scenario_scope=tuple(doc.get("scenario_scope", ())),
            )
        except (TreatmentError, SpecError, EngineError, ValueError, KeyError) as err:
            return StepResult("measure", "blocked", f"measure rejected: {err}")

        summary = f"registered measure {measure.id} for goal {goal.id}"

        def mutate(tx):
            if goal_is_new:
                goals = tx.read(GOALS_PATH)
                goals["goals"].append(goal.to_doc())
                tx.write(GOALS_PATH, goals)
            measures = tx.read(MEASURES_PATH)
            measures["measures"].append(measure.to_doc())
            if requirement is not None:
                measures["requirements"].append(requirement.to_doc())
            tx.write(MEASURES_PATH, measures)

            log = tx.read(HAZARD_LOG_PATH)
            version = self.workspace.version() + 1
            entries = []
            for entry_doc in log.get("entries", []):
                entry = HazardLogEntry.from_doc(entry_doc)
                if entry.hazard_id in goal.hazard_ids:
                    if entry.status is HazardLogStatus.OPEN:
                        entry = entry.advance(HazardLogStatus.GOAL_ASSIGNED, version)
                    if entry.status is HazardLogStatus.GOAL_ASSIGNED:
                        entry = entry.advance(HazardLogStatus.MEASURES_SPECIFIED, version)
                entries.append(entry.to_doc())
            log["entries"] = entries
            tx.write(HAZARD_LOG_PATH, log)
            # the loop stays in treatment: more measures may follow
            tx.write(STATE_PATH, replace(state, workspace_version=version).to_doc())

        self.workspace.transact("measure", mutate, note=summary)
        return StepResult(
            "measure",
            "ok",
            summary,
            details={
                "goal": goal.to_doc(),
                "measure": measure.to_doc(),
                "requirement": requirement.to_doc() if requirement else None,
                "findings": [_finding_doc(f) for f in findings],
            },
        )

    def _goal_for(
        self, model: WorkspaceModel, goal_id: str, implicated: list[str], report
    ) -> tuple[SafetyGoal, bool]:
        if goal_id in model.goals:
            return model.goals[goal_id], False
        hazard_id = goal_id.removeprefix("SG-")
        if hazard_id not in model.hazards:
            raise EngineError(f"no goal {goal_id!r} and no hazard {hazard_id!r} to derive it from")
        hazard = model.hazards[hazard_id]
        events = [
            model.events[row["id"]] for row in report["events"]
            if row["hazard_id"] == hazard_id
        ]
        verdict = self._worst_violated_verdict(report["verdicts"])
        goal = derive_safety_goal(
            hazard, events, verdict, goal_id=goal_id,
        )
        if goal is None:
            raise EngineError("verdict is not violated; no goal to derive")
        return goal, True

    @staticmethod
    def _worst_violated_verdict(verdict_docs) -> Verdict:
        violated = [
            Verdict.from_doc(doc) for doc in verdict_docs if doc["status"] == "violated"
        ]
        return max(
            violated,
            key=lambda v: (v.required_reduction_factor is None, v.required_reduction_factor or 0),
        )

    @staticmethod
    def _worst_severity(violated_docs) -> str:
        return max(doc["severity_class"] for doc in violated_docs)

    def treat(self) -> StepResult:
        blocked = self._validation_block("treat")
        if blocked:
            return blocked
        model = self.workspace.model()
        pending = [m for m in model.measures.values() if not m.applied]
        if not pending:
            return StepResult("treat", "blocked", "no pending measures to apply")
        if model.spec is None:
            return StepResult("treat", "blocked", "no behavior specification to apply measures to")

        try:
            merged = apply_measures(model.spec, pending)
        except (MeasureApplicationError, SpecError) as err:
            return StepResult("treat", "blocked", f"cannot apply measures: {err}")

        state = self.state()
        summary = (
            f"applied {_plural(len(pending), 'measure')}; specification version "
            f"{merged.version}; loop restarts at iteration 1"
        )

        def mutate(tx):
            tx.write(SPEC_PATH, serialize_spec(merged))
            measures = tx.read(MEASURES_PATH)
            applied_ids = {m.id for m in pending}
            for doc in measures["measures"]:
                if doc["id"] in applied_ids:
                    doc["applied"] = True
            tx.write(MEASURES_PATH, measures)
            next_state = EngineState(
                phase=PHASE_ANALYSIS,
                iteration=1,
                workspace_version=self.workspace.version() + 1,
                sequence=state.sequence,
                last_report=state.last_report,
            )
            tx.write(STATE_PATH, next_state.to_doc())

        self.workspace.transact("treat", mutate, note=summary)
        return StepResult(
            "treat",
            "ok",
            summary,
            details={"applied": sorted(m.id for m in pending)},
        )

    def iterate(self) -> StepResult:
        """One step of the loop, whatever the phase calls for.

        Specified-but-unapplied measures are applied before anything else:
        analyzing around a pending measure would only re-derive the
        violation it exists to fix.
        """
        blocked = self._validation_block("iterate")
        if blocked:
            return blocked
        state = self.state()
        if state.phase != PHASE_DONE and self._pending_measures():
            return self.treat()
        if state.phase == PHASE_ANALYSIS:
            return self.analyze()
        if state.phase == PHASE_EVALUATION:
            return self.evaluate()
        if state.phase == PHASE_TREATMENT:
            last = self.workspace.read_document(state.last_report or "") or {}
            return StepResult(
                "iterate",
                "violated",
                last.get("summary", "risk violated; specify measures to continue"),
                report_path=state.last_report,
            )
        return StepResult("iterate", "converged", "already converged; workspace unchanged")

    def _pending_measures(self) -> bool:
        return any(not m.applied for m in self.workspace.model().measures.values())

    def run(self, max_iterations: int = DEFAULT_MAX_ITERATIONS) -> StepResult:
        """Iterate until convergence, a violation with no measures, or the budget."""
        if max_iterations < 1:
            raise EngineError("max_iterations must be >= 1")
        steps: list[dict[str, Any]] = []
        evaluations = 0
        last = None
        while True:
            result = self.iterate()
            steps.append(result.to_doc())
            if result.action == "evaluate" and result.status != "blocked":
                evaluations += 1
            if result.status in ("converged", "blocked"):
                last = result
                break
            if result.status == "violated":
                if self._pending_measures():
                    continue
                last = result
                break
            if evaluations >= max_iterations:
                last = StepResult(
                    "run",
                    "blocked",
                    f"no convergence after {_plural(evaluations, 'iteration')}",
                    report_path=result.report_path,
                )
                break
        return StepResult(
            "run",
            last.status,
            last.summary,
            report_path=last.report_path,
            details={"steps": steps, "evaluations": evaluations},
        )

    # ---- queries (no mutation) ----

    def whatif(self, doc: Mapping[str, Any]) -> dict[str, Any]:
        """Simulate a measure without touching the workspace.

        Returns the would-be verdicts of both iterations plus a closed-form
        residual-risk prediction for each currently violated criterion.
        """
        model = self.workspace.model()
        if model.spec is None:
            raise EngineError("no behavior specification to simulate against")
        try:
            kind = MeasureKind(doc["kind"])
            measure = SafetyMeasure(
                id=doc.get("id", "whatif"),
                goal_id=doc.get("goal_id", "whatif"),
                kind=kind,
                payload=doc["payload"],
                claimed_reduction_effectiveness=as_fraction(
                    doc.get("claimed_reduction_effectiveness", "1")
                ),
                integrity=as_fraction(doc.get("integrity", "1")),
                corrupt_behavior_risk=RiskValue(
                    as_fraction(doc.get("corrupt_behavior_risk", {}).get("rate", 0)),
                    SeverityClass(
                        doc.get("corrupt_behavior_risk", {}).get("severity_class", "S3")
                    ),
                ),
                applied=True,
            )
            if kind is MeasureKind.BEHAVIOR_SPEC_DELTA:
                parse_delta(measure.payload)
            else:
                condition = parse_condition(measure.payload)
                if not condition.atoms:
                    raise EngineError("operating-domain exclusion must name conditions")
            simulated_spec = apply_measures(model.spec, [measure])
        except EngineError:
            raise
        except (SpecError, MeasureApplicationError, ValueError, KeyError) as err:
            raise EngineError(f"measure rejected: {err}") from err

        current = evaluation_pass(model, analysis_pass(model, 1)[0])

        simulated = replace_model_spec(model, simulated_spec, measure)
        outcome1 = evaluation_pass(simulated, analysis_pass(simulated, 1)[0])
        iteration1 = {
            "accepted": outcome1.accepted,
            "verdicts": [v.to_doc() for v in outcome1.verdicts],
            "summary": (
                "target-behavior risk accepted for all criteria"
                if outcome1.accepted
                else violation_summary(outcome1.verdicts)
            ),
        }
        iteration2 = None
        if outcome1.accepted:
            outcome2 = evaluation_pass(
                simulated, analysis_pass(simulated, 2)[0], outcome1.combined
            )
            iteration2 = {
                "accepted": outcome2.accepted,
                "verdicts": [v.to_doc() for v in outcome2.verdicts],
                "summary": (
                    "converged: combined target and deviation risk accepted for all criteria"
                    if outcome2.accepted
                    else violation_summary(outcome2.verdicts)
                ),
            }

        predictions = []
        for verdict in current.verdicts:
            if verdict.status is not VerdictStatus.VIOLATED:
                continue
            residual = predicted_residual(
                ResidualModel(
                    initial=RiskValue(verdict.actual_rate, verdict.severity_class),
                    minimum_achievable_rate=Fraction(0),
                    reduction_effectiveness=measure.claimed_reduction_effectiveness,
                    integrity=measure.integrity,
                    corrupt_risk_rate=measure.corrupt_behavior_risk.rate,
                )
            )
            predictions.append(
                {
                    "criterion_id": verdict.criterion_id,
                    "severity_class": verdict.severity_class.value,
                    "current": format_rate(verdict.actual_rate),
                    "predicted": format_rate(residual.rate),
                    "tolerable": format_rate(verdict.tolerable_rate),
                    "would_accept": residual.rate < verdict.tolerable_rate,
                }
            )

        converged = bool(iteration2 and iteration2["accepted"])
        return {
            "measure": {"id": measure.id, "kind": measure.kind.value},
            "residual_prediction": predictions,
            "iteration1": iteration1,
            "iteration2": iteration2,
            "summary": (
                "measure would converge"
                if converged
                else "measure would not converge: "
                + (iteration2 or iteration1)["summary"]
            ),
        }

    def export_refined_spec(self, draft: bool = False) -> tuple[str, dict[str, Any]]:
        """The current specification plus its requirement traceability table.

        Export is refused until the loop has converged, because an
        unconverged spec is not yet a safe-behavior artifact.  ``draft``
        overrides the refusal and stamps the text accordingly.
        """
        model = self.workspace.model()
        if model.spec is None:
            raise EngineError("workspace has no behavior specification")
        final = self.workspace.read_document(FINAL_REPORT_PATH)
        accepted = (
            final is not None
            and final.get("converged") is True
            and self.state().phase == PHASE_DONE
        )
        if not accepted and not draft:
            raise EngineError(
                "risk evaluation has not converged; export a draft if you must"
            )

        text = serialize_spec(model.spec)
        if not accepted:
            text = "# DRAFT: risk evaluation has not converged\n" + text

        links = requirement_links(model)
        if links:
            annotation = ["", "# behavioral safety requirements:"]
            for row in links:
                scope = ", ".join(row["scenario_scope"]) or "all scenarios"
                annotation.append(
                    f"#   {row['id']} (goal {row['goal_id']}, measure "
                    f"{row['measure_id']}, integrity {row['required_integrity']}, "
                    f"scope: {scope})"
                )
                annotation.append(f"#     {row['statement']}")
            text += "\n".join(annotation) + "\n"

        table = {
            "requirements": links,
            "coverage": coverage_table(),
            "accepted": accepted,
        }
        return text, table


def reports_document(workspace: Workspace) -> dict[str, Any]:
    """Every report in loop order plus the requirement coverage table.

    Shared by ``riskcore report --format json`` and GET /api/reports so
    the two can never drift apart.
    """
    paths = workspace.report_paths()
    iteration = sorted(
        (p for p in paths if p != FINAL_REPORT_PATH),
        key=lambda p: int(p.split("iter-")[1].split("-")[0]),
    )
    ordered = iteration + [p for p in paths if p == FINAL_REPORT_PATH]
    return {
        "workspace_version": workspace.version(),
        "reports": [
            {"path": path, "report": workspace.read_document(path)} for path in ordered
        ],
        "coverage": coverage_table(),
    }


def replace_model_spec(
    model: WorkspaceModel, spec, extra_measure: SafetyMeasure
) -> WorkspaceModel:
    """A shallow simulation copy: new spec, one extra applied measure."""
    simulated = WorkspaceModel(
        spec=spec,
        use_cases=model.use_cases,
        agents=model.agents,
        scenarios=model.scenarios,
        harms=model.harms,
        hazards=model.hazards,
        criteria=model.criteria,
        goals=model.goals,
        measures={**model.measures, extra_measure.id: extra_measure},
        requirements=model.requirements,
        events=model.events,
        ascription_rules=model.ascription_rules,
        risk_parameters=model.risk_parameters,
        fleet_exposure=model.fleet_exposure,
        baseline_exposure=model.baseline_exposure,
        conflicting_actions=model.conflicting_actions,
    )
    return simulated
