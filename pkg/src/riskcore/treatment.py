"""Risk treatment: safety goals, measures, and predicted residual risk.

A violated verdict yields a safety goal demanding a risk reduction (the
required factor times a safety margin) at a required integrity.  Measures
serve goals either by refining the behavior specification (a delta merged
into the spec) or by restricting the operating domain (scenarios matching
an exclusion condition leave the analysis scope).

``predicted_residual`` is the advisory what-if model of a measure's
effect::

    residual = max(minimum_achievable_rate,
                   initial_rate * (1 - effectiveness * integrity))
               + corrupt_risk_rate

The loss-type term models the measure failing to act (its effectiveness
discounted by the probability it works at all); the additive corrupt term
models the measure acting wrongly and introducing new risk.  Prediction
never substitutes for acceptance: the engine accepts only on re-analysis
of the merged specification.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Iterable, Mapping, Sequence

from .conditions import parse_condition
from .dsl import BehaviorSpec, MergeConflictError, SpecError, merge_spec, parse_delta
from .evaluation import Finding, Verdict, VerdictStatus
from .model import (
    BehavioralSafetyRequirement,
    Hazard,
    HazardousEvent,
    MeasureKind,
    RiskValue,
    SafetyGoal,
    SafetyMeasure,
    Scenario,
)
from .rates import as_fraction, fraction_str

DEFAULT_SAFETY_MARGIN = Fraction(2)


class TreatmentError(ValueError):
    pass


class MeasureApplicationError(TreatmentError):
    """A measure's delta failed to merge; carries the measure id."""

    def __init__(self, measure_id: str, cause: SpecError):
        super().__init__(f"measure {measure_id}: {cause}")
        self.measure_id = measure_id
        self.cause = cause


# ============================================================
# Residual-risk model
# ============================================================


@dataclass(frozen=True)
class ResidualModel:
    """Inputs of a residual-risk prediction for one measure."""

    initial: RiskValue
    minimum_achievable_rate: Fraction
    reduction_effectiveness: Fraction
    integrity: Fraction
    corrupt_risk_rate: Fraction

    def __post_init__(self):
        for name in (
            "minimum_achievable_rate",
            "reduction_effectiveness",
            "integrity",
            "corrupt_risk_rate",
        ):
            object.__setattr__(self, name, as_fraction(getattr(self, name)))
        if self.minimum_achievable_rate < 0 or self.corrupt_risk_rate < 0:
            raise TreatmentError("rates must be >= 0")
        if self.minimum_achievable_rate > self.initial.rate:
            raise TreatmentError(
                "minimum achievable rate cannot exceed the initial rate"
            )
        if not 0 <= self.reduction_effectiveness <= 1:
            raise TreatmentError("effectiveness must be in [0, 1]")
        if not 0 <= self.integrity <= 1:
            raise TreatmentError("integrity must be in [0, 1]")


def predicted_residual(model: ResidualModel) -> RiskValue:
    """Predicted residual risk; severity class is unchanged by reduction."""
    reduced = model.initial.rate * (
        1 - model.reduction_effectiveness * model.integrity
    )
    loss_term = max(model.minimum_achievable_rate, reduced)
    return RiskValue(loss_term + model.corrupt_risk_rate, model.initial.severity_class)


def achieved_reduction(model: ResidualModel) -> Fraction:
    """The rate actually removed by the measure (excludes corrupt term)."""
    reduced = model.initial.rate * (
        1 - model.reduction_effectiveness * model.integrity
    )
    return model.initial.rate - max(model.minimum_achievable_rate, reduced)


# ============================================================
# Integrity demand
# ============================================================


def required_integrity_for(initial_rate: Fraction, tolerable_rate: Fraction) -> Fraction:
    """Integrity demanded of a reduction from initial to tolerable rate.

    One integrity decade per decade of demanded reduction: a reduction
    spanning d orders of magnitude must be delivered with probability
    1 - 10^-d (minimum one decade).  This is deliberately simple,
    SIL-style banding; the table is configuration, not physics.
    """
    if tolerable_rate <= 0:
        raise TreatmentError("tolerable rate must be > 0 to band integrity")
    if initial_rate < 0:
        raise TreatmentError("initial rate must be >= 0")
    decades = 1
    while initial_rate > tolerable_rate * Fraction(10) ** decades:
        decades += 1
    return 1 - Fraction(1, 10**decades)


# ============================================================
# Goals and measures
# ============================================================


def derive_safety_goal(
    hazard: Hazard,
    events: Sequence[HazardousEvent],
    verdict: Verdict,
    *,
    safety_margin: Fraction = DEFAULT_SAFETY_MARGIN,
    statement: str | None = None,
    goal_id: str | None = None,
) -> SafetyGoal | None:
    """Formulate the safety goal for a hazard's violating events.

    Returns ``None`` for an accepted verdict: nothing to treat.  The goal
    demands the verdict's required reduction times ``safety_margin`` and
    the integrity banded from the actual/tolerable ratio.
    """
    if verdict.status is VerdictStatus.ACCEPTED:
        return None
    relevant = [e for e in events if e.hazard_id == hazard.id]
    if not relevant:
        raise TreatmentError(
            f"no hazardous events of hazard {hazard.id} to derive a goal from"
        )
    if verdict.required_reduction_factor is None:
        raise TreatmentError(
            f"verdict for {verdict.criterion_id}/{verdict.severity_class} has no "
            "finite reduction factor (zero tolerable rate); set the goal manually"
        )
    margin = as_fraction(safety_margin)
    if margin < 1:
        raise TreatmentError("safety margin must be >= 1")
    return SafetyGoal(
        id=goal_id or f"SG-{hazard.id}",
        statement=statement or f"Prevent the following hazard: {hazard.description}.",
        hazard_ids=(hazard.id,),
        hazardous_event_ids=tuple(e.id for e in relevant),
        nominal_risk_reduction=verdict.required_reduction_factor * margin,
        required_integrity=required_integrity_for(
            verdict.actual_rate, verdict.tolerable_rate
        ),
    )


def specify_measure(
    goal: SafetyGoal,
    kind: MeasureKind,
    payload: str,
    effectiveness,
    integrity,
    corrupt_risk: RiskValue,
    *,
    measure_id: str,
    requirement_id: str | None = None,
    requirement_statement: str | None = None,
    scenario_scope: Sequence[str] = (),
) -> tuple[SafetyMeasure, BehavioralSafetyRequirement | None, list[Finding]]:
    """Create a measure for a goal, validating its payload.

    Behavior-spec-delta measures also generate the behavioral safety
    requirement that realizes the goal in the scoped scenarios.  A measure
    claiming zero reduction effectiveness is allowed but flagged.
    """
    findings: list[Finding] = []
    if kind is MeasureKind.BEHAVIOR_SPEC_DELTA:
        try:
            parse_delta(payload)
        except SpecError as err:
            raise TreatmentError(f"measure payload does not parse: {err}") from err
    else:
        condition = parse_condition(payload)  # raises ConditionError on junk
        if not condition.atoms:
            raise TreatmentError("operating-domain exclusion must name conditions")
    measure = SafetyMeasure(
        id=measure_id,
        goal_id=goal.id,
        kind=kind,
        payload=payload,
        claimed_reduction_effectiveness=as_fraction(effectiveness),
        integrity=as_fraction(integrity),
        corrupt_behavior_risk=corrupt_risk,
    )
    if not 0 <= measure.claimed_reduction_effectiveness <= 1:
        raise TreatmentError("effectiveness must be in [0, 1]")
    if not 0 <= measure.integrity <= 1:
        raise TreatmentError("integrity must be in [0, 1]")
    if measure.claimed_reduction_effectiveness == 0:
        findings.append(
            Finding(
                kind="non_reducing_measure",
                message=f"measure {measure.id} claims no risk reduction",
                entity_ids=(measure.id,),
            )
        )
    requirement = None
    if kind is MeasureKind.BEHAVIOR_SPEC_DELTA:
        if not scenario_scope:
            raise TreatmentError(
                "behavior-spec measures need a scenario scope for their requirement"
            )
        requirement = BehavioralSafetyRequirement(
            id=requirement_id or f"BSR-{measure_id}",
            statement=requirement_statement
            or (
                f"Realize {goal.id} ({goal.statement}) via measure {measure_id} "
                f"in scenarios {', '.join(scenario_scope)}."
            ),
            goal_id=goal.id,
            measure_id=measure_id,
            scenario_scope=tuple(scenario_scope),
        )
    return measure, requirement, findings


def apply_measures(
    spec: BehaviorSpec, measures: Sequence[SafetyMeasure]
) -> BehaviorSpec:
    """Merge every behavior-spec delta into the spec, in the given order.

    Operating-domain restrictions never touch the specification; they are
    honored by the analysis scope (see :func:`scenario_excluded`).  An
    empty measure list still bumps the version, marking a treatment round
    that changed nothing.  Disjoint deltas commute; a conflicting delta
    raises with the offending measure id.
    """
    deltas = [m for m in measures if m.kind is MeasureKind.BEHAVIOR_SPEC_DELTA]
    if not deltas:
        return merge_spec(spec, parse_delta(""))
    merged = spec
    for measure in deltas:
        try:
            merged = merge_spec(merged, parse_delta(measure.payload))
        except (MergeConflictError, SpecError) as err:
            raise MeasureApplicationError(measure.id, err) from err
    return merged


def scenario_excluded(
    scenario: Scenario, measures: Iterable[SafetyMeasure]
) -> bool:
    """True when an applied operating-domain restriction excludes the scenario.

    Exclusion conditions are conjunctions of facts evaluated against the
    scenario's asserted facts: the givens that define where the vehicle
    operates, not what it infers there.
    """
    for measure in measures:
        if measure.kind is not MeasureKind.ODD_RESTRICTION or not measure.applied:
            continue
        condition = parse_condition(measure.payload)
        if condition.atoms and condition.evaluate(scenario.asserted_facts, ()):
            return True
    return False


# ============================================================
# Reporting helpers
# ============================================================


def residual_model_doc(model: ResidualModel) -> dict[str, Any]:
    residual = predicted_residual(model)
    return {
        "initial": model.initial.to_doc(),
        "minimum_achievable_rate": fraction_str(model.minimum_achievable_rate),
        "reduction_effectiveness": fraction_str(model.reduction_effectiveness),
        "integrity": fraction_str(model.integrity),
        "corrupt_risk_rate": fraction_str(model.corrupt_risk_rate),
        "predicted_residual": residual.to_doc(),
        "achieved_reduction": fraction_str(achieved_reduction(model)),
    }
