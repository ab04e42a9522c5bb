"""Safety goals, measures, residual-risk prediction, measure application."""

import random
from decimal import Decimal
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from riskcore.dsl import parse_spec
from riskcore.evaluation import Verdict, VerdictStatus
from riskcore.fixtures import (
    MEASURE_DELTA_TEXT,
    SPEC_TEXT,
    VARIANT_SCENARIO_FACTS,
)
from riskcore.inference import infer
from riskcore.model import (
    Hazard,
    HazardousEvent,
    MeasureKind,
    Provenance,
    RiskValue,
    SafetyMeasure,
    Scenario,
    SeverityClass,
)
from riskcore.treatment import (
    MeasureApplicationError,
    ResidualModel,
    TreatmentError,
    achieved_reduction,
    apply_measures,
    derive_safety_goal,
    predicted_residual,
    required_integrity_for,
    scenario_excluded,
    specify_measure,
)

S3 = SeverityClass.S3

HAZARD = Hazard(
    id="H-CROSSWALK",
    description="Road vehicle collides with a vulnerable road user at a pedestrian crossing",
    harm_id="HARM-VRU-FATAL",
    applicability="pedestrian_detected and not_action(stop_at_crosswalk)",
)


def make_event(event_id="he:H-CROSSWALK:variant", hazard_id="H-CROSSWALK"):
    return HazardousEvent(
        id=event_id,
        hazard_id=hazard_id,
        scenario_id="variant",
        provenance=Provenance.TARGET_BEHAVIOR,
        triggering_behavior="no_action",
    )


def violated_verdict(actual="1/8030000", tolerable="1/2155750000"):
    actual, tolerable = Fraction(actual), Fraction(tolerable)
    return Verdict(
        criterion_id="PRB",
        severity_class=S3,
        actual_rate=actual,
        tolerable_rate=tolerable,
        status=VerdictStatus.VIOLATED,
        required_reduction_factor=actual / tolerable,
    )


unit = st.fractions(min_value=0, max_value=1)
small_rate = st.fractions(min_value=0, max_value=Fraction(1, 1000))


# ============================================================
# Residual prediction
# ============================================================

def test_perfect_measure_leaves_zero_residual():
    model = ResidualModel(
        initial=RiskValue(Fraction("1.25e-7"), S3),
        minimum_achievable_rate=Fraction(0),
        reduction_effectiveness=Fraction(1),
        integrity=Fraction(1),
        corrupt_risk_rate=Fraction(0),
    )
    residual = predicted_residual(model)
    assert residual.rate == 0
    assert residual.severity_class is S3


def test_useless_measure_adds_only_its_own_risk():
    model = ResidualModel(
        initial=RiskValue(Fraction("1.25e-7"), S3),
        minimum_achievable_rate=Fraction(0),
        reduction_effectiveness=Fraction(0),
        integrity=Fraction(1),
        corrupt_risk_rate=Fraction("1e-11"),
    )
    assert predicted_residual(model).rate == Fraction("1.25e-7") + Fraction("1e-11")


def test_reference_residual_value():
    model = ResidualModel(
        initial=RiskValue(Fraction("1.25e-7"), S3),
        minimum_achievable_rate=Fraction("1e-10"),
        reduction_effectiveness=Fraction("0.999"),
        integrity=Fraction("0.999"),
        corrupt_risk_rate=Fraction("1e-11"),
    )
    residual = predicted_residual(model)
    # independent oracle: decimal arithmetic, spreadsheet style
    loss = Decimal("1.25e-7") * (1 - Decimal("0.999") * Decimal("0.999"))
    expected = max(Decimal("1e-10"), loss) + Decimal("1e-11")
    assert residual.rate == Fraction(expected)
    assert residual.rate == Fraction("2.59875e-10")
    assert residual.to_doc()["rate_display"] == "2.6e-10"


def test_minimum_achievable_rate_floors_the_reduction():
    model = ResidualModel(
        initial=RiskValue(Fraction(1, 100), S3),
        minimum_achievable_rate=Fraction(1, 1000),
        reduction_effectiveness=Fraction(1),
        integrity=Fraction(1),
        corrupt_risk_rate=Fraction(0),
    )
    assert predicted_residual(model).rate == Fraction(1, 1000)


def test_residual_model_rejects_min_above_initial():
    with pytest.raises(TreatmentError):
        ResidualModel(
            initial=RiskValue(Fraction(1, 1000), S3),
            minimum_achievable_rate=Fraction(1, 100),
            reduction_effectiveness=Fraction(1),
            integrity=Fraction(1),
            corrupt_risk_rate=Fraction(0),
        )


@given(small_rate, unit, unit, unit, small_rate)
def test_residual_monotonicity(initial, eff, delta, integ, corrupt):
    initial = initial + Fraction(1, 10**9)  # keep min <= initial satisfiable
    eff_hi = eff + (1 - eff) * delta  # eff <= eff_hi <= 1

    def residual(e, i, c):
        return predicted_residual(
            ResidualModel(
                initial=RiskValue(initial, S3),
                minimum_achievable_rate=Fraction(0),
                reduction_effectiveness=e,
                integrity=i,
                corrupt_risk_rate=c,
            )
        ).rate

    assert residual(eff_hi, integ, corrupt) <= residual(eff, integ, corrupt)
    assert residual(eff, min(integ, eff), corrupt) >= residual(eff, max(integ, eff), corrupt)
    assert residual(eff, integ, corrupt + Fraction(1, 10**9)) >= residual(eff, integ, corrupt)


@given(small_rate, small_rate, unit, unit, small_rate)
def test_fowler_budget_identity(initial, min_rate, eff, integ, corrupt):
    initial = initial + min_rate  # ensures min <= initial
    model = ResidualModel(
        initial=RiskValue(initial, S3),
        minimum_achievable_rate=min_rate,
        reduction_effectiveness=eff,
        integrity=integ,
        corrupt_risk_rate=corrupt,
    )
    residual = predicted_residual(model).rate
    assert residual - corrupt + achieved_reduction(model) == initial
    assert residual >= min_rate + corrupt if min_rate else residual >= corrupt


# ============================================================
# Integrity banding
# ============================================================

def test_integrity_banding_reference_case():
    integrity = required_integrity_for(Fraction(1, 8030000), Fraction(1, 2155750000))
    assert integrity == Fraction(999, 1000)  # factor ~268: three decades


def test_integrity_banding_minimum_one_decade():
    assert required_integrity_for(Fraction(1, 100), Fraction(1, 100)) == Fraction(9, 10)
    assert required_integrity_for(Fraction(0), Fraction(1, 100)) == Fraction(9, 10)


def test_integrity_banding_decade_boundaries():
    tol = Fraction(1, 1000)
    assert required_integrity_for(tol * 10, tol) == Fraction(9, 10)
    assert required_integrity_for(tol * 10 + tol / 100, tol) == Fraction(99, 100)
    assert required_integrity_for(tol * 100, tol) == Fraction(99, 100)


def test_integrity_banding_requires_positive_tolerable():
    with pytest.raises(TreatmentError):
        required_integrity_for(Fraction(1), Fraction(0))


# ============================================================
# Goal derivation
# ============================================================

def test_goal_from_violated_verdict():
    verdict = violated_verdict()
    goal = derive_safety_goal(HAZARD, [make_event()], verdict)
    assert goal is not None
    assert goal.hazard_ids == ("H-CROSSWALK",)
    assert goal.hazardous_event_ids == ("he:H-CROSSWALK:variant",)
    assert goal.nominal_risk_reduction == verdict.required_reduction_factor * 2
    assert goal.nominal_risk_reduction >= 269
    assert goal.required_integrity == Fraction(999, 1000)


def test_goal_statement_can_be_authored():
    goal = derive_safety_goal(
        HAZARD,
        [make_event()],
        violated_verdict(),
        statement="Prevent collision between a road vehicle and a vulnerable road user at crosswalks.",
    )
    assert goal.statement.startswith("Prevent collision between")


def test_accepted_verdict_derives_no_goal():
    verdict = Verdict(
        criterion_id="PRB",
        severity_class=S3,
        actual_rate=Fraction(0),
        tolerable_rate=Fraction(1, 10**9),
        status=VerdictStatus.ACCEPTED,
    )
    assert derive_safety_goal(HAZARD, [make_event()], verdict) is None


def test_goal_covers_all_events_of_its_hazard():
    events = [
        make_event("he:1"),
        make_event("he:2"),
        make_event("he:other", hazard_id="H-OTHER"),
    ]
    goal = derive_safety_goal(HAZARD, events, violated_verdict())
    assert goal.hazardous_event_ids == ("he:1", "he:2")


def test_goal_requires_events_and_sane_margin():
    with pytest.raises(TreatmentError):
        derive_safety_goal(HAZARD, [], violated_verdict())
    with pytest.raises(TreatmentError):
        derive_safety_goal(
            HAZARD, [make_event()], violated_verdict(), safety_margin=Fraction(1, 2)
        )


# ============================================================
# Measure specification
# ============================================================

def sample_goal():
    return derive_safety_goal(HAZARD, [make_event()], violated_verdict())


def test_behavior_delta_measure_generates_requirement():
    goal = sample_goal()
    measure, requirement, findings = specify_measure(
        goal,
        MeasureKind.BEHAVIOR_SPEC_DELTA,
        MEASURE_DELTA_TEXT,
        effectiveness="0.999",
        integrity="0.999",
        corrupt_risk=RiskValue(Fraction("1e-11"), S3),
        measure_id="SM-1",
        requirement_statement=(
            "If a crosswalk is detected, detect pedestrians crossing intention "
            "at crosswalks reliably."
        ),
        scenario_scope=("base", "variant"),
    )
    assert measure.goal_id == goal.id
    assert requirement is not None
    assert requirement.measure_id == "SM-1"
    assert requirement.goal_id == goal.id
    assert requirement.scenario_scope == ("base", "variant")
    assert "crossing intention" in requirement.statement
    assert not findings


def test_odd_restriction_measure_has_no_requirement():
    goal = sample_goal()
    measure, requirement, findings = specify_measure(
        goal,
        MeasureKind.ODD_RESTRICTION,
        "marking_293_detected and sign_350_detected",
        effectiveness="1",
        integrity="1",
        corrupt_risk=RiskValue(Fraction(0), S3),
        measure_id="SM-ODD",
    )
    assert measure.kind is MeasureKind.ODD_RESTRICTION
    assert requirement is None
    assert not findings


def test_zero_effectiveness_measure_is_flagged():
    goal = sample_goal()
    _, _, findings = specify_measure(
        goal,
        MeasureKind.BEHAVIOR_SPEC_DELTA,
        MEASURE_DELTA_TEXT,
        effectiveness="0",
        integrity="1",
        corrupt_risk=RiskValue(Fraction(0), S3),
        measure_id="SM-NOOP",
        scenario_scope=("variant",),
    )
    assert any(f.kind == "non_reducing_measure" for f in findings)


def test_unparseable_payload_is_rejected():
    goal = sample_goal()
    with pytest.raises(TreatmentError):
        specify_measure(
            goal,
            MeasureKind.BEHAVIOR_SPEC_DELTA,
            "rule broken if then;",
            effectiveness="1",
            integrity="1",
            corrupt_risk=RiskValue(Fraction(0), S3),
            measure_id="SM-BAD",
            scenario_scope=("variant",),
        )


def test_delta_measure_requires_scenario_scope():
    goal = sample_goal()
    with pytest.raises(TreatmentError):
        specify_measure(
            goal,
            MeasureKind.BEHAVIOR_SPEC_DELTA,
            MEASURE_DELTA_TEXT,
            effectiveness="1",
            integrity="1",
            corrupt_risk=RiskValue(Fraction(0), S3),
            measure_id="SM-NOSCOPE",
        )


# ============================================================
# Measure application
# ============================================================

def delta_measure(measure_id, payload):
    return SafetyMeasure(
        id=measure_id,
        goal_id="SG-H-CROSSWALK",
        kind=MeasureKind.BEHAVIOR_SPEC_DELTA,
        payload=payload,
        claimed_reduction_effectiveness=Fraction(1),
        integrity=Fraction(1),
        corrupt_behavior_risk=RiskValue(Fraction(0), S3),
    )


def test_applying_the_crossing_intention_measure_restores_the_stop():
    spec = parse_spec(SPEC_TEXT)
    merged = apply_measures(spec, [delta_measure("SM-1", MEASURE_DELTA_TEXT)])
    assert merged.version == spec.version + 1
    assert infer(merged, VARIANT_SCENARIO_FACTS).actions == {"stop_at_crosswalk"}


def test_empty_measure_list_only_bumps_version():
    spec = parse_spec(SPEC_TEXT)
    merged = apply_measures(spec, [])
    assert merged.version == spec.version + 1
    assert merged.structurally_equal(spec)


def test_disjoint_deltas_commute():
    rng = random.Random(5)
    spec = parse_spec(SPEC_TEXT)
    m1 = delta_measure("SM-A", 'fact zebra_detected "zebra crossing detected";\n')
    m2 = delta_measure("SM-B", 'fact bus_stop_detected "bus stop detected";\n')
    for order in ([m1, m2], [m2, m1]):
        rng.shuffle(order)
    left = apply_measures(spec, [m1, m2])
    right = apply_measures(spec, [m2, m1])
    assert {f.id: f.description for f in left.facts.values()} == {
        f.id: f.description for f in right.facts.values()
    }
    assert left.rules == right.rules
    assert left.version == right.version


def test_merge_conflicts_carry_the_measure_id():
    spec = parse_spec(SPEC_TEXT)
    clash = delta_measure("SM-CLASH", 'fact pedestrian_detected "redefined";\n')
    with pytest.raises(MeasureApplicationError) as err:
        apply_measures(spec, [clash])
    assert err.value.measure_id == "SM-CLASH"


def test_odd_restrictions_do_not_touch_the_spec():
    spec = parse_spec(SPEC_TEXT)
    odd = SafetyMeasure(
        id="SM-ODD",
        goal_id="SG-H-CROSSWALK",
        kind=MeasureKind.ODD_RESTRICTION,
        payload="marking_293_detected",
        claimed_reduction_effectiveness=Fraction(1),
        integrity=Fraction(1),
        corrupt_behavior_risk=RiskValue(Fraction(0), S3),
        applied=True,
    )
    merged = apply_measures(spec, [odd])
    assert merged.structurally_equal(spec)


# ============================================================
# Operating-domain exclusion
# ============================================================

def make_scenario(facts):
    return Scenario(
        id="s",
        use_case="uc",
        asserted_facts=tuple(facts),
        frequency_per_hour=Fraction(1),
        controllability=Fraction(0),
        agents=("ego",),
    )


def odd_measure(payload, applied=True):
    return SafetyMeasure(
        id="SM-ODD",
        goal_id="SG",
        kind=MeasureKind.ODD_RESTRICTION,
        payload=payload,
        claimed_reduction_effectiveness=Fraction(1),
        integrity=Fraction(1),
        corrupt_behavior_risk=RiskValue(Fraction(0), S3),
        applied=applied,
    )


def test_applied_restriction_excludes_matching_scenarios():
    scenario = make_scenario(["marking_293_detected", "sign_350_detected"])
    assert scenario_excluded(
        scenario, [odd_measure("marking_293_detected and sign_350_detected")]
    )


def test_unapplied_or_unmatched_restrictions_do_not_exclude():
    scenario = make_scenario(["marking_293_detected"])
    assert not scenario_excluded(
        scenario, [odd_measure("marking_293_detected", applied=False)]
    )
    assert not scenario_excluded(
        scenario, [odd_measure("marking_293_detected and sign_350_detected")]
    )
