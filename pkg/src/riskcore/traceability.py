"""Requirements registry and coverage reporting.

The framework is built against fifteen requirements distilled from the
risk management guidance of ISO 26262 (parts 1 and 3), IEC 61508, and
ANSI/UL 4600.  Each one maps to the named tests that exercise it, so the
coverage table in ``report --format json`` is checkable rather than
aspirational: a requirement with no live test shows up as uncovered, and
the test suite fails if the mapping ever names a test that does not
exist.

R6 and R7 make the two halves of ISO 26262's probability-of-occurrence
classification explicit: exposure to the operational situation and the
controllability of the event once it occurs.
"""

from __future__ import annotations

from typing import Any, Mapping

from .model import WorkspaceModel
from .rates import format_factor, format_rate

REQUIREMENTS: tuple[tuple[str, str], ...] = (
    ("R1", "Hazardous events shall be identified."),
    (
        "R2",
        "The risk of hazardous events shall be assessed based on the "
        "probability of the occurrence of harm and the severity of that harm.",
    ),
    (
        "R3",
        "The harm potentially resulting from a hazardous event shall be identified.",
    ),
    (
        "R4",
        "The severity of harm potentially resulting from a hazardous event "
        "shall be estimated.",
    ),
    (
        "R5",
        "The probability of occurrence of harm potentially resulting from a "
        "hazardous event shall be estimated.",
    ),
    (
        "R6",
        "The exposure to operational situations in which a hazardous event "
        "can occur shall be estimated.",
    ),
    (
        "R7",
        "The controllability of a hazardous event, by the driver or other "
        "persons involved, shall be estimated.",
    ),
    (
        "R8",
        "Safety measures shall be specified that lead to an acceptable level "
        "of risk (i.e. a required level of safety).",
    ),
    (
        "R9",
        "The risk reduction achieved by a specified safety measure shall be assessed.",
    ),
    (
        "R10",
        "The probability of satisfactorily performing specified safety "
        "relevant functionality (i.e. its safety integrity) under all the "
        "stated conditions within a stated period of time shall be assessed.",
    ),
    (
        "R11",
        "The required level of safety (i.e. the reasonable level of risk) "
        "shall be specified by defining risk acceptance criteria for the "
        "system of interest, the people, property, or the environment facing "
        "the risk, respecting valid societal moral concepts within the "
        "target market.",
    ),
    (
        "R12",
        "Safety goals with their corresponding integrity requirements shall "
        "be formulated related to the prevention or mitigation of the "
        "hazardous events in order to avoid unreasonable risk.",
    ),
    ("R13", "Potentially relevant hazards shall be identified."),
    (
        "R14",
        "A hazard log shall be created, which lists identified hazards and "
        "their mitigation status.",
    ),
    (
        "R15",
        "Risk evaluation shall be conducted, which determines the necessary "
        "risk reduction from the initial level of risk associated with the "
        "system of interest to the acceptable level of risk.",
    ),
)

# Test node ids relative to the tests/ directory.  test_traceability
# checks every entry against the collected suite.
COVERAGE: Mapping[str, tuple[str, ...]] = {
    "R1": (
        "test_hazards.py::test_unmitigated_crossing_scenario_is_hazardous",
        "test_engine.py::test_first_run_stops_at_the_violated_target_risk",
    ),
    "R2": (
        "test_estimation.py::test_estimate_event_risk_is_the_product",
        "test_evaluation.py::test_aggregate_never_merges_severity_classes",
    ),
    "R3": (
        "test_model.py::test_fixture_model_is_valid",
        "test_model.py::test_dangling_references_are_individually_reported",
    ),
    "R4": (
        "test_estimation.py::test_pedestrian_run_over_in_built_up_traffic_is_life_threatening",
        "test_estimation.py::test_walking_pace_pedestrian_contact_is_light",
    ),
    "R5": (
        "test_estimation.py::test_harm_rate_fixture_values",
        "test_estimation.py::test_event_risk_matches_independent_product",
    ),
    "R6": (
        "test_estimation.py::test_fleet_exposure_fixture_values",
        "test_estimation.py::test_baseline_exposure_fixture_values",
    ),
    "R7": (
        "test_estimation.py::test_full_controllability_means_zero_risk",
        "test_estimation.py::test_lookup_falls_back_to_scenario_level",
    ),
    "R8": (
        "test_treatment.py::test_behavior_delta_measure_generates_requirement",
        "test_engine.py::test_measure_then_run_converges",
    ),
    "R9": (
        "test_treatment.py::test_fowler_budget_identity",
        "test_engine.py::test_whatif_prediction_matches_the_closed_form",
    ),
    "R10": (
        "test_treatment.py::test_integrity_banding_reference_case",
        "test_treatment.py::test_integrity_banding_decade_boundaries",
    ),
    "R11": (
        "test_evaluation.py::test_missing_tolerable_rate_is_an_error",
        "test_store.py::test_fixture_documents_assemble_and_validate",
    ),
    "R12": (
        "test_treatment.py::test_goal_from_violated_verdict",
        "test_treatment.py::test_goal_covers_all_events_of_its_hazard",
    ),
    "R13": (
        "test_hazards.py::test_deviation_pass_finds_omitted_stop_in_both_scenarios",
        "test_hazards.py::test_guide_word_cross_product",
    ),
    "R14": (
        "test_store.py::test_lifecycle_walks_forward_only",
        "test_engine.py::test_hazard_log_walks_the_whole_lifecycle",
    ),
    "R15": (
        "test_evaluation.py::test_violated_verdict_carries_required_reduction",
        "test_engine.py::test_measure_then_run_converges",
    ),
}


def coverage_table() -> list[dict[str, Any]]:
    """One row per requirement: statement, mapped tests, covered flag."""
    return [
        {
            "id": req_id,
            "statement": statement,
            "tests": list(COVERAGE.get(req_id, ())),
            "covered": bool(COVERAGE.get(req_id)),
        }
        for req_id, statement in REQUIREMENTS
    ]


def requirement_links(model: WorkspaceModel) -> list[dict[str, Any]]:
    """Each behavioral safety requirement with its goal and measure context."""
    rows = []
    for requirement in sorted(model.requirements.values(), key=lambda r: r.id):
        measure = model.measures.get(requirement.measure_id)
        goal = model.goals.get(requirement.goal_id)
        rows.append(
            {
                "id": requirement.id,
                "statement": requirement.statement,
                "goal_id": requirement.goal_id,
                "measure_id": requirement.measure_id,
                "scenario_scope": list(requirement.scenario_scope),
                "nominal_risk_reduction": (
                    format_factor(goal.nominal_risk_reduction) if goal else None
                ),
                "required_integrity": (
                    str(goal.required_integrity) if goal else None
                ),
                "claimed_reduction_effectiveness": (
                    str(measure.claimed_reduction_effectiveness) if measure else None
                ),
                "measure_applied": measure.applied if measure else None,
                "corrupt_behavior_risk": (
                    format_rate(measure.corrupt_behavior_risk.rate) if measure else None
                ),
            }
        )
    return rows
