"""A worked urban-crosswalk example.

The fixture models a delivery fleet of 1000 vans operating 22 hours a day,
365 days a year in a city, and the behavior of a single van approaching a
T-junction with a marked pedestrian crossing.  Two scenarios share that
use case:

- ``base``: a pedestrian waits at the crosswalk intending to cross.  The
  target behavior derives a stop.
- ``variant``: a pedestrian crosses the road between the vehicle and the
  crosswalk, away from the marking.  The initial specification only infers
  crossing intention from a position near the crosswalk, so no stop is
  derived and the vehicle would collide.

Against the fleet's own exposure of 8.03 million operating hours a year,
one fatal collision per year in the variant scenario gives an actual risk
of about 1.25e-7 per hour; the acceptance criterion is a positive risk
balance against human drivers on the same road network (about 4.64e-10
fatalities per operating hour), so the initial specification is rejected
and needs roughly a 269-fold risk reduction.  The canonical treatment is a
specification delta that also infers crossing intention from the observed
traffic context (a pedestrian already on the road).

Naming notes: the specification writes the "valid crosswalk is present"
state and the "crosswalk is detected" state as the single derivable fact
``crosswalk_detected``, and the pedestrian's intention-to-cross state as
``crossing_intention_detected``; the source material for this example uses
both phrasings for each.

All numbers in this module are modeling assumptions for the example, kept
as exact rationals:

- fleet exposure: 1000 vans * 22 h/day * 365 day/yr = 8.03e6 h/yr
- observed harm: 1 fatal collision per fleet-year in ``variant``
- near misses: 3 per van-year in ``base`` (every such encounter would be
  a collision if the vehicle failed to stop)
- human baseline: 8.623e9 km/yr of city driving at 24 km/h average,
  1 crosswalk fatality every 6 years
- controllability: no credit; a crossing pedestrian cannot be assumed to
  evade (probability of harm given the event is 1)
- deviation rates: missed stops from late or missing detection, estimated
  at 1.5e-10 per hour in ``base`` and 1e-10 per hour in ``variant``
"""

from __future__ import annotations

from typing import Any

# ============================================================
# Behavior specification
# ============================================================

SPEC_TEXT = '''\
# Target behavior at a marked urban crosswalk.

fact marking_293_detected        "crosswalk road marking (sign 293) is detected";
fact sign_350_detected           "crosswalk traffic sign (sign 350) is detected";
fact crosswalk_detected          "a valid crosswalk is detected";
fact pedestrian_detected         "a pedestrian is detected";
fact pedestrian_near_crosswalk   "the pedestrian's position is near the crosswalk";
fact crossing_intention_detected "the pedestrian's intention to cross is detected";
fact ego_near_crosswalk          "the ego vehicle's position is near the crosswalk";
fact pedestrian_crossing_road    "a pedestrian is crossing the road away from the crosswalk";

action stop_at_crosswalk "stop at the crosswalk";

rule r_valid_crosswalk:    if marking_293_detected and sign_350_detected then crosswalk_detected;
rule r_crossing_intention: if pedestrian_near_crosswalk then crossing_intention_detected;
rule r_stop:               if crossing_intention_detected and ego_near_crosswalk then stop_at_crosswalk;
'''

# The crossing-intention refinement: intention is also inferred from the
# observed traffic context, so a pedestrian already on the road triggers a
# stop even without the near-crosswalk position.
MEASURE_DELTA_TEXT = '''\
# Crossing-intention refinement: infer intention from traffic context.

rule r_crossing_intention_context: if pedestrian_crossing_road then crossing_intention_detected;
'''

BASE_SCENARIO_FACTS = (
    "marking_293_detected",
    "sign_350_detected",
    "pedestrian_detected",
    "pedestrian_near_crosswalk",
    "ego_near_crosswalk",
)

VARIANT_SCENARIO_FACTS = (
    "marking_293_detected",
    "sign_350_detected",
    "pedestrian_detected",
    "pedestrian_crossing_road",
    "ego_near_crosswalk",
)

# ============================================================
# Workspace documents
# ============================================================

HAZARD_ID = "H-CROSSWALK"
HARM_ID = "HARM-VRU-FATAL"
CRITERION_ID = "PRB"
USE_CASE_ID = "uc-t-crossing"

SAFETY_GOAL_STATEMENT = (
    "Prevent collision between a road vehicle and a vulnerable road user "
    "at crosswalks."
)

REQUIREMENT_STATEMENT = (
    "If a crosswalk is detected, detect pedestrians crossing intention at "
    "crosswalks reliably."
)


def catalog_document() -> dict[str, Any]:
    return {
        "schema_version": 1,
        "use_cases": [
            {
                "id": USE_CASE_ID,
                "description": "Crossing an urban T-junction with a marked crosswalk",
                "scenario_ids": ["base", "variant"],
            }
        ],
        "agents": [
            {"id": "ego", "kind": "ego_system", "description": "automated delivery van"},
            {
                "id": "pedestrian",
                "kind": "vulnerable_road_user",
                "description": "pedestrian near the junction",
            },
        ],
        "scenarios": [
            {
                "id": "base",
                "use_case": USE_CASE_ID,
                "description": "pedestrian waits at the crosswalk intending to cross",
                "asserted_facts": list(BASE_SCENARIO_FACTS),
                # 3 near misses per van-year across 1000 vans, per fleet hour
                "frequency_per_hour": "3/8030",
                "controllability": "0",
                "agents": ["ego", "pedestrian"],
            },
            {
                "id": "variant",
                "use_case": USE_CASE_ID,
                "description": "pedestrian crosses between the vehicle and the crosswalk",
                "asserted_facts": list(VARIANT_SCENARIO_FACTS),
                # one collision-grade encounter per fleet-year
                "frequency_per_hour": "1/8030000",
                "controllability": "0",
                "agents": ["ego", "pedestrian"],
            },
        ],
        "fleet_exposure": {
            "fleet_size": 1000,
            "hours_per_day": "22",
            "days_per_year": "365",
        },
        "baseline_exposure": {
            "annual_mileage_km": "8623000000",
            "average_speed_km_per_hour": "24",
        },
        "risk_parameters": [
            {
                "scenario_id": "variant",
                "hazard_id": HAZARD_ID,
                "behavior": "target",
                "event_frequency_per_hour": "1/8030000",
                "probability_harm_given_event": "1",
            },
            {
                "scenario_id": "base",
                "hazard_id": HAZARD_ID,
                "behavior": "dev-stop_at_crosswalk-not",
                "event_frequency_per_hour": "1.5e-10",
                "probability_harm_given_event": "1",
            },
            {
                "scenario_id": "variant",
                "hazard_id": HAZARD_ID,
                "behavior": "dev-stop_at_crosswalk-not",
                "event_frequency_per_hour": "1e-10",
                "probability_harm_given_event": "1",
            },
        ],
        "ascription_rules": [
            {"use_case": "*", "severity_class": "*", "criterion_ids": [CRITERION_ID]}
        ],
        "conflicting_actions": [],
    }


def hazards_document() -> dict[str, Any]:
    return {
        "schema_version": 1,
        "harms": [
            {
                "id": HARM_ID,
                "description": (
                    "A pedestrian is run over by a road vehicle in built-up "
                    "traffic (up to 50 km/h): fatal or life-threatening injury."
                ),
                "severity_class": "S3",
            }
        ],
        "hazards": [
            {
                "id": HAZARD_ID,
                "description": (
                    "Road vehicle collides with a vulnerable road user at a "
                    "pedestrian crossing"
                ),
                "harm_id": HARM_ID,
                "applicability": "pedestrian_detected and not_action(stop_at_crosswalk)",
            }
        ],
    }


def criteria_document() -> dict[str, Any]:
    return {
        "schema_version": 1,
        "criteria": [
            {
                "id": CRITERION_ID,
                "description": (
                    "Positive risk balance: each severity class must beat the "
                    "human-driver baseline on the same road network; saving "
                    "victims in one class never offsets additional victims in "
                    "another."
                ),
                # (1 fatality / 6 yr) / (8.623e9 km/yr / 24 km/h)
                "tolerable_rate_per_severity": {"S3": "1/2155750000"},
                "weighing_policy": "per_class_no_offsetting",
            }
        ],
    }


def hazard_log_document() -> dict[str, Any]:
    return {
        "schema_version": 1,
        "entries": [
            {
                "hazard_id": HAZARD_ID,
                "status": "open",
                "hazardous_event_ids": [],
                "history": [{"status": "open", "version": 1}],
            }
        ],
        "events": [],
    }


def goals_document() -> dict[str, Any]:
    return {"schema_version": 1, "goals": []}


def measures_document() -> dict[str, Any]:
    return {"schema_version": 1, "measures": [], "requirements": []}


def seed_documents() -> dict[str, Any]:
    """All documents for a freshly initialized example workspace."""
    return {
        "spec/current.bspec": SPEC_TEXT,
        "catalog/scenarios.json": catalog_document(),
        "hazards/hazards.json": hazards_document(),
        "criteria/criteria.json": criteria_document(),
        "goals/goals.json": goals_document(),
        "measures/measures.json": measures_document(),
        "hazard-log.json": hazard_log_document(),
    }
