"""Hazardous-event identification.

Risk analysis asks two questions of every (hazard, scenario) pair.  First,
does the target behavior itself trigger the hazard?  The derived action
set is matched against the hazard's applicability condition as-is.
Second, does a *deviation* from the target behavior trigger it?  Each
planned action is perturbed with HAZOP-style guide words (``not`` omits
the action, ``early`` and ``late`` mistime it) and the condition is
re-evaluated against the deviated behavior.

The two passes partition the behavior space: the first covers behaviors
the specification asks for, the second covers hazardous departures from
them.  An action that is not planned in a scenario cannot deviate there,
so guide words are only applied to actions in the scenario's derived
action set.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .conditions import REMOVING_GUIDE_WORDS, parse_condition
from .evaluation import Finding
from .inference import DerivedState
from .model import Hazard, HazardousEvent, Provenance, Scenario

DEFAULT_GUIDE_WORDS = ("not", "early", "late")


class HazardIdentificationError(ValueError):
    """Identification was asked to run without the derived behavior it needs."""


@dataclass(frozen=True)
class DeviationBehavior:
    """One guide-word perturbation of one planned action."""

    action_id: str
    guide_word: str

    @property
    def id(self) -> str:
        return f"dev-{self.action_id}-{self.guide_word}"

    @property
    def removes_action(self) -> bool:
        return self.guide_word in REMOVING_GUIDE_WORDS


def generate_deviations(
    action_ids: Iterable[str],
    guide_words: Sequence[str] = DEFAULT_GUIDE_WORDS,
) -> tuple[DeviationBehavior, ...]:
    """The full action x guide-word cross product, deduplicated and sorted."""
    out = {
        DeviationBehavior(action, guide)
        for action in action_ids
        for guide in guide_words
    }
    return tuple(sorted(out, key=lambda d: (d.action_id, d.guide_word)))


def _behavior_for(
    scenario: Scenario, behaviors: Mapping[str, DerivedState]
) -> DerivedState:
    try:
        return behaviors[scenario.id]
    except KeyError:
        raise HazardIdentificationError(
            f"no derived behavior for scenario {scenario.id!r}"
        ) from None


def _triggering_action(condition, state: DerivedState) -> str:
    for action_id in condition.positive_actions:
        if action_id in state.actions:
            return action_id
    return "no_action"


def identify_hazardous_events(
    hazards: Iterable[Hazard],
    scenarios: Iterable[Scenario],
    behaviors: Mapping[str, DerivedState],
    *,
    conflicting_actions: Iterable[tuple[str, str]] = (),
) -> tuple[list[HazardousEvent], list[Finding]]:
    """Match hazards against the target behavior of every scenario.

    Returns the events sorted by (hazard, scenario) plus findings about
    the derived behavior itself, currently scenarios whose action set
    contains a pair declared mutually exclusive.
    """
    scenarios = sorted(scenarios, key=lambda s: s.id)
    findings: list[Finding] = []
    for scenario in scenarios:
        state = _behavior_for(scenario, behaviors)
        for first, second in conflicting_actions:
            if first in state.actions and second in state.actions:
                findings.append(
                    Finding(
                        kind="conflicting_actions",
                        message=(
                            f"scenario {scenario.id!r} derives both {first!r} "
                            f"and {second!r}, which are declared mutually exclusive"
                        ),
                        entity_ids=(scenario.id, first, second),
                    )
                )

    events: list[HazardousEvent] = []
    for hazard in sorted(hazards, key=lambda h: h.id):
        condition = parse_condition(hazard.applicability)
        for scenario in scenarios:
            state = behaviors[scenario.id]
            if not condition.evaluate(state.facts, state.actions):
                continue
            events.append(
                HazardousEvent(
                    id=f"he:{hazard.id}:{scenario.id}:target",
                    hazard_id=hazard.id,
                    scenario_id=scenario.id,
                    provenance=Provenance.TARGET_BEHAVIOR,
                    triggering_behavior=_triggering_action(condition, state),
                    description=(
                        f"target behavior triggers {hazard.id} in scenario {scenario.id}"
                    ),
                )
            )
    return events, findings


def identify_deviation_events(
    hazards: Iterable[Hazard],
    scenarios: Iterable[Scenario],
    behaviors: Mapping[str, DerivedState],
    *,
    guide_words: Sequence[str] = DEFAULT_GUIDE_WORDS,
) -> list[HazardousEvent]:
    """Match hazards against guide-word deviations of every planned action.

    Events are sorted by (hazard, scenario, deviation) and carry the
    deviation id as their triggering behavior, keeping them disjoint from
    the target-behavior pass by construction.
    """
    events: list[HazardousEvent] = []
    for hazard in sorted(hazards, key=lambda h: h.id):
        condition = parse_condition(hazard.applicability)
        for scenario in sorted(scenarios, key=lambda s: s.id):
            state = _behavior_for(scenario, behaviors)
            for deviation in generate_deviations(state.actions, guide_words):
                matched = condition.evaluate(
                    state.facts,
                    state.actions,
                    deviation=(deviation.action_id, deviation.guide_word),
                )
                if not matched:
                    continue
                events.append(
                    HazardousEvent(
                        id=f"he:{hazard.id}:{scenario.id}:{deviation.id}",
                        hazard_id=hazard.id,
                        scenario_id=scenario.id,
                        provenance=Provenance.DEVIATION,
                        triggering_behavior=deviation.id,
                        description=(
                            f"{deviation.guide_word} deviation of "
                            f"{deviation.action_id} triggers {hazard.id} "
                            f"in scenario {scenario.id}"
                        ),
                    )
                )
    return events
