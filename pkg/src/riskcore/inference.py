"""Forward-chaining inference over behavior specifications.

Given a specification and the facts a scenario asserts, inference
saturates the rules to a least fixpoint: every rule whose antecedents all
hold contributes its consequent, until nothing new can be derived.  The
language has no negation, so the fixpoint is unique and independent of the
order rules are considered in; an explicit ``rule_order`` parameter exists
so tests can demonstrate that independence.

The result records which rules fired and in which saturation pass, so a
derived action can always be traced back through its justification chain
to asserted facts.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .dsl import BehaviorSpec


class UnknownFactError(ValueError):
    """A scenario asserts ids the specification does not declare as facts."""

    def __init__(self, unknown: Iterable[str]):
        self.unknown = sorted(set(unknown))
        super().__init__(f"unknown asserted facts: {', '.join(self.unknown)}")


@dataclass(frozen=True)
class FiredRule:
    rule_id: str
    iteration: int  # 1-based saturation pass in which the rule first fired


@dataclass(frozen=True)
class DerivedState:
    """The least fixpoint for one scenario."""

    asserted: frozenset[str]
    facts: frozenset[str]  # includes asserted facts
    actions: frozenset[str]
    fired_rules: tuple[FiredRule, ...]

    @property
    def iterations(self) -> int:
        return max((f.iteration for f in self.fired_rules), default=0)


def infer(
    spec: BehaviorSpec,
    asserted_facts: Iterable[str],
    rule_order: Sequence[str] | None = None,
) -> DerivedState:
    """Saturate the rules against the asserted facts.

    ``rule_order`` must be a permutation of the spec's rule ids when
    given; it changes the order rules are inspected (and the recorded
    firing order) but never the resulting fact or action sets.
    """
    asserted = frozenset(asserted_facts)
    unknown = [f for f in asserted if f not in spec.facts]
    if unknown:
        raise UnknownFactError(unknown)

    if rule_order is None:
        ordered = list(spec.rules.values())
    else:
        if sorted(rule_order) != sorted(spec.rules):
            raise ValueError("rule_order must be a permutation of the rule ids")
        ordered = [spec.rules[rule_id] for rule_id in rule_order]

    facts = set(asserted)
    actions: set[str] = set()
    fired: list[FiredRule] = []
    fired_ids: set[str] = set()
    iteration = 0
    changed = True
    while changed:
        changed = False
        iteration += 1
        for rule in ordered:
            if rule.id in fired_ids:
                continue
            if all(antecedent in facts for antecedent in rule.antecedents):
                fired.append(FiredRule(rule.id, iteration))
                fired_ids.add(rule.id)
                if rule.consequent in spec.actions:
                    if rule.consequent not in actions:
                        actions.add(rule.consequent)
                        changed = True
                else:
                    if rule.consequent not in facts:
                        facts.add(rule.consequent)
                        changed = True
    return DerivedState(
        asserted=asserted,
        facts=frozenset(facts),
        actions=frozenset(actions),
        fired_rules=tuple(fired),
    )


def target_behavior_set(
    spec: BehaviorSpec, scenario_facts: Mapping[str, Iterable[str]]
) -> dict[str, DerivedState]:
    """Derive the target behavior of every scenario, keyed by scenario id."""
    return {
        scenario_id: infer(spec, facts)
        for scenario_id, facts in scenario_facts.items()
    }


def replay_justification(spec: BehaviorSpec, state: DerivedState) -> DerivedState:
    """Re-fire the recorded rules in order; used to audit a derivation.

    Raises ``ValueError`` if any recorded rule's antecedents do not hold at
    its position in the chain, i.e. if the justification is not
    self-supporting.
    """
    facts = set(state.asserted)
    actions: set[str] = set()
    for entry in state.fired_rules:
        rule = spec.rules.get(entry.rule_id)
        if rule is None:
            raise ValueError(f"justification names unknown rule {entry.rule_id!r}")
        missing = [a for a in rule.antecedents if a not in facts]
        if missing:
            raise ValueError(
                f"rule {rule.id!r} fired without support: missing {missing}"
            )
        if rule.consequent in spec.actions:
            actions.add(rule.consequent)
        else:
            facts.add(rule.consequent)
    return DerivedState(
        asserted=state.asserted,
        facts=frozenset(facts),
        actions=frozenset(actions),
        fired_rules=state.fired_rules,
    )
