"""Forward-chaining inference: fixpoint semantics against a saturation oracle."""

import random

import pytest

from riskcore.dsl import parse_delta, parse_spec, merge_spec
from riskcore.fixtures import (
    BASE_SCENARIO_FACTS,
    MEASURE_DELTA_TEXT,
    SPEC_TEXT,
    VARIANT_SCENARIO_FACTS,
)
from riskcore.inference import (
    DerivedState,
    UnknownFactError,
    infer,
    replay_justification,
    target_behavior_set,
)

from specgen import random_asserted_facts, random_spec


# ============================================================
# Oracle: exhaustive saturation, independent of the engine
# ============================================================

def saturate(spec, asserted, rng=None):
    """Rescan every rule until a full pass adds nothing.

    No bookkeeping, no single-fire optimization; rule order is reshuffled
    every pass when an rng is supplied.
    """
    rules = list(spec.rules.values())
    facts = set(asserted)
    actions = set()
    while True:
        if rng is not None:
            rng.shuffle(rules)
        before = (len(facts), len(actions))
        for rule in rules:
            if all(a in facts for a in rule.antecedents):
                if rule.consequent in spec.actions:
                    actions.add(rule.consequent)
                else:
                    facts.add(rule.consequent)
        if (len(facts), len(actions)) == before:
            return frozenset(facts), frozenset(actions)


# ============================================================
# Worked example
# ============================================================

def test_base_scenario_derives_a_stop():
    spec = parse_spec(SPEC_TEXT)
    state = infer(spec, BASE_SCENARIO_FACTS)
    assert "crosswalk_detected" in state.facts
    assert "crossing_intention_detected" in state.facts
    assert state.actions == {"stop_at_crosswalk"}
    assert {f.rule_id for f in state.fired_rules} == {
        "r_valid_crosswalk",
        "r_crossing_intention",
        "r_stop",
    }


def test_variant_scenario_derives_no_action():
    spec = parse_spec(SPEC_TEXT)
    state = infer(spec, VARIANT_SCENARIO_FACTS)
    assert state.actions == frozenset()
    assert "crossing_intention_detected" not in state.facts
    assert "crosswalk_detected" in state.facts


def test_refined_spec_stops_in_the_variant_scenario():
    spec = merge_spec(parse_spec(SPEC_TEXT), parse_delta(MEASURE_DELTA_TEXT))
    state = infer(spec, VARIANT_SCENARIO_FACTS)
    assert state.actions == {"stop_at_crosswalk"}


def test_empty_assertions_derive_nothing_in_the_example():
    spec = parse_spec(SPEC_TEXT)
    state = infer(spec, [])
    assert state.facts == frozenset() and state.actions == frozenset()


def test_unknown_asserted_fact_is_rejected_with_names():
    spec = parse_spec(SPEC_TEXT)
    with pytest.raises(UnknownFactError) as err:
        infer(spec, ["pedestrian_detected", "ghost", "phantom"])
    assert err.value.unknown == ["ghost", "phantom"]


def test_target_behavior_set_keys_by_scenario():
    spec = parse_spec(SPEC_TEXT)
    behaviors = target_behavior_set(
        spec, {"base": BASE_SCENARIO_FACTS, "variant": VARIANT_SCENARIO_FACTS}
    )
    assert behaviors["base"].actions == {"stop_at_crosswalk"}
    assert behaviors["variant"].actions == frozenset()


# ============================================================
# Semantics
# ============================================================

def test_asserted_facts_are_contained_in_derived_facts():
    rng = random.Random(11)
    for _ in range(50):
        spec = random_spec(rng)
        asserted = random_asserted_facts(rng, spec)
        state = infer(spec, asserted)
        assert state.asserted <= state.facts


def test_inference_is_monotone_in_assertions():
    rng = random.Random(23)
    for _ in range(50):
        spec = random_spec(rng)
        base = spec.base_facts
        smaller = set(rng.sample(base, rng.randint(0, len(base)))) if base else set()
        extra = set(rng.sample(base, rng.randint(0, len(base)))) if base else set()
        small = infer(spec, smaller)
        large = infer(spec, smaller | extra)
        assert small.facts <= large.facts
        assert small.actions <= large.actions


def test_iteration_count_is_bounded_by_vocabulary_size():
    rng = random.Random(31)
    for _ in range(50):
        spec = random_spec(rng)
        state = infer(spec, random_asserted_facts(rng, spec))
        assert state.iterations <= len(spec.facts) + len(spec.actions) + 1


def test_long_dependency_chain_saturates():
    n = 60
    lines = [f'fact f{i} "step {i}";' for i in range(n)]
    lines += [f"rule r{i}: if f{i} then f{i + 1};" for i in range(n - 1)]
    spec = parse_spec("\n".join(lines))
    state = infer(spec, ["f0"])
    assert len(state.facts) == n


def test_cyclic_rules_terminate():
    text = (
        'fact a "a";\nfact b "b";\n'
        "rule r1: if a then b;\nrule r2: if b then a;\n"
    )
    state = infer(parse_spec(text), ["a"])
    assert state.facts == {"a", "b"}


def test_rule_order_never_changes_the_fixpoint():
    rng = random.Random(47)
    for _ in range(30):
        spec = random_spec(rng)
        asserted = random_asserted_facts(rng, spec)
        reference = infer(spec, asserted)
        rule_ids = list(spec.rules)
        for _ in range(5):
            rng.shuffle(rule_ids)
            state = infer(spec, asserted, rule_order=list(rule_ids))
            assert state.facts == reference.facts
            assert state.actions == reference.actions


def test_rule_order_must_be_a_permutation():
    spec = parse_spec(SPEC_TEXT)
    with pytest.raises(ValueError):
        infer(spec, [], rule_order=["r_stop"])


def test_agreement_with_saturation_oracle():
    rng = random.Random(59)
    for _ in range(100):
        spec = random_spec(rng)
        asserted = random_asserted_facts(rng, spec)
        facts, actions = saturate(spec, asserted, rng)
        state = infer(spec, asserted)
        assert state.facts == facts
        assert state.actions == actions


# ============================================================
# Justifications
# ============================================================

def test_justification_replay_reproduces_the_state():
    rng = random.Random(61)
    for _ in range(50):
        spec = random_spec(rng)
        state = infer(spec, random_asserted_facts(rng, spec))
        replayed = replay_justification(spec, state)
        assert replayed.facts == state.facts
        assert replayed.actions == state.actions


def test_justification_replay_rejects_unsupported_chains():
    spec = parse_spec(SPEC_TEXT)
    state = infer(spec, BASE_SCENARIO_FACTS)
    # reverse the chain so r_stop comes before its support
    tampered = DerivedState(
        asserted=frozenset(["ego_near_crosswalk"]),
        facts=state.facts,
        actions=state.actions,
        fired_rules=tuple(reversed(state.fired_rules)),
    )
    with pytest.raises(ValueError):
        replay_justification(spec, tampered)


def test_fired_rules_fire_at_most_once():
    rng = random.Random(67)
    for _ in range(30):
        spec = random_spec(rng)
        state = infer(spec, random_asserted_facts(rng, spec))
        rule_ids = [f.rule_id for f in state.fired_rules]
        assert len(rule_ids) == len(set(rule_ids))
