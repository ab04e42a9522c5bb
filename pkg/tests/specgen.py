"""Random generators for specifications and scenarios, shared across tests.

Generation is text-first: tests build random source text, so the parser is
exercised on every generated case and generated objects never bypass the
public entry points.
"""

from __future__ import annotations

import random
import string

from riskcore.dsl import BehaviorSpec, parse_spec

_DESC_ALPHABET = string.ascii_letters + string.digits + "     .,()-/"


def random_description(rng: random.Random) -> str:
    return "".join(rng.choice(_DESC_ALPHABET) for _ in range(rng.randint(0, 30)))


def random_spec_text(
    rng: random.Random,
    max_facts: int = 20,
    max_rules: int = 15,
    max_actions: int = 3,
) -> str:
    """Source text for a random well-formed specification.

    Declarations are emitted in shuffled order so parsing never depends on
    declaration-before-use.
    """
    n_facts = rng.randint(0, max_facts)
    fact_ids = [f"f{i}" for i in range(n_facts)]
    n_actions = rng.randint(0, max_actions)
    action_ids = [f"a{i}" for i in range(n_actions)]

    decls: list[str] = []
    for fact_id in fact_ids:
        decls.append(f'fact {fact_id} "{random_description(rng)}";')
    for action_id in action_ids:
        decls.append(f'action {action_id} "{random_description(rng)}";')
    if fact_ids:
        consequents = fact_ids + action_ids
        for i in range(rng.randint(0, max_rules)):
            antecedents = rng.sample(fact_ids, rng.randint(1, min(4, n_facts)))
            consequent = rng.choice(consequents)
            decls.append(
                f"rule r{i}: if {' and '.join(antecedents)} then {consequent};"
            )
    rng.shuffle(decls)
    lines = ["# randomly generated specification"]
    for decl in decls:
        if rng.random() < 0.15:
            lines.append(f"# {random_description(rng)}")
        lines.append(decl)
    return "\n".join(lines) + "\n"


def random_spec(rng: random.Random, **kwargs) -> BehaviorSpec:
    return parse_spec(random_spec_text(rng, **kwargs))


def random_asserted_facts(rng: random.Random, spec: BehaviorSpec) -> list[str]:
    """A random subset of the spec's base facts, in random order."""
    base = spec.base_facts
    chosen = rng.sample(base, rng.randint(0, len(base))) if base else []
    return chosen
