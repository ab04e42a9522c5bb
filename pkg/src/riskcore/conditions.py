"""Hazard applicability conditions.

A hazard declares *when* it is present as a conjunction over a scenario's
derived state::

    pedestrian_detected and not_action(stop_at_crosswalk)

Atoms are fact identifiers from the behavior specification plus three
behavior predicates:

- ``action(a)``       the (possibly deviated) behavior includes action ``a``
- ``not_action(a)``   it does not
- ``deviation(a, g)`` the behavior under analysis is the guide-word
  deviation ``g`` of action ``a``

The same condition therefore matches both analysis passes: against pure
target behavior (no active deviation) and against guide-word deviations of
it.  A deviation with a *removing* guide word (``not`` by default) takes
its base action out of the effective action set; mistiming guide words
such as ``early`` and ``late`` keep the action present and are matched
through the ``deviation`` predicate.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable

REMOVING_GUIDE_WORDS = frozenset({"not"})


class ConditionError(ValueError):
    """A condition failed to parse or referenced an unknown identifier."""


@dataclass(frozen=True)
class FactAtom:
    fact_id: str


@dataclass(frozen=True)
class ActionAtom:
    action_id: str
    negated: bool = False


@dataclass(frozen=True)
class DeviationAtom:
    action_id: str
    guide_word: str


Atom = FactAtom | ActionAtom | DeviationAtom


@dataclass(frozen=True)
class Condition:
    """A conjunction of atoms; the empty conjunction is vacuously true."""

    atoms: tuple[Atom, ...]
    source: str

    @property
    def referenced_facts(self) -> set[str]:
        return {a.fact_id for a in self.atoms if isinstance(a, FactAtom)}

    @property
    def referenced_actions(self) -> set[str]:
        out = set()
        for atom in self.atoms:
            if isinstance(atom, ActionAtom):
                out.add(atom.action_id)
            elif isinstance(atom, DeviationAtom) and atom.action_id != "no_action":
                out.add(atom.action_id)
        return out

    def evaluate(
        self,
        facts: Iterable[str],
        target_actions: Iterable[str],
        deviation: tuple[str, str] | None = None,
        removing_guide_words: frozenset[str] = REMOVING_GUIDE_WORDS,
    ) -> bool:
        """Evaluate against derived facts and (possibly deviated) actions.

        ``deviation`` is ``(base_action, guide_word)`` when the behavior
        under analysis is a deviation, else ``None``.
        """
        fact_set = set(facts)
        effective = set(target_actions)
        if deviation is not None and deviation[1] in removing_guide_words:
            effective.discard(deviation[0])
        for atom in self.atoms:
            if isinstance(atom, FactAtom):
                if atom.fact_id not in fact_set:
                    return False
            elif isinstance(atom, ActionAtom):
                present = atom.action_id in effective
                if present == atom.negated:
                    return False
            else:
                if deviation != (atom.action_id, atom.guide_word):
                    return False
        return True

    @property
    def positive_actions(self) -> list[str]:
        return [a.action_id for a in self.atoms if isinstance(a, ActionAtom) and not a.negated]

    def __str__(self) -> str:
        return self.source


_TOKEN = re.compile(r"[A-Za-z_][A-Za-z0-9_]*|[(),]|\S")


def parse_condition(text: str) -> Condition:
    """Parse a conjunction of atoms; raises :class:`ConditionError`."""
    tokens = _TOKEN.findall(text)
    pos = 0

    def peek() -> str | None:
        return tokens[pos] if pos < len(tokens) else None

    def take(expected: str | None = None) -> str:
        nonlocal pos
        if pos >= len(tokens):
            raise ConditionError(f"unexpected end of condition in {text!r}")
        token = tokens[pos]
        if expected is not None and token != expected:
            raise ConditionError(f"expected {expected!r}, got {token!r} in {text!r}")
        pos += 1
        return token

    def ident() -> str:
        token = take()
        if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", token):
            raise ConditionError(f"expected an identifier, got {token!r} in {text!r}")
        return token

    def atom() -> Atom:
        name = ident()
        if name == "action" or name == "not_action":
            take("(")
            action_id = ident()
            take(")")
            return ActionAtom(action_id, negated=name == "not_action")
        if name == "deviation":
            take("(")
            action_id = ident()
            take(",")
            guide_word = ident()
            take(")")
            return DeviationAtom(action_id, guide_word)
        if name in {"and", "then", "if"}:
            raise ConditionError(f"unexpected keyword {name!r} in {text!r}")
        return FactAtom(name)

    atoms: list[Atom] = []
    if tokens:
        atoms.append(atom())
        while peek() is not None:
            take("and")
            atoms.append(atom())
    return Condition(tuple(atoms), text.strip())
