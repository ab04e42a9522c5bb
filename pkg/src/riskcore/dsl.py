"""The behavior specification language.

A behavior specification declares the vocabulary an automated vehicle's
behavior is expressed in: *facts* about the driving scene, *actions* the
vehicle can take, and *rules* that derive facts or actions from
conjunctions of facts.  The language is deliberately small; it has no
negation and no disjunction, so inference is monotone and every
specification has a unique least set of consequences.

Grammar (``#`` starts a comment that runs to end of line)::

    spec        := (fact_decl | action_decl | rule_decl)*
    fact_decl   := "fact" IDENT STRING ";"
    action_decl := "action" IDENT STRING ";"
    rule_decl   := "rule" IDENT ":" "if" IDENT ("and" IDENT)* "then" IDENT ";"

Specification *deltas* (used by safety measures to refine a base
specification) use the same grammar, except that any declaration may be
prefixed with ``override`` to replace an existing declaration of the same
id.  Deltas may reference ids that only the base specification declares,
so they are parsed with :func:`parse_delta` and resolved during
:func:`merge_spec`.

Facts are either *base* (assertable by scenarios) or *derivable* (the
consequent of at least one rule); the distinction is inferred from usage,
never declared.  All declarations share a single id namespace so that a
rule body is always unambiguous.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace

# ============================================================
# Errors
# ============================================================


class SpecError(Exception):
    """Base class for specification language errors."""


@dataclass
class Diagnostic:
    message: str
    line: int
    column: int

    def __str__(self) -> str:
        return f"{self.line}:{self.column}: {self.message}"


class SpecSyntaxError(SpecError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{line}:{column}: {message}")
        self.line = line
        self.column = column


class SpecSemanticError(SpecError):
    """One or more resolution problems; carries all of them."""

    def __init__(self, diagnostics: list[Diagnostic]):
        super().__init__("; ".join(str(d) for d in diagnostics))
        self.diagnostics = diagnostics


class MergeConflictError(SpecError):
    def __init__(self, conflicts: list[str]):
        super().__init__(
            "delta redeclares without override: " + ", ".join(sorted(conflicts))
        )
        self.conflicts = sorted(conflicts)


# ============================================================
# Declarations
# ============================================================


@dataclass(frozen=True)
class Fact:
    id: str
    description: str
    derivable: bool = False  # consequent of at least one rule; set by linking
    override: bool = False
    line: int = 0


@dataclass(frozen=True)
class ActionDecl:
    id: str
    description: str
    override: bool = False
    line: int = 0


@dataclass(frozen=True)
class Rule:
    id: str
    antecedents: tuple[str, ...]
    consequent: str
    override: bool = False
    line: int = 0


@dataclass
class BehaviorSpec:
    """A parsed specification (or delta, when ``partial`` is set)."""

    facts: dict[str, Fact] = field(default_factory=dict)
    actions: dict[str, ActionDecl] = field(default_factory=dict)
    rules: dict[str, Rule] = field(default_factory=dict)
    version: int = 1
    partial: bool = False  # delta: references may resolve only after merge

    @property
    def base_facts(self) -> list[str]:
        return [f.id for f in self.facts.values() if not f.derivable]

    @property
    def derivable_facts(self) -> list[str]:
        return [f.id for f in self.facts.values() if f.derivable]

    def structurally_equal(self, other: "BehaviorSpec") -> bool:
        """Content equality, ignoring version counters and override marks."""

        def strip(decl):
            return replace(decl, override=False, line=0)

        return (
            [strip(f) for f in self.facts.values()]
            == [strip(f) for f in other.facts.values()]
            and [strip(a) for a in self.actions.values()]
            == [strip(a) for a in other.actions.values()]
            and [strip(r) for r in self.rules.values()]
            == [strip(r) for r in other.rules.values()]
        )


# ============================================================
# Lexer
# ============================================================

_KEYWORDS = {"fact", "action", "rule", "if", "and", "then", "override"}
_PUNCT = {";", ":"}


@dataclass(frozen=True)
class _Token:
    kind: str  # KEYWORD | IDENT | STRING | PUNCT | EOF
    value: str
    line: int
    column: int


def _is_ident_start(ch: str) -> bool:
    return ch.isalpha() or ch == "_"


def _is_ident_char(ch: str) -> bool:
    return ch.isalnum() or ch == "_"


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    line, col, i = 1, 1, 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        start_col = col
        if ch in _PUNCT:
            tokens.append(_Token("PUNCT", ch, line, start_col))
            i += 1
            col += 1
            continue
        if ch == '"':
            j = i + 1
            while j < n and text[j] not in '"\n':
                j += 1
            if j >= n or text[j] != '"':
                raise SpecSyntaxError("unterminated string", line, start_col)
            value = text[i + 1 : j]
            tokens.append(_Token("STRING", value, line, start_col))
            col += j + 1 - i
            i = j + 1
            continue
        if _is_ident_start(ch):
            j = i
            while j < n and _is_ident_char(text[j]):
                j += 1
            word = text[i:j]
            kind = "KEYWORD" if word in _KEYWORDS else "IDENT"
            tokens.append(_Token(kind, word, line, start_col))
            col += j - i
            i = j
            continue
        raise SpecSyntaxError(f"unexpected character {ch!r}", line, start_col)
    tokens.append(_Token("EOF", "", line, col))
    return tokens


# ============================================================
# Parser
# ============================================================


class _Parser:
    def __init__(self, tokens: list[_Token], allow_override: bool):
        self.tokens = tokens
        self.pos = 0
        self.allow_override = allow_override

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        token = self.tokens[self.pos]
        self.pos += 1
        return token

    def expect(self, kind: str, value: str | None = None) -> _Token:
        token = self.peek()
        if token.kind != kind or (value is not None and token.value != value):
            wanted = value if value is not None else kind
            got = token.value if token.value else token.kind
            raise SpecSyntaxError(
                f"expected {wanted!r}, got {got!r}", token.line, token.column
            )
        return self.advance()

    def parse(self) -> BehaviorSpec:
        spec = BehaviorSpec()
        while self.peek().kind != "EOF":
            token = self.peek()
            override = False
            if token.kind == "KEYWORD" and token.value == "override":
                if not self.allow_override:
                    raise SpecSyntaxError(
                        "'override' is only allowed in deltas",
                        token.line,
                        token.column,
                    )
                self.advance()
                override = True
                token = self.peek()
            if token.kind != "KEYWORD" or token.value not in {"fact", "action", "rule"}:
                got = token.value if token.value else token.kind
                raise SpecSyntaxError(
                    f"expected a declaration, got {got!r}", token.line, token.column
                )
            if token.value == "fact":
                self._fact(spec, override)
            elif token.value == "action":
                self._action(spec, override)
            else:
                self._rule(spec, override)
        return spec

    def _declared(self, spec: BehaviorSpec, ident: _Token) -> None:
        if ident.value in spec.facts or ident.value in spec.actions or ident.value in spec.rules:
            raise SpecSyntaxError(
                f"duplicate declaration of {ident.value!r}", ident.line, ident.column
            )

    def _fact(self, spec: BehaviorSpec, override: bool) -> None:
        self.expect("KEYWORD", "fact")
        ident = self.expect("IDENT")
        self._declared(spec, ident)
        description = self.expect("STRING")
        self.expect("PUNCT", ";")
        spec.facts[ident.value] = Fact(
            ident.value, description.value, override=override, line=ident.line
        )

    def _action(self, spec: BehaviorSpec, override: bool) -> None:
        self.expect("KEYWORD", "action")
        ident = self.expect("IDENT")
        self._declared(spec, ident)
        description = self.expect("STRING")
        self.expect("PUNCT", ";")
        spec.actions[ident.value] = ActionDecl(
            ident.value, description.value, override=override, line=ident.line
        )

    def _rule(self, spec: BehaviorSpec, override: bool) -> None:
        self.expect("KEYWORD", "rule")
        ident = self.expect("IDENT")
        self._declared(spec, ident)
        self.expect("PUNCT", ":")
        self.expect("KEYWORD", "if")
        antecedents = [self.expect("IDENT").value]
        while self.peek().kind == "KEYWORD" and self.peek().value == "and":
            self.advance()
            antecedents.append(self.expect("IDENT").value)
        self.expect("KEYWORD", "then")
        consequent = self.expect("IDENT").value
        self.expect("PUNCT", ";")
        spec.rules[ident.value] = Rule(
            ident.value,
            tuple(antecedents),
            consequent,
            override=override,
            line=ident.line,
        )


# ============================================================
# Linking and public entry points
# ============================================================


def _link(spec: BehaviorSpec) -> None:
    """Resolve references and infer fact kinds.  Mutates ``spec``."""
    diagnostics: list[Diagnostic] = []
    derivable: set[str] = set()
    for rule in spec.rules.values():
        for ident in rule.antecedents:
            if ident in spec.actions:
                diagnostics.append(
                    Diagnostic(
                        f"rule {rule.id!r} uses action {ident!r} as a condition",
                        rule.line,
                        1,
                    )
                )
            elif ident not in spec.facts:
                diagnostics.append(
                    Diagnostic(
                        f"rule {rule.id!r} references unknown id {ident!r}",
                        rule.line,
                        1,
                    )
                )
        if rule.consequent in spec.facts:
            derivable.add(rule.consequent)
        elif rule.consequent not in spec.actions:
            diagnostics.append(
                Diagnostic(
                    f"rule {rule.id!r} derives unknown id {rule.consequent!r}",
                    rule.line,
                    1,
                )
            )
    if diagnostics:
        raise SpecSemanticError(diagnostics)
    for fact_id, fact in spec.facts.items():
        spec.facts[fact_id] = replace(fact, derivable=fact_id in derivable)


_REVISION_HEADER = re.compile(r"^# behavior specification revision (\d+)\b")


def parse_spec(text: str) -> BehaviorSpec:
    """Parse a complete specification; all references must resolve."""
    spec = _Parser(_tokenize(text), allow_override=False).parse()
    _link(spec)
    header = _REVISION_HEADER.match(text)
    if header:
        spec.version = int(header.group(1))
    return spec


def parse_delta(text: str) -> BehaviorSpec:
    """Parse a specification delta.

    ``override`` markers are allowed and reference resolution is deferred
    to :func:`merge_spec`, since a delta may build on ids that only the
    base specification declares.
    """
    spec = _Parser(_tokenize(text), allow_override=True).parse()
    spec.partial = True
    return spec


def serialize_spec(spec: BehaviorSpec) -> str:
    """Render canonical text: header comment, then facts, actions, rules.

    Declaration order is preserved within each group, so
    ``parse_spec(serialize_spec(s))`` is structurally equal to ``s``.
    """
    lines = [
        f"# behavior specification revision {spec.version}: "
        f"{len(spec.facts)} facts, {len(spec.actions)} actions, {len(spec.rules)} rules",
        "",
    ]
    width = max((len(f.id) for f in spec.facts.values()), default=0)
    for fact in spec.facts.values():
        prefix = "override " if fact.override else ""
        lines.append(f'{prefix}fact {fact.id:<{width}} "{fact.description}";')
    if spec.actions:
        lines.append("")
    for action in spec.actions.values():
        prefix = "override " if action.override else ""
        lines.append(f'{prefix}action {action.id} "{action.description}";')
    if spec.rules:
        lines.append("")
    for rule in spec.rules.values():
        prefix = "override " if rule.override else ""
        body = " and ".join(rule.antecedents)
        lines.append(f"{prefix}rule {rule.id}: if {body} then {rule.consequent};")
    return "\n".join(lines) + "\n"


def merge_spec(base: BehaviorSpec, delta: BehaviorSpec) -> BehaviorSpec:
    """Apply a delta to a base specification.

    Fresh ids are added; ids marked ``override`` replace the existing
    declaration of the same kind.  A redeclaration without the marker, an
    override without an existing target, or an override that changes the
    kind of an id is a :class:`MergeConflictError`.  The result is fully
    re-linked and carries ``base.version + 1``.
    """
    existing = set(base.facts) | set(base.actions) | set(base.rules)
    conflicts: list[str] = []
    kind_of = {}
    for ident in base.facts:
        kind_of[ident] = "fact"
    for ident in base.actions:
        kind_of[ident] = "action"
    for ident in base.rules:
        kind_of[ident] = "rule"

    def check(decls, kind: str):
        for ident, decl in decls.items():
            if decl.override:
                if ident not in existing:
                    conflicts.append(f"{ident} (override has no target)")
                elif kind_of[ident] != kind:
                    conflicts.append(
                        f"{ident} (override changes {kind_of[ident]} to {kind})"
                    )
            elif ident in existing:
                conflicts.append(ident)

    check(delta.facts, "fact")
    check(delta.actions, "action")
    check(delta.rules, "rule")
    if conflicts:
        raise MergeConflictError(conflicts)

    merged = BehaviorSpec(version=base.version + 1)
    for fact in base.facts.values():
        merged.facts[fact.id] = replace(
            delta.facts.get(fact.id, fact), override=False
        )
    for fact in delta.facts.values():
        if fact.id not in merged.facts:
            merged.facts[fact.id] = replace(fact, override=False)
    for action in base.actions.values():
        merged.actions[action.id] = replace(
            delta.actions.get(action.id, action), override=False
        )
    for action in delta.actions.values():
        if action.id not in merged.actions:
            merged.actions[action.id] = replace(action, override=False)
    for rule in base.rules.values():
        merged.rules[rule.id] = replace(delta.rules.get(rule.id, rule), override=False)
    for rule in delta.rules.values():
        if rule.id not in merged.rules:
            merged.rules[rule.id] = replace(rule, override=False)
    _link(merged)
    return merged
