"""The risk ontology.

Typed entities for risk assessment and risk treatment of automated-vehicle
behavior: hazards and the harm they can cause, scenarios grouped into use
cases, hazardous events as the combination of a hazard with the behavior
shown in a scenario, acceptance criteria, safety goals, safety measures,
and behavioral safety requirements.

Risk is always the pair (event rate per operating hour, severity class) —
see :class:`RiskValue`; it is never collapsed into a single scalar, and
severity classes are never offset against each other.

Entities are immutable values; mutation happens by writing new documents
through the workspace store.  :func:`validate_model` checks every
referential and numeric invariant in one pass and reports violations
instead of raising, so a workspace can always be loaded, inspected, and
repaired.  :func:`trace` answers "what is connected to this entity"
across the hazard / event / goal / measure / requirement / scenario
relations.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterable, Mapping

from .conditions import ConditionError, FactAtom, parse_condition
from .dsl import BehaviorSpec, SpecError, parse_delta
from .rates import as_fraction, format_rate, fraction_str


# ============================================================
# Severity and risk values
# ============================================================


class SeverityClass(str, enum.Enum):
    """Injury severity: S0 no injury, S1 light/moderate, S2 severe
    (survival probable), S3 life-threatening (survival uncertain)."""

    S0 = "S0"
    S1 = "S1"
    S2 = "S2"
    S3 = "S3"

    @property
    def rank(self) -> int:
        return int(self.value[1])

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class RiskValue:
    """A risk: harm-event rate per operating hour in one severity class."""

    rate: Fraction
    severity_class: SeverityClass

    def __post_init__(self):
        if not isinstance(self.rate, Fraction):
            object.__setattr__(self, "rate", as_fraction(self.rate))
        if self.rate < 0:
            raise ValueError(f"risk rate must be >= 0, got {self.rate}")

    def to_doc(self) -> dict[str, str]:
        return {
            "rate": fraction_str(self.rate),
            "rate_display": format_rate(self.rate),
            "severity_class": self.severity_class.value,
        }

    @classmethod
    def from_doc(cls, doc: Mapping[str, Any]) -> "RiskValue":
        return cls(as_fraction(doc["rate"]), SeverityClass(doc["severity_class"]))


# ============================================================
# Entities
# ============================================================


@dataclass(frozen=True)
class Harm:
    id: str
    description: str
    severity_class: SeverityClass

    def to_doc(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "description": self.description,
            "severity_class": self.severity_class.value,
        }

    @classmethod
    def from_doc(cls, doc: Mapping[str, Any]) -> "Harm":
        return cls(doc["id"], doc["description"], SeverityClass(doc["severity_class"]))


@dataclass(frozen=True)
class Hazard:
    """A potential source of harm, present when ``applicability`` holds."""

    id: str
    description: str
    harm_id: str
    applicability: str  # condition over scenario facts and behavior

    def to_doc(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "description": self.description,
            "harm_id": self.harm_id,
            "applicability": self.applicability,
        }

    @classmethod
    def from_doc(cls, doc: Mapping[str, Any]) -> "Hazard":
        return cls(doc["id"], doc["description"], doc["harm_id"], doc["applicability"])


@dataclass(frozen=True)
class UseCase:
    id: str
    description: str
    scenario_ids: tuple[str, ...]

    def to_doc(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "description": self.description,
            "scenario_ids": list(self.scenario_ids),
        }

    @classmethod
    def from_doc(cls, doc: Mapping[str, Any]) -> "UseCase":
        return cls(doc["id"], doc.get("description", ""), tuple(doc["scenario_ids"]))


class AgentKind(str, enum.Enum):
    EGO_SYSTEM = "ego_system"
    VULNERABLE_ROAD_USER = "vulnerable_road_user"
    OTHER_VEHICLE = "other_vehicle"
    OTHER = "other"


@dataclass(frozen=True)
class Agent:
    id: str
    kind: AgentKind
    description: str = ""

    def to_doc(self) -> dict[str, Any]:
        return {"id": self.id, "kind": self.kind.value, "description": self.description}

    @classmethod
    def from_doc(cls, doc: Mapping[str, Any]) -> "Agent":
        return cls(doc["id"], AgentKind(doc["kind"]), doc.get("description", ""))


@dataclass(frozen=True)
class Scenario:
    """A temporal development of a driving context within one use case.

    ``frequency_per_hour`` is how often the scenario occurs per fleet
    operating hour; ``controllability`` is the probability that involved
    agents avert the harm once a hazardous event occurs.
    """

    id: str
    use_case: str
    asserted_facts: tuple[str, ...]
    frequency_per_hour: Fraction
    controllability: Fraction
    agents: tuple[str, ...]
    description: str = ""

    def to_doc(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "use_case": self.use_case,
            "description": self.description,
            "asserted_facts": list(self.asserted_facts),
            "frequency_per_hour": fraction_str(self.frequency_per_hour),
            "controllability": fraction_str(self.controllability),
            "agents": list(self.agents),
        }

    @classmethod
    def from_doc(cls, doc: Mapping[str, Any]) -> "Scenario":
        return cls(
            id=doc["id"],
            use_case=doc["use_case"],
            asserted_facts=tuple(doc["asserted_facts"]),
            frequency_per_hour=as_fraction(doc["frequency_per_hour"]),
            controllability=as_fraction(doc["controllability"]),
            agents=tuple(doc.get("agents", ())),
            description=doc.get("description", ""),
        )


class Provenance(str, enum.Enum):
    TARGET_BEHAVIOR = "target_behavior"
    DEVIATION = "deviation"


# Deviation identifiers look like dev-<action>-<guide_word>; action ids
# cannot contain "-", so the form is unambiguous.
DEVIATION_ID_PATTERN = re.compile(r"^dev-([A-Za-z_][A-Za-z0-9_]*)-([A-Za-z_][A-Za-z0-9_]*)$")


@dataclass(frozen=True)
class HazardousEvent:
    """An instance of a hazard in a scenario, caused by a behavior.

    ``triggering_behavior`` is an action id (or ``no_action``) for events
    found in the target behavior, and a deviation id for events found by
    guide-word analysis.
    """

    id: str
    hazard_id: str
    scenario_id: str
    provenance: Provenance
    triggering_behavior: str
    description: str = ""

    def to_doc(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "hazard_id": self.hazard_id,
            "scenario_id": self.scenario_id,
            "provenance": self.provenance.value,
            "triggering_behavior": self.triggering_behavior,
            "description": self.description,
        }

    @classmethod
    def from_doc(cls, doc: Mapping[str, Any]) -> "HazardousEvent":
        return cls(
            id=doc["id"],
            hazard_id=doc["hazard_id"],
            scenario_id=doc["scenario_id"],
            provenance=Provenance(doc["provenance"]),
            triggering_behavior=doc["triggering_behavior"],
            description=doc.get("description", ""),
        )


class WeighingPolicy(str, enum.Enum):
    """How risks ascribed to one criterion are weighed against each other.

    Only per-class aggregation with no offsetting between severity classes
    is implemented; the enum is the extension point for richer policies.
    """

    PER_CLASS_NO_OFFSETTING = "per_class_no_offsetting"


@dataclass(frozen=True)
class RiskAcceptanceCriterion:
    id: str
    description: str
    tolerable_rate_per_severity: Mapping[SeverityClass, Fraction]
    weighing_policy: WeighingPolicy = WeighingPolicy.PER_CLASS_NO_OFFSETTING

    def to_doc(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "description": self.description,
            "tolerable_rate_per_severity": {
                cls.value: fraction_str(rate)
                for cls, rate in self.tolerable_rate_per_severity.items()
            },
            "weighing_policy": self.weighing_policy.value,
        }

    @classmethod
    def from_doc(cls, doc: Mapping[str, Any]) -> "RiskAcceptanceCriterion":
        return cls(
            id=doc["id"],
            description=doc.get("description", ""),
            tolerable_rate_per_severity={
                SeverityClass(k): as_fraction(v)
                for k, v in doc["tolerable_rate_per_severity"].items()
            },
            weighing_policy=WeighingPolicy(doc["weighing_policy"]),
        )


@dataclass(frozen=True)
class SafetyGoal:
    """Top-level safety requirement for one hazard's hazardous events.

    ``nominal_risk_reduction`` is the demanded initial/target rate ratio;
    ``required_integrity`` is the probability with which the reduction must
    actually be delivered.
    """

    id: str
    statement: str
    hazard_ids: tuple[str, ...]
    hazardous_event_ids: tuple[str, ...]
    nominal_risk_reduction: Fraction
    required_integrity: Fraction

    def to_doc(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "statement": self.statement,
            "hazard_ids": list(self.hazard_ids),
            "hazardous_event_ids": list(self.hazardous_event_ids),
            "nominal_risk_reduction": fraction_str(self.nominal_risk_reduction),
            "required_integrity": fraction_str(self.required_integrity),
        }

    @classmethod
    def from_doc(cls, doc: Mapping[str, Any]) -> "SafetyGoal":
        return cls(
            id=doc["id"],
            statement=doc["statement"],
            hazard_ids=tuple(doc["hazard_ids"]),
            hazardous_event_ids=tuple(doc["hazardous_event_ids"]),
            nominal_risk_reduction=as_fraction(doc["nominal_risk_reduction"]),
            required_integrity=as_fraction(doc["required_integrity"]),
        )


class MeasureKind(str, enum.Enum):
    BEHAVIOR_SPEC_DELTA = "behavior_spec_delta"
    ODD_RESTRICTION = "odd_restriction"


@dataclass(frozen=True)
class SafetyMeasure:
    """A measure serving one goal.

    ``payload`` is specification-delta text for ``behavior_spec_delta``
    measures, or a conjunction of facts describing operating conditions to
    exclude for ``odd_restriction`` measures.  ``corrupt_behavior_risk``
    is the risk the measure itself introduces by acting wrongly (as
    opposed to failing to act).
    """

    id: str
    goal_id: str
    kind: MeasureKind
    payload: str
    claimed_reduction_effectiveness: Fraction
    integrity: Fraction
    corrupt_behavior_risk: RiskValue
    applied: bool = False

    def to_doc(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "goal_id": self.goal_id,
            "kind": self.kind.value,
            "payload": self.payload,
            "claimed_reduction_effectiveness": fraction_str(
                self.claimed_reduction_effectiveness
            ),
            "integrity": fraction_str(self.integrity),
            "corrupt_behavior_risk": self.corrupt_behavior_risk.to_doc(),
            "applied": self.applied,
        }

    @classmethod
    def from_doc(cls, doc: Mapping[str, Any]) -> "SafetyMeasure":
        return cls(
            id=doc["id"],
            goal_id=doc["goal_id"],
            kind=MeasureKind(doc["kind"]),
            payload=doc["payload"],
            claimed_reduction_effectiveness=as_fraction(
                doc["claimed_reduction_effectiveness"]
            ),
            integrity=as_fraction(doc["integrity"]),
            corrupt_behavior_risk=RiskValue.from_doc(doc["corrupt_behavior_risk"]),
            applied=bool(doc.get("applied", False)),
        )


@dataclass(frozen=True)
class BehavioralSafetyRequirement:
    """Scenario-scoped requirement realizing a measure for a goal."""

    id: str
    statement: str
    goal_id: str
    measure_id: str
    scenario_scope: tuple[str, ...]

    def to_doc(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "statement": self.statement,
            "goal_id": self.goal_id,
            "measure_id": self.measure_id,
            "scenario_scope": list(self.scenario_scope),
        }

    @classmethod
    def from_doc(cls, doc: Mapping[str, Any]) -> "BehavioralSafetyRequirement":
        return cls(
            id=doc["id"],
            statement=doc["statement"],
            goal_id=doc["goal_id"],
            measure_id=doc["measure_id"],
            scenario_scope=tuple(doc["scenario_scope"]),
        )


# ============================================================
# Aggregate model
# ============================================================


@dataclass
class WorkspaceModel:
    """Everything the analyses operate on, loaded into memory.

    ``ascription_rules``, ``risk_parameters``, and the exposure blocks are
    configuration tables defined by the evaluation and estimation modules;
    they are carried here so one validation pass sees the whole workspace.
    """

    spec: BehaviorSpec | None = None
    use_cases: dict[str, UseCase] = field(default_factory=dict)
    agents: dict[str, Agent] = field(default_factory=dict)
    scenarios: dict[str, Scenario] = field(default_factory=dict)
    harms: dict[str, Harm] = field(default_factory=dict)
    hazards: dict[str, Hazard] = field(default_factory=dict)
    criteria: dict[str, RiskAcceptanceCriterion] = field(default_factory=dict)
    goals: dict[str, SafetyGoal] = field(default_factory=dict)
    measures: dict[str, SafetyMeasure] = field(default_factory=dict)
    requirements: dict[str, BehavioralSafetyRequirement] = field(default_factory=dict)
    events: dict[str, HazardousEvent] = field(default_factory=dict)
    ascription_rules: list = field(default_factory=list)
    risk_parameters: list = field(default_factory=list)
    fleet_exposure: Any = None
    baseline_exposure: Any = None
    conflicting_actions: list[frozenset[str]] = field(default_factory=list)

    def entity_kinds(self) -> dict[str, tuple[str, dict]]:
        """Global id index: id → (kind, registry)."""
        index: dict[str, tuple[str, dict]] = {}
        registries = [
            ("use_case", self.use_cases),
            ("agent", self.agents),
            ("scenario", self.scenarios),
            ("harm", self.harms),
            ("hazard", self.hazards),
            ("criterion", self.criteria),
            ("goal", self.goals),
            ("measure", self.measures),
            ("requirement", self.requirements),
            ("hazardous_event", self.events),
        ]
        for kind, registry in registries:
            for entity_id in registry:
                index.setdefault(entity_id, (kind, registry))
        return index


# ============================================================
# Validation
# ============================================================


@dataclass(frozen=True)
class Violation:
    entity_kind: str
    entity_id: str
    relation: str
    message: str

    def __str__(self) -> str:
        return f"{self.entity_kind} {self.entity_id}: {self.relation}: {self.message}"

    def to_doc(self) -> dict[str, str]:
        return {
            "entity_kind": self.entity_kind,
            "entity_id": self.entity_id,
            "relation": self.relation,
            "message": self.message,
        }


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, kind: str, entity_id: str, relation: str, message: str) -> None:
        self.violations.append(Violation(kind, entity_id, relation, message))

    def to_doc(self) -> dict[str, Any]:
        return {
            "ok": self.ok,
            "violations": [v.to_doc() for v in self.violations],
        }

    def __str__(self) -> str:
        if self.ok:
            return "model consistent"
        return "\n".join(str(v) for v in self.violations)


def _check_unit_interval(
    report: ValidationReport, kind: str, entity_id: str, relation: str, value: Fraction
) -> None:
    if not 0 <= value <= 1:
        report.add(kind, entity_id, relation, f"must be in [0, 1], got {value}")


def validate_model(model: WorkspaceModel) -> ValidationReport:
    """Check every referential and numeric invariant; never raises.

    Idempotent and side-effect-free: validating twice yields the same
    report and the model is not modified.
    """
    report = ValidationReport()
    spec = model.spec
    fact_ids = set(spec.facts) if spec else set()
    action_ids = set(spec.actions) if spec else set()

    # --- identifiers are unique across entity kinds
    seen: dict[str, str] = {}
    for entity_id, (kind, _) in model.entity_kinds().items():
        seen[entity_id] = kind
    registries = [
        ("use_case", model.use_cases),
        ("agent", model.agents),
        ("scenario", model.scenarios),
        ("harm", model.harms),
        ("hazard", model.hazards),
        ("criterion", model.criteria),
        ("goal", model.goals),
        ("measure", model.measures),
        ("requirement", model.requirements),
        ("hazardous_event", model.events),
    ]
    for kind, registry in registries:
        for entity_id in registry:
            if seen[entity_id] != kind:
                report.add(
                    kind,
                    entity_id,
                    "id",
                    f"identifier also used by a {seen[entity_id]}",
                )

    # --- hazards and harms
    for hazard in model.hazards.values():
        if not hazard.description.strip():
            report.add("hazard", hazard.id, "description", "must be non-empty")
        if hazard.harm_id not in model.harms:
            report.add(
                "hazard", hazard.id, "harm_id", f"unresolved harm {hazard.harm_id!r}"
            )
        try:
            condition = parse_condition(hazard.applicability)
        except ConditionError as err:
            report.add("hazard", hazard.id, "applicability", str(err))
        else:
            if spec is None:
                if condition.referenced_facts or condition.referenced_actions:
                    report.add(
                        "hazard",
                        hazard.id,
                        "applicability",
                        "no behavior specification to resolve identifiers against",
                    )
            else:
                for fact_id in sorted(condition.referenced_facts - fact_ids):
                    report.add(
                        "hazard",
                        hazard.id,
                        "applicability",
                        f"unknown fact {fact_id!r}",
                    )
                for action_id in sorted(condition.referenced_actions - action_ids):
                    report.add(
                        "hazard",
                        hazard.id,
                        "applicability",
                        f"unknown action {action_id!r}",
                    )

    # --- use cases and scenarios
    membership: dict[str, list[str]] = {}
    for use_case in model.use_cases.values():
        if not use_case.scenario_ids:
            report.add("use_case", use_case.id, "scenario_ids", "must be non-empty")
        for scenario_id in use_case.scenario_ids:
            membership.setdefault(scenario_id, []).append(use_case.id)
            if scenario_id not in model.scenarios:
                report.add(
                    "use_case",
                    use_case.id,
                    "scenario_ids",
                    f"unresolved scenario {scenario_id!r}",
                )
    derivable = {f.id for f in spec.facts.values() if f.derivable} if spec else set()
    for scenario in model.scenarios.values():
        owners = membership.get(scenario.id, [])
        if scenario.use_case not in model.use_cases:
            report.add(
                "scenario",
                scenario.id,
                "use_case",
                f"unresolved use case {scenario.use_case!r}",
            )
        elif owners != [scenario.use_case]:
            report.add(
                "scenario",
                scenario.id,
                "use_case",
                f"must belong to exactly one use case, found {owners or 'none'}",
            )
        if scenario.frequency_per_hour < 0:
            report.add("scenario", scenario.id, "frequency_per_hour", "must be >= 0")
        _check_unit_interval(
            report, "scenario", scenario.id, "controllability", scenario.controllability
        )
        if spec is None:
            if scenario.asserted_facts:
                report.add(
                    "scenario",
                    scenario.id,
                    "asserted_facts",
                    "no behavior specification to resolve facts against",
                )
        else:
            for fact_id in scenario.asserted_facts:
                if fact_id not in fact_ids:
                    report.add(
                        "scenario",
                        scenario.id,
                        "asserted_facts",
                        f"unknown fact {fact_id!r}",
                    )
                elif fact_id in derivable:
                    report.add(
                        "scenario",
                        scenario.id,
                        "asserted_facts",
                        f"{fact_id!r} is derivable and cannot be asserted",
                    )
        resolved = [model.agents[a] for a in scenario.agents if a in model.agents]
        for agent_id in scenario.agents:
            if agent_id not in model.agents:
                report.add(
                    "scenario", scenario.id, "agents", f"unresolved agent {agent_id!r}"
                )
        if not any(a.kind is AgentKind.EGO_SYSTEM for a in resolved):
            report.add(
                "scenario", scenario.id, "agents", "must reference an ego_system agent"
            )

    # --- hazardous events
    for event in model.events.values():
        if event.hazard_id not in model.hazards:
            report.add(
                "hazardous_event",
                event.id,
                "hazard_id",
                f"unresolved hazard_id {event.hazard_id!r}",
            )
        if event.scenario_id not in model.scenarios:
            report.add(
                "hazardous_event",
                event.id,
                "scenario_id",
                f"unresolved scenario_id {event.scenario_id!r}",
            )
        if event.provenance is Provenance.DEVIATION:
            if not DEVIATION_ID_PATTERN.match(event.triggering_behavior):
                report.add(
                    "hazardous_event",
                    event.id,
                    "triggering_behavior",
                    f"{event.triggering_behavior!r} is not a deviation id",
                )
        elif spec is not None:
            if (
                event.triggering_behavior != "no_action"
                and event.triggering_behavior not in action_ids
            ):
                report.add(
                    "hazardous_event",
                    event.id,
                    "triggering_behavior",
                    f"unknown action {event.triggering_behavior!r}",
                )

    # --- criteria
    for criterion in model.criteria.values():
        for severity, rate in criterion.tolerable_rate_per_severity.items():
            if rate < 0:
                report.add(
                    "criterion",
                    criterion.id,
                    f"tolerable_rate_per_severity[{severity}]",
                    "must be >= 0",
                )

    # --- goals
    for goal in model.goals.values():
        if not goal.hazard_ids:
            report.add("goal", goal.id, "hazard_ids", "must be non-empty")
        for hazard_id in goal.hazard_ids:
            if hazard_id not in model.hazards:
                report.add(
                    "goal", goal.id, "hazard_ids", f"unresolved hazard {hazard_id!r}"
                )
        if not goal.hazardous_event_ids:
            report.add("goal", goal.id, "hazardous_event_ids", "must be non-empty")
        for event_id in goal.hazardous_event_ids:
            if event_id not in model.events:
                report.add(
                    "goal",
                    goal.id,
                    "hazardous_event_ids",
                    f"unresolved hazardous event {event_id!r}",
                )
        if goal.nominal_risk_reduction < 1:
            report.add("goal", goal.id, "nominal_risk_reduction", "must be >= 1")
        _check_unit_interval(
            report, "goal", goal.id, "required_integrity", goal.required_integrity
        )

    # --- measures
    for measure in model.measures.values():
        if measure.goal_id not in model.goals:
            report.add(
                "measure", measure.id, "goal_id", f"unresolved goal {measure.goal_id!r}"
            )
        _check_unit_interval(
            report,
            "measure",
            measure.id,
            "claimed_reduction_effectiveness",
            measure.claimed_reduction_effectiveness,
        )
        _check_unit_interval(report, "measure", measure.id, "integrity", measure.integrity)
        if measure.kind is MeasureKind.BEHAVIOR_SPEC_DELTA:
            try:
                parse_delta(measure.payload)
            except SpecError as err:
                report.add("measure", measure.id, "payload", f"delta does not parse: {err}")
        else:
            try:
                condition = parse_condition(measure.payload)
            except ConditionError as err:
                report.add("measure", measure.id, "payload", str(err))
            else:
                if any(not isinstance(a, FactAtom) for a in condition.atoms):
                    report.add(
                        "measure",
                        measure.id,
                        "payload",
                        "operating-condition exclusions may only name facts",
                    )
                elif spec is not None:
                    for fact_id in sorted(condition.referenced_facts - fact_ids):
                        report.add(
                            "measure", measure.id, "payload", f"unknown fact {fact_id!r}"
                        )

    # --- behavioral safety requirements
    for requirement in model.requirements.values():
        if requirement.goal_id not in model.goals:
            report.add(
                "requirement",
                requirement.id,
                "goal_id",
                f"unresolved goal {requirement.goal_id!r}",
            )
        measure = model.measures.get(requirement.measure_id)
        if measure is None:
            report.add(
                "requirement",
                requirement.id,
                "measure_id",
                f"unresolved measure {requirement.measure_id!r}",
            )
        elif measure.goal_id != requirement.goal_id:
            report.add(
                "requirement",
                requirement.id,
                "goal_id",
                f"disagrees with measure {measure.id}'s goal {measure.goal_id!r}",
            )
        if not requirement.scenario_scope:
            report.add(
                "requirement", requirement.id, "scenario_scope", "must be non-empty"
            )
        for scenario_id in requirement.scenario_scope:
            if scenario_id not in model.scenarios:
                report.add(
                    "requirement",
                    requirement.id,
                    "scenario_scope",
                    f"unresolved scenario {scenario_id!r}",
                )

    # --- configuration tables
    for rule in model.ascription_rules:
        for criterion_id in rule.criterion_ids:
            if criterion_id not in model.criteria:
                report.add(
                    "ascription_rule",
                    f"{rule.use_case}/{rule.severity_class}",
                    "criterion_ids",
                    f"unresolved criterion {criterion_id!r}",
                )
        if rule.use_case != "*" and rule.use_case not in model.use_cases:
            report.add(
                "ascription_rule",
                f"{rule.use_case}/{rule.severity_class}",
                "use_case",
                f"unresolved use case {rule.use_case!r}",
            )
    for params in model.risk_parameters:
        if params.scenario_id not in model.scenarios:
            report.add(
                "risk_parameters",
                params.key(),
                "scenario_id",
                f"unresolved scenario {params.scenario_id!r}",
            )
        if params.hazard_id not in model.hazards:
            report.add(
                "risk_parameters",
                params.key(),
                "hazard_id",
                f"unresolved hazard {params.hazard_id!r}",
            )
        if params.event_frequency_per_hour < 0:
            report.add(
                "risk_parameters", params.key(), "event_frequency_per_hour", "must be >= 0"
            )
        _check_unit_interval(
            report,
            "risk_parameters",
            params.key(),
            "probability_harm_given_event",
            params.probability_harm_given_event,
        )

    return report


# ============================================================
# Traceability
# ============================================================


class UnknownEntityError(KeyError):
    pass


@dataclass(frozen=True)
class TraceGraph:
    """Connected traceability subgraph around one entity."""

    root: str
    nodes: Mapping[str, str]  # id → entity kind
    edges: frozenset[tuple[str, str]]  # ordered pairs, lexicographically sorted

    def __contains__(self, entity_id: str) -> bool:
        return entity_id in self.nodes

    def ids_of_kind(self, kind: str) -> list[str]:
        return sorted(i for i, k in self.nodes.items() if k == kind)

    def to_doc(self) -> dict[str, Any]:
        return {
            "root": self.root,
            "nodes": [
                {"id": i, "kind": k} for i, k in sorted(self.nodes.items())
            ],
            "edges": [list(edge) for edge in sorted(self.edges)],
        }


def reference_edges(model: WorkspaceModel) -> set[tuple[str, str]]:
    """Undirected reference edges of the traceability graph."""
    edges: set[tuple[str, str]] = set()

    def connect(a: str, b: str) -> None:
        if a != b:
            edges.add((min(a, b), max(a, b)))

    for hazard in model.hazards.values():
        if hazard.harm_id in model.harms:
            connect(hazard.id, hazard.harm_id)
    for scenario in model.scenarios.values():
        if scenario.use_case in model.use_cases:
            connect(scenario.id, scenario.use_case)
        for agent_id in scenario.agents:
            if agent_id in model.agents:
                connect(scenario.id, agent_id)
    for event in model.events.values():
        if event.hazard_id in model.hazards:
            connect(event.id, event.hazard_id)
        if event.scenario_id in model.scenarios:
            connect(event.id, event.scenario_id)
    for goal in model.goals.values():
        for hazard_id in goal.hazard_ids:
            if hazard_id in model.hazards:
                connect(goal.id, hazard_id)
        for event_id in goal.hazardous_event_ids:
            if event_id in model.events:
                connect(goal.id, event_id)
    for measure in model.measures.values():
        if measure.goal_id in model.goals:
            connect(measure.id, measure.goal_id)
    for requirement in model.requirements.values():
        if requirement.goal_id in model.goals:
            connect(requirement.id, requirement.goal_id)
        if requirement.measure_id in model.measures:
            connect(requirement.id, requirement.measure_id)
        for scenario_id in requirement.scenario_scope:
            if scenario_id in model.scenarios:
                connect(requirement.id, scenario_id)
    return edges


def trace(entity_id: str, model: WorkspaceModel) -> TraceGraph:
    """The connected component of ``entity_id`` in the reference graph."""
    index = model.entity_kinds()
    if entity_id not in index:
        raise UnknownEntityError(entity_id)
    edges = reference_edges(model)
    adjacency: dict[str, set[str]] = {}
    for a, b in edges:
        adjacency.setdefault(a, set()).add(b)
        adjacency.setdefault(b, set()).add(a)
    reached = {entity_id}
    frontier = [entity_id]
    while frontier:
        current = frontier.pop()
        for neighbor in adjacency.get(current, ()):
            if neighbor not in reached:
                reached.add(neighbor)
                frontier.append(neighbor)
    nodes = {i: index[i][0] for i in reached}
    component_edges = frozenset(
        (a, b) for a, b in edges if a in reached and b in reached
    )
    return TraceGraph(root=entity_id, nodes=nodes, edges=component_edges)
