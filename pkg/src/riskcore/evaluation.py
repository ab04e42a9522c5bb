"""Risk evaluation: ascription, aggregation, acceptance verdicts.

Every identified risk is ascribed to the acceptance criteria that apply to
its use case and severity class (a risk may be evaluated under several
criteria; a risk no rule covers is reported as a finding, never silently
dropped).  Ascribed rates are then aggregated per (criterion, severity
class) — classes are never merged, saving victims in one class cannot
offset victims in another — and compared against each criterion's
tolerable rates.

Acceptance is strict: a class is accepted when its actual rate is strictly
below the tolerable rate.  Exact equality is reported as accepted at the
boundary with a warning flag, since estimates that land exactly on a
threshold deserve scrutiny rather than silent acceptance.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Iterable, Mapping

from .model import (
    HazardousEvent,
    RiskAcceptanceCriterion,
    RiskValue,
    SeverityClass,
    WeighingPolicy,
)
from .rates import as_fraction, format_factor, format_rate, fraction_str


class EvaluationError(ValueError):
    pass


class MissingToleranceError(EvaluationError):
    """A criterion was ascribed a severity class it has no rate for."""


# ============================================================
# Findings
# ============================================================


@dataclass(frozen=True)
class Finding:
    """A non-fatal analysis observation surfaced in reports."""

    kind: str
    message: str
    entity_ids: tuple[str, ...] = ()

    def to_doc(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "message": self.message,
            "entity_ids": list(self.entity_ids),
        }


# ============================================================
# Ascription
# ============================================================


@dataclass(frozen=True)
class AscriptionRule:
    """Maps (use case, severity class) to acceptance criteria; "*" matches all."""

    use_case: str
    severity_class: str
    criterion_ids: tuple[str, ...]

    def matches(self, use_case: str, severity: SeverityClass) -> bool:
        if self.use_case != "*" and self.use_case != use_case:
            return False
        if self.severity_class != "*" and self.severity_class != severity.value:
            return False
        return True

    def to_doc(self) -> dict[str, Any]:
        return {
            "use_case": self.use_case,
            "severity_class": self.severity_class,
            "criterion_ids": list(self.criterion_ids),
        }

    @classmethod
    def from_doc(cls, doc: Mapping[str, Any]) -> "AscriptionRule":
        return cls(
            doc.get("use_case", "*"),
            doc.get("severity_class", "*"),
            tuple(doc["criterion_ids"]),
        )


@dataclass(frozen=True)
class RiskAscription:
    event_id: str
    risk: RiskValue
    criterion_id: str

    def to_doc(self) -> dict[str, Any]:
        return {
            "event_id": self.event_id,
            "risk": self.risk.to_doc(),
            "criterion_id": self.criterion_id,
        }


def ascribe(
    risks: Iterable[tuple[HazardousEvent, RiskValue]],
    criteria: Mapping[str, RiskAcceptanceCriterion],
    rules: Iterable[AscriptionRule],
    scenario_use_case: Mapping[str, str],
) -> tuple[list[RiskAscription], list[Finding]]:
    """Ascribe each risk to every criterion whose rules match it.

    The ascription is total: risks that no rule covers (or whose rules
    name unknown criteria) come back as "unascribed risk" findings.
    """
    rules = list(rules)
    ascriptions: list[RiskAscription] = []
    findings: list[Finding] = []
    for event, risk in risks:
        use_case = scenario_use_case.get(event.scenario_id, "")
        matched: list[str] = []
        for rule in rules:
            if rule.matches(use_case, risk.severity_class):
                for criterion_id in rule.criterion_ids:
                    if criterion_id in criteria and criterion_id not in matched:
                        matched.append(criterion_id)
        for criterion_id in matched:
            ascriptions.append(RiskAscription(event.id, risk, criterion_id))
        if not matched:
            findings.append(
                Finding(
                    kind="unascribed_risk",
                    message=(
                        f"risk of event {event.id} ({risk.severity_class}) is not "
                        "ascribed to any acceptance criterion"
                    ),
                    entity_ids=(event.id,),
                )
            )
    return ascriptions, findings


# ============================================================
# Aggregation
# ============================================================

AggregateKey = tuple[str, SeverityClass]


def aggregate(
    ascriptions: Iterable[RiskAscription],
    policy: WeighingPolicy = WeighingPolicy.PER_CLASS_NO_OFFSETTING,
) -> dict[AggregateKey, Fraction]:
    """Sum ascribed rates per (criterion, severity class).

    Under ``per_class_no_offsetting`` severity classes aggregate
    independently; there is no cross-class arithmetic of any kind.
    """
    if policy is not WeighingPolicy.PER_CLASS_NO_OFFSETTING:
        raise EvaluationError(f"unsupported weighing policy {policy}")
    totals: dict[AggregateKey, Fraction] = {}
    for ascription in ascriptions:
        key = (ascription.criterion_id, ascription.risk.severity_class)
        totals[key] = totals.get(key, Fraction(0)) + ascription.risk.rate
    return totals


# ============================================================
# Verdicts
# ============================================================


class VerdictStatus(str, enum.Enum):
    ACCEPTED = "accepted"
    VIOLATED = "violated"


@dataclass(frozen=True)
class Verdict:
    """Acceptance decision for one criterion and severity class."""

    criterion_id: str
    severity_class: SeverityClass
    actual_rate: Fraction
    tolerable_rate: Fraction
    status: VerdictStatus
    required_reduction_factor: Fraction | None = None
    boundary: bool = False  # actual == tolerable: accepted, but flagged

    def to_doc(self) -> dict[str, Any]:
        doc = {
            "criterion_id": self.criterion_id,
            "severity_class": self.severity_class.value,
            "actual_rate": fraction_str(self.actual_rate),
            "actual_display": format_rate(self.actual_rate),
            "tolerable_rate": fraction_str(self.tolerable_rate),
            "tolerable_display": format_rate(self.tolerable_rate),
            "status": self.status.value,
            "boundary": self.boundary,
        }
        if self.required_reduction_factor is not None:
            doc["required_reduction_factor"] = fraction_str(
                self.required_reduction_factor
            )
            doc["required_reduction_display"] = format_factor(
                self.required_reduction_factor
            )
        return doc

    @classmethod
    def from_doc(cls, doc: Mapping[str, Any]) -> "Verdict":
        factor = doc.get("required_reduction_factor")
        return cls(
            criterion_id=doc["criterion_id"],
            severity_class=SeverityClass(doc["severity_class"]),
            actual_rate=as_fraction(doc["actual_rate"]),
            tolerable_rate=as_fraction(doc["tolerable_rate"]),
            status=VerdictStatus(doc["status"]),
            required_reduction_factor=None if factor is None else as_fraction(factor),
            boundary=bool(doc.get("boundary", False)),
        )


def compare(
    actuals: Mapping[AggregateKey, Fraction],
    criteria: Mapping[str, RiskAcceptanceCriterion],
) -> list[Verdict]:
    """One verdict per aggregated (criterion, class), ordered stably.

    ``violated`` exactly when actual > tolerable, with the required
    reduction factor actual/tolerable.  A criterion missing a tolerable
    rate for an ascribed class is a :class:`MissingToleranceError`: the
    criterion cannot judge what was ascribed to it.
    """
    verdicts: list[Verdict] = []
    for (criterion_id, severity), actual in sorted(
        actuals.items(), key=lambda kv: (kv[0][0], kv[0][1].value)
    ):
        criterion = criteria.get(criterion_id)
        if criterion is None:
            raise EvaluationError(f"unknown criterion {criterion_id!r}")
        tolerable = criterion.tolerable_rate_per_severity.get(severity)
        if tolerable is None:
            raise MissingToleranceError(
                f"criterion {criterion_id!r} has no tolerable rate for {severity}"
            )
        if actual > tolerable:
            if tolerable == 0:
                factor = None  # no finite reduction reaches a zero threshold
            else:
                factor = actual / tolerable
            verdicts.append(
                Verdict(
                    criterion_id=criterion_id,
                    severity_class=severity,
                    actual_rate=actual,
                    tolerable_rate=tolerable,
                    status=VerdictStatus.VIOLATED,
                    required_reduction_factor=factor,
                )
            )
        else:
            verdicts.append(
                Verdict(
                    criterion_id=criterion_id,
                    severity_class=severity,
                    actual_rate=actual,
                    tolerable_rate=tolerable,
                    status=VerdictStatus.ACCEPTED,
                    boundary=actual == tolerable,
                )
            )
    return verdicts


def all_accepted(verdicts: Iterable[Verdict]) -> bool:
    """Conjunction over criteria: every verdict must individually accept."""
    return all(v.status is VerdictStatus.ACCEPTED for v in verdicts)
