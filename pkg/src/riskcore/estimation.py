"""Quantitative risk estimation.

Exposure arithmetic turns fleet descriptions and human-driving baselines
into operating hours per year; harm rates divide observed harm counts by
those hours.  Per-event risk multiplies an event frequency by the
probability that the event actually results in harm (one minus
controllability) and tags the result with the harm's severity class.

All arithmetic is exact and unit-checked: quantities carry h/yr, 1/yr,
km/h and so on, and combining mismatched units raises
:class:`riskcore.rates.UnitError` rather than returning a number.

Severity classification uses a small lookup table over (collision partner,
speed band).  Only one row of that table is anchored in assessed accident
data (a pedestrian run over in built-up traffic at up to 50 km/h is
life-threatening, class S3); the remaining rows are provisional
configuration in the spirit of the ISO 26262-3 severity examples and
should be reviewed before use beyond the shipped example.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Iterable, Mapping

from .model import HazardousEvent, RiskValue, SeverityClass
from .rates import (
    DAYS_PER_YEAR,
    HOURS_PER_DAY,
    HOURS_PER_YEAR,
    KM_PER_HOUR,
    KM_PER_YEAR,
    PER_HOUR,
    PER_YEAR,
    Quantity,
    RationalLike,
    as_fraction,
    fraction_str,
)


class EstimationError(ValueError):
    """Invalid estimation input (zero exposure, zero speed, ...)."""


# ============================================================
# Exposure arithmetic
# ============================================================


@dataclass(frozen=True)
class FleetExposure:
    """Operating exposure of a vehicle fleet."""

    fleet_size: int
    hours_per_day: Fraction
    days_per_year: Fraction

    def __post_init__(self):
        object.__setattr__(self, "hours_per_day", as_fraction(self.hours_per_day))
        object.__setattr__(self, "days_per_year", as_fraction(self.days_per_year))
        if self.fleet_size < 0 or self.hours_per_day < 0 or self.days_per_year < 0:
            raise EstimationError("fleet exposure factors must be >= 0")
        if self.hours_per_day > 24:
            raise EstimationError("hours_per_day cannot exceed 24")

    def to_doc(self) -> dict[str, Any]:
        return {
            "fleet_size": self.fleet_size,
            "hours_per_day": fraction_str(self.hours_per_day),
            "days_per_year": fraction_str(self.days_per_year),
        }

    @classmethod
    def from_doc(cls, doc: Mapping[str, Any]) -> "FleetExposure":
        return cls(
            int(doc["fleet_size"]),
            as_fraction(doc["hours_per_day"]),
            as_fraction(doc["days_per_year"]),
        )


@dataclass(frozen=True)
class BaselineExposure:
    """Human-driving exposure on the same road network, from mileage."""

    annual_mileage_km: Fraction
    average_speed_km_per_hour: Fraction

    def __post_init__(self):
        object.__setattr__(
            self, "annual_mileage_km", as_fraction(self.annual_mileage_km)
        )
        object.__setattr__(
            self,
            "average_speed_km_per_hour",
            as_fraction(self.average_speed_km_per_hour),
        )
        if self.annual_mileage_km < 0:
            raise EstimationError("annual mileage must be >= 0")
        if self.average_speed_km_per_hour <= 0:
            raise EstimationError("average speed must be > 0")

    def to_doc(self) -> dict[str, Any]:
        return {
            "annual_mileage_km": fraction_str(self.annual_mileage_km),
            "average_speed_km_per_hour": fraction_str(self.average_speed_km_per_hour),
        }

    @classmethod
    def from_doc(cls, doc: Mapping[str, Any]) -> "BaselineExposure":
        return cls(
            as_fraction(doc["annual_mileage_km"]),
            as_fraction(doc["average_speed_km_per_hour"]),
        )


def fleet_exposure_hours(exposure: FleetExposure) -> Quantity:
    """Fleet operating hours per year: size * h/day * day/yr."""
    size = Quantity.of(exposure.fleet_size)
    per_day = Quantity(exposure.hours_per_day, HOURS_PER_DAY)
    per_year = Quantity(exposure.days_per_year, DAYS_PER_YEAR)
    return size * per_day * per_year


def baseline_exposure_hours(baseline: BaselineExposure) -> Quantity:
    """Driven hours per year: annual mileage / average speed."""
    mileage = Quantity(baseline.annual_mileage_km, KM_PER_YEAR)
    speed = Quantity(baseline.average_speed_km_per_hour, KM_PER_HOUR)
    return mileage / speed


def harm_rate(
    count_per_year: Quantity | RationalLike, exposure_hours: Quantity | RationalLike
) -> Quantity:
    """Harm events per operating hour: (events/yr) / (h/yr)."""
    if not isinstance(count_per_year, Quantity):
        count_per_year = Quantity(as_fraction(count_per_year), PER_YEAR)
    if not isinstance(exposure_hours, Quantity):
        exposure_hours = Quantity(as_fraction(exposure_hours), HOURS_PER_YEAR)
    count = count_per_year.in_unit(PER_YEAR)
    hours = exposure_hours.in_unit(HOURS_PER_YEAR)
    if hours <= 0:
        raise EstimationError("exposure must be > 0 hours")
    if count < 0:
        raise EstimationError("harm count must be >= 0")
    return Quantity(count / hours, PER_HOUR)


# ============================================================
# Per-event risk
# ============================================================


@dataclass(frozen=True)
class RiskParameters:
    """Inputs of one event-risk estimate.

    ``probability_harm_given_event`` is 1 minus controllability: the
    chance that nobody involved averts the harm once the event occurs.
    """

    event_frequency_per_hour: Fraction
    probability_harm_given_event: Fraction
    severity_class: SeverityClass

    def __post_init__(self):
        object.__setattr__(
            self,
            "event_frequency_per_hour",
            as_fraction(self.event_frequency_per_hour),
        )
        object.__setattr__(
            self,
            "probability_harm_given_event",
            as_fraction(self.probability_harm_given_event),
        )
        if self.event_frequency_per_hour < 0:
            raise EstimationError("event frequency must be >= 0")
        if not 0 <= self.probability_harm_given_event <= 1:
            raise EstimationError("probability of harm must be in [0, 1]")


def estimate_event_risk(event: HazardousEvent, params: RiskParameters) -> RiskValue:
    """RiskValue(frequency * P(harm | event), severity)."""
    rate = params.event_frequency_per_hour * params.probability_harm_given_event
    return RiskValue(rate, params.severity_class)


@dataclass(frozen=True)
class RiskParameterEntry:
    """A catalog table row binding risk parameters to an analysis subject.

    ``behavior`` is ``"target"`` for target-behavior events or a deviation
    id (``dev-<action>-<guide_word>``) for deviation events.
    """

    scenario_id: str
    hazard_id: str
    behavior: str
    event_frequency_per_hour: Fraction
    probability_harm_given_event: Fraction

    def key(self) -> str:
        return f"{self.scenario_id}/{self.hazard_id}/{self.behavior}"

    def to_doc(self) -> dict[str, Any]:
        return {
            "scenario_id": self.scenario_id,
            "hazard_id": self.hazard_id,
            "behavior": self.behavior,
            "event_frequency_per_hour": fraction_str(self.event_frequency_per_hour),
            "probability_harm_given_event": fraction_str(
                self.probability_harm_given_event
            ),
        }

    @classmethod
    def from_doc(cls, doc: Mapping[str, Any]) -> "RiskParameterEntry":
        return cls(
            scenario_id=doc["scenario_id"],
            hazard_id=doc["hazard_id"],
            behavior=doc["behavior"],
            event_frequency_per_hour=as_fraction(doc["event_frequency_per_hour"]),
            probability_harm_given_event=as_fraction(
                doc["probability_harm_given_event"]
            ),
        )


def lookup_parameters(
    entries: Iterable[RiskParameterEntry],
    event: HazardousEvent,
    scenario_frequency_per_hour: Fraction,
    scenario_controllability: Fraction,
    severity_class: SeverityClass,
) -> tuple[RiskParameters, bool]:
    """Find the parameter row for an event, falling back to scenario level.

    The fallback (scenario frequency, scenario controllability) is the
    conservative assumption that the analysed behavior occurs whenever the
    scenario does.  Returns (parameters, fallback_used).
    """
    behavior = (
        event.triggering_behavior
        if event.provenance.value == "deviation"
        else "target"
    )
    for entry in entries:
        if (
            entry.scenario_id == event.scenario_id
            and entry.hazard_id == event.hazard_id
            and entry.behavior == behavior
        ):
            return (
                RiskParameters(
                    entry.event_frequency_per_hour,
                    entry.probability_harm_given_event,
                    severity_class,
                ),
                False,
            )
    return (
        RiskParameters(
            scenario_frequency_per_hour,
            1 - scenario_controllability,
            severity_class,
        ),
        True,
    )


# ============================================================
# Severity classification
# ============================================================

WALKING_PACE = "walking_pace"  # < 10 km/h
RESIDENTIAL = "residential"  # 10–30 km/h
URBAN = "urban"  # 30–50 km/h
RURAL = "rural"  # 50–100 km/h
HIGHWAY = "highway"  # > 100 km/h

_SPEED_BANDS = (
    (Fraction(10), WALKING_PACE),
    (Fraction(30), RESIDENTIAL),
    (Fraction(50), URBAN),
    (Fraction(100), RURAL),
)


def speed_band(speed_km_per_hour: RationalLike) -> str:
    speed = as_fraction(speed_km_per_hour)
    if speed < 0:
        raise EstimationError("speed must be >= 0")
    for limit, band in _SPEED_BANDS:
        if speed <= limit:
            return band
    return HIGHWAY


@dataclass(frozen=True)
class CollisionContext:
    """Collision descriptor for severity classification."""

    partner_kind: str  # none | pedestrian | cyclist | vehicle | obstacle
    speed_band: str
    run_over: bool = False


# Rows are matched top to bottom; None acts as a wildcard.  The single
# assessed row is (pedestrian, urban, run_over) → S3; everything else is
# provisional configuration.
_VULNERABLE = ("pedestrian", "cyclist")
SEVERITY_TABLE: tuple[tuple[tuple[str, ...] | None, tuple[str, ...] | None, bool | None, SeverityClass], ...] = (
    (("none",), None, None, SeverityClass.S0),
    (_VULNERABLE, (WALKING_PACE,), None, SeverityClass.S1),
    (_VULNERABLE, (RESIDENTIAL,), None, SeverityClass.S2),
    (_VULNERABLE, (URBAN,), True, SeverityClass.S3),
    (_VULNERABLE, (URBAN,), False, SeverityClass.S2),
    (_VULNERABLE, (RURAL, HIGHWAY), None, SeverityClass.S3),
    (("vehicle",), (WALKING_PACE, RESIDENTIAL), None, SeverityClass.S1),
    (("vehicle",), (URBAN, RURAL), None, SeverityClass.S2),
    (("vehicle",), (HIGHWAY,), None, SeverityClass.S3),
    (("obstacle",), (WALKING_PACE, RESIDENTIAL, URBAN), None, SeverityClass.S1),
    (("obstacle",), (RURAL, HIGHWAY), None, SeverityClass.S2),
)


def classify_severity(context: CollisionContext) -> SeverityClass | None:
    """Table lookup; ``None`` means unclassified, requiring manual entry."""
    for partners, bands, run_over, severity in SEVERITY_TABLE:
        if partners is not None and context.partner_kind not in partners:
            continue
        if bands is not None and context.speed_band not in bands:
            continue
        if run_over is not None and context.run_over != run_over:
            continue
        return severity
    return None
