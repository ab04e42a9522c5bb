"""Where the tolerable rate comes from.

Every number in the crosswalk example is exact rational arithmetic, and
this script rebuilds the chain by hand: fleet exposure, fleet harm
rate, the human-driving baseline, the tolerable rate it implies, the
reduction demand, and finally the residual-risk decomposition of a
candidate measure.

    python3 demos/exposure_arithmetic.py
"""

from fractions import Fraction

from riskcore.estimation import (
    BaselineExposure,
    FleetExposure,
    baseline_exposure_hours,
    fleet_exposure_hours,
    harm_rate,
)
from riskcore.model import RiskValue, SeverityClass
from riskcore.rates import format_factor, format_rate
from riskcore.treatment import (
    ResidualModel,
    predicted_residual,
    required_integrity_for,
)

# ------------------------------------------------------------
# 1. Fleet exposure: 1000 vans, 22 hours a day, 365 days a year.
# ------------------------------------------------------------

fleet = fleet_exposure_hours(FleetExposure(1000, 22, 365))
print(f"fleet exposure:     {float(fleet.value):,.0f} h/yr")

# With 3 near misses per van-year and every 3000th a fatality, the
# fleet sees one fatality per year; the initial risk follows.

initial = harm_rate(1, fleet)
print(f"initial harm rate:  {format_rate(initial.value)} per hour")

# ------------------------------------------------------------
# 2. The baseline: human drivers in the same operational design
#    domain, 8.623e9 km/yr at an average 24 km/h, with a fatal
#    accident about every six years of driving time on this road type.
# ------------------------------------------------------------

baseline = baseline_exposure_hours(BaselineExposure("8.623e9", 24))
print(f"baseline exposure:  {float(baseline.value):,.0f} h/yr")

tolerable = harm_rate(Fraction(1, 6), baseline)
print(f"tolerable rate:     {format_rate(tolerable.value)} per hour")

# ------------------------------------------------------------
# 3. Positive risk balance demands initial < tolerable; it is not, so
#    a reduction by their ratio is required.
# ------------------------------------------------------------

factor = initial.value / tolerable.value
print(f"reduction demanded: {format_factor(factor)}x")

# ------------------------------------------------------------
# 4. A measure promises 99.9% effectiveness.  Its residual risk is not
#    zero: the unreduced remainder, a floor below which no behavior
#    change helps, and the measure's own corrupt behavior all add up.
# ------------------------------------------------------------

model = ResidualModel(
    initial=RiskValue(initial.value, SeverityClass.S3),
    minimum_achievable_rate=Fraction(1, 10**10),
    reduction_effectiveness=Fraction(999, 1000),
    integrity=Fraction(999, 1000),
    corrupt_risk_rate=Fraction(1, 10**11),
)
residual = predicted_residual(model)
print(f"predicted residual: {format_rate(residual.rate)} per hour")
print(f"accepted:           {residual.rate < tolerable.value}")

# ------------------------------------------------------------
# 5. The same relation run backwards: how much integrity does a
#    reduction spanning this many orders of magnitude demand?  One
#    integrity decade per decade of reduction, SIL-style.
# ------------------------------------------------------------

demand = required_integrity_for(initial.value, tolerable.value)
print(f"required integrity: {demand} ({float(demand):.6f})")
