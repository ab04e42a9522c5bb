"""Risk management core for automated-driving behavior specifications.

The package implements an iterative risk management loop for behavior
specifications of automated road vehicles: analyse hazardous events caused
by the specified target behavior, evaluate the ascribed risks against
acceptance criteria, treat unacceptable risks with safety measures, and
repeat until the residual risk is acceptable.  A second analysis pass
covers deviations from the specified behavior (guide-word style, as in
HAZOP), so that acceptance covers both "the specification is hazardous"
and "the vehicle deviates from the specification".

Modules:

- ``rates``       exact rational quantities, unit checking, display
- ``dsl``         the behavior specification language (facts, rules, actions)
- ``inference``   forward-chaining derivation of behavior from scenarios
- ``model``       the risk ontology (hazards, scenarios, criteria, goals...)
- ``hazards``     hazardous-event identification and guide-word deviations
- ``estimation``  exposure arithmetic, event risk, severity classification
- ``evaluation``  risk ascription, aggregation, and acceptance verdicts
- ``treatment``   safety goals, measures, predicted residual risk
- ``store``       the on-disk workspace (documents, journal, audit trail)
- ``engine``      the iteration state machine tying it all together
- ``fixtures``    a worked urban-crosswalk example workspace
- ``cli``/``server``  command line and HTTP/JSON interfaces
"""

__version__ = "0.1.0"
