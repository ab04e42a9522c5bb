"""The crosswalk story, end to end.

A delivery van fleet serves a residential area.  Near crosswalks the
vans must stop for pedestrians who intend to cross; a pedestrian who
does not telegraph that intention is exactly the case the initial
behavior specification gets wrong.  This script walks the whole loop:
seed the workspace, look at the derived target behavior, watch the
first evaluation fail, preview a fix, apply it, and export the refined
specification with its safety requirements.

Run it anywhere; it works in a throwaway directory:

    python3 demos/crossing_example.py
"""

import json
import tempfile
from pathlib import Path

from riskcore import fixtures
from riskcore.engine import Engine
from riskcore.inference import infer
from riskcore.store import Workspace, init_workspace

root = Path(tempfile.mkdtemp(prefix="riskcore-demo-")) / "workspace"
print(f"workspace: {root}\n")

# ------------------------------------------------------------
# 1. Seed the worked example: two scenarios, one hazard, one
#    acceptance criterion (risk below the human-driving baseline).
# ------------------------------------------------------------

init_workspace(root, fixtures.seed_documents())
engine = Engine(Workspace(root))
model = engine.workspace.model()

print("scenarios:", ", ".join(sorted(model.scenarios)))
print("hazard:   ", model.hazards["H-CROSSWALK"].description)

# ------------------------------------------------------------
# 2. What does the behavior specification derive per scenario?
#    In "base" the pedestrian waits visibly and the van stops.  In
#    "variant" the pedestrian is distracted: no crossing intention is
#    detected, no stop is derived, and that gap is the hazard.
# ------------------------------------------------------------

for scenario_id in sorted(model.scenarios):
    state = infer(model.spec, model.scenarios[scenario_id].asserted_facts)
    actions = ", ".join(sorted(state.actions)) or "(none)"
    print(f"target behavior in {scenario_id}: {actions}")

# ------------------------------------------------------------
# 3. First pass through the loop.  Analysis finds the hazardous event,
#    evaluation compares the fleet's harm rate against the tolerable
#    rate and the verdict comes back violated.
# ------------------------------------------------------------

result = engine.run()
print(f"\nfirst run: {result.status}")
print(f"  {result.summary}")
report = engine.workspace.read_document(result.report_path)
verdict = report["verdicts"][0]
print(
    f"  required risk reduction: {verdict['required_reduction_display']}x"
)

# ------------------------------------------------------------
# 4. The fix: infer crossing intention from traffic context instead of
#    waiting for an explicit signal.  Preview it first; the what-if
#    simulation never touches the workspace.
# ------------------------------------------------------------

measure = {
    "kind": "behavior_spec_delta",
    "payload": fixtures.MEASURE_DELTA_TEXT,
    "claimed_reduction_effectiveness": "999/1000",
    "integrity": "999/1000",
    "corrupt_behavior_risk": {"rate": "1e-11", "severity_class": "S3"},
    "scenario_scope": ["variant"],
}
preview = engine.whatif(measure)
print(f"\nwhat-if: {preview['summary']}")
for row in preview["residual_prediction"]:
    print(
        f"  {row['criterion_id']}/{row['severity_class']}: "
        f"{row['current']} now, {row['predicted']} predicted "
        f"(tolerable {row['tolerable']})"
    )

# ------------------------------------------------------------
# 5. Apply it for real and let the loop finish: iteration 1 re-checks
#    the refined target behavior, iteration 2 adds the guide-word
#    deviations ("not stop", "early", "late") on top.
# ------------------------------------------------------------

engine.submit_measure(measure)
result = engine.run()
print(f"\nsecond run: {result.status}")
for step in result.details["steps"]:
    print(f"  {step['action']}: {step['summary']}")

final = engine.workspace.read_document("reports/final.report.json")
for entry in final["residual_risk"]:
    print(
        f"residual {entry['criterion_id']}/{entry['severity_class']}: "
        f"{entry['rate_display']}"
    )

# ------------------------------------------------------------
# 6. Export the refined specification.  The header carries the
#    revision, the footer the behavioral safety requirements that now
#    trace the measure back to its goal.
# ------------------------------------------------------------

text, table = engine.export_refined_spec()
print("\n--- refined specification ---")
print(text)
print("--- traceability ---")
print(json.dumps(table["requirements"], indent=2))
