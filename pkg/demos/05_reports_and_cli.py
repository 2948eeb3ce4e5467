"""
Verification reports
====================

The harness ties every check together; the ``reschern`` command wraps it.
Equivalent shell calls:

    reschern list
    reschern run --scenario S1_TWISTED --out report.json
    reschern continue --scenario S1_WINDING --z-range -3 1 9 --z-imag 0.1 --format csv
"""
# %%
import tempfile
from pathlib import Path

from reschern.geometry import get_builtin
from reschern.harness import RunOptions, emit_report, load_report, main, run_verification

rep = run_verification(get_builtin("S1_TWISTED"), RunOptions(trials=10))
print(rep.passed, rep.rel_err)
print(rep.checks)

# %%
with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "r.json"
    emit_report(rep, "json", path)
    print("round trip:", load_report(path) == rep)
    print(emit_report(rep, "csv").splitlines()[:3])

# %%
print("exit code:", main(["continue", "--scenario", "S1_WINDING", "--z", "0.5", "--z", "-1"]))
