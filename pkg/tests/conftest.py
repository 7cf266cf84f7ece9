import os

import numpy as np
import pytest

# traces compare byte for byte across runs
os.environ.setdefault("BILINPLAN_FREEZE_CLOCK", "1")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL line per acceptance criterion."""
    results = {}
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance.py::test_criterion_" not in nodeid:
                continue
            if rep.when != "call" and outcome == "passed":
                continue
            name = nodeid.split("::")[1].split("[")[0]
            ok = results.get(name, True) and outcome == "passed"
            results[name] = ok
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(results):
        number, _, label = name[len("test_criterion_"):].partition("_")
        status = "PASS" if results[name] else "FAIL"
        terminalreporter.write_line(f"criterion {int(number):2d} {status}  {label.replace('_', ' ')}")
