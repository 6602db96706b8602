"""Shared test configuration.

The terminal-summary hook prints one PASS/FAIL line per acceptance
criterion (every test in test_acceptance.py) at the end of the run.
"""

from __future__ import annotations


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results: dict[str, str] = {}
    for outcome in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(report, "nodeid", "")
            if "test_acceptance.py" not in nodeid:
                continue
            if getattr(report, "when", "call") == "call" or outcome == "error":
                name = nodeid.split("::")[-1]
                results[name] = "PASS" if outcome == "passed" else "FAIL"
    if results:
        terminalreporter.write_sep("=", "acceptance criteria")
        for name, outcome in results.items():
            terminalreporter.write_line(f"{outcome}: {name}")
