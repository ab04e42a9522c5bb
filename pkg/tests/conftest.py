"""Shared pytest wiring.

The acceptance gate in test_acceptance.py names one test per criterion
(test_criterion_<n>_<title>).  The summary hook below turns those
outcomes into one PASS/FAIL line per criterion at the end of every run,
so the gate's verdict is visible without -v and without scraping dots.
"""

import re
from collections import defaultdict

_CRITERION = re.compile(r"test_criterion_(\d+)_([a-z0-9_]+)")

_outcomes: dict[int, list[bool]] = defaultdict(list)
_titles: dict[int, str] = {}


def pytest_runtest_logreport(report):
    if report.when != "call":
        return
    match = _CRITERION.search(report.nodeid)
    if not match:
        return
    number = int(match.group(1))
    _titles[number] = match.group(2).replace("_", " ")
    _outcomes[number].append(report.passed)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _outcomes:
        return
    terminalreporter.write_sep("=", "acceptance gate")
    for number in sorted(_outcomes):
        passed = all(_outcomes[number])
        verdict = "PASS" if passed else "FAIL"
        terminalreporter.write_line(
            f"criterion {number}: {verdict}  {_titles[number]}",
            green=passed,
            red=not passed,
        )
