"""Shared pytest plumbing: a per-criterion summary for the acceptance gate."""

from __future__ import annotations

import re

_CRITERION = re.compile(r"test_acceptance\.py::test_criterion_(\d+)")

CRITERION_TITLES = {
    1: "strength sampler matches analytic mean and CDF",
    2: "all operations are bit-exact identities at zero strength",
    3: "pixel operations match brute-force oracles exactly",
    4: "curve fit recovers max-strength and tilt from synthetic curves",
    5: "retention update reproduces worked examples and stays bounded",
    6: "closed loop converges on the plant; unreachable setpoint saturates",
    7: "degenerate table reduces to uniform single-op augmentation",
    8: "model gradients match central finite differences",
    9: "desk-scale controlled run tracks the setpoint and beats baseline",
    10: "one-sided Welch test matches an independent reference",
}


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = []
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            m = _CRITERION.search(getattr(rep, "nodeid", ""))
            if not m or (outcome == "passed" and getattr(rep, "when", "call") != "call"):
                continue
            n = int(m.group(1))
            word = "PASS" if outcome == "passed" else "FAIL"
            lines.append((n, f"{word} criterion {n}: {CRITERION_TITLES.get(n, '')}"))
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(set(lines)):
            terminalreporter.write_line(line)
