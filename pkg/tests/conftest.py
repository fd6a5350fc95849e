"""Shared fixtures and the acceptance-criteria terminal report.

Acceptance tests register one verdict per criterion via `record_acceptance`;
after the run, a summary section prints one PASS/FAIL line per criterion so
the gate status is readable without digging through pytest output.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from ong_lab import RandomStream

settings.register_profile(
    "suite",
    deadline=None,
    max_examples=25,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("suite")


@dataclass
class _Verdict:
    passed: bool
    detail: str


_ACCEPTANCE: dict[int, _Verdict] = {}

_CRITERIA_TITLES = {
    1: "LLN limit, d=2 alpha=1",
    2: "LLN limit, d=1 alpha=1/2",
    3: "mu-limit, d=1 alpha=2, binomial and Poissonized",
    4: "log regime dyadic difference, d=1 alpha=1",
    5: "scaled mean gain, d=1 alpha=1",
    6: "variance power-law scaling, alpha < d/2",
    7: "log-variance regime, alpha = d/2",
    8: "Cauchy tail decay, alpha > d/2",
    9: "six-component resampling identity",
    10: "conditioned second-moment decay",
    11: "Voronoi diameter scaling and cone bound",
    12: "grid vs brute-force oracle equivalence",
    13: "Poisson coupling bit-exactness",
    14: "thread-count byte reproducibility",
}


def record_acceptance(number: int, passed: bool, detail: str = "") -> None:
    """Register the verdict for one acceptance criterion (1-based)."""
    _ACCEPTANCE[number] = _Verdict(passed=bool(passed), detail=detail)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        verdict = _ACCEPTANCE[number]
        status = "PASS" if verdict.passed else "FAIL"
        title = _CRITERIA_TITLES.get(number, "")
        line = f"ACCEPTANCE {number:2d}: {status}  {title}"
        if verdict.detail:
            line += f"  [{verdict.detail}]"
        terminalreporter.write_line(line)


@pytest.fixture
def stream() -> RandomStream:
    """A fixed-seed stream for tests that need reproducible draws."""
    return RandomStream(424242, (1,))


@pytest.fixture
def rng() -> np.random.Generator:
    return RandomStream(424242, (2,)).generator()
