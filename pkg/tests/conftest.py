import math

import numpy as np
import pytest

from sarship.geometry import canonicalize_obb


def random_box(rng, spread=6.0, size=(1.0, 8.0), score=False):
    a, b = rng.uniform(*size, 2)
    return canonicalize_obb(
        rng.uniform(-spread, spread),
        rng.uniform(-spread, spread),
        a,
        b,
        rng.uniform(-math.pi, math.pi),
        score=float(rng.uniform(0.05, 1.0)) if score else None,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# Acceptance checks append "PASS/FAIL ..." lines here; they are repeated in
# the terminal summary so they show up even when output is captured.
ACCEPTANCE_LINES = []


def record_acceptance(number, title, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {title} -- {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
