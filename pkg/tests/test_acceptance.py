"""The twelve acceptance criteria at their stated tolerances.

One PASS/FAIL line per criterion is printed in the terminal summary. Set
WULFFLAB_ACCEPTANCE=quick for the coarse smoke variant (verdicts are then
indicative only).
"""
import math
import os

import pytest

from wulfflab import acceptance
from wulfflab.cli import determinism_check

QUICK = os.environ.get("WULFFLAB_ACCEPTANCE", "full") == "quick"
RESULTS = {}


def _line(c):
    status = "PASS" if c.passed else "FAIL"
    within = c.runtime <= c.runtime_limit
    rt = f"{c.runtime:.1f}s / limit {c.runtime_limit:g}s" + ("" if within else " (over limit)")
    return f"[{status}] criterion {c.id:2d}: {c.name} | tolerance: {c.tolerance} | {rt}"


@pytest.mark.parametrize("fn", acceptance.CHECKS, ids=lambda f: f.__name__)
def test_criterion(fn):
    c = acceptance.run_check(fn, quick=QUICK)
    RESULTS[c.id] = _line(c)
    assert c.passed, f"{c.name}: measured {c.measured}; expected {c.expected}; {c.notes}"
    assert c.runtime <= c.runtime_limit, f"runtime {c.runtime:.1f}s over {c.runtime_limit}s"


def test_criterion_12_determinism():
    import time
    t = time.perf_counter()
    c = determinism_check(quick=True)
    c.runtime = time.perf_counter() - t
    RESULTS[12] = _line(c).replace(f" / limit {math.inf:g}s", "")
    assert c.passed, f"outputs differ: {c.measured['differing']}"
