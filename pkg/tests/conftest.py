import numpy as np
import pytest
from hypothesis import settings
from hypothesis import strategies as st

from wulfflab.norms import NormDescriptor

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")

EUC = NormDescriptor.euclidean(2)
QUAD = NormDescriptor.quadratic([[4.0, 0.0], [0.0, 1.0]])


@st.composite
def norms(draw):
    kind = draw(st.sampled_from(["euclidean", "quadratic", "lq"]))
    if kind == "euclidean":
        return EUC
    if kind == "quadratic":
        a = draw(st.floats(0.3, 3.0))
        c = draw(st.floats(0.3, 3.0))
        b = draw(st.floats(-0.9, 0.9)) * np.sqrt(a * c)
        return NormDescriptor.quadratic([[a, b], [b, c]])
    q = draw(st.floats(2.0, 6.0))
    w = [draw(st.floats(0.5, 2.0)), draw(st.floats(0.5, 2.0))]
    return NormDescriptor.lq(q, w)


def nonzero_vectors(n=2):
    v = st.floats(-10, 10, allow_nan=False)
    return st.lists(v, min_size=n, max_size=n).filter(lambda x: np.linalg.norm(x) > 1e-3).map(np.array)


@pytest.fixture
def euc():
    return EUC


@pytest.fixture
def quad():
    return QUAD


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for k in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[k])
