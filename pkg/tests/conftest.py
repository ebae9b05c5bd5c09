import os
import sys
from fractions import Fraction

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

DATA = os.path.join(os.path.dirname(__file__), os.pardir, "data")


@pytest.fixture
def data_dir():
    return os.path.abspath(DATA)


@st.composite
def rational_dist(draw, n, allow_zero_state=True, max_weight=6):
    """Random exact distribution on [0, n] with small integer weights."""
    lo = 0 if allow_zero_state else 1
    if lo > n:
        lo = 0
    w = [0] * (n + 1)
    raw = draw(st.lists(st.integers(0, max_weight), min_size=n + 1 - lo, max_size=n + 1 - lo))
    for i, x in enumerate(raw):
        w[lo + i] = x
    if not any(w):
        w[draw(st.integers(lo, n))] = 1
    tot = sum(w)
    return [Fraction(x, tot) for x in w]


# -- acceptance reporting ---------------------------------------------------

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
