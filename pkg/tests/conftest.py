import numpy as np
import pytest
from hypothesis import strategies as st

from evobandit.evolution import make_stream


@pytest.fixture
def rng():
    return make_stream(20241016)


@st.composite
def theta_and_population(draw, max_d=8, max_M=6):
    d = draw(st.integers(1, max_d))
    M = draw(st.integers(1, max_M))
    theta = np.array(draw(st.lists(st.floats(-5, 5, allow_nan=False), min_size=d, max_size=d)))
    bits = draw(st.lists(st.integers(0, 1), min_size=M * d, max_size=M * d))
    return theta, np.array(bits, dtype=np.uint8).reshape(M, d)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
