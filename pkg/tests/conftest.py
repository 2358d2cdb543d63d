import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from pdsw.diagrams import PersistenceDiagram

settings.register_profile(
    "pdsw", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("pdsw")

coords = st.floats(min_value=-5, max_value=5, allow_nan=False, allow_infinity=False, width=64)
lifetimes = st.floats(min_value=0, max_value=5, allow_nan=False, allow_infinity=False, width=64)


@st.composite
def diagrams(draw, min_size=0, max_size=6):
    n = draw(st.integers(min_size, max_size))
    births = [draw(coords) for _ in range(n)]
    return PersistenceDiagram([(b, b + draw(lifetimes)) for b in births])


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(mod.RESULTS):
            terminalreporter.write_line(line)
