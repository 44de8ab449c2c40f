import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from coarset.space import ControlledSet, PartialTranslation

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@st.composite
def controlled_sets(draw, n=None, max_n=12, max_pairs=40):
    n = draw(st.integers(1, max_n)) if n is None else n
    pairs = draw(st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=max_pairs))
    return ControlledSet(n, pairs)


@st.composite
def partial_translations(draw, max_n=12, fixed_point_free=False):
    n = draw(st.integers(1, max_n))
    perm = draw(st.permutations(range(n)))
    keep = draw(st.lists(st.booleans(), min_size=n, max_size=n))
    dom = [x for x in range(n) if keep[x] and not (fixed_point_free and perm[x] == x)]
    return PartialTranslation(n, dom, [perm[x] for x in dom])


def brute_compose(E, F):
    return {(x, y) for (x, z) in E for (w, y) in F if z == w}
