import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from nctorus.skewmat import SkewMatrix
from nctorus.field import random_positive_block

settings.register_profile("default", deadline=None, max_examples=60, derandomize=True,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

rationals = st.fractions(min_value=-8, max_value=8, max_denominator=12)


@st.composite
def rational_skew(draw, n=None, min_n=0, max_n=6):
    n = draw(st.integers(min_n, max_n)) if n is None else n
    upper = draw(st.lists(rationals, min_size=n * (n - 1) // 2, max_size=n * (n - 1) // 2))
    return SkewMatrix.from_upper(n, upper)


def random_rational_skew(rng: random.Random, n: int, bound: int = 9, den: int = 9) -> SkewMatrix:
    upper = [Fraction(rng.randint(-bound, bound), rng.randint(1, den)) for _ in range(n * (n - 1) // 2)]
    return SkewMatrix.from_upper(n, upper)


def random_field_endpoint(rng: np.random.Generator, p: int, q: int) -> SkewMatrix:
    n = 2 * p + q
    a = rng.normal(size=(n, n))
    a = a - a.T
    if p:
        a[:2 * p, :2 * p] = random_positive_block(rng, p)
    return SkewMatrix.from_numpy(a, p, q)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for k in sorted(mod.RESULTS):
            terminalreporter.write_line(mod.RESULTS[k])
