import os
import random
from fractions import Fraction

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from ssperm.params import ExpParams

settings.register_profile(
    "default", max_examples=200, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

coord = st.floats(min_value=-10, max_value=10, allow_nan=False, allow_infinity=False)
small_int = st.integers(min_value=-6, max_value=6)
rational = st.fractions(min_value=-10, max_value=10, max_denominator=12)


@st.composite
def float_params(draw):
    return ExpParams(tuple(draw(coord) for _ in range(4)), tuple(draw(coord) for _ in range(4)))


@st.composite
def int_params(draw):
    return ExpParams(tuple(draw(small_int) for _ in range(4)), tuple(draw(small_int) for _ in range(4)))


@st.composite
def rational_params(draw):
    return ExpParams(tuple(draw(rational) for _ in range(4)), tuple(draw(rational) for _ in range(4)))


def random_float_params(rng: random.Random, lo: float = -10.0, hi: float = 10.0) -> ExpParams:
    return ExpParams(tuple(rng.uniform(lo, hi) for _ in range(4)), tuple(rng.uniform(lo, hi) for _ in range(4)))


def random_rational_params(rng: random.Random, span: int = 10, den: int = 7) -> ExpParams:
    def r():
        return Fraction(rng.randint(-span * den, span * den), rng.randint(1, den))

    return ExpParams(tuple(r() for _ in range(4)), tuple(r() for _ in range(4)))


BAUTIN_A = (0, -8, 10, -20)
BAUTIN_B = (0, 35, 20, 28)


@pytest.fixture
def rng():
    return random.Random(20240611)
