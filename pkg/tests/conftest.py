from fractions import Fraction

import pytest
from hypothesis import settings, strategies as st

from shadowing.core import FiniteMetricSpace, SystemMap
from shadowing.zoo import circle_rotation

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


def closure(n, weights, scale):
    w = [[0] * n for _ in range(n)]
    it = iter(weights)
    for i in range(n):
        for j in range(i + 1, n):
            w[i][j] = w[j][i] = next(it)
    for k in range(n):
        for i in range(n):
            for j in range(n):
                w[i][j] = min(w[i][j], w[i][k] + w[k][j])
    return FiniteMetricSpace.from_matrix([[Fraction(v, scale) for v in row] for row in w])


@st.composite
def spaces(draw, min_n=1, max_n=5, max_weight=6):
    n = draw(st.integers(min_n, max_n))
    weights = draw(st.lists(st.integers(1, max_weight), min_size=n * (n - 1) // 2, max_size=n * (n - 1) // 2))
    return closure(n, weights, max_weight)


@st.composite
def systems(draw, min_n=1, max_n=5, max_weight=6):
    space = draw(spaces(min_n, max_n, max_weight))
    image = draw(st.lists(st.integers(0, space.n - 1), min_size=space.n, max_size=space.n))
    return SystemMap(space, tuple(image))


@pytest.fixture
def rotation4():
    return circle_rotation(4, 1)
