"""Named families of finite systems used as fixtures and experiment corpora.

Interval maps are sampled on the grid ``k / (m - 1)`` and each image is
rounded to the nearest grid point, ties going to the smaller index.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction

from .core import FiniteMetricSpace, SystemMap, as_fraction, format_fraction

FAMILIES = {
    "tent": "tent map min(2x, 2-2x) on an m-point grid of [0,1]; params m",
    "logistic": "logistic map lam*x*(1-x) on an m-point grid; params m, lam (0..4)",
    "affine": "clipped affine map a*x+b on an m-point grid; params m, a, b",
    "circle_rotation": "rotation by k steps of m equally spaced points on the unit circle; params m, k",
    "periodic_shift": "shift on the periodic points of period <= p over s symbols; params s, p",
    "random": "random metric (shortest-path closure of random weights) and random map; params n, seed",
}


@dataclass(frozen=True)
class ZooSpec:
    family: str
    params: dict = field(default_factory=dict)

    def __str__(self):
        inner = ",".join(f"{k}={v}" for k, v in self.params.items())
        return f"{self.family}:{inner}" if inner else self.family

    @classmethod
    def parse(cls, text: str) -> ZooSpec:
        """``"tent:m=64"``, ``"circle_rotation:m=4,k=1"``, ``"random:n=5,seed=3"``."""
        family, _, rest = text.strip().partition(":")
        params = {}
        for item in filter(None, (p.strip() for p in rest.split(","))):
            key, eq, value = item.partition("=")
            if not eq:
                raise ValueError(f"parameter {item!r} is not key=value")
            params[key.strip()] = value.strip()
        return cls(family, params)


def grid_index(value: Fraction, m: int) -> int:
    """Nearest index of ``value`` on the grid ``k/(m-1)``; ties go down; clipped to the grid."""
    scaled = Fraction(value) * (m - 1)
    k = math.ceil(scaled - Fraction(1, 2))
    return min(max(k, 0), m - 1)


def interval_space(m: int) -> FiniteMetricSpace:
    if m < 2:
        raise ValueError("grid needs at least two points")
    pts = [Fraction(k, m - 1) for k in range(m)]
    return FiniteMetricSpace(tuple(format_fraction(p) for p in pts), tuple(tuple(abs(a - b) for b in pts) for a in pts))


def interval_map(fn, m: int) -> SystemMap:
    space = interval_space(m)
    return SystemMap(space, tuple(grid_index(fn(Fraction(k, m - 1)), m) for k in range(m)))


def tent(m: int) -> SystemMap:
    return interval_map(lambda x: min(2 * x, 2 - 2 * x), m)


def logistic(m: int, lam=4) -> SystemMap:
    lam = as_fraction(lam)
    if not 0 <= lam <= 4:
        raise ValueError("logistic parameter must lie in [0, 4]")
    return interval_map(lambda x: lam * x * (1 - x), m)


def affine(m: int, a, b) -> SystemMap:
    a, b = as_fraction(a), as_fraction(b)
    return interval_map(lambda x: min(max(a * x + b, Fraction(0)), Fraction(1)), m)


def circle_space(m: int) -> FiniteMetricSpace:
    if m < 1:
        raise ValueError("need at least one point")
    dist = tuple(tuple(Fraction(min(abs(i - j), m - abs(i - j)), m) for j in range(m)) for i in range(m))
    return FiniteMetricSpace(tuple(str(i) for i in range(m)), dist)


def circle_rotation(m: int, k: int = 1) -> SystemMap:
    return SystemMap(circle_space(m), tuple((i + k) % m for i in range(m)))


def periodic_shift(s: int, p: int) -> SystemMap:
    """The one-sided shift restricted to sequences of period at most ``p``.

    Points are labelled by their shortest repeating word; the distance of two
    sequences is ``2**-k`` with ``k`` the first index where they differ.
    """
    if s < 1 or p < 1:
        raise ValueError("need s >= 1 and p >= 1")
    L = math.lcm(*range(1, p + 1))
    words = {}
    for q in range(1, p + 1):
        for w in itertools.product(range(s), repeat=q):
            key = (w * (L // q))
            if key not in words:
                words[key] = w
    keys = sorted(words, key=lambda k: (len(words[k]), words[k]))
    index = {k: i for i, k in enumerate(keys)}

    def dist(u, v):
        for i, (a, b) in enumerate(zip(u, v)):
            if a != b:
                return Fraction(1, 2 ** i)
        return Fraction(0)

    labels = tuple("".join(map(str, words[k])) for k in keys)
    matrix = tuple(tuple(dist(u, v) for v in keys) for u in keys)
    image = tuple(index[k[1:] + k[:1]] for k in keys)
    return SystemMap(FiniteMetricSpace(labels, matrix), image)


def random_space(n: int, rng: random.Random, max_weight: int = 6) -> FiniteMetricSpace:
    """Shortest-path closure of random integer edge weights, scaled into ``(0, 1]``."""
    w = [[0] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            w[i][j] = w[j][i] = rng.randint(1, max_weight)
    for k in range(n):
        for i in range(n):
            for j in range(n):
                if w[i][k] + w[k][j] < w[i][j]:
                    w[i][j] = w[i][k] + w[k][j]
    return FiniteMetricSpace(tuple(str(i) for i in range(n)),
                             tuple(tuple(Fraction(v, max_weight) for v in row) for row in w))


def random_system(n: int, seed: int) -> SystemMap:
    rng = random.Random(seed)
    space = random_space(n, rng)
    return SystemMap(space, tuple(rng.randrange(n) for _ in range(n)))


def build_zoo(spec: ZooSpec | str) -> SystemMap:
    if isinstance(spec, str):
        spec = ZooSpec.parse(spec)
    p = spec.params

    def nat(key, default=None):
        if key not in p:
            if default is None:
                raise ValueError(f"{spec.family} needs parameter {key!r}")
            return default
        value = int(p[key])
        if value < 0:
            raise ValueError(f"parameter {key} must be a natural number")
        return value

    def rat(key, default=None):
        if key not in p:
            if default is None:
                raise ValueError(f"{spec.family} needs parameter {key!r}")
            return as_fraction(default)
        return as_fraction(str(p[key]))

    if spec.family == "tent":
        return tent(nat("m"))
    if spec.family == "logistic":
        return logistic(nat("m"), rat("lam", 4))
    if spec.family == "affine":
        return affine(nat("m"), rat("a"), rat("b", 0))
    if spec.family == "circle_rotation":
        return circle_rotation(nat("m"), nat("k", 1))
    if spec.family == "periodic_shift":
        return periodic_shift(nat("s"), nat("p"))
    if spec.family == "random":
        return random_system(nat("n"), nat("seed", 0))
    raise ValueError(f"unknown zoo family {spec.family!r}; known: {', '.join(FAMILIES)}")
