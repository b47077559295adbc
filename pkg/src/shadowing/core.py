"""Finite metric spaces, self-maps, and eventually periodic map sequences.

Distances are exact :class:`fractions.Fraction` values. Point sets are passed
around internally as integer bitmasks (bit ``i`` set means point ``i`` is in
the set).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Sequence, Union

RationalLike = Union[Fraction, int, str]

#: Threshold sentinel meaning "every positive value works".
INF = math.inf


def as_fraction(value: RationalLike) -> Fraction:
    """Parse an exact rational. Accepts ``Fraction``, ``int`` or ``"p/q"`` strings."""
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"expected an exact rational, got {type(value).__name__}")


def format_fraction(value) -> str:
    if value == INF:
        return "inf"
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def iter_bits(mask: int) -> Iterator[int]:
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def mask_of(points: Iterable[int]) -> int:
    mask = 0
    for p in points:
        mask |= 1 << p
    return mask


@dataclass(frozen=True)
class FiniteMetricSpace:
    labels: tuple[str, ...]
    dist: tuple[tuple[Fraction, ...], ...]
    _balls: dict = field(default_factory=dict, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        labels = tuple(str(x) for x in self.labels)
        dist = tuple(tuple(as_fraction(v) for v in row) for row in self.dist)
        n = len(labels)
        if n == 0:
            raise ValueError("a metric space needs at least one point")
        if len(set(labels)) != n:
            raise ValueError("point labels must be distinct")
        if len(dist) != n or any(len(row) != n for row in dist):
            raise ValueError(f"distance matrix must be {n}x{n}")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "dist", dist)

    @classmethod
    def from_matrix(cls, matrix: Sequence[Sequence[RationalLike]], labels=None) -> FiniteMetricSpace:
        if labels is None:
            labels = [str(i) for i in range(len(matrix))]
        return cls(tuple(labels), tuple(tuple(row) for row in matrix))

    @property
    def n(self) -> int:
        return len(self.labels)

    def d(self, i: int, j: int) -> Fraction:
        return self.dist[i][j]

    @property
    def diameter(self) -> Fraction:
        return max(max(row) for row in self.dist)

    def index(self, point: Union[int, str]) -> int:
        if isinstance(point, int) and not isinstance(point, bool):
            if not 0 <= point < self.n:
                raise IndexError(f"point index {point} outside space of size {self.n}")
            return point
        try:
            return self.labels.index(point)
        except ValueError:
            raise KeyError(f"unknown point label {point!r}") from None

    def ball(self, center: int, radius) -> int:
        """Open ball ``{y : d(center, y) < radius}`` as a bitmask."""
        key = (center, radius)
        mask = self._balls.get(key)
        if mask is None:
            row = self.dist[center]
            mask = mask_of(y for y in range(self.n) if row[y] < radius)
            self._balls[key] = mask
        return mask

    def distances(self) -> list[Fraction]:
        """Sorted distinct positive distances."""
        return sorted({v for row in self.dist for v in row if v > 0})


@dataclass(frozen=True)
class Violation:
    kind: str  # "diagonal", "positivity", "symmetry" or "triangle"
    points: tuple[int, ...]

    def __str__(self):
        return f"{self.kind} violation at {self.points}"


def validate_space(space: FiniteMetricSpace) -> Violation | None:
    """Return the first metric-axiom violation found, or ``None`` if ``space`` is a metric."""
    n, d = space.n, space.dist
    for i in range(n):
        if d[i][i] != 0:
            return Violation("diagonal", (i,))
    for i in range(n):
        for j in range(n):
            if i != j and d[i][j] <= 0:
                return Violation("positivity", (i, j))
    for i in range(n):
        for j in range(i + 1, n):
            if d[i][j] != d[j][i]:
                return Violation("symmetry", (i, j))
    for i in range(n):
        for j in range(n):
            for k in range(n):
                if d[i][k] > d[i][j] + d[j][k]:
                    return Violation("triangle", (i, j, k))
    return None


@dataclass(frozen=True)
class SystemMap:
    space: FiniteMetricSpace
    image: tuple[int, ...]
    _images: dict = field(default_factory=dict, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        image = tuple(int(v) for v in self.image)
        if len(image) != self.space.n:
            raise ValueError(f"map has {len(image)} images for a space of {self.space.n} points")
        for x, y in enumerate(image):
            if not 0 <= y < self.space.n:
                raise ValueError(f"image of point {x} is {y}, outside the space")
        object.__setattr__(self, "image", image)

    @classmethod
    def identity(cls, space: FiniteMetricSpace) -> SystemMap:
        return cls(space, tuple(range(space.n)))

    def __call__(self, x: int) -> int:
        return self.image[x]

    def __len__(self):
        return len(self.image)

    def image_of(self, mask: int) -> int:
        """Image of a point set (bitmask) under the map."""
        out = self._images.get(mask)
        if out is None:
            out = 0
            for x in iter_bits(mask):
                out |= 1 << self.image[x]
            self._images[mask] = out
        return out

    def replace(self, changes: dict[int, int]) -> SystemMap:
        image = list(self.image)
        for x, y in changes.items():
            image[x] = y
        return SystemMap(self.space, tuple(image))

    def iterate(self, x: int, k: int) -> int:
        for _ in range(k):
            x = self.image[x]
        return x


@dataclass(frozen=True)
class NonautonomousSystem:
    """The sequence ``f_0, f_1, ...`` given by a preperiod followed by a repeating period."""

    preperiod: tuple[SystemMap, ...]
    period: tuple[SystemMap, ...]

    def __post_init__(self):
        object.__setattr__(self, "preperiod", tuple(self.preperiod))
        object.__setattr__(self, "period", tuple(self.period))
        if not self.period:
            raise ValueError("period must be nonempty")
        space = self.period[0].space
        for g in self.preperiod + self.period:
            if g.space != space:
                raise ValueError("all maps of a nonautonomous system must share one space")

    @classmethod
    def constant(cls, f: SystemMap) -> NonautonomousSystem:
        return cls((), (f,))

    @property
    def space(self) -> FiniteMetricSpace:
        return self.period[0].space

    def __getitem__(self, i: int) -> SystemMap:
        m = len(self.preperiod)
        if i < m:
            return self.preperiod[i]
        return self.period[(i - m) % len(self.period)]

    def phase(self, i: int) -> int:
        """Canonical index in ``[0, len(preperiod) + len(period))`` for time ``i``."""
        m = len(self.preperiod)
        return i if i < m else m + (i - m) % len(self.period)


@dataclass(frozen=True)
class ContinuityClass:
    """Admissible maps: every map (``lipschitz is None``) or ``L``-Lipschitz maps."""

    lipschitz: Fraction | None = None

    def __post_init__(self):
        if self.lipschitz is not None:
            value = as_fraction(self.lipschitz)
            if value < 0:
                raise ValueError("Lipschitz constant must be nonnegative")
            object.__setattr__(self, "lipschitz", value)

    @property
    def is_all(self) -> bool:
        return self.lipschitz is None

    def admits(self, g: SystemMap) -> bool:
        if self.lipschitz is None:
            return True
        d, L, n = g.space.dist, self.lipschitz, g.space.n
        img = g.image
        return all(d[img[x]][img[y]] <= L * d[x][y] for x in range(n) for y in range(x + 1, n))

    def __str__(self):
        return "all" if self.lipschitz is None else f"lip:{format_fraction(self.lipschitz)}"

    @classmethod
    def parse(cls, text) -> ContinuityClass:
        """Parse ``"all"``/``"ALL"``, ``"lip:L"`` or a document value ``{"lipschitz": "p/q"}``."""
        if isinstance(text, dict):
            return cls(as_fraction(text["lipschitz"]))
        text = str(text).strip()
        if text.lower() == "all":
            return cls()
        if text.lower().startswith("lip:"):
            return cls(as_fraction(text[4:]))
        raise ValueError(f"unknown continuity class {text!r}")


ALL = ContinuityClass()


def rho(f: SystemMap, g: SystemMap) -> Fraction:
    """Supremum distance between two maps of the same space."""
    if f.space != g.space:
        raise ValueError("maps live on different spaces")
    d = f.space.dist
    return max(d[a][b] for a, b in zip(f.image, g.image))


def joint_window(*periodic: tuple[int, int]) -> tuple[int, int]:
    """Aligned (preperiod, period) of several eventually periodic sequences."""
    pre = max(m for m, _ in periodic)
    per = 1
    for _, p in periodic:
        per = math.lcm(per, p)
    return pre, per


def rho_seq(F: NonautonomousSystem, G: NonautonomousSystem) -> Fraction:
    if F.space != G.space:
        raise ValueError("systems live on different spaces")
    pre, per = joint_window((len(F.preperiod), len(F.period)), (len(G.preperiod), len(G.period)))
    return max(rho(F[i], G[i]) for i in range(pre + per))


def orbit(f: SystemMap, x: int, horizon: int) -> list[int]:
    """``[x, f(x), ..., f^horizon(x)]``."""
    out = [x]
    for _ in range(horizon):
        x = f.image[x]
        out.append(x)
    return out


def orbit_nonaut(F: NonautonomousSystem, x: int, horizon: int) -> list[int]:
    out = [x]
    for i in range(horizon):
        x = F[i](x)
        out.append(x)
    return out


def orbit_lasso(f: SystemMap, x: int) -> tuple[list[int], list[int]]:
    """Split the orbit of ``x`` into its transient part and its cycle."""
    seen: dict[int, int] = {}
    seq = []
    while x not in seen:
        seen[x] = len(seq)
        seq.append(x)
        x = f.image[x]
    k = seen[x]
    return seq[:k], seq[k:]
