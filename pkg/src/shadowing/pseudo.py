"""Pseudo-orbits and the exact (epsilon, delta)-shadowing decision procedure.

A delta-pseudo-orbit of ``f`` is a walk in the *delta-graph*, which has an
edge ``x -> y`` whenever ``d(f(x), y) < delta``. Whether a prefix
``x_0 .. x_k`` can still be epsilon-shadowed is captured by its survivor set

    T_0 = B(x_0, eps),   T_{i+1} = f(T_i) & B(x_{i+1}, eps),

the set of current positions ``f^i(z)`` of all points ``z`` whose orbit has
stayed within ``eps`` of the prefix. The future constraints on ``z`` depend
only on ``f^i(z)``, so the pair ``(x_i, T_i)`` is a complete state and the
decision reduces to reachability of an empty survivor set in a finite graph.

Infinite pseudo-orbits need no separate treatment. If every finite prefix of
an infinite pseudo-orbit has a nonempty survivor set, then the sets
``Z_k = {z : z shadows x_0 .. x_k}`` form a decreasing chain of nonempty
subsets of a finite set, so their intersection is nonempty and any point in
it shadows the whole sequence. Conversely every finite walk extends to an
infinite one because ``x -> f(x)`` is always an edge. Hence FAILS is exactly
"some finite prefix has an empty survivor set".
"""

from __future__ import annotations

import enum
import os
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence, Union

from .core import (
    INF,
    NonautonomousSystem,
    SystemMap,
    iter_bits,
    joint_window,
)

DEFAULT_MAX_STATES = 2_000_000


class BudgetExceeded(RuntimeError):
    """A search visited more states than its configured cap."""


def max_states_default() -> int:
    return int(os.environ.get("SHADOWING_MAX_STATES", DEFAULT_MAX_STATES))


@dataclass(frozen=True)
class PseudoOrbit:
    """The sequence ``preperiod + period + period + ...``.

    An empty period denotes a finite prefix.
    """

    preperiod: tuple[int, ...]
    period: tuple[int, ...] = ()
    delta: Fraction | None = None

    def __post_init__(self):
        object.__setattr__(self, "preperiod", tuple(self.preperiod))
        object.__setattr__(self, "period", tuple(self.period))
        if not self.preperiod and not self.period:
            raise ValueError("a pseudo-orbit needs at least one point")

    @property
    def is_finite(self) -> bool:
        return not self.period

    def __getitem__(self, i: int) -> int:
        m = len(self.preperiod)
        if i < m:
            return self.preperiod[i]
        if not self.period:
            raise IndexError(i)
        return self.period[(i - m) % len(self.period)]

    def __len__(self):
        if self.period:
            raise TypeError("infinite pseudo-orbit has no length")
        return len(self.preperiod)

    def prefix(self, length: int) -> list[int]:
        return [self[i] for i in range(length)]

    def points(self) -> list[int]:
        return list(self.preperiod + self.period)


Points = Union[PseudoOrbit, Sequence[int]]
System = Union[SystemMap, NonautonomousSystem]


def _as_orbit(xs: Points) -> PseudoOrbit:
    return xs if isinstance(xs, PseudoOrbit) else PseudoOrbit(tuple(xs))


def _step_maps(f: System) -> tuple[int, int, Callable[[int], SystemMap]]:
    if isinstance(f, SystemMap):
        return 0, 1, lambda i: f
    return len(f.preperiod), len(f.period), f.__getitem__


def step_count(f: System, xs: Points) -> int:
    """Number of consecutive pairs that must be checked to cover every step of ``xs`` under ``f``."""
    xs = _as_orbit(xs)
    if xs.is_finite:
        return len(xs.preperiod) - 1
    fm, fp, _ = _step_maps(f)
    pre, per = joint_window((fm, fp), (len(xs.preperiod), len(xs.period)))
    return pre + per


def first_violation(f: System, xs: Points, delta) -> int | None:
    """Index ``i`` of the first step with ``d(f_i(x_i), x_{i+1}) >= delta``, or ``None``."""
    xs = _as_orbit(xs)
    _, _, maps = _step_maps(f)
    d = maps(0).space.dist
    for i in range(step_count(f, xs)):
        if not d[maps(i)(xs[i])][xs[i + 1]] < delta:
            return i
    return None


def is_pseudo_orbit(f: System, xs: Points, delta) -> bool:
    return first_violation(f, xs, delta) is None


@dataclass(frozen=True)
class DeltaGraph:
    f: SystemMap
    delta: Fraction
    succ: tuple[tuple[int, ...], ...]
    succ_mask: tuple[int, ...]

    def has_edge(self, x: int, y: int) -> bool:
        return bool(self.succ_mask[x] >> y & 1)

    def edges(self) -> set[tuple[int, int]]:
        return {(x, y) for x, ys in enumerate(self.succ) for y in ys}


def delta_graph(f: SystemMap, delta) -> DeltaGraph:
    if not delta > 0:
        raise ValueError("delta must be positive")
    space = f.space
    succ = []
    masks = []
    for x in range(space.n):
        mask = space.ball(f.image[x], delta)
        masks.append(mask)
        succ.append(tuple(iter_bits(mask)))
    return DeltaGraph(f, delta, tuple(succ), tuple(masks))


def _survivor_masks(f: SystemMap, xs: Sequence[int], epsilon) -> list[int]:
    space = f.space
    t = space.ball(xs[0], epsilon)
    out = [t]
    for y in xs[1:]:
        t = f.image_of(t) & space.ball(y, epsilon)
        out.append(t)
    return out


def shadow_survivors(f: SystemMap, xs: Sequence[int], epsilon) -> list[frozenset[int]]:
    """Survivor sets ``T_0, ..., T_k`` for the prefix ``xs``."""
    if not len(xs):
        raise ValueError("need a nonempty prefix")
    return [frozenset(iter_bits(t)) for t in _survivor_masks(f, list(xs), epsilon)]


class Outcome(enum.Enum):
    HOLDS = "HOLDS"
    FAILS = "FAILS"


@dataclass(frozen=True)
class ShadowingVerdict:
    outcome: Outcome
    epsilon: Fraction
    delta: Fraction
    witness: PseudoOrbit | None = None
    survivor_trace: tuple[frozenset[int], ...] = ()
    states: int = field(default=0, compare=False)

    @property
    def holds(self) -> bool:
        return self.outcome is Outcome.HOLDS

    def __bool__(self):
        return self.holds


def _trace_back(parents: dict, state) -> list[int]:
    path = []
    while state is not None:
        path.append(state[0])
        state = parents[state]
    path.reverse()
    return path


def decide_shadowing(f: SystemMap, epsilon, delta, max_states: int | None = None) -> ShadowingVerdict:
    """Decide whether every delta-pseudo-orbit of ``f`` is epsilon-shadowed.

    Breadth-first search over states ``(x, T)``; a FAILS verdict carries a
    shortest (and, among those, lexicographically smallest) failing prefix.

    A state ``(x, T)`` is skipped when some ``(x, S)`` with ``S`` a subset of
    ``T`` was already reached: survivors only shrink along a walk, so anything
    reachable from ``T`` is matched by a subset reachable from ``S`` no later.
    Each point therefore keeps an antichain of minimal survivor masks.
    """
    if not (epsilon > 0 and delta > 0):
        raise ValueError("epsilon and delta must be positive")
    cap = max_states_default() if max_states is None else max_states
    space = f.space
    graph = delta_graph(f, delta)
    balls = [space.ball(y, epsilon) for y in range(space.n)]

    parents: dict[tuple[int, int], tuple[int, int] | None] = {}
    minimal: list[list[int]] = [[] for _ in range(space.n)]
    queue = deque()
    for x in range(space.n):
        state = (x, balls[x])
        parents[state] = None
        minimal[x].append(balls[x])
        queue.append(state)

    def fails(state):
        prefix = _trace_back(parents, state)
        trace = tuple(frozenset(iter_bits(t)) for t in _survivor_masks(f, prefix, epsilon))
        return ShadowingVerdict(Outcome.FAILS, epsilon, delta, PseudoOrbit(tuple(prefix), (), delta), trace, len(parents))

    while queue:
        state = queue.popleft()
        x, t = state
        image = f.image_of(t)
        for y in graph.succ[x]:
            nt = image & balls[y]
            nxt = (y, nt)
            if nxt in parents:
                continue
            chain = minimal[y]
            if any(m & ~nt == 0 for m in chain):
                continue
            parents[nxt] = state
            if nt == 0:
                return fails(nxt)
            if len(parents) > cap:
                raise BudgetExceeded(f"more than {cap} survivor states")
            chain[:] = [m for m in chain if nt & ~m != 0]
            chain.append(nt)
            queue.append(nxt)
    return ShadowingVerdict(Outcome.HOLDS, epsilon, delta, states=len(parents))


def brute_force_shadowing(f: SystemMap, epsilon, delta, horizon: int, prune: bool = True,
                          max_paths: int = 5_000_000) -> ShadowingVerdict:
    """Reference oracle: enumerate delta-pseudo-orbit prefixes level by level.

    Each prefix is tracked by the set of starting points ``z`` that still
    shadow it, together with ``f^k(z)`` for each of them; shadowing is checked
    pointwise as ``d(x_k, f^k(z)) < epsilon``. With ``prune`` on, prefixes
    ending at the same point with the same tracked positions are merged
    (their continuations are indistinguishable); with it off every path is
    kept. Prefixes longer than ``horizon + 1`` points are not examined.
    """
    space = f.space
    d = space.dist
    img = f.image
    n = space.n

    def ok(x, tracked):
        return tuple((z, p) for z, p in tracked if d[x][p] < epsilon)

    level = []
    for x in range(n):
        level.append(((x,), ok(x, tuple((z, z) for z in range(n)))))
    seen = set()
    explored = 0
    for _ in range(horizon + 1):
        nxt_level = []
        for path, tracked in level:
            if not tracked:
                trace = tuple(frozenset(p for _, p in ok_sub) for ok_sub in _replay(f, path, epsilon))
                return ShadowingVerdict(Outcome.FAILS, epsilon, delta, PseudoOrbit(path, (), delta), trace, explored)
            if prune:
                key = (path[-1], tracked)
                if key in seen:
                    continue
                seen.add(key)
            explored += 1
            if explored > max_paths:
                raise BudgetExceeded(f"more than {max_paths} prefixes")
            if len(path) > horizon:
                continue
            x = path[-1]
            moved = tuple((z, img[p]) for z, p in tracked)
            for y in range(n):
                if d[img[x]][y] < delta:
                    nxt_level.append((path + (y,), ok(y, moved)))
        if not nxt_level:
            break
        level = nxt_level
    return ShadowingVerdict(Outcome.HOLDS, epsilon, delta, states=explored)


def _replay(f: SystemMap, path, epsilon):
    d = f.space.dist
    tracked = [(z, z) for z in range(f.space.n)]
    out = []
    for k, x in enumerate(path):
        if k:
            tracked = [(z, f.image[p]) for z, p in tracked]
        tracked = [(z, p) for z, p in tracked if d[x][p] < epsilon]
        out.append(tracked)
    return out


def delta_probes(f: SystemMap) -> list:
    """Representative deltas, one per distinct delta-graph, in increasing order.

    The graph only changes when delta crosses a value ``d(f(x), y)``. At
    ``delta = c`` the graph is the one shared by all deltas in the half-open
    interval just below and including ``c``. The last probe exceeds every such
    value, giving the complete graph.
    """
    d = f.space.dist
    values = sorted({d[fx][y] for fx in set(f.image) for y in range(f.space.n)} - {0})
    top = (values[-1] if values else Fraction(0)) + 1
    return values + [top]


def epsilon_probes(space) -> list:
    """Representative epsilons, one per distinct family of open balls."""
    values = space.distances()
    return values + [(values[-1] if values else Fraction(0)) + 1]


def threshold(pred: Callable[[object], bool], probes: Sequence) -> object:
    """Largest probe where a monotone (True-then-False) predicate holds, by bisection.

    Returns ``INF`` when it holds at the last probe and ``0`` when it fails at
    the first.
    """
    if pred(probes[-1]):
        return INF
    lo, hi = -1, len(probes) - 1  # pred(probes[hi]) is False
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if pred(probes[mid]):
            lo = mid
        else:
            hi = mid
    return probes[lo] if lo >= 0 else Fraction(0)


def shadowing_modulus(f: SystemMap, epsilon, max_states: int | None = None):
    """Largest threshold ``t`` such that shadowing holds at ``(epsilon, delta)`` for all ``delta <= t``."""
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    return threshold(lambda dl: decide_shadowing(f, epsilon, dl, max_states).holds, delta_probes(f))


def witness_document(verdict: ShadowingVerdict, labels: Sequence[str]) -> dict:
    from .core import format_fraction

    doc = {
        "epsilon": format_fraction(verdict.epsilon),
        "delta": format_fraction(verdict.delta),
        "outcome": verdict.outcome.value,
    }
    if verdict.witness is not None:
        doc["prefix"] = [labels[i] for i in verdict.witness.preperiod]
        doc["survivor_trace"] = [[labels[i] for i in sorted(t)] for t in verdict.survivor_trace]
    return doc
