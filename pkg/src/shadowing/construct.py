"""Turning pseudo-orbits into orbits of nearby systems.

Every realization returns a :class:`RealizationResult` whose system, iterated
from ``start``, reproduces the requested sequence. ``rho_bound`` is always the
actual sup-distance to the input system, recomputed from the result.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence, Union

from .core import (
    ALL,
    ContinuityClass,
    NonautonomousSystem,
    SystemMap,
    joint_window,
    rho,
    rho_seq,
)
from .pseudo import BudgetExceeded, PseudoOrbit, first_violation, step_count

DEFAULT_SEARCH_NODES = 200_000


class PreconditionError(ValueError):
    pass


class Infeasible(Exception):
    """No class-admissible map satisfies the request."""

    def __init__(self, message: str, step: int | None = None):
        super().__init__(message)
        self.step = step


@dataclass(frozen=True)
class RealizationResult:
    system: Union[SystemMap, NonautonomousSystem]
    start: int
    rho_bound: Fraction


def _as_nonaut(F) -> NonautonomousSystem:
    return NonautonomousSystem.constant(F) if isinstance(F, SystemMap) else F


def _require_pseudo_orbit(system, xs: PseudoOrbit, delta):
    if delta is None:
        raise PreconditionError("pseudo-orbit carries no delta")
    bad = first_violation(system, xs, delta)
    if bad is not None:
        raise PreconditionError(f"not a {delta}-pseudo-orbit: step {bad} is too long")


def _assemble(F: NonautonomousSystem, maps: list[SystemMap], xs: PseudoOrbit) -> NonautonomousSystem:
    """Build a sequence agreeing with ``maps`` on its first steps and with ``F`` afterwards."""
    if not xs.is_finite:
        pre, _ = joint_window((len(F.preperiod), len(F.period)), (len(xs.preperiod), len(xs.period)))
        return NonautonomousSystem(tuple(maps[:pre]), tuple(maps[pre:]))
    m, p = len(F.preperiod), len(F.period)
    head = max(m, len(maps))
    full = maps + [F[i] for i in range(len(maps), head)]
    shift = (head - m) % p
    return NonautonomousSystem(tuple(full), F.period[shift:] + F.period[:shift])


def realize_nonautonomous(F, xs: PseudoOrbit) -> RealizationResult:
    """Redefine each ``f_i`` at the single point ``x_i`` so that ``g_i(x_i) = x_{i+1}``."""
    F = _as_nonaut(F)
    _require_pseudo_orbit(F, xs, xs.delta)
    maps = [F[i].replace({xs[i]: xs[i + 1]}) for i in range(step_count(F, xs))]
    G = _assemble(F, maps, xs)
    return RealizationResult(G, xs[0], rho_seq(F, G))


def _unrolled(xs) -> list[int]:
    if isinstance(xs, PseudoOrbit):
        if xs.is_finite:
            return list(xs.preperiod)
        return xs.prefix(len(xs.preperiod) + len(xs.period) + 1)
    return list(xs)


def check_consistency(xs) -> tuple[int, int] | None:
    """First pair ``(i, j)``, ``i < j``, with ``x_i = x_j`` but ``x_{i+1} != x_{j+1}``."""
    seq = _unrolled(xs)
    for i in range(len(seq) - 1):
        for j in range(i + 1, len(seq) - 1):
            if seq[i] == seq[j] and seq[i + 1] != seq[j + 1]:
                return i, j
    return None


def commitments(xs) -> dict[int, int]:
    """Point -> successor map induced by a consistent sequence."""
    seq = _unrolled(xs)
    return {seq[i]: seq[i + 1] for i in range(len(seq) - 1)}


def realize_autonomous(f: SystemMap, xs: PseudoOrbit) -> RealizationResult:
    """Single map ``g`` with ``g(x_i) = x_{i+1}`` and ``g = f`` off the sequence."""
    bad = check_consistency(xs)
    if bad is not None:
        raise PreconditionError(f"inconsistent sequence: positions {bad} share a point but not a successor")
    _require_pseudo_orbit(f, xs, xs.delta)
    g = f.replace(commitments(xs))
    return RealizationResult(g, xs[0], rho(f, g))


def compress_loops(ys: Sequence[int], f: SystemMap, gamma) -> list[int]:
    """Cut repeated points out of a closed gamma-pseudo-cycle until it is simple.

    ``ys`` is read cyclically: its last point must step to ``ys[0]``. At each
    round the earliest repeat ``ys[n] == ys[n + t]`` (smallest ``n``, then
    smallest ``t``) is removed by dropping ``ys[n+1 .. n+t]``.
    """
    ys = list(ys)
    if not ys:
        raise PreconditionError("empty cycle")
    _check_cycle(f, ys, gamma)
    while True:
        cut = _earliest_repeat(ys)
        if cut is None:
            break
        n, t = cut
        ys = ys[: n + 1] + ys[n + t + 1:]
    _check_cycle(f, ys, gamma)
    return ys


def _earliest_repeat(ys):
    N = len(ys)
    for n in range(N - 1):
        for t in range(1, N - n):
            if ys[n] == ys[n + t]:
                return n, t
    return None


def _check_cycle(f, ys, gamma):
    d = f.space.dist
    N = len(ys)
    for i in range(N):
        if not d[f(ys[i])][ys[(i + 1) % N]] < gamma:
            raise PreconditionError(f"cyclic step {i} of the loop is not within {gamma}")


@dataclass(frozen=True)
class InjectiveRepair:
    ys: tuple[int, ...]
    exhausted_at: int | None
    displacement: Fraction  # sup d(x_i, y_i)
    gamma: Fraction  # sup d(f(y_i), y_{i+1}) actually achieved
    gamma_estimate: Fraction  # sup of the three-term bound, term by term

    @property
    def ok(self) -> bool:
        return self.exhausted_at is None


def default_pool(space, beta) -> dict[int, list[int]]:
    """Candidates for each point: its open beta-ball, nearest first."""
    return {
        x: sorted((y for y in range(space.n) if space.d(x, y) < beta), key=lambda y: (space.d(x, y), y))
        for x in range(space.n)
    }


def chain_terms(f: SystemMap, xs: Sequence[int], ys: Sequence[int], i: int) -> tuple[Fraction, Fraction, Fraction]:
    d = f.space.dist
    return d[f(ys[i])][f(xs[i])], d[f(xs[i])][xs[i + 1]], d[xs[i + 1]][ys[i + 1]]


def perturb_to_injective(f: SystemMap, xs: Sequence[int], beta,
                         fresh_pool: Mapping[int, Sequence[int]] | None = None) -> InjectiveRepair:
    """Replace repeated points of ``xs`` by unused points within ``beta`` of them.

    A point is kept when it has not been used yet; otherwise the first unused
    candidate from ``fresh_pool[x]`` is taken. If there is none the repair
    stops and ``exhausted_at`` names the position that could not be filled.
    """
    xs = list(xs)
    if not xs:
        raise PreconditionError("empty sequence")
    space = f.space
    pool = default_pool(space, beta) if fresh_pool is None else fresh_pool
    ys = [xs[0]]
    used = {xs[0]}
    exhausted = None
    for n in range(1, len(xs)):
        x = xs[n]
        if x not in used:
            y = x
        else:
            y = next((c for c in pool.get(x, ()) if c not in used and space.d(x, c) < beta), None)
            if y is None:
                exhausted = n
                break
        ys.append(y)
        used.add(y)
    d = space.dist
    k = len(ys)
    displacement = max(d[xs[i]][ys[i]] for i in range(k))
    gamma = max((d[f(ys[i])][ys[i + 1]] for i in range(k - 1)), default=Fraction(0))
    estimate = max((sum(chain_terms(f, xs, ys, i)) for i in range(k - 1)), default=Fraction(0))
    return InjectiveRepair(tuple(ys), exhausted, displacement, gamma, estimate)


def telescoping_bound_check(f: SystemMap, xs: Sequence[int], M: int, P: int, gamma_p, bound) -> int | None:
    """First ``i`` in ``0..P`` with ``d(x_{M+i}, f^i(x_M)) >= bound``, or ``None``.

    Only the conclusion is evaluated, directly from the distances. ``xs`` must
    be a ``gamma_p``-pseudo-orbit long enough to contain ``x_{M+P}``.
    """
    if M + P >= len(xs):
        raise PreconditionError("sequence too short for the requested window")
    bad = first_violation(f, list(xs), gamma_p)
    if bad is not None:
        raise PreconditionError(f"not a {gamma_p}-pseudo-orbit at step {bad}")
    d = f.space.dist
    y = xs[M]
    for i in range(P + 1):
        if not d[xs[M + i]][y] < bound:
            return i
        y = f(y)
    return None


def telescoping_gamma(f: SystemMap, P: int, bound) -> Fraction:
    """Largest ``gamma_p <= bound / P`` under which ``f, ..., f^{P-1}`` move
    ``gamma_p``-close points less than ``bound / P`` apart."""
    share = Fraction(bound) / P
    space = f.space
    gamma = share
    for a in range(space.n):
        for b in range(a + 1, space.n):
            dab = space.d(a, b)
            if dab >= gamma:
                continue
            x, y = a, b
            for _ in range(P):
                if not space.d(x, y) < share:
                    gamma = dab
                    break
                x, y = f(x), f(y)
    return gamma


@dataclass(frozen=True)
class PerturbationRequest:
    base: SystemMap
    support: frozenset[int]
    target: Mapping[int, int]
    cls: ContinuityClass = ALL
    epsilon: Fraction = Fraction(1)

    def __post_init__(self):
        object.__setattr__(self, "support", frozenset(self.support))
        object.__setattr__(self, "target", dict(self.target))
        if set(self.target) != set(self.support):
            raise ValueError("target must be defined exactly on the support")


def perturb_finite_support(req: PerturbationRequest, max_nodes: int = DEFAULT_SEARCH_NODES) -> SystemMap:
    """Class-admissible ``g`` with ``g = target`` on the support and ``rho(f, g) < epsilon``."""
    f, eps = req.base, req.epsilon
    d = f.space.dist
    for p, q in sorted(req.target.items()):
        if not d[f(p)][q] < eps:
            raise PreconditionError(f"target moves point {p} by {d[f(p)][q]}, not below {eps}")
    if req.cls.is_all:
        return f.replace(req.target)
    return _lipschitz_completion(f, req.target, req.cls.lipschitz, eps, max_nodes)


def _lipschitz_completion(f: SystemMap, fixed: Mapping[int, int], L, eps, max_nodes: int) -> SystemMap:
    """Backtracking search with forward checking over the unconstrained points."""
    space = f.space
    n, d = space.n, space.dist
    assign = dict(fixed)
    items = sorted(assign.items())
    for i, (a, ga) in enumerate(items):
        for b, gb in items[i + 1:]:
            if d[ga][gb] > L * d[a][b]:
                raise Infeasible(f"targets at {a} and {b} already break the Lipschitz bound")

    def compatible(y, w, a, ga):
        return d[w][ga] <= L * d[y][a]

    domains = {}
    for y in range(n):
        if y in assign:
            continue
        cand = [w for w in range(n) if d[f(y)][w] < eps and all(compatible(y, w, a, ga) for a, ga in items)]
        cand.sort(key=lambda w: (d[f(y)][w], w))
        if not cand:
            raise Infeasible(f"no admissible image for point {y}")
        domains[y] = cand

    nodes = 0

    def search(domains):
        nonlocal nodes
        if not domains:
            return {}
        nodes += 1
        if nodes > max_nodes:
            raise BudgetExceeded(f"Lipschitz completion search exceeded {max_nodes} nodes")
        y = min(domains, key=lambda v: (len(domains[v]), v))
        rest = {v: dom for v, dom in domains.items() if v != y}
        for w in domains[y]:
            pruned = {}
            for v, dom in rest.items():
                keep = [u for u in dom if compatible(v, u, y, w)]
                if not keep:
                    break
                pruned[v] = keep
            else:
                sub = search(pruned)
                if sub is not None:
                    sub[y] = w
                    return sub
        return None

    found = search(domains)
    if found is None:
        raise Infeasible("no Lipschitz completion within epsilon")
    assign.update(found)
    return SystemMap(space, tuple(assign[x] for x in range(n)))


def weak_perturb(f: SystemMap, x: int, y: int, cls: ContinuityClass, epsilon) -> SystemMap:
    return perturb_finite_support(PerturbationRequest(f, frozenset({x}), {x: y}, cls, epsilon))


@functools.lru_cache(maxsize=256)
def weak_perturbation_delta(f: SystemMap, cls: ContinuityClass, epsilon) -> Fraction:
    """Largest ``delta <= epsilon`` such that every pair with ``d(y, f(x)) < delta``
    admits a class-admissible ``g`` with ``g(x) = y`` and ``rho(f, g) < epsilon``."""
    if cls.is_all:
        return Fraction(epsilon)
    d = f.space.dist
    pairs = sorted(
        ((d[f(x)][y], x, y) for x in range(f.space.n) for y in range(f.space.n) if d[f(x)][y] < epsilon),
    )
    for dist, x, y in pairs:
        try:
            weak_perturb(f, x, y, cls, epsilon)
        except Infeasible:
            return dist
    return Fraction(epsilon)


def realize_by_continuous_sequence(f: SystemMap, xs: PseudoOrbit, cls: ContinuityClass, epsilon) -> RealizationResult:
    """One weak perturbation per step, each mapping ``x_i`` to ``x_{i+1}``."""
    _require_pseudo_orbit(f, xs, xs.delta)
    F = NonautonomousSystem.constant(f)
    cache: dict[tuple[int, int], SystemMap] = {}
    maps = []
    for i in range(step_count(f, xs)):
        key = (xs[i], xs[i + 1])
        if key not in cache:
            try:
                cache[key] = weak_perturb(f, key[0], key[1], cls, epsilon)
            except Infeasible as exc:
                raise Infeasible(f"step {i}: {exc}", step=i) from exc
            except PreconditionError as exc:
                raise PreconditionError(f"step {i}: {exc}") from exc
        maps.append(cache[key])
    G = _assemble(F, maps, xs)
    return RealizationResult(G, xs[0], rho_seq(F, G))


def realize_prefix_continuous(f: SystemMap, xs: PseudoOrbit, N: int, cls: ContinuityClass, delta) -> RealizationResult:
    """Class-admissible ``g`` with ``rho(f, g) < delta`` and ``g^i(x_0) = x_i`` for ``i <= N``."""
    prefix = xs.prefix(N + 1)
    bad = check_consistency(prefix)
    if bad is not None:
        raise PreconditionError(f"inconsistent prefix: positions {bad}")
    if xs.delta is not None:
        _require_pseudo_orbit(f, PseudoOrbit(tuple(prefix), (), xs.delta), xs.delta)
    target = {prefix[i]: prefix[i + 1] for i in range(N)}
    g = perturb_finite_support(PerturbationRequest(f, frozenset(target), target, cls, delta))
    return RealizationResult(g, prefix[0], rho(f, g))
