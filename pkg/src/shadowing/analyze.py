"""Checkers for the neighbourhood characterisations of shadowing.

Each checker decides one predicate at a fixed ``(epsilon, delta)``:

``structural_check``
    every orbit of every admissible ``g`` with ``rho(f, g) < delta`` is
    epsilon-shadowed by an ``f``-orbit (maps enumerated explicitly when the
    space is small, otherwise via their orbits).
``structural_check_nonaut``
    the same for map sequences; such orbits are exactly the pseudo-orbits, so
    this is a time-indexed survivor search.
``fgpotp_check`` / ``cgpotp_check``
    every consistent pseudo-orbit (one whose repeated points always have the
    same successor), optionally restricted to those generated by an admissible
    map, is shadowed.
``usc_check``
    the orbit set of every admissible nearby ``g`` lies in the open
    epsilon-neighbourhood of the orbit set of ``f`` under the uniform metric.

On a finite space every orbit is eventually periodic, so each orbit is a
*lasso*: a simple path followed by a simple cycle in the delta-graph.
"""

from __future__ import annotations

import itertools
import math
import random
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterator, Sequence

from .core import (
    ALL,
    ContinuityClass,
    NonautonomousSystem,
    SystemMap,
    format_fraction,
    iter_bits,
    orbit_lasso,
)
from .construct import Infeasible, PerturbationRequest, commitments, perturb_finite_support
from .pseudo import (
    BudgetExceeded,
    PseudoOrbit,
    decide_shadowing,
    delta_graph,
    delta_probes,
    max_states_default,
    threshold,
)

EXHAUSTIVE_MAX_POINTS = 5
USC_MAX_MAPS = 20_000


@dataclass(frozen=True)
class Check:
    holds: bool
    witness: Any = None
    mode: str = ""
    examined: int = field(default=0, compare=False)

    def __bool__(self):
        return self.holds


@dataclass(frozen=True)
class FunctionalPseudoOrbit:
    orbit: PseudoOrbit
    commitment: dict

    @classmethod
    def from_lasso(cls, pre, period, delta) -> FunctionalPseudoOrbit:
        po = PseudoOrbit(tuple(pre), tuple(period), delta)
        return cls(po, commitments(po))


def lasso_shadowed(f: SystemMap, pre: Sequence[int], period: Sequence[int], epsilon) -> bool:
    """Is the sequence ``pre + period + period + ...`` epsilon-shadowed by an ``f``-orbit?"""
    space = f.space
    seq = list(pre) + list(period)
    t = space.ball(seq[0], epsilon)
    for y in seq[1:]:
        t = f.image_of(t) & space.ball(y, epsilon)
        if not t:
            return False
    return _cycle_survives(f, t, period, epsilon)


def _cycle_survives(f, t, period, epsilon) -> bool:
    # t: survivors at the last point of one pass through the period
    space = f.space
    seen = set()
    while t not in seen:
        seen.add(t)
        for y in period:
            t = f.image_of(t) & space.ball(y, epsilon)
            if not t:
                return False
    return True


def iter_lassos(graph, max_lassos: int | None = None) -> Iterator[tuple[tuple[int, ...], tuple[int, ...]]]:
    """Every lasso of the graph, shortest first, then lexicographically."""
    n = len(graph.succ)
    count = 0
    for k in range(1, n + 1):
        stack = [(x,) for x in reversed(range(n))]
        while stack:
            path = stack.pop()
            if len(path) < k:
                stack.extend(path + (y,) for y in reversed(graph.succ[path[-1]]) if y not in path)
                continue
            last = graph.succ_mask[path[-1]]
            for j, p in enumerate(path):
                if last >> p & 1:
                    count += 1
                    if max_lassos is not None and count > max_lassos:
                        raise BudgetExceeded(f"more than {max_lassos} lassos")
                    yield path[:j], path[j:]


def _maps_near(graph, f: SystemMap) -> Iterator[SystemMap]:
    """Maps inside the delta-graph, ordered by how many points differ from ``f``."""
    n = len(graph.succ)
    alternatives = [[y for y in graph.succ[x] if y != f(x)] for x in range(n)]
    movable = [x for x in range(n) if alternatives[x]]
    for k in range(len(movable) + 1):
        for points in itertools.combinations(movable, k):
            for images in itertools.product(*(alternatives[x] for x in points)):
                yield f.replace(dict(zip(points, images)))


def _map_count(graph) -> int:
    return math.prod(len(s) for s in graph.succ)


def _lasso_budget() -> int:
    return max_states_default()


def structural_check(f: SystemMap, epsilon, delta, cls: ContinuityClass = ALL,
                     exhaustive_limit: int = EXHAUSTIVE_MAX_POINTS) -> Check:
    """Are all orbits of admissible maps within ``delta`` of ``f`` epsilon-shadowed?

    The witness of a failure is ``(g, x)``: a nearby map and a point whose
    ``g``-orbit no ``f``-orbit shadows.
    """
    _check_positive(epsilon, delta)
    graph = delta_graph(f, delta)
    if f.space.n > exhaustive_limit:
        res = _consistent_search(f, epsilon, delta, cls)
        if res.holds:
            return Check(True, mode="lassos", examined=res.examined)
        fpo, g = res.witness
        return Check(False, (g, fpo.orbit[0]), "lassos", res.examined)
    verdicts: dict = {}
    examined = 0
    for g in _maps_near(graph, f):
        if not cls.admits(g):
            continue
        examined += 1
        for x in range(f.space.n):
            key = orbit_lasso(g, x)
            key = (tuple(key[0]), tuple(key[1]))
            ok = verdicts.get(key)
            if ok is None:
                ok = verdicts[key] = lasso_shadowed(f, *key, epsilon)
            if not ok:
                return Check(False, (g, x), "maps", examined)
    return Check(True, mode="maps", examined=examined)


def _consistent_search(f, epsilon, delta, cls) -> Check:
    graph = delta_graph(f, delta)
    examined = 0
    for pre, period in iter_lassos(graph, _lasso_budget()):
        examined += 1
        if lasso_shadowed(f, pre, period, epsilon):
            continue
        fpo = FunctionalPseudoOrbit.from_lasso(pre, period, delta)
        if cls.is_all:
            return Check(False, (fpo, f.replace(fpo.commitment)), "lassos", examined)
        req = PerturbationRequest(f, frozenset(fpo.commitment), fpo.commitment, cls, delta)
        try:
            g = perturb_finite_support(req)
        except Infeasible:
            continue
        return Check(False, (fpo, g), "lassos", examined)
    return Check(True, mode="lassos", examined=examined)


def fgpotp_check(f: SystemMap, epsilon, delta) -> Check:
    """Is every consistent delta-pseudo-orbit epsilon-shadowed? Witness: a :class:`FunctionalPseudoOrbit`."""
    _check_positive(epsilon, delta)
    res = _consistent_search(f, epsilon, delta, ALL)
    return Check(res.holds, None if res.holds else res.witness[0], res.mode, res.examined)


def cgpotp_check(f: SystemMap, epsilon, delta, cls: ContinuityClass = ALL) -> Check:
    """As :func:`fgpotp_check`, counting only pseudo-orbits that some admissible
    ``g`` with ``rho(f, g) < delta`` generates. Witness: ``(FunctionalPseudoOrbit, g)``."""
    _check_positive(epsilon, delta)
    return _consistent_search(f, epsilon, delta, cls)


def structural_check_nonaut(F: NonautonomousSystem, epsilon, delta, max_states: int | None = None) -> Check:
    """Are all orbits of sequences ``<g_i>`` with ``rho(<f_i>, <g_i>) < delta`` epsilon-shadowed?

    Such orbits are exactly the delta-pseudo-orbits of ``<f_i>``, so this
    searches states ``(phase, x, T)`` where ``T`` holds the current positions
    ``f_0^i(z)`` of the still-shadowing points. Witness: the shortest failing
    prefix.
    """
    _check_positive(epsilon, delta)
    if isinstance(F, SystemMap):
        F = NonautonomousSystem.constant(F)
    cap = max_states_default() if max_states is None else max_states
    space = F.space
    n, d = space.n, space.dist
    m, p = len(F.preperiod), len(F.period)
    step = [F[i] for i in range(m + p)]

    def advance(phase):
        return phase + 1 if phase + 1 < m + p else m

    def image(phase, t):
        g = step[phase].image
        out = 0
        for z in iter_bits(t):
            out |= 1 << g[z]
        return out

    parent = {}
    queue = deque()
    for x in range(n):
        s = (0, x, space.ball(x, epsilon))
        parent[s] = None
        queue.append(s)
    while queue:
        s = queue.popleft()
        phase, x, t = s
        fx = step[phase].image[x]
        moved = image(phase, t)
        nxt_phase = advance(phase)
        for y in range(n):
            if not d[fx][y] < delta:
                continue
            ns = (nxt_phase, y, moved & space.ball(y, epsilon))
            if ns in parent:
                continue
            parent[ns] = s
            if not ns[2]:
                path = []
                while ns is not None:
                    path.append(ns[1])
                    ns = parent[ns]
                path.reverse()
                return Check(False, PseudoOrbit(tuple(path), (), delta), "survivors", len(parent))
            if len(parent) > cap:
                raise BudgetExceeded(f"more than {cap} survivor states")
            queue.append(ns)
    return Check(True, mode="survivors", examined=len(parent))


def uniform_distance(a_pre, a_per, b_pre, b_per, dist) -> Fraction:
    """Sup over time of the distance between two eventually periodic sequences."""
    window = max(len(a_pre), len(b_pre)) + math.lcm(len(a_per), len(b_per))

    def at(pre, per, i):
        return pre[i] if i < len(pre) else per[(i - len(pre)) % len(per)]

    return max(dist[at(a_pre, a_per, i)][at(b_pre, b_per, i)] for i in range(window))


def orbit_set(f: SystemMap) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
    out = []
    for x in range(f.space.n):
        pre, per = orbit_lasso(f, x)
        out.append((tuple(pre), tuple(per)))
    return out


def usc_check(f: SystemMap, epsilon, delta, cls: ContinuityClass = ALL, samples: int | None = None,
              seed: int = 0, max_maps: int = USC_MAX_MAPS) -> Check:
    """Is every orbit of every admissible nearby ``g`` within uniform distance
    ``< epsilon`` of some ``f``-orbit?

    Modes: ``maps`` enumerates every map in the delta-neighbourhood (when there
    are at most ``max_maps``); ``orbits`` enumerates every orbit such a map can
    have, keeping those an admissible map realises; ``sampled`` (only when
    ``samples`` is given) draws that many nearby maps with the given seed.
    Witness: ``(g, x)``.
    """
    _check_positive(epsilon, delta)
    space = f.space
    graph = delta_graph(f, delta)
    targets = orbit_set(f)
    near: dict = {}

    def covered(pre, per):
        key = (pre, per)
        ok = near.get(key)
        if ok is None:
            ok = near[key] = any(uniform_distance(pre, per, a, b, space.dist) < epsilon for a, b in targets)
        return ok

    if samples is not None:
        rng = random.Random(seed)
        maps = (SystemMap(space, tuple(rng.choice(graph.succ[x]) for x in range(space.n))) for _ in range(samples))
        mode = f"sampled:{samples}:seed={seed}"
    elif _map_count(graph) <= max_maps:
        maps = _maps_near(graph, f)
        mode = "maps"
    else:
        maps = None
        mode = "orbits"

    examined = 0
    if maps is not None:
        for g in maps:
            if not cls.admits(g):
                continue
            examined += 1
            for x, (pre, per) in enumerate(orbit_set(g)):
                if not covered(pre, per):
                    return Check(False, (g, x), mode, examined)
        return Check(True, mode=mode, examined=examined)

    for pre, per in iter_lassos(graph, _lasso_budget()):
        examined += 1
        if covered(pre, per):
            continue
        po = PseudoOrbit(pre, per, delta)
        target = commitments(po)
        try:
            g = perturb_finite_support(PerturbationRequest(f, frozenset(target), target, cls, delta))
        except Infeasible:
            continue
        return Check(False, (g, po[0]), mode, examined)
    return Check(True, mode=mode, examined=examined)


def _check_positive(epsilon, delta):
    if not (epsilon > 0 and delta > 0):
        raise ValueError("epsilon and delta must be positive")


COLUMNS = ("delta_shadow", "delta_struct", "delta_fg", "delta_cg", "delta_usc")


@dataclass
class ModulusTable:
    epsilons: list
    rows: list[dict]  # one dict per epsilon, keyed by COLUMNS
    cls: ContinuityClass = ALL

    def column(self, name: str) -> list:
        return [row[name] for row in self.rows]

    def __eq__(self, other):
        return (
            isinstance(other, ModulusTable)
            and list(self.epsilons) == list(other.epsilons)
            and self.rows == other.rows
            and self.cls == other.cls
        )


def _modulus_row(args) -> dict:
    f, eps, cls = args
    probes = delta_probes(f)
    return {
        "delta_shadow": threshold(lambda dl: decide_shadowing(f, eps, dl).holds, probes),
        "delta_struct": threshold(lambda dl: structural_check(f, eps, dl, ALL).holds, probes),
        "delta_fg": threshold(lambda dl: fgpotp_check(f, eps, dl).holds, probes),
        "delta_cg": threshold(lambda dl: cgpotp_check(f, eps, dl, cls).holds, probes),
        "delta_usc": threshold(lambda dl: usc_check(f, eps, dl, cls).holds, probes),
    }


def _run(fn, jobs: int, items: list) -> list:
    """Apply ``fn`` to every job; results come back in job order regardless of ``jobs``."""
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def modulus_table(f: SystemMap, epsilons: Sequence, cls: ContinuityClass = ALL, jobs: int = 1) -> ModulusTable:
    """Threshold of every predicate at every epsilon, found by bisection over :func:`delta_probes`."""
    epsilons = sorted(Fraction(e) for e in epsilons)
    rows = _run(_modulus_row, jobs, [(f, e, cls) for e in epsilons])
    return ModulusTable(epsilons, rows, cls)


IMPLICATIONS = {
    "a_shadow_implies_struct": "shadowing(eps, delta) => structural(eps, delta)",
    "b_struct_implies_shadow_half": "structural(eps, delta0) => shadowing(eps, delta0/2)",
    "c1_fg_implies_shadow_half": "FGPOTP(eps, delta0) => shadowing(eps, delta0/2)",
    "c2_shadow_implies_fg": "shadowing(eps, delta) => FGPOTP(eps, delta)",
    "d_nonaut_equals_shadow": "structural_nonaut(<f>, eps, delta) == shadowing(eps, delta)",
    "e_struct_implies_fg": "structural(eps, delta) => FGPOTP(eps, delta)",
    "f_fg_implies_cg": "FGPOTP(eps, delta) => CGPOTP(eps, delta, class)",
    "g_cg_implies_shadow_half": "CGPOTP(eps, delta0, all) => shadowing(eps, delta0/2)",
}


def _equivalence_row(args) -> list[dict]:
    f, eps, cls = args
    cache: dict = {}

    def verdict(name, dl):
        key = (name, dl)
        if key not in cache:
            if name == "shadow":
                cache[key] = decide_shadowing(f, eps, dl).holds
            elif name == "struct":
                cache[key] = structural_check(f, eps, dl, ALL).holds
            elif name == "fg":
                cache[key] = fgpotp_check(f, eps, dl).holds
            elif name == "cg":
                cache[key] = cgpotp_check(f, eps, dl, cls).holds
            else:
                cache[key] = structural_check_nonaut(NonautonomousSystem.constant(f), eps, dl).holds
        return cache[key]

    findings = []

    def record(name, dl, ok, **values):
        findings.append({"implication": name, "epsilon": eps, "delta": dl, "ok": ok, **values})

    for dl in delta_probes(f):
        half = dl / 2
        s, st, fg = verdict("shadow", dl), verdict("struct", dl), verdict("fg", dl)
        cg, na = verdict("cg", dl), verdict("nonaut", dl)
        record("a_shadow_implies_struct", dl, (not s) or st, lhs=s, rhs=st)
        record("c2_shadow_implies_fg", dl, (not s) or fg, lhs=s, rhs=fg)
        record("d_nonaut_equals_shadow", dl, na == s, lhs=na, rhs=s)
        record("e_struct_implies_fg", dl, (not st) or fg, lhs=st, rhs=fg)
        record("f_fg_implies_cg", dl, (not fg) or cg, lhs=fg, rhs=cg)
        if st:
            sh = verdict("shadow", half)
            record("b_struct_implies_shadow_half", dl, sh, lhs=True, rhs=sh)
        if fg:
            sh = verdict("shadow", half)
            record("c1_fg_implies_shadow_half", dl, sh, lhs=True, rhs=sh)
        if cls.is_all and cg:
            sh = verdict("shadow", half)
            record("g_cg_implies_shadow_half", dl, sh, lhs=True, rhs=sh)
    return findings


@dataclass
class EquivalenceReport:
    checked: dict = field(default_factory=dict)
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def merge(self, other: EquivalenceReport) -> None:
        for k, v in other.checked.items():
            self.checked[k] = self.checked.get(k, 0) + v
        self.violations.extend(other.violations)

    def to_document(self) -> dict:
        def clean(item):
            return {k: format_fraction(v) if isinstance(v, Fraction) else v for k, v in item.items()}

        return {
            "ok": self.ok,
            "implications": {
                name: {
                    "statement": IMPLICATIONS[name],
                    "checked": self.checked.get(name, 0),
                    "violated": sum(1 for v in self.violations if v["implication"] == name),
                    "pass": not any(v["implication"] == name for v in self.violations),
                }
                for name in IMPLICATIONS
            },
            "violations": [clean(v) for v in self.violations],
        }


def equivalence_experiment(f: SystemMap, epsilons: Sequence, cls: ContinuityClass = ALL, jobs: int = 1) -> EquivalenceReport:
    """Evaluate every implication between the neighbourhood characterisations on a grid.

    For each epsilon and each distinct delta-graph, the implications in
    :data:`IMPLICATIONS` are evaluated with independently computed verdicts.
    Failed implications are collected, not raised.

    The ``delta0/2`` implications (b, c1, g) are the quantitative step of the
    map-sequence argument. For single maps on a finite space they can fail:
    a pseudo-orbit that leaves one point along two different edges is not the
    orbit of any single nearby map.
    """
    epsilons = sorted(Fraction(e) for e in epsilons)
    report = EquivalenceReport()
    for findings in _run(_equivalence_row, jobs, [(f, e, cls) for e in epsilons]):
        for item in findings:
            report.checked[item["implication"]] = report.checked.get(item["implication"], 0) + 1
            if not item["ok"]:
                report.violations.append(dict(item, labels=list(f.space.labels), map=list(f.image)))
    return report


def separation_search(systems: Sequence[tuple[str, SystemMap]], cls: ContinuityClass, budget: int,
                      epsilons: Sequence | None = None) -> dict:
    """Look for ``(f, epsilon, delta)`` where CGPOTP holds but FGPOTP fails.

    Sweeps each named system over its epsilon probes (or ``epsilons``) and
    every distinct delta-graph, stopping after ``budget`` evaluations.
    Candidates only say the two finite-scale predicates differ there.
    """
    from .pseudo import epsilon_probes

    candidates = []
    evaluated = 0
    exhausted = False
    for name, f in systems:
        grid = epsilon_probes(f.space) if epsilons is None else epsilons
        for eps in grid:
            for dl in delta_probes(f):
                if evaluated >= budget:
                    exhausted = True
                    break
                evaluated += 1
                fg = fgpotp_check(f, eps, dl)
                if fg.holds:
                    continue
                cg = cgpotp_check(f, eps, dl, cls)
                if cg.holds:
                    w = fg.witness
                    candidates.append({
                        "system": name,
                        "map": list(f.image),
                        "epsilon": format_fraction(eps),
                        "delta": format_fraction(dl),
                        "fgpotp_witness": {
                            "preperiod": list(w.orbit.preperiod),
                            "period": list(w.orbit.period),
                        },
                    })
            if exhausted:
                break
        if exhausted:
            break
    return {
        "class": str(cls),
        "budget": budget,
        "evaluated": evaluated,
        "budget_exhausted": exhausted,
        "candidates": candidates,
    }
