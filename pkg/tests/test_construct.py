import itertools
from fractions import Fraction

import pytest
from hypothesis import assume, given, strategies as st

from shadowing.core import ALL, ContinuityClass, NonautonomousSystem, SystemMap, orbit, orbit_nonaut, rho, rho_seq
from shadowing.construct import (
    Infeasible,
    PerturbationRequest,
    PreconditionError,
    check_consistency,
    commitments,
    compress_loops,
    perturb_finite_support,
    perturb_to_injective,
    realize_autonomous,
    realize_by_continuous_sequence,
    realize_nonautonomous,
    realize_prefix_continuous,
    telescoping_bound_check,
    telescoping_gamma,
    weak_perturbation_delta,
)
from shadowing.pseudo import PseudoOrbit, delta_probes
from shadowing.zoo import interval_map, interval_space, tent

from conftest import systems

LIP1 = ContinuityClass(Fraction(1))


@st.composite
def pseudo_orbits(draw, f, delta, min_len=1, max_len=12, periodic=False):
    """A delta-pseudo-orbit drawn step by step from the delta-graph."""
    d = f.space.dist
    n = f.space.n
    xs = [draw(st.integers(0, n - 1))]
    length = draw(st.integers(min_len, max_len))
    for _ in range(length - 1):
        options = [y for y in range(n) if d[f(xs[-1])][y] < delta]
        xs.append(draw(st.sampled_from(options)))
    return PseudoOrbit(tuple(xs), (), delta)


@given(systems(max_n=6), st.data())
def test_nonautonomous_realization_replays(f, data):
    delta = data.draw(st.sampled_from(delta_probes(f)))
    xs = data.draw(pseudo_orbits(f, delta))
    res = realize_nonautonomous(f, xs)
    assert orbit_nonaut(res.system, res.start, len(xs) - 1) == list(xs.preperiod)
    assert res.rho_bound == rho_seq(NonautonomousSystem.constant(f), res.system)
    assert res.rho_bound < delta


def test_nonautonomous_realization_of_periodic_sequence(rotation4):
    xs = PseudoOrbit((3,), (0, 1, 2, 3, 3), Fraction(3, 10))
    res = realize_nonautonomous(rotation4, xs)
    assert orbit_nonaut(res.system, 3, 10) == xs.prefix(11)
    assert res.rho_bound < xs.delta


def test_consistency_example():
    a, b, c = 0, 1, 2
    assert check_consistency([a, b, a, c]) == (0, 2)
    assert check_consistency([a, b, a, b]) is None
    assert check_consistency(PseudoOrbit((a,), (b, a))) is None
    assert check_consistency(PseudoOrbit((a, c), (a, b))) == (0, 2)
    assert commitments([a, b, a, b, c]) == {a: b, b: c}


def test_autonomous_realization_rejects_inconsistent(rotation4):
    with pytest.raises(PreconditionError):
        realize_autonomous(rotation4, PseudoOrbit((0, 1, 0, 2), (), Fraction(1, 2)))
    with pytest.raises(PreconditionError):
        realize_autonomous(rotation4, PseudoOrbit((0, 0), (), Fraction(1, 4)))


@given(systems(max_n=6), st.data())
def test_autonomous_realization_replays(f, data):
    delta = data.draw(st.sampled_from(delta_probes(f)))
    xs = data.draw(pseudo_orbits(f, delta))
    assume(check_consistency(xs) is None)
    res = realize_autonomous(f, xs)
    assert orbit(res.system, res.start, len(xs) - 1) == list(xs.preperiod)
    assert res.rho_bound == rho(f, res.system) < delta
    off = set(range(f.space.n)) - set(xs.preperiod[:-1])
    assert all(res.system(x) == f(x) for x in off)


def test_compress_loops_example():
    p, a, b, c = 0, 1, 2, 3
    space = interval_space(4)
    f = SystemMap.identity(space)
    assert compress_loops([p, a, b, a, c], f, 2) == [p, a, c]


def test_compress_loops_checks_the_closing_step(rotation4):
    with pytest.raises(PreconditionError):
        compress_loops([0, 1], rotation4, Fraction(3, 10))
    # cycle of true orbit steps is always fine
    assert compress_loops([0, 1, 2, 3], rotation4, Fraction(1, 100)) == [0, 1, 2, 3]


@given(systems(min_n=2, max_n=8), st.data())
def test_compress_loops_properties(f, data):
    gamma = data.draw(st.sampled_from(delta_probes(f)))
    d = f.space.dist
    n = f.space.n
    # build a closed walk by extending a walk until it can return to its start
    start = data.draw(st.integers(0, n - 1))
    ys = [start]
    for _ in range(data.draw(st.integers(0, 3 * n))):
        ys.append(data.draw(st.sampled_from([y for y in range(n) if d[f(ys[-1])][y] < gamma])))
    assume(d[f(ys[-1])][start] < gamma)
    out = compress_loops(ys, f, gamma)
    assert out[0] == start
    assert len(set(out)) == len(out)
    assert all(d[f(out[i])][out[(i + 1) % len(out)]] < gamma for i in range(len(out)))
    # the result is a subsequence of the input
    it = iter(ys)
    assert all(any(y == x for y in it) for x in out)


def test_injective_repair_pool_exhausted(rotation4):
    res = perturb_to_injective(rotation4, [0, 1, 0, 1, 0], Fraction(3, 10))
    # 0 -> keeps 0, 1 -> keeps 1, 0 repeats -> nearest unused within 3/10 is 3,
    # 1 repeats -> 2, and the last 0 has no unused neighbour left
    assert res.ys == (0, 1, 3, 2)
    assert res.exhausted_at == 4 and not res.ok
    full = perturb_to_injective(rotation4, [0, 1, 0], Fraction(3, 10))
    assert full.ok and full.ys == (0, 1, 3)
    assert full.displacement == Fraction(1, 4)
    assert full.gamma <= full.gamma_estimate


@given(systems(max_n=6), st.data())
def test_injective_repair_bounds(f, data):
    n = f.space.n
    xs = data.draw(st.lists(st.integers(0, n - 1), min_size=1, max_size=2 * n))
    beta = data.draw(st.sampled_from(f.space.distances() + [Fraction(2)] if n > 1 else [Fraction(1)]))
    res = perturb_to_injective(f, xs, beta)
    assert len(set(res.ys)) == len(res.ys)
    assert all(f.space.d(x, y) < beta for x, y in zip(xs, res.ys))
    assert res.gamma <= res.gamma_estimate
    if res.ok:
        assert len(res.ys) == len(xs)


@given(systems(max_n=6), st.data())
def test_telescoping_bound(f, data):
    P = data.draw(st.integers(1, 6))
    bound = data.draw(st.sampled_from([Fraction(1, 2), Fraction(1), Fraction(3, 2)]))
    gamma = telescoping_gamma(f, P, bound)
    assert 0 < gamma <= bound / P
    xs = data.draw(pseudo_orbits(f, gamma, min_len=P + 1, max_len=P + 4))
    M = data.draw(st.integers(0, len(xs) - P - 1))
    assert telescoping_bound_check(f, list(xs.preperiod), M, P, gamma, bound) is None


def _exhaustive_perturbation_exists(f, target, cls, eps):
    n = f.space.n
    for image in itertools.product(range(n), repeat=n):
        g = SystemMap(f.space, image)
        if all(g(p) == q for p, q in target.items()) and rho(f, g) < eps and cls.admits(g):
            return True
    return False


@given(systems(max_n=4), st.data())
def test_lipschitz_completion_agrees_with_exhaustive_search(f, data):
    n = f.space.n
    eps = data.draw(st.sampled_from(f.space.distances() + [Fraction(3)]))
    support = data.draw(st.sets(st.integers(0, n - 1), min_size=1, max_size=n))
    target = {p: data.draw(st.sampled_from([w for w in range(n) if f.space.d(f(p), w) < eps])) for p in support}
    cls = data.draw(st.sampled_from([LIP1, ContinuityClass(Fraction(2)), ALL]))
    req = PerturbationRequest(f, frozenset(support), target, cls, eps)
    expected = _exhaustive_perturbation_exists(f, target, cls, eps)
    try:
        g = perturb_finite_support(req)
    except Infeasible:
        assert not expected
        return
    assert expected
    assert all(g(p) == q for p, q in target.items())
    assert rho(f, g) < eps and cls.admits(g)


def test_lipschitz_perturbation_on_grid():
    f = interval_map(lambda x: x / 2 + Fraction(1, 4), 16)
    assert LIP1.admits(f)
    eps = Fraction(1, 5)
    g = perturb_finite_support(PerturbationRequest(f, {7}, {7: 9}, LIP1, eps))
    assert g(7) == 9 and rho(f, g) < eps and LIP1.admits(g)
    # moving one point of a contraction too far cannot be repaired within eps
    with pytest.raises(PreconditionError):
        perturb_finite_support(PerturbationRequest(f, {0}, {0: 15}, LIP1, eps))


def test_weak_perturbation_delta():
    f = tent(9)
    eps = Fraction(1, 4)
    assert weak_perturbation_delta(f, ALL, eps) == eps
    dl = weak_perturbation_delta(f, ContinuityClass(Fraction(2)), eps)
    assert 0 < dl <= eps


@given(systems(max_n=5), st.data())
def test_continuous_sequence_realization(f, data):
    eps = data.draw(st.sampled_from(f.space.distances() + [Fraction(2)]))
    cls = data.draw(st.sampled_from([ContinuityClass(Fraction(2)), ContinuityClass(Fraction(4)), ALL]))
    assume(cls.admits(f))
    delta = weak_perturbation_delta(f, cls, eps)
    xs = data.draw(pseudo_orbits(f, delta, max_len=8))
    res = realize_by_continuous_sequence(f, xs, cls, eps)
    assert orbit_nonaut(res.system, res.start, len(xs) - 1) == list(xs.preperiod)
    assert res.rho_bound < eps
    assert all(cls.admits(g) for g in res.system.preperiod + res.system.period)


@given(systems(max_n=5), st.data())
def test_prefix_realization(f, data):
    delta = data.draw(st.sampled_from(delta_probes(f)))
    cls = data.draw(st.sampled_from([ContinuityClass(Fraction(2)), ALL]))
    assume(cls.admits(f))
    xs = data.draw(pseudo_orbits(f, delta, min_len=2, max_len=8))
    assume(check_consistency(xs) is None)
    N = len(xs) - 1
    try:
        res = realize_prefix_continuous(f, xs, N, cls, delta)
    except Infeasible:
        assert not cls.is_all
        return
    assert orbit(res.system, res.start, N) == list(xs.preperiod)
    assert res.rho_bound < delta and cls.admits(res.system)


def _plain_dfs_completion(f, target, L, eps):
    """Independent complete search: points in index order, no propagation."""
    n, d = f.space.n, f.space.dist
    assign = {}

    def ok(x, w):
        if not d[f(x)][w] < eps:
            return False
        return all(d[w][assign[y]] <= L * d[x][y] for y in assign)

    def go(x):
        if x == n:
            return True
        choices = [target[x]] if x in target else sorted(range(n), key=lambda w: d[f(x)][w])
        for w in choices:
            if ok(x, w):
                assign[x] = w
                if go(x + 1):
                    return True
                del assign[x]
        return False

    return go(0)


@pytest.mark.parametrize("point,shift", [(p, s) for p in (0, 5, 10, 15) for s in (-2, -1, 1, 2)])
def test_lipschitz2_one_point_support_on_16_grid(point, shift):
    f = interval_map(lambda x: min(x * x * 2, Fraction(1)), 16)
    cls = ContinuityClass(Fraction(2))
    assert cls.admits(f)
    eps = Fraction(1, 7)
    q = min(max(f(point) + shift, 0), 15)
    target = {point: q}
    expected = _plain_dfs_completion(f, target, 2, eps)
    try:
        g = perturb_finite_support(PerturbationRequest(f, {point}, target, cls, eps))
    except Infeasible:
        assert not expected
        return
    assert expected
    assert g(point) == q and rho(f, g) < eps and cls.admits(g)


def test_empty_support_and_trivial_weak_perturbation(rotation4):
    assert perturb_finite_support(PerturbationRequest(rotation4, set(), {}, LIP1, Fraction(1, 2))) == rotation4
    from shadowing.construct import weak_perturb
    assert weak_perturb(rotation4, 2, rotation4(2), LIP1, Fraction(1, 10)) == rotation4


@given(systems(max_n=6), st.data())
def test_all_class_perturbation_is_pointwise(f, data):
    n = f.space.n
    eps = data.draw(st.sampled_from(f.space.distances() + [Fraction(3)]))
    support = data.draw(st.sets(st.integers(0, n - 1), max_size=n))
    target = {p: data.draw(st.sampled_from([w for w in range(n) if f.space.d(f(p), w) < eps])) for p in support}
    g = perturb_finite_support(PerturbationRequest(f, support, target, ALL, eps))
    assert all(g(x) == (target[x] if x in support else f(x)) for x in range(n))
    assert rho(f, g) == max((f.space.d(f(p), q) for p, q in target.items()), default=0)


@given(systems(max_n=6), st.data())
def test_prefix_realization_matches_autonomous_for_all_class(f, data):
    delta = data.draw(st.sampled_from(delta_probes(f)))
    xs = data.draw(pseudo_orbits(f, delta, min_len=1, max_len=10))
    assume(check_consistency(xs) is None)
    N = len(xs) - 1
    assert realize_prefix_continuous(f, xs, N, ALL, delta).system == realize_autonomous(f, xs).system
    assert realize_prefix_continuous(f, xs, 0, ALL, delta).system == f


@given(systems(min_n=2, max_n=8), st.data())
def test_compressed_cycle_is_realized(f, data):
    gamma = data.draw(st.sampled_from(delta_probes(f)))
    d = f.space.dist
    n = f.space.n
    ys = [data.draw(st.integers(0, n - 1))]
    for _ in range(data.draw(st.integers(0, 2 * n))):
        ys.append(data.draw(st.sampled_from([y for y in range(n) if d[f(ys[-1])][y] < gamma])))
    assume(d[f(ys[-1])][ys[0]] < gamma)
    cycle = compress_loops(ys, f, gamma)
    res = realize_autonomous(f, PseudoOrbit((), tuple(cycle), gamma))
    assert res.rho_bound < gamma
    assert orbit(res.system, cycle[0], 3 * len(cycle)) == [cycle[i % len(cycle)] for i in range(3 * len(cycle) + 1)]


def test_true_orbits_need_no_change(rotation4):
    xs = PseudoOrbit((0, 1, 2, 3, 0), (), Fraction(1, 10))
    assert realize_autonomous(rotation4, xs).system == rotation4
    assert realize_nonautonomous(rotation4, xs).system[0] == rotation4
    assert perturb_to_injective(rotation4, [0, 1, 2, 3], Fraction(1, 10)).ys == (0, 1, 2, 3)
    assert telescoping_bound_check(rotation4, [0, 1, 2, 3, 0, 1], 1, 4, Fraction(1, 10), Fraction(1, 100)) is None


def test_telescoping_on_contraction():
    f = interval_map(lambda x: x / 2, 6)
    bound = Fraction(1, 5)
    P = 4
    gamma = telescoping_gamma(f, P, bound)
    xs = [5, 2, 1, 0, 0, 0, 0]
    assert gamma == Fraction(1, 20)
    assert telescoping_bound_check(f, xs, 0, P, gamma, bound) is None
    # an overly large gamma admits a drifting sequence that the check flags
    assert telescoping_bound_check(f, [0, 1, 1, 1, 1], 0, 3, Fraction(1, 2), Fraction(1, 10)) == 1
