import math
from fractions import Fraction as F

import pytest

from ergolab.core_sets import CylinderSet, IntervalSet
from ergolab.errors import DomainError
from ergolab.rank_one import LevelSet, katok
from ergolab.recurrence import (
    birkhoff_average,
    cocycle_first_zero,
    cocycle_sweep,
    multirec_average,
    roth_min_i,
    seeded_starts,
    vn_norm,
)
from ergolab.spectral import FunctionSpec, autocovariance, default_function
from ergolab.systems import BernoulliShift, Rotation, fibonacci

HALF = IntervalSet([(0, F(1, 2))])
UPPER = IntervalSet([(F(1, 2), 1)])
SIGN = FunctionSpec([(1, HALF), (-1, UPPER)])


def arc_triple_oracle(a, i, r):
    """``|[0,r) ∩ ([0,r) + i a) ∩ ([0,r) + 2 i a)|`` by midpoint sampling between breakpoints."""
    starts = [F(0), (i * a) % 1, (2 * i * a) % 1]
    cuts = sorted({F(0), F(1)} | {s for s in starts} | {(s + r) % 1 for s in starts})
    total = F(0)
    for lo, hi in zip(cuts, cuts[1:]):
        m = (lo + hi) / 2
        if all((m - s) % 1 < r for s in starts):
            total += hi - lo
    return total


def test_rotation_orbit_average_is_exact():
    r = Rotation(F(610, 987))
    avg = birkhoff_average(r, FunctionSpec([(1, HALF)]), F(0), 987)
    assert avg.average == F(494, 987)
    assert avg.averages()[0] == 0


def test_orbit_average_agrees_with_generic_walker():
    r = Rotation(F(5, 13))
    f = FunctionSpec([(3, IntervalSet([(F(1, 7), F(2, 3))]))])
    got = birkhoff_average(r, f, F(1, 11), 40).sums
    ref, acc = [], F(0)
    for i in range(1, 41):
        acc += f(r.orbit_point(F(1, 11), i))
        ref.append(acc)
    assert [F(s) for s in got] == ref


def test_bernoulli_seeded_average_near_half():
    b = BernoulliShift()
    x = b.start_point(7)
    avg = birkhoff_average(b, FunctionSpec([(1, CylinderSet.fixed({0: 0}))]), x, 100_000)
    assert abs(float(avg.average) - 0.5) < 0.01


@pytest.mark.parametrize("N", [10, 100, 1000])
def test_bernoulli_norm_decay(N):
    b = BernoulliShift()
    ac = autocovariance(b, default_function(b), N)
    assert abs(vn_norm(ac, N) - 1 / (2 * math.sqrt(N))) <= 1e-12


def test_norm_validation():
    b = BernoulliShift()
    ac = autocovariance(b, default_function(b), 5)
    with pytest.raises(DomainError):
        vn_norm(ac, 50)
    with pytest.raises(DomainError):
        vn_norm(ac, 0)


def test_periodic_rotation_norm_stays_positive():
    r = Rotation(F(1, 2))
    ac = autocovariance(r, default_function(r), 20)
    # U^i f alternates sign, so the average of an even count vanishes
    assert vn_norm(ac, 20) == 0
    assert vn_norm(ac, 21) == pytest.approx(0.5 / 21)


def test_bernoulli_triple_average():
    b = BernoulliShift()
    A = CylinderSet.fixed({0: 0})
    series = multirec_average(b, A, [A, A], 20)
    assert series.exact
    assert all(t == (F(1, 8), F(1, 8)) for t in series.terms)
    assert series.averages[-1] == (F(1, 8), F(1, 8))


def test_rotation_triple_terms_match_oracle():
    a = F(610, 987)
    A = IntervalSet([(0, F(1, 10))])
    series = multirec_average(Rotation(a), A, [A, A], 60)
    for i, (lo, hi) in enumerate(series.terms, 1):
        assert lo == hi == arc_triple_oracle(a, i, F(1, 10))


def test_roth_rotation():
    rep = roth_min_i(Rotation(F(610, 987)), IntervalSet([(0, F(1, 10))]), 100)
    assert rep.i_min == 13
    assert rep.witness == (F(307, 9870), F(307, 9870))
    assert rep.certified
    assert all(arc_triple_oracle(F(610, 987), i, F(1, 10)) == 0 for i in range(1, 13))


def test_roth_bernoulli_and_validation():
    rep = roth_min_i(BernoulliShift(), CylinderSet.fixed({0: 0}), 5)
    assert rep.i_min == 1 and rep.witness[0] == F(1, 8)
    with pytest.raises(DomainError):
        roth_min_i(Rotation(F(1, 3)), IntervalSet([]), 5)


def test_roth_rank_one():
    k = katok()
    A = LevelSet(2, [0, 1, 2])
    rep = roth_min_i(k, A, 3)
    assert rep.i_min == 1 and rep.witness[0] > 0


def test_multirec_validation():
    b = BernoulliShift()
    with pytest.raises(DomainError):
        multirec_average(b, CylinderSet.full(), [], 3)
    with pytest.raises(DomainError):
        multirec_average(b, CylinderSet.full(), [HALF], 3)


def test_cocycle_two_step_zero():
    assert cocycle_first_zero(Rotation(F(610, 987)), SIGN, F(0)) == 2


def test_cocycle_respects_floor_and_budget():
    r = Rotation(F(610, 987))
    n = cocycle_first_zero(r, SIGN, F(0), N_floor=2)
    assert n is None or n > 2
    assert cocycle_first_zero(r, SIGN, F(0), N_floor=5, budget=5) is None


def test_cocycle_validation():
    r = Rotation(F(1, 3))
    with pytest.raises(DomainError):
        cocycle_first_zero(r, FunctionSpec([(1, HALF)], center=True), F(0))
    with pytest.raises(DomainError):
        cocycle_first_zero(r, FunctionSpec([(1, HALF)]), F(0))


def test_seeded_starts_reproducible():
    r = Rotation(fibonacci(30))
    assert seeded_starts(r, 5, 3) == seeded_starts(r, 5, 3)
    assert seeded_starts(r, 5, 3) != seeded_starts(r, 5, 4)


def test_small_sweep():
    r = Rotation(fibonacci(30))
    out = cocycle_sweep(r, SIGN, 10, seed=1, N_floor=10, budget=10**5)
    assert all(n is not None and n > 10 for _, n in out)
