import math
from fractions import Fraction as F

import numpy as np
import pytest

from ergolab.core_sets import IntervalSet
from ergolab.errors import DomainError
from ergolab.poisson import (
    PoissonWindow,
    count_distribution,
    independence_check,
    sample_configs,
    suspension_pentropy,
    xi_entropy,
)
from ergolab.rank_one import LevelSet, infinite_l


def ray(*pairs):
    return IntervalSet([(F(a), F(b)) for a, b in pairs], "ray")


@pytest.fixture(scope="module")
def unit_sample():
    return sample_configs(PoissonWindow.from_stage(infinite_l(), 1), 100_000, seed=42)


def test_window_mass():
    s = infinite_l()
    assert PoissonWindow.from_stage(s, 1).mass == 1
    assert PoissonWindow.from_stage(s, 3).mass == s.total(3)


def test_same_seed_same_sample():
    w = PoissonWindow(ray((0, 3)))
    a = sample_configs(w, 5000, seed=3, batch=700)
    b = sample_configs(w, 5000, seed=3, batch=700, threads=4)
    assert np.array_equal(a.points, b.points) and np.array_equal(a.totals, b.totals)
    c = sample_configs(w, 5000, seed=4, batch=700)
    assert not np.array_equal(a.points, c.points)


def test_points_stay_in_window_components():
    w = PoissonWindow(ray((0, 1), (5, F(11, 2))))
    smp = sample_configs(w, 2000, seed=1)
    p = smp.points
    assert np.all(((p >= 0) & (p < 1)) | ((p >= 5) & (p < 5.5)))
    assert smp.totals.sum() == len(p)


def test_counts_match_direct_loop():
    w = PoissonWindow(ray((0, 4)))
    smp = sample_configs(w, 300, seed=9)
    s = ray((F(1, 2), 1), (2, F(7, 2)))
    got = smp.counts(s)
    ref = np.zeros(300, dtype=int)
    for x, o in zip(smp.points, smp.owner):
        if 0.5 <= x < 1 or 2 <= x < 3.5:
            ref[o] += 1
    assert np.array_equal(got, ref)


def test_empty_fraction_near_exp_minus_one(unit_sample):
    c = unit_sample.counts(ray((0, 1)))
    p0 = math.exp(-1)
    sigma = math.sqrt(p0 * (1 - p0) / unit_sample.count)
    assert abs((c == 0).mean() - p0) <= 3 * sigma


def test_count_law_for_half(unit_sample):
    dist = count_distribution(unit_sample, ray((0, F(1, 2))))
    assert dist.mu == F(1, 2)
    assert dist.passed
    assert dist.mean == pytest.approx(0.5, abs=0.02)
    assert dist.variance == pytest.approx(0.5, abs=0.02)
    assert dist.p_value > 1e-4


def test_count_law_rejects_outside(unit_sample):
    with pytest.raises(DomainError):
        count_distribution(unit_sample, ray((0, 2)))


def test_nine_cell_independence(unit_sample):
    rep = independence_check(unit_sample, ray((0, F(1, 2))), ray((F(1, 2), 1)))
    assert len(rep.cells) == 9
    assert rep.passed


def test_independence_requires_disjoint(unit_sample):
    with pytest.raises(DomainError):
        independence_check(unit_sample, ray((0, F(1, 2))), ray((F(1, 4), 1)))


def test_level_sets_need_rank_one_window():
    w = PoissonWindow(ray((0, 1)))
    with pytest.raises(DomainError):
        w.as_intervals(LevelSet(1, [0]))


def test_xi_entropy_limits():
    assert xi_entropy(0) == 0
    mu = 0.3
    p0, p1 = math.exp(-mu), mu * math.exp(-mu)
    p2 = 1 - p0 - p1
    assert xi_entropy(mu) == pytest.approx(-(p0 * math.log(p0) + p1 * math.log(p1) + p2 * math.log(p2)))


def test_suspension_entropy_near_reference():
    s = infinite_l()
    res = suspension_pentropy(PoissonWindow.from_stage(s, 4), LevelSet(3, [0, 1, 2, 3]), 3, 3, 50_000, seed=7)
    assert 0.9 <= res.ratio <= 1.02
    assert len(res.translates) == 3


def test_suspension_entropy_validation():
    s = infinite_l()
    A = LevelSet(3, [0, 1, 2, 3])
    with pytest.raises(DomainError):
        suspension_pentropy(PoissonWindow.from_stage(s, 3), A, 3, 3, 100, seed=1)
    with pytest.raises(DomainError):
        suspension_pentropy(PoissonWindow.from_stage(s, 4), A, 3, 50, 100, seed=1)
    with pytest.raises(DomainError):
        suspension_pentropy(PoissonWindow(ray((0, 1))), A, 3, 3, 100, seed=1)
