from fractions import Fraction as F

import numpy as np
import pytest

from ergolab.core_sets import CylinderSet, IntervalSet
from ergolab.errors import DomainError
from ergolab.koopman import (
    THETA,
    cesaro_diagnostics,
    correlation,
    correlation_series,
    fit_weak_limit,
    halmos_distance,
    level_pair_family,
    simplex_least_squares,
    theta_value,
    weak_distance,
)
from ergolab.rank_one import LevelSet, infinite_l, katok, staircase, total_measure_bounds
from ergolab.systems import BernoulliShift, Rotation, dyadic_index
from oracles import cylinder_meet, rotation_overlap


def half():
    return IntervalSet([(0, F(1, 2))])


def test_bernoulli_first_coordinate_correlations():
    b = BernoulliShift()
    A = CylinderSet.fixed({0: 0})
    assert correlation(b, A, A, 0) == (F(1, 2), F(1, 2))
    for i in range(1, 12):
        assert correlation(b, A, A, i) == (F(1, 4), F(1, 4))


def test_bernoulli_matches_cylinder_oracle():
    b = BernoulliShift()
    a, c = {0: 1, 2: 0}, {1: 1, 3: 1, 4: 0}
    A, B = CylinderSet.fixed(a), CylinderSet.fixed(c)
    for n in range(-6, 7):
        assert correlation(b, A, B, n)[0] == cylinder_meet(a, c, n)


def test_rotation_matches_overlap_oracle():
    a = F(610, 987)
    r = Rotation(a)
    A = IntervalSet([(F(1, 10), F(1, 2))])
    B = IntervalSet([(F(1, 3), F(4, 5))])
    for n in range(0, 40):
        c, c2 = correlation(r, A, B, n)
        assert c == c2 == rotation_overlap(a, n, F(1, 10), F(1, 2), F(1, 3), F(4, 5))


def test_cesaro_average_close_to_product():
    r = Rotation(F(610, 987))
    s = correlation_series(r, half(), half(), range(0, 988))
    avg, dev = cesaro_diagnostics(s, F(1, 4))
    last = avg[986][0]
    assert avg[986][0] == avg[986][1]
    # frozen from the overlap oracle summed over i = 1..987
    assert last - F(1, 4) == F(1, 3896676)
    assert abs(last - F(1, 4)) <= F(1, 987)
    assert dev[986][0] > 0


def test_cesaro_requires_lags():
    s = correlation_series(Rotation(F(1, 3)), half(), half(), range(2, 6))
    with pytest.raises(DomainError):
        cesaro_diagnostics(s)


def test_series_threads_agree():
    r = Rotation(F(13, 21))
    one = correlation_series(r, half(), half(), range(30))
    many = correlation_series(r, half(), half(), range(30), threads=4)
    assert one.values == many.values


def test_adjoint_symmetry():
    r = Rotation(F(5, 13))
    A, B = IntervalSet([(0, F(1, 3))]), IntervalSet([(F(1, 4), F(7, 8))])
    for n in range(-10, 11):
        assert correlation(r, A, B, n) == correlation(r, B, A, -n)


def test_theta_values():
    assert theta_value(Rotation(F(1, 3)), half(), half()) == F(1, 4)
    s = infinite_l()
    assert theta_value(s, LevelSet(2, [0]), LevelSet(2, [1])) == 0
    k = katok()
    lo, hi = total_measure_bounds(k, 2)
    t = theta_value(k, LevelSet(2, [0]), LevelSet(2, [0]))
    assert F(1, 4) / hi <= t <= F(1, 4) / lo


def test_rank_one_correlation_needs_levels():
    with pytest.raises(DomainError):
        correlation(katok(), half(), half(), 3)


def test_simplex_solver_recovers_mixture():
    rng = np.random.default_rng(0)
    X = rng.random((12, 3))
    a = np.array([0.2, 0.0, 0.8])
    r, got, support = simplex_least_squares(X, X @ a)
    assert np.allclose(got, a, atol=1e-10)
    assert r < 1e-20


def test_simplex_solver_stays_on_simplex():
    X = np.eye(3)
    r, got, _ = simplex_least_squares(X, np.array([2.0, -1.0, 0.0]))
    assert got.min() >= -1e-12 and abs(got.sum() - 1) < 1e-12
    assert np.allclose(got, [1, 0, 0])


def test_identity_rotation_fits_power_zero():
    r = Rotation(0)
    fam = [(r.canonical_set(i), r.canonical_set(k)) for i in range(1, 5) for k in range(1, 5)]
    fit = fit_weak_limit(r, 17, fam, [0])
    assert fit.coefficients[0] == pytest.approx(1)
    assert fit.residual < 1e-20


def test_mixing_fits_theta():
    b = BernoulliShift()
    fam = [(b.canonical_set(i), b.canonical_set(k)) for i in range(1, 5) for k in range(1, 5)]
    fit = fit_weak_limit(b, 60, fam, [0, -1])
    assert fit.coefficients[THETA] == pytest.approx(1)


def test_katok_limit_has_two_powers():
    k = katok()
    fam = level_pair_family(k, 3)
    assert len(fam) == 14 * 14
    fit = fit_weak_limit(k, k.height(6), fam, [0, -1])
    assert fit.coefficients[0] == pytest.approx(0.497, abs=0.01)
    assert fit.coefficients[-1] == pytest.approx(0.456, abs=0.01)
    assert fit.residual < 1e-3


def test_fit_validation():
    r = Rotation(0)
    fam = [(half(), half())]
    with pytest.raises(DomainError):
        fit_weak_limit(r, 3, fam, [0])
    with pytest.raises(DomainError):
        fit_weak_limit(r, 3, fam * 20, list(range(11)))


def test_fit_flags_rank_deficiency():
    r = Rotation(0)
    fam = [(half(), half())] * 4
    with pytest.warns(UserWarning):
        fit = fit_weak_limit(r, 2, fam, [0])
    assert fit.status == "degenerate"


def test_staircase_fit_runs_on_profiles():
    s = staircase()
    fit = fit_weak_limit(s, s.height(5), level_pair_family(s, 2), [0])
    assert sum(fit.coefficients.values()) == pytest.approx(1)


def _halmos_rotation_oracle(a, b, depth):
    total = F(0)
    for i in range(1, depth + 1):
        lev, k = dyadic_index(i)
        l, r = F(k, 2**lev), F(k + 1, 2**lev)
        for sgn in (1, -1):
            # |(A + sa) Δ (A + sb)| = 2|A| - 2|(A + sa - sb) ∩ A|
            d = (sgn * (a - b)) % 1
            total += F(1, 2**i) * (2 * (r - l) - 2 * rotation_overlap(d, 1, l, r, l, r))
    return total


@pytest.mark.parametrize("a,b", [(0, F(1, 2)), (F(1, 3), F(2, 5)), (F(610, 987), F(377, 610))])
def test_halmos_matches_oracle(a, b):
    val, tail = halmos_distance(Rotation(a), Rotation(b), 8)
    assert val == _halmos_rotation_oracle(a, b, 8)
    assert tail == F(4, 2**8)


def test_halmos_zero_on_equal_and_validates():
    assert halmos_distance(Rotation(F(1, 3)), Rotation(F(1, 3)), 6)[0] == 0
    with pytest.raises(DomainError):
        halmos_distance(Rotation(0), BernoulliShift(), 3)
    with pytest.raises(DomainError):
        halmos_distance(katok(), katok(), 3)


def test_weak_distance():
    b = BernoulliShift()
    assert weak_distance(b, THETA, 40, 0, 6) == 0
    assert weak_distance(b, THETA, 1, 0, 6) > 0
    r = Rotation(F(610, 987))
    assert weak_distance(r, r, 987, 0, 5) == 0
    assert weak_distance(THETA, THETA, 0, 0, 3) == 0
    with pytest.raises(DomainError):
        weak_distance(katok(), THETA, 1, 0, 3)
