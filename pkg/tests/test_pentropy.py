import math
from fractions import Fraction as F

import pytest

from ergolab.core_sets import CylinderSet, IntervalSet, Partition
from ergolab.errors import DomainError, ResourceError
from ergolab.pentropy import (
    ProgressionFamily,
    binary_entropy,
    partition_library,
    pentropy_profile,
    progression_join_entropy,
)
from ergolab.rank_one import LevelSet, infinite_l, katok, staircase
from ergolab.systems import BernoulliShift, Rotation, fibonacci


def two_arcs():
    return Partition([IntervalSet([(0, F(1, 2))]), IntervalSet([(F(1, 2), 1)])])


def coordinate_partition():
    return Partition([CylinderSet.fixed({0: 0}), CylinderSet.fixed({0: 1})])


def arc_entropy_oracle(a, j, L):
    """Entropy of the arcs cut by the endpoints ``{p j a, p j a + 1/2}``."""
    pts = sorted({(p * j * a + s) % 1 for p in range(1, L + 1) for s in (0, F(1, 2))})
    gaps = [b - c for c, b in zip(pts, pts[1:] + [pts[0] + 1])]
    return -sum(float(g) * math.log(float(g)) for g in gaps) / L


def test_family_parsing():
    assert ProgressionFamily.parse("j").times(3) == [3, 6, 9]
    assert ProgressionFamily.parse(4).length(10) == 4
    assert ProgressionFamily.parse("2").times(5) == [5, 10]
    with pytest.raises(DomainError):
        ProgressionFamily.parse("j^2")
    with pytest.raises(DomainError):
        ProgressionFamily.constant(0).length(1)


def test_binary_entropy():
    assert binary_entropy(0.5) == pytest.approx(math.log(2))
    assert binary_entropy(0) == binary_entropy(1) == 0


@pytest.mark.parametrize("j", range(1, 7))
@pytest.mark.parametrize("L", [1, 4, 8])
def test_bernoulli_coordinate_entropy_is_log2(j, L):
    lo, hi = progression_join_entropy(BernoulliShift(), coordinate_partition(), j, L)
    assert lo == hi == math.log(2)


@pytest.mark.parametrize("a", [fibonacci(15), F(3, 7)])
@pytest.mark.parametrize("j,L", [(1, 1), (1, 5), (3, 4), (5, 8)])
def test_rotation_entropy_matches_arc_oracle(a, j, L):
    h, _ = progression_join_entropy(Rotation(a), two_arcs(), j, L)
    assert h == pytest.approx(arc_entropy_oracle(a, j, L), rel=1e-12)
    assert h <= math.log(2 * L) / L + 1e-15


def test_profile_rows_and_limsup():
    prof = pentropy_profile(Rotation(fibonacci(15)), two_arcs(), ProgressionFamily.linear(), 6, threads=3)
    assert [r[0] for r in prof.rows] == list(range(1, 7))
    assert [r[1] for r in prof.rows] == list(range(1, 7))
    assert prof.limsup[0] == max(r[2] for r in prof.rows)
    assert prof.j_range == (1, 6)
    assert prof.to_dict()["family"] == "L(j) = j"


def test_join_cap_is_reported():
    lib = partition_library(BernoulliShift(), 3)
    with pytest.raises(ResourceError):
        progression_join_entropy(BernoulliShift(), lib[2], 1, 9, cap=1000)


def test_partition_library_sizes():
    lib = partition_library(Rotation(0), 3)
    assert [len(p.cells) for p in lib] == [2, 4, 8]


def test_rank_one_bounds_are_ordered_and_finite():
    k = katok()
    cells = [LevelSet(3, range(0, 7)), LevelSet(3, range(7, 14))]
    lo, hi = progression_join_entropy(k, cells, 2, 3)
    assert 0 <= lo <= hi <= math.log(3)


def test_rank_one_deeper_stage_overlaps():
    s = staircase()
    cells = [LevelSet(2, [0, 1]), LevelSet(2, [2, 3, 4])]
    a = progression_join_entropy(s, cells, 1, 2, stage=5)
    b = progression_join_entropy(s, cells, 1, 2, stage=7)
    assert max(a[0], b[0]) <= min(a[1], b[1])
    assert b[1] - b[0] <= a[1] - a[0]


def test_rank_one_validation():
    k = katok()
    with pytest.raises(DomainError):
        progression_join_entropy(k, [LevelSet(2, [0, 1]), LevelSet(2, [1])], 1, 2)
    with pytest.raises(DomainError):
        progression_join_entropy(infinite_l(), [LevelSet(2, [0])], 1, 2)
    with pytest.raises(DomainError):
        progression_join_entropy(k, [LevelSet(3, [0])], 1, 2, stage=2)
    with pytest.raises(DomainError):
        progression_join_entropy(k, [LevelSet(3, [0])], 0, 2)
