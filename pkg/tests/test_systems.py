from fractions import Fraction as F

import pytest

from ergolab.core_sets import CylinderSet, DyadicRectangleSet, IntervalSet, parse_rectangles
from ergolab.errors import DomainError
from ergolab.systems import (
    BakerMap,
    BernoulliShift,
    BitSequence,
    Rotation,
    TorusTranslation,
    baker_point_map,
    dyadic_index,
    fibonacci,
    make_system,
    silver,
)


def test_fibonacci_preset():
    assert fibonacci(15) == F(610, 987)
    assert make_system({"kind": "rotation", "preset": "fibonacci", "k": 15}).angle == F(610, 987)


def test_silver_convergents_approach_sqrt2_minus_1():
    assert silver(1) == F(1, 2)
    assert silver(4) == F(12, 29)
    assert abs(float(silver(12)) - (2**0.5 - 1)) < 1e-9


def test_rotation_zero_is_identity():
    r = Rotation(0)
    s = IntervalSet([(F(1, 3), F(2, 3))])
    assert r.image(s, 17) == s
    assert r.orbit_point(F(1, 5), 9) == F(1, 5)


def test_rotation_image_half_interval():
    r = Rotation(F(610, 987))
    img = r.image(IntervalSet([(0, F(1, 2))]), 1)
    assert img == IntervalSet([(F(610, 987), 1), (0, F(1, 2) - F(377, 987))])


def test_rotation_orbit():
    r = Rotation(F(610, 987))
    assert r.orbit_point(0, 2) == F(233, 987)
    assert r.orbit_point(F(1, 7), 0) == F(1, 7)


def test_rotation_periodic():
    r = Rotation(F(610, 987))
    s = IntervalSet([(F(1, 10), F(3, 7))])
    assert r.image(s, 987) == s


def test_rotation_angle_domain():
    with pytest.raises(DomainError):
        Rotation(F(3, 2))
    with pytest.raises(DomainError):
        make_system({"kind": "rotation"})


def test_bernoulli_image_moves_coordinate():
    b = BernoulliShift()
    for i in (-3, 1, 7):
        assert b.image(CylinderSet.fixed({0: 0}), i) == CylinderSet.fixed({i: 0})


def test_bernoulli_point_reproducible():
    b = BernoulliShift()
    x = b.start_point(11)
    y = b.orbit_point(x, 5)
    bits = BitSequence(11)
    assert [y.coord(z) for z in range(-4, 10)] == [bits[z - 5] for z in range(-4, 10)]
    assert [BitSequence(11)[z] for z in range(-2000, 2000, 37)] == [bits[z] for z in range(-2000, 2000, 37)]


def test_bit_window_matches_indexing():
    bits = BitSequence(3)
    w = bits.window(-1500, 1500)
    assert list(w[::101]) == [bits[z] for z in range(-1500, 1500, 101)]


def test_point_membership_follows_shift():
    b = BernoulliShift()
    x = b.start_point(5)
    A = CylinderSet.fixed({0: 1, 2: 0})
    for n in range(20):
        # x in T^n A  iff  T^-n x in A
        assert b.image(A, n).contains(x) == A.contains(b.orbit_point(x, -n))


def test_baker_image_bottom_half():
    k = BakerMap()
    bottom = parse_rectangles("0..1 x 0..1/2")
    assert k.image(bottom, 1) == parse_rectangles("0..1/2 x 0..1")


def test_baker_point_map_matches_coding():
    k = BakerMap()
    x = k.start_point(9)
    for n in range(6):
        bx, by = x.xy(40)
        nx, ny = baker_point_map(F(bx), F(by))
        x2 = k.orbit_point(x, 1)
        cx, cy = x2.xy(40)
        assert abs(float(nx) - cx) < 1e-11 and abs(float(ny) - cy) < 1e-11
        x = x2


def test_torus_is_coordinatewise():
    t = TorusTranslation([F(1, 3), F(2, 7)])
    assert t.orbit_point((F(1, 2), F(1, 2)), 3) == (F(1, 2), F(1, 2) + F(6, 7) - 1)
    box = t.canonical_set(3)
    assert t.image(box, 21) == box


def test_dyadic_enumeration():
    assert [dyadic_index(i) for i in range(1, 8)] == [(1, 0), (1, 1), (2, 0), (2, 1), (2, 2), (2, 3), (3, 0)]
    r = Rotation(0)
    assert r.canonical_set(1) == IntervalSet([(0, F(1, 2))])
    assert r.canonical_set(6) == IntervalSet([(F(3, 4), 1)])


def test_canonical_family_levels_partition_space():
    for sysm in (Rotation(0), BernoulliShift(), BakerMap(), TorusTranslation([0, 0])):
        level3 = [sysm.canonical_set(i) for i in range(7, 15)]
        union = level3[0]
        for s in level3[1:]:
            assert (union & s).is_empty()
            union = union | s
        assert union.measure() == 1


def test_unknown_kind():
    with pytest.raises(DomainError):
        make_system({"kind": "horseshoe"})
