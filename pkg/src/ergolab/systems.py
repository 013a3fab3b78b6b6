"""Concrete measure-preserving systems with exact action on sets and points.

Rotations take exact rational angles.  Irrational angles are replaced by
continued-fraction convergents (``fibonacci(k)`` for the golden rotation,
``silver(k)`` for sqrt(2) - 1); for ``i < q`` the orbit of a convergent
``p/q`` behaves like the irrational rotation, and ``T^q`` is the identity.

Torus ergodicity conditions on the angle vector are not checked; a torus
preset is just the product of its coordinate rotations.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .core_sets import (
    BoxSet,
    CylinderSet,
    DyadicRectangleSet,
    IntervalSet,
    parse_rational,
)
from .errors import DomainError

_BLOCK = 1024


def fibonacci(k: int) -> Fraction:
    """Golden-rotation convergent ``F_k / F_{k+1}`` (``F_1 = F_2 = 1``)."""
    if k < 1:
        raise DomainError("fibonacci preset needs k >= 1")
    a, b = 1, 1
    for _ in range(k - 1):
        a, b = b, a + b
    return Fraction(a, b)


def silver(k: int) -> Fraction:
    """k-th convergent of sqrt(2) - 1 (Pell ratio ``P_k / P_{k+1}``)."""
    if k < 1:
        raise DomainError("silver preset needs k >= 1")
    a, b = 1, 2
    for _ in range(k - 1):
        a, b = b, 2 * b + a
    return Fraction(a, b)


def dyadic_index(i: int) -> tuple[int, int]:
    """Map ``i = 1, 2, ...`` to (level n, position k) of the dyadic enumeration."""
    if i < 1:
        raise DomainError("canonical family is indexed from 1")
    n = 1
    while i > 2 ** (n + 1) - 2:
        n += 1
    return n, i - (2**n - 2) - 1


# ---------------------------------------------------------------------------
# Points


class BitSequence:
    """Seeded, lazily sampled two-sided 0/1 sequence.

    Bits are generated in blocks keyed by ``(seed, block)`` so that any
    coordinate can be read in any order with identical results.  The block
    cache is guarded by a lock; a sequence may be shared across threads.
    """

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._blocks: dict[int, np.ndarray] = {}
        self._lock = threading.Lock()

    def _block(self, b: int) -> np.ndarray:
        with self._lock:
            blk = self._blocks.get(b)
            if blk is None:
                key = 2 * b if b >= 0 else -2 * b - 1
                rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([self.seed, key])))
                blk = rng.integers(0, 2, size=_BLOCK, dtype=np.uint8)
                self._blocks[b] = blk
            return blk

    def __getitem__(self, z: int) -> int:
        b, r = divmod(int(z), _BLOCK)
        return int(self._block(b)[r])

    def window(self, lo: int, hi: int) -> np.ndarray:
        """Bits at coordinates ``lo .. hi - 1``."""
        out = np.empty(hi - lo, dtype=np.uint8)
        z = lo
        while z < hi:
            b, r = divmod(z, _BLOCK)
            take = min(_BLOCK - r, hi - z)
            out[z - lo : z - lo + take] = self._block(b)[r : r + take]
            z += take
        return out


@dataclass(frozen=True)
class SequencePoint:
    """Point of {0,1}^Z: ``coord(z) = bits[z - cursor]``.

    ``cursor`` counts applications of the shift ``T(x)_z = x_{z-1}``.
    """

    bits: BitSequence = field(compare=False)
    cursor: int = 0

    def coord(self, z: int) -> int:
        return self.bits[z - self.cursor]

    def advanced(self, n: int) -> "SequencePoint":
        return SequencePoint(self.bits, self.cursor + n)

    def xy(self, digits: int = 53) -> tuple[float, float]:
        """Baker-square coordinates truncated to ``digits`` binary digits."""
        x = sum(self.coord(i) * 2.0**-i for i in range(1, digits + 1))
        y = sum(self.coord(1 - i) * 2.0**-i for i in range(1, digits + 1))
        return x, y


# ---------------------------------------------------------------------------
# Systems


class Rotation:
    kind = "rotation"
    family = IntervalSet

    def __init__(self, angle):
        angle = parse_rational(angle) if isinstance(angle, str) else Fraction(angle)
        if not 0 <= angle < 1:
            raise DomainError(f"rotation angle {angle} outside [0, 1)")
        self.angle = angle

    def image(self, s: IntervalSet, n: int) -> IntervalSet:
        if not isinstance(s, IntervalSet) or s.ambient != "unit":
            raise DomainError("rotation acts on unit-interval sets")
        return s.translate(n * self.angle)

    def orbit_point(self, x, n: int) -> Fraction:
        return (Fraction(x) + n * self.angle) % 1

    def full_set(self) -> IntervalSet:
        return IntervalSet.full()

    def canonical_set(self, i: int) -> IntervalSet:
        n, k = dyadic_index(i)
        return IntervalSet([(Fraction(k, 2**n), Fraction(k + 1, 2**n))])

    def start_point(self, seed: int) -> Fraction:
        rng = np.random.default_rng(seed)
        return Fraction(int(rng.integers(0, 2**20)), 2**20)

    def describe(self) -> dict:
        return {"kind": self.kind, "angle": f"{self.angle.numerator}/{self.angle.denominator}"}


class TorusTranslation:
    kind = "torus_translation"
    family = BoxSet

    def __init__(self, angles):
        angles = [parse_rational(a) if isinstance(a, str) else Fraction(a) for a in angles]
        if not angles:
            raise DomainError("torus translation needs at least one angle")
        for a in angles:
            if not 0 <= a < 1:
                raise DomainError(f"torus angle {a} outside [0, 1)")
        self.angles = tuple(angles)
        self.dim = len(angles)

    def image(self, s: BoxSet, n: int) -> BoxSet:
        if not isinstance(s, BoxSet) or s.dim != self.dim:
            raise DomainError("torus translation acts on boxes of matching dimension")
        return s.translate([n * a for a in self.angles])

    def orbit_point(self, x, n: int):
        return tuple((Fraction(c) + n * a) % 1 for c, a in zip(x, self.angles))

    def full_set(self) -> BoxSet:
        return BoxSet.full(self.dim)

    def canonical_set(self, i: int) -> BoxSet:
        n, k = dyadic_index(i)
        splits = [n // self.dim + (1 if d < n % self.dim else 0) for d in range(self.dim)]
        box = []
        for s in splits:
            k, pos = divmod(k, 2**s)
            box.append((Fraction(pos, 2**s), Fraction(pos + 1, 2**s)))
        return BoxSet([box], self.dim)

    def start_point(self, seed: int):
        rng = np.random.default_rng(seed)
        return tuple(Fraction(int(v), 2**20) for v in rng.integers(0, 2**20, size=self.dim))

    def describe(self) -> dict:
        return {"kind": self.kind, "angles": [f"{a.numerator}/{a.denominator}" for a in self.angles]}


class BernoulliShift:
    """Two-sided (1/2, 1/2) Bernoulli shift ``T(x)_z = x_{z-1}``."""

    kind = "bernoulli"
    family = CylinderSet

    def image(self, s: CylinderSet, n: int) -> CylinderSet:
        if not isinstance(s, CylinderSet):
            raise DomainError("bernoulli shift acts on cylinder sets")
        return s.shift(n)

    def orbit_point(self, x: SequencePoint, n: int) -> SequencePoint:
        return x.advanced(n)

    def full_set(self) -> CylinderSet:
        return CylinderSet.full()

    def canonical_set(self, i: int) -> CylinderSet:
        n, k = dyadic_index(i)
        start = -(n // 2)
        return CylinderSet.fixed({start + t: (k >> (n - 1 - t)) & 1 for t in range(n)})

    def start_point(self, seed: int) -> SequencePoint:
        return SequencePoint(BitSequence(seed))

    def describe(self) -> dict:
        return {"kind": self.kind}


class BakerMap:
    """Baker's transformation, acting on dyadic rectangles through the binary coding."""

    kind = "baker"
    family = DyadicRectangleSet

    def image(self, s: DyadicRectangleSet, n: int) -> DyadicRectangleSet:
        if not isinstance(s, DyadicRectangleSet):
            raise DomainError("baker's map acts on dyadic rectangle sets")
        return DyadicRectangleSet(cylinder=s.cylinder.shift(n))

    def orbit_point(self, x: SequencePoint, n: int) -> SequencePoint:
        return x.advanced(n)

    def full_set(self) -> DyadicRectangleSet:
        return DyadicRectangleSet.full()

    def canonical_set(self, i: int) -> DyadicRectangleSet:
        return DyadicRectangleSet(cylinder=BernoulliShift().canonical_set(i))

    def start_point(self, seed: int) -> SequencePoint:
        return SequencePoint(BitSequence(seed))

    def describe(self) -> dict:
        return {"kind": self.kind}


def baker_point_map(x: Fraction, y: Fraction) -> tuple[Fraction, Fraction]:
    """One step of the baker's map on exact coordinates."""
    b = 1 if y >= Fraction(1, 2) else 0
    return (x + b) / 2, 2 * y - b


@dataclass(frozen=True)
class SystemSpec:
    kind: str
    angle: Fraction | None = None
    angles: tuple | None = None


def make_system(spec):
    """Build a system from a :class:`SystemSpec` or its JSON form.

    JSON forms: ``{"kind": "rotation", "angle": "610/987"}``,
    ``{"kind": "rotation", "preset": "fibonacci", "k": 15}``,
    ``{"kind": "torus_translation", "angles": ["1/3", "2/5"]}``,
    ``{"kind": "bernoulli"}``, ``{"kind": "baker"}``.
    """
    if isinstance(spec, SystemSpec):
        spec = {"kind": spec.kind, "angle": spec.angle, "angles": spec.angles}
    if not isinstance(spec, dict) or "kind" not in spec:
        raise DomainError("system spec needs a 'kind'")
    kind = spec["kind"]
    if kind == "rotation":
        if spec.get("preset"):
            k = int(spec.get("k", 15))
            presets = {"fibonacci": fibonacci, "golden": fibonacci, "silver": silver}
            if spec["preset"] not in presets:
                raise DomainError(f"unknown rotation preset {spec['preset']!r}")
            return Rotation(presets[spec["preset"]](k))
        if spec.get("angle") is None:
            raise DomainError("rotation needs an 'angle'")
        return Rotation(parse_rational(spec["angle"]) if isinstance(spec["angle"], str) else spec["angle"])
    if kind in ("torus", "torus_translation"):
        return TorusTranslation(spec.get("angles") or ())
    if kind == "bernoulli":
        return BernoulliShift()
    if kind == "baker":
        return BakerMap()
    raise DomainError(f"unknown system kind {kind!r}")


def image(sys, s, n: int):
    return sys.image(s, n)


def orbit_point(sys, x, n: int):
    return sys.orbit_point(x, n)
