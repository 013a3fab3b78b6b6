"""Exact measurable-set algebra and partition entropy.

Four set families are supported, all with exact :class:`fractions.Fraction`
measures:

* :class:`IntervalSet` -- finite unions of half-open rational intervals on
  ``[0, 1)`` (``ambient="unit"``) or on the ray ``[0, inf)`` (``"ray"``).
* :class:`CylinderSet` -- cylinders of the two-sided 0/1 shift with the
  uniform Bernoulli measure.
* :class:`DyadicRectangleSet` -- finite unions of dyadic rectangles in the
  unit square (the baker's map domain).
* :class:`BoxSet` -- finite unions of rational boxes on a torus.
"""
from __future__ import annotations

import math
import re
from collections import Counter
from fractions import Fraction
from itertools import product
from typing import Iterable, Sequence

from .errors import DomainError, ResourceError

DEFAULT_JOIN_CAP = 2**20

_RATIONAL_RE = re.compile(r"^\s*([+-]?\d+)\s*(?:/\s*(\d+)\s*)?$")


def parse_rational(text) -> Fraction:
    """Parse ``"p/q"`` (or an integer) into a reduced Fraction."""
    if isinstance(text, Fraction):
        return text
    if isinstance(text, int) and not isinstance(text, bool):
        return Fraction(text)
    if not isinstance(text, str):
        raise DomainError(f"expected a rational string 'p/q', got {text!r}")
    m = _RATIONAL_RE.match(text)
    if not m:
        raise DomainError(f"malformed rational {text!r}")
    num = int(m.group(1))
    den = int(m.group(2)) if m.group(2) is not None else 1
    if den == 0:
        raise DomainError(f"zero denominator in {text!r}")
    return Fraction(num, den)


def format_rational(q: Fraction) -> str:
    q = Fraction(q)
    return f"{q.numerator}/{q.denominator}"


# ---------------------------------------------------------------------------
# Intervals


def _merge(pairs: Iterable[tuple[Fraction, Fraction]]) -> tuple:
    pts = sorted((l, r) for l, r in pairs if r > l)
    out: list[list[Fraction]] = []
    for l, r in pts:
        if out and l <= out[-1][1]:
            if r > out[-1][1]:
                out[-1][1] = r
        else:
            out.append([l, r])
    return tuple((l, r) for l, r in out)


class IntervalSet:
    """Finite disjoint union of half-open intervals ``[l, r)``.

    Intervals are kept sorted and merged, so two sets are equal iff their
    interval tuples are equal.
    """

    __slots__ = ("intervals", "ambient")
    family = "interval"

    def __init__(self, intervals=(), ambient: str = "unit"):
        if ambient not in ("unit", "ray"):
            raise DomainError(f"unknown ambient {ambient!r}")
        pairs = [(Fraction(l), Fraction(r)) for l, r in intervals]
        for l, r in pairs:
            if l < 0 or (ambient == "unit" and r > 1):
                raise DomainError(f"interval [{l}, {r}) outside the {ambient} ambient")
        self.intervals = _merge(pairs)
        self.ambient = ambient

    @classmethod
    def full(cls) -> "IntervalSet":
        return cls([(0, 1)], "unit")

    @classmethod
    def empty(cls, ambient="unit") -> "IntervalSet":
        return cls((), ambient)

    def measure(self) -> Fraction:
        return sum((r - l for l, r in self.intervals), Fraction(0))

    def is_empty(self) -> bool:
        return not self.intervals

    def _check(self, other):
        if not isinstance(other, IntervalSet):
            raise DomainError("set family mismatch")
        if other.ambient != self.ambient:
            raise DomainError("ambient mismatch")

    def __and__(self, other: "IntervalSet") -> "IntervalSet":
        self._check(other)
        a, b = self.intervals, other.intervals
        i = j = 0
        out = []
        while i < len(a) and j < len(b):
            l = max(a[i][0], b[j][0])
            r = min(a[i][1], b[j][1])
            if l < r:
                out.append((l, r))
            if a[i][1] < b[j][1]:
                i += 1
            else:
                j += 1
        return IntervalSet(out, self.ambient)

    def __or__(self, other: "IntervalSet") -> "IntervalSet":
        self._check(other)
        return IntervalSet(self.intervals + other.intervals, self.ambient)

    def complement(self, window=None) -> "IntervalSet":
        """Complement inside ``window`` (default ``[0,1)``; required on the ray)."""
        if window is None:
            if self.ambient == "ray":
                raise DomainError("complement on the ray needs an explicit window")
            window = (Fraction(0), Fraction(1))
        lo, hi = Fraction(window[0]), Fraction(window[1])
        out = []
        cur = lo
        for l, r in self.intervals:
            if r <= lo or l >= hi:
                continue
            if l > cur:
                out.append((cur, min(l, hi)))
            cur = max(cur, r)
        if cur < hi:
            out.append((cur, hi))
        return IntervalSet(out, self.ambient)

    def __sub__(self, other: "IntervalSet") -> "IntervalSet":
        self._check(other)
        if not self.intervals:
            return self
        window = (self.intervals[0][0], self.intervals[-1][1])
        return self & other.complement(window)

    def __xor__(self, other: "IntervalSet") -> "IntervalSet":
        return (self - other) | (other - self)

    def translate(self, t: Fraction) -> "IntervalSet":
        """Shift by ``t`` modulo 1 (unit ambient only)."""
        t = Fraction(t) % 1
        out = []
        for l, r in self.intervals:
            l2, r2 = l + t, r + t
            if r2 <= 1:
                out.append((l2, r2))
            elif l2 >= 1:
                out.append((l2 - 1, r2 - 1))
            else:
                out.append((l2, Fraction(1)))
                out.append((Fraction(0), r2 - 1))
        return IntervalSet(out, self.ambient)

    def contains(self, x) -> bool:
        for l, r in self.intervals:
            if l <= x < r:
                return True
            if x < l:
                return False
        return False

    def __eq__(self, other):
        return (
            isinstance(other, IntervalSet)
            and self.ambient == other.ambient
            and self.intervals == other.intervals
        )

    def __hash__(self):
        return hash((self.ambient, self.intervals))

    def __repr__(self):
        body = ", ".join(f"[{l}, {r})" for l, r in self.intervals) or "empty"
        return f"IntervalSet({body})"

    def to_literal(self) -> str:
        return ",".join(f"{format_rational(l)}..{format_rational(r)}" for l, r in self.intervals)


# ---------------------------------------------------------------------------
# Cylinders


class CylinderSet:
    """A finite union of cylinders in {0,1}^Z.

    Stored as a sorted tuple of fixed coordinates and a set of admissible
    words; bit ``k`` of a word is the value at ``coords[k]``.  The canonical
    form drops every coordinate on which the word set does not depend, so
    ``window`` is the minimal coordinate range.
    """

    __slots__ = ("coords", "words")
    family = "cylinder"

    def __init__(self, coords: Sequence[int] = (), words: Iterable[int] = (0,)):
        coords = tuple(int(c) for c in coords)
        if len(set(coords)) != len(coords):
            raise DomainError("repeated coordinate in cylinder")
        words = frozenset(int(w) for w in words)
        n = len(coords)
        if any(w < 0 or w >> n for w in words):
            raise DomainError("word longer than coordinate list")
        order = sorted(range(n), key=lambda k: coords[k])
        if order != list(range(n)):
            words = frozenset(_permute_bits(w, order) for w in words)
            coords = tuple(coords[k] for k in order)
        self.coords, self.words = _canonical_cylinder(coords, words)

    @classmethod
    def fixed(cls, assignment: dict[int, int]) -> "CylinderSet":
        """Cylinder fixing ``{coordinate: bit}``."""
        coords = sorted(assignment)
        word = 0
        for k, c in enumerate(coords):
            b = assignment[c]
            if b not in (0, 1):
                raise DomainError(f"bit value {b!r} at coordinate {c}")
            word |= b << k
        return cls(coords, [word])

    @classmethod
    def full(cls) -> "CylinderSet":
        return cls((), (0,))

    @classmethod
    def empty(cls) -> "CylinderSet":
        return cls((), ())

    @property
    def window(self):
        if not self.coords:
            return None
        return (self.coords[0], self.coords[-1])

    def measure(self) -> Fraction:
        return Fraction(len(self.words), 2 ** len(self.coords))

    def is_empty(self) -> bool:
        return not self.words

    def shift(self, n: int) -> "CylinderSet":
        return CylinderSet(tuple(c + n for c in self.coords), self.words)

    def expand(self, coords: Sequence[int]) -> frozenset:
        """Words of this set re-expressed over the (sorted, superset) ``coords``."""
        index = {c: k for k, c in enumerate(coords)}
        pos = [index[c] for c in self.coords]
        free = [k for k, c in enumerate(coords) if c not in set(self.coords)]
        out = set()
        for w in self.words:
            base = 0
            for k, p in enumerate(pos):
                if (w >> k) & 1:
                    base |= 1 << p
            for bits in range(2 ** len(free)):
                x = base
                for t, p in enumerate(free):
                    if (bits >> t) & 1:
                        x |= 1 << p
                out.add(x)
        return frozenset(out)

    def _check(self, other):
        if not isinstance(other, CylinderSet):
            raise DomainError("set family mismatch")

    def __and__(self, other: "CylinderSet") -> "CylinderSet":
        self._check(other)
        coords = tuple(sorted(set(self.coords) | set(other.coords)))
        index = {c: k for k, c in enumerate(coords)}
        pa = [index[c] for c in self.coords]
        pb = [index[c] for c in other.coords]
        la = [_scatter(w, pa) for w in self.words]
        lb = [_scatter(w, pb) for w in other.words]
        shared = 0
        for c in set(self.coords) & set(other.coords):
            shared |= 1 << index[c]
        words = {a | b for a in la for b in lb if (a & shared) == (b & shared)}
        return CylinderSet(coords, words)

    def __or__(self, other: "CylinderSet") -> "CylinderSet":
        self._check(other)
        coords = tuple(sorted(set(self.coords) | set(other.coords)))
        return CylinderSet(coords, self.expand(coords) | other.expand(coords))

    def __sub__(self, other: "CylinderSet") -> "CylinderSet":
        self._check(other)
        coords = tuple(sorted(set(self.coords) | set(other.coords)))
        return CylinderSet(coords, self.expand(coords) - other.expand(coords))

    def __xor__(self, other: "CylinderSet") -> "CylinderSet":
        self._check(other)
        coords = tuple(sorted(set(self.coords) | set(other.coords)))
        return CylinderSet(coords, self.expand(coords) ^ other.expand(coords))

    def complement(self, window=None) -> "CylinderSet":
        all_words = frozenset(range(2 ** len(self.coords)))
        return CylinderSet(self.coords, all_words - self.words)

    def contains(self, point) -> bool:
        """Membership of a point exposing ``coord(z) -> bit``."""
        w = 0
        for k, c in enumerate(self.coords):
            w |= point.coord(c) << k
        return w in self.words

    def __eq__(self, other):
        return (
            isinstance(other, CylinderSet)
            and self.coords == other.coords
            and self.words == other.words
        )

    def __hash__(self):
        return hash((self.coords, self.words))

    def __repr__(self):
        return f"CylinderSet(coords={self.coords}, words={sorted(self.words)})"

    def to_literal(self) -> str:
        if len(self.words) == 1 and self.coords:
            (w,) = self.words
            body = ",".join(f"{c}:{(w >> k) & 1}" for k, c in enumerate(self.coords))
            return "{" + body + "}"
        return repr(self)


def _scatter(w: int, positions: list[int]) -> int:
    x = 0
    for k, p in enumerate(positions):
        if (w >> k) & 1:
            x |= 1 << p
    return x


def _permute_bits(w: int, order: list[int]) -> int:
    # new bit k takes old bit order[k]
    x = 0
    for k, old in enumerate(order):
        if (w >> old) & 1:
            x |= 1 << k
    return x


def _canonical_cylinder(coords: tuple, words: frozenset):
    if not words:
        return (), frozenset()
    keep = []
    for k in range(len(coords)):
        bit = 1 << k
        if not all((w ^ bit) in words for w in words):
            keep.append(k)
    if len(keep) == len(coords):
        return coords, words
    new_words = frozenset(
        sum(((w >> k) & 1) << t for t, k in enumerate(keep)) for w in words
    )
    return tuple(coords[k] for k in keep), new_words


# ---------------------------------------------------------------------------
# Dyadic rectangles (baker's map)


def _dyadic_pieces(l: Fraction, r: Fraction) -> list[tuple[int, int]]:
    """Split ``[l, r)`` into maximal aligned dyadic intervals ``(depth, index)``."""
    for q in (l, r):
        d = q.denominator
        if d & (d - 1):
            raise DomainError(f"{q} is not a dyadic rational")
    out = []
    cur = l
    while cur < r:
        depth = 0
        while True:
            size = Fraction(1, 2**depth)
            if (cur / size).denominator == 1 and cur + size <= r:
                break
            depth += 1
        out.append((depth, int(cur * 2**depth)))
        cur += Fraction(1, 2**depth)
    return out


def _rect_to_cylinder(xl, xr, yl, yr) -> CylinderSet:
    # x digit i (i >= 1) is coordinate i; y digit i is coordinate 1 - i
    result = CylinderSet.empty()
    for dx, kx in _dyadic_pieces(Fraction(xl), Fraction(xr)):
        for dy, ky in _dyadic_pieces(Fraction(yl), Fraction(yr)):
            assign = {}
            for i in range(1, dx + 1):
                assign[i] = (kx >> (dx - i)) & 1
            for i in range(1, dy + 1):
                assign[1 - i] = (ky >> (dy - i)) & 1
            result = result | CylinderSet.fixed(assign)
    return result


class DyadicRectangleSet:
    """Finite union of dyadic rectangles in ``[0,1)^2``.

    Internally coded as a cylinder set through the binary digits of the two
    coordinates (x digits on coordinates 1, 2, ...; y digits on 0, -1, ...),
    which is the coding under which the baker's map is the shift.
    """

    __slots__ = ("cylinder",)
    family = "rectangle"

    def __init__(self, rectangles=(), *, cylinder: CylinderSet | None = None):
        if cylinder is None:
            cylinder = CylinderSet.empty()
            for (xl, xr), (yl, yr) in rectangles:
                cylinder = cylinder | _rect_to_cylinder(xl, xr, yl, yr)
        self.cylinder = cylinder

    @classmethod
    def full(cls):
        return cls(cylinder=CylinderSet.full())

    @property
    def rectangles(self) -> list[tuple[tuple[Fraction, Fraction], tuple[Fraction, Fraction]]]:
        cyl = self.cylinder
        xs = [c for c in cyl.coords if c >= 1]
        ys = [c for c in cyl.coords if c <= 0]
        a = max(xs) if xs else 0
        b = 1 - min(ys) if ys else 0
        coords = tuple(range(1 - b, a + 1))
        out = []
        for w in sorted(cyl.expand(coords)):
            bits = {c: (w >> k) & 1 for k, c in enumerate(coords)}
            kx = sum(bits[i] << (a - i) for i in range(1, a + 1))
            ky = sum(bits[1 - i] << (b - i) for i in range(1, b + 1))
            out.append(
                (
                    (Fraction(kx, 2**a), Fraction(kx + 1, 2**a)),
                    (Fraction(ky, 2**b), Fraction(ky + 1, 2**b)),
                )
            )
        return sorted(out)

    def measure(self) -> Fraction:
        return self.cylinder.measure()

    def is_empty(self) -> bool:
        return self.cylinder.is_empty()

    def _check(self, other):
        if not isinstance(other, DyadicRectangleSet):
            raise DomainError("set family mismatch")

    def __and__(self, other):
        self._check(other)
        return DyadicRectangleSet(cylinder=self.cylinder & other.cylinder)

    def __or__(self, other):
        self._check(other)
        return DyadicRectangleSet(cylinder=self.cylinder | other.cylinder)

    def __sub__(self, other):
        self._check(other)
        return DyadicRectangleSet(cylinder=self.cylinder - other.cylinder)

    def __xor__(self, other):
        self._check(other)
        return DyadicRectangleSet(cylinder=self.cylinder ^ other.cylinder)

    def complement(self, window=None):
        return DyadicRectangleSet(cylinder=self.cylinder.complement())

    def contains(self, point) -> bool:
        return self.cylinder.contains(point)

    def __eq__(self, other):
        return isinstance(other, DyadicRectangleSet) and self.cylinder == other.cylinder

    def __hash__(self):
        return hash(("rect", self.cylinder))

    def __repr__(self):
        return f"DyadicRectangleSet({self.rectangles})"

    def to_literal(self) -> str:
        return ";".join(
            f"{format_rational(xl)}..{format_rational(xr)} x {format_rational(yl)}..{format_rational(yr)}"
            for (xl, xr), (yl, yr) in self.rectangles
        )


# ---------------------------------------------------------------------------
# Boxes on the torus


def _box_minus(a, b):
    """``a \\ b`` for single boxes, as a list of disjoint boxes."""
    inter = [(max(al, bl), min(ar, br)) for (al, ar), (bl, br) in zip(a, b)]
    if any(l >= r for l, r in inter):
        return [a]
    out = []
    rest = list(a)
    for d, (il, ir) in enumerate(inter):
        al, ar = rest[d]
        if al < il:
            out.append(tuple(rest[:d] + [(al, il)] + rest[d + 1 :]))
        if ir < ar:
            out.append(tuple(rest[:d] + [(ir, ar)] + rest[d + 1 :]))
        rest[d] = (il, ir)
    return out


class BoxSet:
    """Finite disjoint union of half-open rational boxes in ``[0,1)^d``."""

    __slots__ = ("dim", "boxes")
    family = "box"

    def __init__(self, boxes=(), dim: int | None = None):
        boxes = [tuple((Fraction(l), Fraction(r)) for l, r in box) for box in boxes]
        if dim is None:
            if not boxes:
                raise DomainError("dimension needed for an empty box set")
            dim = len(boxes[0])
        disjoint: list = []
        for box in boxes:
            if len(box) != dim:
                raise DomainError("box dimension mismatch")
            if any(l < 0 or r > 1 for l, r in box):
                raise DomainError("box outside the unit torus")
            if any(l >= r for l, r in box):
                continue
            pieces = [box]
            for d in disjoint:
                pieces = [p for q in pieces for p in _box_minus(q, d)]
            disjoint.extend(pieces)
        self.dim = dim
        self.boxes = tuple(sorted(disjoint))

    @classmethod
    def full(cls, dim: int):
        return cls([tuple((0, 1) for _ in range(dim))], dim)

    def measure(self) -> Fraction:
        total = Fraction(0)
        for box in self.boxes:
            v = Fraction(1)
            for l, r in box:
                v *= r - l
            total += v
        return total

    def is_empty(self) -> bool:
        return not self.boxes

    def _check(self, other):
        if not isinstance(other, BoxSet) or other.dim != self.dim:
            raise DomainError("set family mismatch")

    def __and__(self, other):
        self._check(other)
        out = []
        for a in self.boxes:
            for b in other.boxes:
                inter = tuple((max(al, bl), min(ar, br)) for (al, ar), (bl, br) in zip(a, b))
                if all(l < r for l, r in inter):
                    out.append(inter)
        return BoxSet(out, self.dim)

    def __sub__(self, other):
        self._check(other)
        pieces = list(self.boxes)
        for b in other.boxes:
            pieces = [p for q in pieces for p in _box_minus(q, b)]
        return BoxSet(pieces, self.dim)

    def __or__(self, other):
        self._check(other)
        return BoxSet(list(self.boxes) + list((other - self).boxes), self.dim)

    def __xor__(self, other):
        return (self - other) | (other - self)

    def complement(self, window=None):
        return BoxSet.full(self.dim) - self

    def translate(self, shifts) -> "BoxSet":
        out = []
        for box in self.boxes:
            per_dim = []
            for (l, r), t in zip(box, shifts):
                per_dim.append(IntervalSet([(l, r)]).translate(t).intervals)
            out.extend(product(*per_dim))
        return BoxSet(out, self.dim)

    def contains(self, point) -> bool:
        return any(all(l <= x < r for x, (l, r) in zip(point, box)) for box in self.boxes)

    def __eq__(self, other):
        return isinstance(other, BoxSet) and self.dim == other.dim and (self ^ other).is_empty()

    def __hash__(self):
        return hash(("box", self.dim, self.measure()))

    def __repr__(self):
        return f"BoxSet({list(self.boxes)})"

    def to_literal(self) -> str:
        return ";".join(
            " x ".join(f"{format_rational(l)}..{format_rational(r)}" for l, r in box)
            for box in self.boxes
        )


# ---------------------------------------------------------------------------
# Generic operations

_OPS = {
    "intersect": lambda a, b: a & b,
    "union": lambda a, b: a | b,
    "symdiff": lambda a, b: a ^ b,
    "difference": lambda a, b: a - b,
}


def measure(s) -> Fraction:
    return s.measure()


def algebra(a, b, op: str):
    """Apply a set operation: intersect, union, symdiff, difference, complement-in-window.

    For ``complement-in-window`` the second argument is the window (a pair
    of rationals for interval sets; ignored for the other families).
    """
    if op == "complement-in-window":
        return a.complement(b)
    if type(a) is not type(b):
        raise DomainError(f"family mismatch: {type(a).__name__} vs {type(b).__name__}")
    try:
        return _OPS[op](a, b)
    except KeyError:
        raise DomainError(f"unknown set operation {op!r}") from None


# ---------------------------------------------------------------------------
# Partitions and entropy


def xlogx_sum(masses: Iterable[Fraction]) -> float:
    """``-sum p ln p`` over exact rational masses, with ``0 ln 0 = 0``."""
    counts = Counter(Fraction(p) for p in masses if p != 0)
    terms = []
    for p, c in counts.items():
        if p < 0:
            raise DomainError("negative mass")
        logp = math.log(p.numerator) - math.log(p.denominator)
        terms.append(-c * float(p) * logp)
    return math.fsum(terms)


class Partition:
    """Finite measurable partition: disjoint cells with labels."""

    def __init__(self, cells, labels=None, *, total: Fraction | None = None, check: bool = True):
        self.cells = list(cells)
        if labels is None:
            labels = list(range(len(self.cells)))
        self.labels = list(labels)
        if len(self.labels) != len(self.cells):
            raise DomainError("one label per cell")
        if check:
            fams = {type(c) for c in self.cells}
            if len(fams) > 1:
                raise DomainError("partition cells from different set families")
            for i in range(len(self.cells)):
                for k in range(i + 1, len(self.cells)):
                    if not (self.cells[i] & self.cells[k]).is_empty():
                        raise DomainError(f"cells {self.labels[i]!r} and {self.labels[k]!r} overlap")
            s = sum((c.measure() for c in self.cells), Fraction(0))
            if total is None and self.cells and _is_probability(self.cells[0]):
                total = Fraction(1)
            if total is not None and s != total:
                raise DomainError(f"cell measures sum to {s}, expected {total}")
        self.total = sum((c.measure() for c in self.cells), Fraction(0))

    def __len__(self):
        return len(self.cells)

    def masses(self) -> list[Fraction]:
        return [c.measure() for c in self.cells]

    def image(self, system, n: int) -> "Partition":
        return Partition(
            [system.image(c, n) for c in self.cells], self.labels, check=False
        )

    def __repr__(self):
        return f"Partition({len(self.cells)} cells)"


def _is_probability(cell) -> bool:
    return not (isinstance(cell, IntervalSet) and cell.ambient == "ray")


def partition_entropy(xi: Partition) -> float:
    """Entropy ``-sum mu(C) ln mu(C)`` with measures normalized to the total."""
    if xi.total == 0:
        return 0.0
    return xlogx_sum(m / xi.total for m in xi.masses())


def join(xi: Partition, eta: Partition, cap: int = DEFAULT_JOIN_CAP) -> Partition:
    """Common refinement: all non-empty pairwise intersections."""
    cells, labels = [], []
    for c1, l1 in zip(xi.cells, xi.labels):
        for c2, l2 in zip(eta.cells, eta.labels):
            c = c1 & c2
            if not c.is_empty():
                if len(cells) >= cap:
                    raise ResourceError(f"join exceeds the cell cap {cap}")
                cells.append(c)
                labels.append(_flat(l1) + _flat(l2))
    return Partition(cells, labels, check=False)


def _flat(label):
    return label if isinstance(label, tuple) else (label,)


def join_all(parts: Sequence[Partition], cap: int = DEFAULT_JOIN_CAP) -> Partition:
    if not parts:
        raise DomainError("join of no partitions")
    out = parts[0]
    out = Partition(out.cells, [_flat(l) for l in out.labels], check=False)
    for p in parts[1:]:
        out = join(out, p, cap)
    return out


# ---------------------------------------------------------------------------
# Literal syntax

_CYL_RE = re.compile(r"^\s*\{(.*)\}\s*$")


def parse_interval_list(text, ambient="unit") -> IntervalSet:
    """``"0..1/4,1/2..3/4"`` or a list of ``"l..r"`` strings."""
    parts = text if isinstance(text, (list, tuple)) else [p for p in str(text).split(",") if p.strip()]
    pairs = []
    for part in parts:
        if ".." not in part:
            raise DomainError(f"interval literal {part!r} lacks '..'")
        l, r = part.split("..", 1)
        pairs.append((parse_rational(l), parse_rational(r)))
    return IntervalSet(pairs, ambient)


def parse_cylinder(text) -> CylinderSet:
    """``"{0:0,3:1}"`` -> cylinder fixing x_0 = 0 and x_3 = 1."""
    if isinstance(text, dict):
        return CylinderSet.fixed({int(k): int(v) for k, v in text.items()})
    m = _CYL_RE.match(str(text))
    if not m:
        raise DomainError(f"malformed cylinder literal {text!r}")
    assign = {}
    body = m.group(1).strip()
    if body:
        for item in body.split(","):
            try:
                k, v = item.split(":")
                assign[int(k)] = int(v)
            except ValueError:
                raise DomainError(f"malformed cylinder entry {item!r}") from None
    return CylinderSet.fixed(assign)


def _parse_box_pieces(text) -> list[list[tuple[Fraction, Fraction]]]:
    out = []
    for chunk in str(text).split(";"):
        if not chunk.strip():
            continue
        box = []
        for side in chunk.split("x"):
            l, r = side.split("..", 1)
            box.append((parse_rational(l), parse_rational(r)))
        out.append(box)
    return out


def parse_rectangles(text) -> DyadicRectangleSet:
    """``"0..1/2 x 0..1; 1/2..1 x 0..1/4"``."""
    rects = _parse_box_pieces(text)
    if any(len(r) != 2 for r in rects):
        raise DomainError("rectangles need exactly two sides")
    return DyadicRectangleSet([(r[0], r[1]) for r in rects])


def parse_boxes(text, dim: int) -> BoxSet:
    boxes = _parse_box_pieces(text)
    return BoxSet(boxes, dim)
