"""Orbit averages, norm decay of ergodic averages and multiple recurrence."""
from __future__ import annotations

import bisect
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm
from typing import Sequence

import numpy as np

from . import koopman, rank_one
from .core_sets import IntervalSet
from .errors import DomainError
from .rank_one import LevelSet, RankOneSpec
from .spectral import Autocovariance, FunctionSpec
from .systems import Rotation

DEFAULT_BUDGET = 10**6


# ---------------------------------------------------------------------------
# Orbit evaluation


class _RotationWalker:
    """Integer-arithmetic orbit of a rotation evaluated against a simple function."""

    def __init__(self, rot: Rotation, f: FunctionSpec, x):
        x = Fraction(x) % 1
        dens = [x.denominator, rot.angle.denominator]
        for _, s in f.terms:
            if not isinstance(s, IntervalSet):
                raise DomainError("rotation functions are built from interval sets")
            for l, r in s.intervals:
                dens += [l.denominator, r.denominator]
        self.D = lcm(*dens)
        self.step = int(rot.angle * self.D)
        self.pos = int(x * self.D)
        cuts = sorted({0, self.D} | {int(e * self.D) for _, s in f.terms for iv in s.intervals for e in iv})
        self.breaks = cuts
        mean = f.mean() if f.center else Fraction(0)
        vals = []
        for a in cuts[:-1]:
            pt = Fraction(a, self.D)
            vals.append(sum((q for q, s in f.terms if s.contains(pt)), Fraction(0)) - mean)
        self.vals = vals
        self.integer = all(v.denominator == 1 for v in vals)
        if self.integer:
            self.vals = [int(v) for v in vals]

    def value(self):
        return self.vals[bisect.bisect_right(self.breaks, self.pos) - 1]

    def advance(self):
        self.pos = (self.pos + self.step) % self.D


class _GenericWalker:
    def __init__(self, target, f: FunctionSpec, x):
        self.target, self.f, self.x = target, f, x

    def value(self):
        return self.f(self.x)

    def advance(self):
        self.x = self.target.orbit_point(self.x, 1)


def _walker(target, f: FunctionSpec, x):
    if isinstance(target, RankOneSpec):
        raise DomainError("rank-one constructions have no point dynamics here")
    if isinstance(target, Rotation):
        return _RotationWalker(target, f, x)
    return _GenericWalker(target, f, x)


@dataclass
class OrbitAverage:
    point: object
    N: int
    sums: list = field(repr=False)

    @property
    def average(self) -> Fraction:
        return Fraction(self.sums[-1]) / self.N

    def averages(self):
        return [Fraction(s) / n for n, s in enumerate(self.sums, 1)]

    def to_rows(self):
        return [(n, s / n) for n, s in enumerate(map(Fraction, self.sums), 1)]


def birkhoff_average(target, f: FunctionSpec, x, N: int) -> OrbitAverage:
    """Running sums of ``f(T^i x)`` for ``i = 1..N`` (exact values)."""
    if N < 1:
        raise DomainError("N must be >= 1")
    w = _walker(target, f, x)
    sums, acc = [], 0
    for _ in range(N):
        w.advance()
        acc += w.value()
        sums.append(acc)
    return OrbitAverage(x, N, sums)


def vn_norm(ac: Autocovariance, N: int) -> float:
    """``|| (1/N) sum_{i=1}^N U^i f ||`` from the autocovariances.

    Uses ``sum_{i,k} sigma_hat(i - k) = N sigma_hat(0) + 2 sum_{d=1}^{N-1} (N - d) Re sigma_hat(d)``.
    """
    if N < 1:
        raise DomainError("N must be >= 1")
    if ac.N < N - 1:
        raise DomainError(f"norm at N = {N} needs lags up to {N - 1}, have {ac.N}")
    if ac.exact:
        s = N * Fraction(ac[0]) + 2 * sum(((N - d) * Fraction(ac[d]) for d in range(1, N)), Fraction(0))
        return math.sqrt(max(s / N**2, 0))
    sig = ac.array(N - 1).real
    d = np.arange(1, N)
    s = N * sig[0] + 2 * float(np.sum((N - d) * sig[1:]))
    return math.sqrt(max(s / N**2, 0.0))


# ---------------------------------------------------------------------------
# Multiple recurrence


def _multi_term(target, A, sets: Sequence, i: int, tol=None):
    """Bounds on ``mu(A ∩ T^i A_1 ∩ ... ∩ T^{ki} A_k)``."""
    if isinstance(target, RankOneSpec):
        return rank_one.meet(target, A, [(S, m * i) for m, S in enumerate(sets, 1)], tol)
    acc = A
    for m, S in enumerate(sets, 1):
        acc = acc & target.image(S, m * i)
        if acc.is_empty():
            return Fraction(0), Fraction(0)
    v = acc.measure()
    return v, v


@dataclass
class MultirecSeries:
    terms: list
    averages: list
    exact: bool

    def to_rows(self):
        return [(i, t[0], t[1], a[0], a[1]) for i, (t, a) in enumerate(zip(self.terms, self.averages), 1)]


def multirec_average(target, A, sets: Sequence, N: int, tol=None, threads: int = 1) -> MultirecSeries:
    """Running averages of ``mu(A ∩ T^i A_1 ∩ ... ∩ T^{ki} A_k)`` over ``i = 1..N``."""
    if not sets:
        raise DomainError("multiple recurrence needs k >= 1 sets")
    if len({type(s) for s in [A, *sets]}) > 1:
        raise DomainError("sets from different families")
    if N < 1:
        raise DomainError("N must be >= 1")
    idx = range(1, N + 1)
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            terms = list(ex.map(lambda i: _multi_term(target, A, sets, i, tol), idx))
    else:
        terms = [_multi_term(target, A, sets, i, tol) for i in idx]
    avgs, lo, hi = [], Fraction(0), Fraction(0)
    for n, (a, b) in enumerate(terms, 1):
        lo += a
        hi += b
        avgs.append((lo / n, hi / n))
    return MultirecSeries(terms, avgs, all(a == b for a, b in terms))


@dataclass
class RecurrenceReport:
    i_min: int | None
    witness: tuple | None
    i_max: int
    indeterminate: list = field(default_factory=list)

    @property
    def certified(self) -> bool:
        """True when every ``i`` below ``i_min`` (or up to ``i_max``) is certified zero."""
        return not self.indeterminate

    def to_dict(self) -> dict:
        w = None if self.witness is None else [str(self.witness[0]), str(self.witness[1])]
        return {
            "i_min": self.i_min,
            "witness": w,
            "i_max": self.i_max,
            "indeterminate": self.indeterminate,
            "certified": self.certified,
        }


def roth_min_i(target, A, i_max: int, tol=None) -> RecurrenceReport:
    """Smallest ``i`` with ``mu(A ∩ T^i A ∩ T^{2i} A) > 0``.

    Rank-one bounds count as positive only when ``lo > 0`` and as zero only
    when ``hi == 0``; anything between is listed as indeterminate.
    """
    if koopman.measure_of(target, A) == 0:
        raise DomainError("A must have positive measure")
    undecided = []
    for i in range(1, i_max + 1):
        lo, hi = _multi_term(target, A, [A, A], i, tol)
        if lo > 0:
            return RecurrenceReport(i, (lo, hi), i_max, undecided)
        if hi > 0:
            undecided.append(i)
    return RecurrenceReport(None, None, i_max, undecided)


def cocycle_first_zero(target, f: FunctionSpec, x, N_floor: int = 0, budget: int = DEFAULT_BUDGET):
    """Smallest ``N > N_floor`` with ``sum_{i=0}^{N-1} f(T^i x) = 0``, or ``None``.

    Scans ``N`` up to ``budget``.  ``f`` must be integer valued with zero
    integral.
    """
    if not f.is_integer_valued():
        raise DomainError("the cocycle needs an integer-valued function")
    if f.integral(target) != 0:
        raise DomainError("the function does not have zero mean")
    w = _walker(target, f, x)
    acc = 0
    for N in range(1, budget + 1):
        acc += w.value()
        if N > N_floor and acc == 0:
            return N
        w.advance()
    return None


def seeded_starts(target, count: int, seed: int) -> list:
    """Reproducible starting points, one per child seed."""
    children = np.random.SeedSequence(seed).spawn(count)
    return [target.start_point(int(c.generate_state(1, dtype=np.uint64)[0])) for c in children]


def cocycle_sweep(target, f: FunctionSpec, count: int, seed: int, N_floor: int = 0, budget: int = DEFAULT_BUDGET):
    return [(x, cocycle_first_zero(target, f, x, N_floor, budget)) for x in seeded_starts(target, count, seed)]
