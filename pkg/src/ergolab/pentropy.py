"""Entropy of a partition along arithmetic progressions of times.

For a progression ``P_j = {j, 2j, ..., L j}``

    h_j(T, xi) = H( T^j xi v T^{2j} xi v ... v T^{Lj} xi ) / L.

Exact systems join the image partitions with exact set arithmetic.  For
rank-one constructions the join is read off the levels of a deep stage; the
mass whose labels that stage cannot decide turns into an entropy interval.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import rank_one
from .core_sets import DEFAULT_JOIN_CAP, Partition, join_all, partition_entropy
from .errors import DomainError, ResourceError
from .rank_one import LevelSet, RankOneSpec


@dataclass(frozen=True)
class ProgressionFamily:
    L: Callable[[int], int]
    description: str

    def length(self, j: int) -> int:
        v = int(self.L(j))
        if v < 1:
            raise DomainError(f"progression length L({j}) = {v} must be >= 1")
        return v

    def times(self, j: int) -> list[int]:
        return [p * j for p in range(1, self.length(j) + 1)]

    @classmethod
    def constant(cls, L: int) -> "ProgressionFamily":
        return cls(lambda j: L, f"L(j) = {L}")

    @classmethod
    def linear(cls) -> "ProgressionFamily":
        return cls(lambda j: j, "L(j) = j")

    @classmethod
    def parse(cls, text) -> "ProgressionFamily":
        """``"j"`` for ``L(j) = j`` or an integer for a constant length."""
        if isinstance(text, int):
            return cls.constant(text)
        if str(text).strip() == "j":
            return cls.linear()
        try:
            return cls.constant(int(text))
        except ValueError:
            raise DomainError(f"progression family {text!r}: expected an integer or 'j'") from None


def binary_entropy(d: float) -> float:
    if d <= 0 or d >= 1:
        return 0.0
    return -d * math.log(d) - (1 - d) * math.log(1 - d)


def progression_join_entropy(target, xi, j: int, L: int, *, cap: int = DEFAULT_JOIN_CAP, stage: int | None = None):
    """``(lo, hi)`` bounds on ``h_j``; ``lo == hi`` for exact systems.

    For rank-one systems ``xi`` is a list of disjoint level sets; whatever
    they leave uncovered is one more cell.
    """
    if j < 1 or L < 1:
        raise DomainError("progression needs j >= 1 and L >= 1")
    if isinstance(target, RankOneSpec):
        return _rank_one_entropy(target, xi, j, L, stage=stage)
    parts = [xi.image(target, p * j) for p in range(1, L + 1)]
    try:
        joined = join_all(parts, cap)
    except ResourceError as exc:
        raise ResourceError(f"{exc}; try a smaller L") from None
    h = partition_entropy(joined) / L
    return h, h


def _rank_one_entropy(spec: RankOneSpec, cells: Sequence[LevelSet], j: int, L: int, stage: int | None = None):
    if not spec.finite:
        raise DomainError("partition entropy needs a finite-measure construction")
    cells = list(cells)
    if not cells:
        raise DomainError("empty partition")
    s = max(c.stage for c in cells)
    lookup = np.full(spec.height(s), len(cells), dtype=np.int64)
    for idx, c in enumerate(cells):
        lv = np.flatnonzero(rank_one.indicator(spec, c, s))
        if (lookup[lv] != len(cells)).any():
            raise DomainError("partition cells overlap")
        lookup[lv] = idx
    n_cells = len(cells) + 1
    J = stage if stage is not None else _default_stage(spec, s, L * j)
    if J < s:
        raise DomainError("resolution stage below the partition's stage")
    h = spec.height(J)
    if h > rank_one.LEVEL_CAP:
        raise ResourceError(f"stage {J} has {h} levels, above the cap {rank_one.LEVEL_CAP}")
    ell = np.arange(h, dtype=np.int64)
    labels = np.empty((h, L), dtype=np.int64)
    resolved = np.ones(h, dtype=bool)
    for p in range(1, L + 1):
        q = ell - p * j
        ok = q >= 0
        lev, valid = rank_one.decode(spec, np.where(ok, q, 0), J, s)
        lab = np.where(valid, lookup[lev], len(cells))
        labels[:, p - 1] = lab
        resolved &= ok
    _, counts = np.unique(labels[resolved], axis=0, return_counts=True)
    m_lo, m_hi = rank_one.total_measure_bounds(spec, J)
    m = float((m_lo + m_hi) / 2)
    w = float(spec.width(J))
    probs = counts * w / m
    delta = max(0.0, 1.0 - float(probs.sum()))
    h_res = float(-np.sum(probs * np.log(probs)))
    log_k = L * math.log(n_cells)
    lo = h_res + ((1 - delta) * math.log(1 - delta) if delta < 1 else 0.0)
    hi = h_res + (-delta * math.log(delta) if delta > 0 else 0.0) + delta * log_k
    return max(lo, 0.0) / L, hi / L


def _default_stage(spec: RankOneSpec, s: int, span: int) -> int:
    """Deepest stage (at most four past ``s``) within the level cap, and past the span."""
    J = s
    while J < s + 4 and spec.height(J + 1) <= rank_one.LEVEL_CAP // 4:
        J += 1
    while spec.height(J) <= 4 * span and spec.height(J + 1) <= rank_one.LEVEL_CAP:
        J += 1
    return J


@dataclass
class PEntropyProfile:
    rows: list
    description: str

    @property
    def limsup(self) -> tuple[float, float]:
        """Largest computed value: the finite-range stand-in for the limsup."""
        return max(r[2] for r in self.rows), max(r[3] for r in self.rows)

    @property
    def j_range(self) -> tuple[int, int]:
        return self.rows[0][0], self.rows[-1][0]

    def to_dict(self) -> dict:
        lo, hi = self.limsup
        return {
            "family": self.description,
            "rows": [{"j": j, "L": L, "h_lo": a, "h_hi": b} for j, L, a, b in self.rows],
            "limsup_lo": lo,
            "limsup_hi": hi,
            "j_range": list(self.j_range),
        }


def pentropy_profile(target, xi, family: ProgressionFamily, j_max: int, threads: int = 1, **kw) -> PEntropyProfile:
    if j_max < 1:
        raise DomainError("j_max must be >= 1")

    def one(j):
        L = family.length(j)
        lo, hi = progression_join_entropy(target, xi, j, L, **kw)
        return (j, L, lo, hi)

    js = range(1, j_max + 1)
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            rows = list(ex.map(one, js))
    else:
        rows = [one(j) for j in js]
    return PEntropyProfile(rows, family.description)


def partition_library(target, depth: int = 2) -> list:
    """Dyadic partitions of increasing fineness for sweeping ``xi``."""
    out = []
    for n in range(1, depth + 1):
        cells = [target.canonical_set(2**n - 1 + k) for k in range(2**n)]
        out.append(Partition(cells))
    return out
