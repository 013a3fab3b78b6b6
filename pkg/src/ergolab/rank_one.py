"""Rank-one cutting-and-stacking constructions.

Stage ``j`` is a tower of ``h_j`` levels, each an interval of width ``w_j``.
Going from stage ``j`` to ``j + 1`` the tower is cut into ``r_j`` columns,
``s_j(i)`` spacer levels are put on column ``i`` and the columns are stacked
left to right, so level ``l`` of stage ``j`` reappears at levels
``offset_i + l`` of stage ``j + 1`` where ``offset_1 = 0`` and
``offset_{i+1} = offset_i + h_j + s_j(i)``.

Geometry: ``E_1 = [0, 1)`` and every new spacer interval is placed at the
next free position of the ray, column by column and bottom to top.  The
stage-``j`` tower therefore occupies exactly ``[0, m_j)`` with
``m_j = w_j h_j``.

Measures of sets such as ``T^n A`` intersected with ``B`` are computed on
level indices.  ``T`` moves a level up by one; on the top level of a stage it
is only known after further refinement, so results are returned as exact
rational bounds ``(lo, hi)`` whose width is the unresolved mass.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

from .core_sets import IntervalSet, format_rational
from .errors import DomainError, ResourceError

DEFAULT_MAX_STAGE = 24
LEVEL_CAP = 2**26
PIECE_CAP = 2**25
_INT64_SAFE = 2**62


@dataclass(frozen=True, eq=False)
class RankOneSpec:
    """Cut-and-spacer program ``(r_j, s_j(i))``.

    ``spacer_fn(j, h_j)`` returns the spacer vector of stage ``j``; it gets
    the current height so that presets such as ``infinite_L`` can depend on
    it.  ``tail_ratio`` certifies that the spacer mass added per stage,
    ``t_k = w_{k+1} sum_i s_k(i)``, satisfies ``t_{k+1} <= tail_ratio * t_k``
    for ``k >= tail_from``; it is what bounds the total measure.
    """

    name: str
    cut_fn: Callable[[int], int]
    spacer_fn: Callable[[int, int], Sequence[int]]
    max_stage: int = DEFAULT_MAX_STAGE
    finite: bool = True
    tail_ratio: Fraction | None = None
    tail_from: int = 1
    table: tuple | None = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    # -- construction tables -------------------------------------------------

    def cuts(self, j: int) -> int:
        r = int(self.cut_fn(j))
        if r < 2:
            raise DomainError(f"stage {j}: r_j = {r} must be > 1")
        return r

    def spacers(self, j: int, h: int) -> tuple[int, ...]:
        s = tuple(int(v) for v in self.spacer_fn(j, h))
        if len(s) != self.cuts(j):
            raise DomainError(f"stage {j}: {len(s)} spacer values for r_j = {self.cuts(j)}")
        if any(v < 0 for v in s):
            raise DomainError(f"stage {j}: negative spacer count")
        return s

    @property
    def last_stage(self) -> int | None:
        """Largest stage a finite table defines (``None`` for formula presets)."""
        if self.table is None:
            return None
        return len(self.table[0]) + 1

    def _grow(self, j: int, *, ignore_cap: bool = False):
        """Heights, widths and offsets for stages ``1..j``."""
        limit = self.max_stage if not ignore_cap else None
        if limit is not None and j > limit:
            raise ResourceError(f"stage {j} beyond the configured maximum {limit}")
        if self.last_stage is not None and j > self.last_stage:
            raise ResourceError(f"stage {j} beyond the table's last stage {self.last_stage}")
        with self._lock:
            c = self._cache
            if not c:
                c["h"] = [None, 1]
                c["w"] = [None, Fraction(1)]
                c["off"] = [None]
                c["s"] = [None]
            h, w, off, sp = c["h"], c["w"], c["off"], c["s"]
            while len(h) <= j:
                k = len(h) - 1
                r = self.cuts(k)
                s = self.spacers(k, h[k])
                offs = [0]
                for i in range(r - 1):
                    offs.append(offs[-1] + h[k] + s[i])
                off.append(tuple(offs))
                sp.append(s)
                h.append(h[k] * r + sum(s))
                w.append(w[k] / r)
            return c

    def height(self, j: int) -> int:
        return self._grow(j)["h"][j]

    def width(self, j: int) -> Fraction:
        return self._grow(j)["w"][j]

    def offsets(self, j: int) -> tuple[int, ...]:
        """Offsets of stage ``j``'s columns inside stage ``j + 1``."""
        return self._grow(j + 1)["off"][j]

    def spacer_vector(self, j: int) -> tuple[int, ...]:
        return self._grow(j + 1)["s"][j]

    def total(self, j: int) -> Fraction:
        return self.width(j) * self.height(j)


# ---------------------------------------------------------------------------
# Presets


def katok() -> RankOneSpec:
    """``r_j = 2j``; no spacers on the first ``j`` columns, one on the rest."""
    return RankOneSpec(
        "katok",
        lambda j: 2 * j,
        lambda j, h: (0,) * j + (1,) * j,
        tail_ratio=Fraction(1, 2),
        tail_from=1,
    )


def staircase() -> RankOneSpec:
    """Staircase: ``r_j = j + 1``, ``s_j(i) = i``.

    The cut count starts at 2 so that ``r_j > 1`` holds at stage 1.
    """
    return RankOneSpec(
        "staircase",
        lambda j: j + 1,
        lambda j, h: tuple(range(1, j + 2)),
        tail_ratio=Fraction(1, 2),
        tail_from=2,
    )


def infinite_l() -> RankOneSpec:
    """``r_j = 2``, ``s_j(i) = j h_j + 1``: an infinite-measure construction
    whose stage-``j`` tower is disjoint from its ``p h_j`` translates for
    ``p = 1..j``."""
    return RankOneSpec(
        "infinite_L",
        lambda j: 2,
        lambda j, h: (j * h + 1, j * h + 1),
        finite=False,
    )


def from_tables(cuts: Sequence[int], spacers: Sequence[Sequence[int]], name: str = "custom") -> RankOneSpec:
    """Spec from explicit tables; stage ``j`` uses ``cuts[j-1]``, ``spacers[j-1]``.

    A table with ``K`` rows defines stages ``1..K+1`` and adds no mass
    beyond them.
    """
    cuts = tuple(int(r) for r in cuts)
    spacers = tuple(tuple(int(v) for v in row) for row in spacers)
    if len(cuts) != len(spacers):
        raise DomainError("cuts and spacers tables differ in length")
    if not cuts:
        raise DomainError("empty rank-one table")
    return RankOneSpec(
        name,
        lambda j: cuts[j - 1],
        lambda j, h: spacers[j - 1],
        table=(cuts, spacers),
        tail_ratio=Fraction(0),
    )


PRESETS = {"katok": katok, "staircase": staircase, "infinite_L": infinite_l, "infinite_l": infinite_l}


def make_spec(config) -> RankOneSpec:
    """Spec from a preset name or ``{"cuts": [...], "spacers": [[...], ...]}``."""
    if isinstance(config, RankOneSpec):
        return config
    if isinstance(config, str):
        config = {"preset": config}
    if not isinstance(config, dict):
        raise DomainError("rank-one spec must be a preset name or a table object")
    max_stage = int(config.get("max_stage", DEFAULT_MAX_STAGE))
    if "preset" in config:
        try:
            spec = PRESETS[config["preset"]]()
        except KeyError:
            raise DomainError(f"unknown rank-one preset {config['preset']!r}") from None
    elif "cuts" in config and "spacers" in config:
        spec = from_tables(config["cuts"], config["spacers"], config.get("name", "custom"))
    else:
        raise DomainError("rank-one spec needs 'preset' or 'cuts' + 'spacers'")
    if max_stage != spec.max_stage:
        spec = RankOneSpec(
            spec.name, spec.cut_fn, spec.spacer_fn, max_stage, spec.finite,
            spec.tail_ratio, spec.tail_from, spec.table,
        )
    return spec


# ---------------------------------------------------------------------------
# Stages and level sets


@dataclass(frozen=True)
class StageSummary:
    j: int
    h: int
    width: Fraction
    total: Fraction
    offsets: tuple[int, ...]
    spacers: tuple[int, ...]
    support: IntervalSet

    def to_dict(self) -> dict:
        return {
            "j": self.j,
            "h": self.h,
            "width": format_rational(self.width),
            "total": format_rational(self.total),
            "total_decimal": float(self.total),
            "offsets": list(self.offsets),
            "spacers": list(self.spacers),
            "support": self.support.to_literal(),
        }


def build_stage(spec: RankOneSpec, j: int) -> StageSummary:
    if j < 1:
        raise DomainError("stages start at 1")
    h, w = spec.height(j), spec.width(j)
    if spec.last_stage is not None and j == spec.last_stage:
        offs, sp = (), ()
    elif j + 1 > spec.max_stage:
        offs, sp = (), ()
    else:
        offs, sp = spec.offsets(j), spec.spacer_vector(j)
    total = w * h
    return StageSummary(j, h, w, total, offs, sp, IntervalSet([(0, total)], "ray"))


@dataclass(frozen=True)
class LevelSet:
    """Union of whole levels of the stage-``stage`` tower."""

    stage: int
    levels: frozenset

    def __init__(self, stage: int, levels: Iterable[int]):
        object.__setattr__(self, "stage", int(stage))
        object.__setattr__(self, "levels", frozenset(int(l) for l in levels))

    def measure(self, spec: RankOneSpec) -> Fraction:
        self.validate(spec)
        return len(self.levels) * spec.width(self.stage)

    def validate(self, spec: RankOneSpec):
        h = spec.height(self.stage)
        if any(l < 0 or l >= h for l in self.levels):
            raise DomainError(f"level index outside 0..{h - 1} at stage {self.stage}")

    def is_empty(self) -> bool:
        return not self.levels

    def to_dict(self) -> dict:
        return {"stage": self.stage, "levels": sorted(self.levels)}


def full_tower(spec: RankOneSpec, j: int) -> LevelSet:
    return LevelSet(j, range(spec.height(j)))


def indicator(spec: RankOneSpec, ls: LevelSet, stage: int) -> np.ndarray:
    """Boolean indicator of ``ls`` refined to ``stage``, indexed by level."""
    if stage < ls.stage:
        raise DomainError("cannot coarsen a level set")
    ls.validate(spec)
    if spec.height(stage) > LEVEL_CAP:
        raise ResourceError(f"stage {stage} has {spec.height(stage)} levels, above the cap {LEVEL_CAP}")
    ind = np.zeros(spec.height(ls.stage), dtype=bool)
    if ls.levels:
        ind[np.fromiter(ls.levels, dtype=np.int64)] = True
    for k in range(ls.stage, stage):
        nxt = np.zeros(spec.height(k + 1), dtype=bool)
        hk = spec.height(k)
        for o in spec.offsets(k):
            nxt[o : o + hk] = ind
        ind = nxt
    return ind


def refine(ls: LevelSet, to_stage: int, spec: RankOneSpec) -> LevelSet:
    """Re-express ``ls`` on the levels of a deeper stage (measure is unchanged)."""
    if to_stage == ls.stage:
        return ls
    return LevelSet(to_stage, np.flatnonzero(indicator(spec, ls, to_stage)).tolist())


def level_start(spec: RankOneSpec, j: int, l: int) -> Fraction:
    """Left endpoint of level ``l`` of stage ``j`` on the ray."""
    if not 0 <= l < spec.height(j):
        raise DomainError(f"level {l} outside stage {j}")
    start = Fraction(0)
    k = j
    while k > 1:
        offs = spec.offsets(k - 1)
        hk = spec.height(k - 1)
        wk = spec.width(k)
        i = _column(offs, l)
        local = l - offs[i]
        if local < hk:
            start += i * wk
            l = local
            k -= 1
            continue
        s = spec.spacer_vector(k - 1)
        idx = sum(s[:i]) + (local - hk)
        return start + spec.total(k - 1) + idx * wk
    return start


def _column(offs: Sequence[int], l: int) -> int:
    lo, hi = 0, len(offs) - 1
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if offs[mid] <= l:
            lo = mid
        else:
            hi = mid - 1
    return lo


def level_interval(spec: RankOneSpec, j: int, l: int) -> tuple[Fraction, Fraction]:
    s = level_start(spec, j, l)
    return s, s + spec.width(j)


def to_interval_set(spec: RankOneSpec, ls: LevelSet) -> IntervalSet:
    ls.validate(spec)
    return IntervalSet([level_interval(spec, ls.stage, l) for l in ls.levels], "ray")


# ---------------------------------------------------------------------------
# Measures of shifted intersections


def decode(spec: RankOneSpec, q: np.ndarray, stage: int, to_stage: int):
    """Levels of ``to_stage`` containing stage-``stage`` levels ``q``.

    Returns ``(levels, valid)``; ``valid`` is False where ``q`` is a spacer
    added after ``to_stage``.
    """
    valid = np.ones(len(q), dtype=bool)
    big = q.dtype == object
    for k in range(stage, to_stage, -1):
        offs = spec.offsets(k - 1)
        offs_arr = np.array(offs, dtype=object if big else np.int64)
        col = np.searchsorted(offs_arr, q, side="right") - 1
        local = q - offs_arr[col]
        valid &= local < spec.height(k - 1)
        q = np.where(valid, local, 0)
        if big and spec.height(k - 1) < _INT64_SAFE:
            q = q.astype(np.int64)
            big = False
    return q.astype(np.int64), valid


class _Decoder:
    """Membership of deep-stage levels in a fixed level set."""

    def __init__(self, spec: RankOneSpec, target: LevelSet):
        self.spec = spec
        self.target = target
        self.ind = indicator(spec, target, target.stage)

    def member(self, q: np.ndarray, stage: int) -> np.ndarray:
        levels, valid = decode(self.spec, q, stage, self.target.stage)
        out = np.zeros(len(q), dtype=bool)
        out[valid] = self.ind[levels[valid]]
        return out


def meet(
    spec: RankOneSpec,
    base: LevelSet,
    terms: Sequence[tuple[LevelSet, int]],
    tol=None,
    max_stage: int | None = None,
) -> tuple[Fraction, Fraction]:
    """Bounds on ``mu(base ∩ T^{n_1} S_1 ∩ ... ∩ T^{n_k} S_k)``.

    Each piece (a whole level of some stage, inside ``base``) is tested at
    its current stage: a point at level ``p`` has ``T^{-n} x`` at level
    ``p - n`` when that index is inside the tower.  Pieces for which some
    shifted index falls outside the tower are refined one stage further.
    Returns exact rationals with ``hi - lo <= tol``.
    """
    cap = min(spec.max_stage, max_stage or spec.max_stage)
    if spec.last_stage is not None:
        cap = min(cap, spec.last_stage)
    stages = [base.stage] + [s.stage for s, _ in terms]
    J = max(stages)
    if tol is None:
        tol = spec.total(J) / 2**40
    tol = Fraction(tol)
    if tol <= 0:
        raise DomainError("tolerance must be positive")
    caps = [base.measure(spec)] + [s.measure(spec) for s, _ in terms]
    mu_cap = min(caps)
    decoders = [(_Decoder(spec, s), int(n)) for s, n in terms]
    pieces = np.flatnonzero(indicator(spec, base, J)).astype(np.int64)
    lo = Fraction(0)
    while True:
        h = spec.height(J)
        alive = np.ones(len(pieces), dtype=bool)
        pending = np.zeros(len(pieces), dtype=bool)
        for dec, n in decoders:
            t = pieces - n
            inr = (t >= 0) & (t < h)
            mem = np.zeros(len(pieces), dtype=bool)
            if inr.any():
                mem[inr] = dec.member(t[inr], J)
            alive &= ~inr | mem
            pending |= ~inr
        lo += int(np.count_nonzero(alive & ~pending)) * spec.width(J)
        pieces = pieces[alive & pending]
        hi = lo + min(len(pieces) * spec.width(J), mu_cap - lo)
        if hi - lo <= tol:
            return lo, hi
        if J >= cap:
            raise ResourceError(
                f"tolerance {tol} not reached by stage {J} (width {hi - lo})", bounds=(lo, hi)
            )
        nxt_h = spec.height(J + 1)
        offs = spec.offsets(J)
        if len(pieces) * len(offs) > PIECE_CAP:
            raise ResourceError("too many unresolved pieces", bounds=(lo, hi))
        if nxt_h >= _INT64_SAFE and pieces.dtype != object:
            pieces = pieces.astype(object)
        offs_arr = np.array(offs, dtype=pieces.dtype)
        pieces = (offs_arr[:, None] + pieces[None, :]).ravel()
        J += 1


def shifted_meet(spec: RankOneSpec, A: LevelSet, B: LevelSet, n: int, tol=None, max_stage=None):
    """Exact rational bounds ``lo <= mu(T^n A ∩ B) <= hi`` with ``hi - lo <= tol``.

    Pieces are always pushed up the tower (``mu(A ∩ T^{-n} B)`` for
    ``n >= 0``): the top of a tower is resolved by the spacers stacked on it,
    while the bottom column chain never is.
    """
    if n >= 0:
        return meet(spec, A, [(B, -n)], tol=tol, max_stage=max_stage)
    return meet(spec, B, [(A, n)], tol=tol, max_stage=max_stage)


def shifted_meet_profile(spec: RankOneSpec, B: LevelSet, n: int, stage: int, tol=None, max_stage=None):
    """Bounds on ``mu(T^n L_a ∩ B)`` for every single level ``L_a`` of ``stage``.

    One refinement pass serves all levels: resolved pieces are decoded to
    their ``stage`` level and tallied.  Returns ``(lo, hi)`` lists indexed by
    level.  The unresolved mass is charged in full to every level's upper
    bound, so ``hi_a - lo_a <= tol`` for each ``a``.
    """
    cap = min(spec.max_stage, max_stage or spec.max_stage)
    J = max(stage, B.stage)
    if tol is None:
        tol = spec.total(J) / 2**40
    tol = Fraction(tol)
    h_s = spec.height(stage)
    w_s = spec.width(stage)
    mu_b = B.measure(spec)
    counts = [Fraction(0)] * h_s
    pieces = np.flatnonzero(indicator(spec, B, J)).astype(np.int64)
    while True:
        h = spec.height(J)
        t = pieces - n
        inr = (t >= 0) & (t < h)
        if inr.any():
            levels, valid = decode(spec, t[inr], J, stage)
            tally = np.bincount(levels[valid], minlength=h_s)
            w = spec.width(J)
            for a in np.flatnonzero(tally):
                counts[a] += int(tally[a]) * w
        pieces = pieces[~inr]
        pending = len(pieces) * spec.width(J)
        lo = counts
        hi = [c + min(pending, w_s - c, mu_b - c) for c in counts]
        if pending <= tol or all(hh - ll <= tol for ll, hh in zip(lo, hi)):
            return list(lo), hi
        if J >= cap:
            raise ResourceError(f"tolerance {tol} not reached by stage {J}", bounds=(list(lo), hi))
        if spec.height(J + 1) >= _INT64_SAFE and pieces.dtype != object:
            pieces = pieces.astype(object)
        offs_arr = np.array(spec.offsets(J), dtype=pieces.dtype)
        pieces = (offs_arr[:, None] + pieces[None, :]).ravel()
        J += 1


def shift_levelset(spec: RankOneSpec, A: LevelSet, n: int, max_stage: int | None = None) -> LevelSet:
    """Exact image ``T^n A`` as a level set of the first stage that resolves it."""
    cap = min(spec.max_stage, max_stage or spec.max_stage)
    J = A.stage
    levels = np.flatnonzero(indicator(spec, A, J)).astype(np.int64)
    while True:
        t = levels + n
        if np.all((t >= 0) & (t < spec.height(J))):
            return LevelSet(J, t.tolist())
        if J >= cap:
            raise ResourceError(f"T^{n} of the level set is not resolved by stage {cap}")
        offs = np.array(spec.offsets(J), dtype=np.int64)
        levels = (offs[:, None] + levels[None, :]).ravel()
        J += 1


# ---------------------------------------------------------------------------
# Total measure and tower coverage


def _tail_term(spec: RankOneSpec, k: int) -> Fraction:
    c = spec._grow(k + 1, ignore_cap=True)
    return c["w"][k + 1] * sum(c["s"][k])


def total_measure_bounds(spec: RankOneSpec, j: int, horizon: int = 30) -> tuple[Fraction, Fraction]:
    """Certified ``(lower, upper)`` bounds on the total measure ``m_inf``."""
    if not spec.finite:
        raise DomainError(f"{spec.name} has infinite total measure; use un-normalized totals")
    if spec.last_stage is not None:
        m = spec.total(spec.last_stage)
        return m, m
    if spec.tail_ratio is None or spec.tail_ratio >= 1:
        raise DomainError(f"{spec.name} has no certified tail bound")
    K = max(j, spec.tail_from) + horizon
    m_j = spec.total(j)
    partial = sum((_tail_term(spec, k) for k in range(j, K)), Fraction(0))
    remainder = _tail_term(spec, K) / (1 - spec.tail_ratio)
    return m_j + partial, m_j + partial + remainder


def tower_cover(spec: RankOneSpec, j: int) -> Fraction:
    """Exact lower bound on the fraction of the normalized space covered by the stage-``j`` tower."""
    _, upper = total_measure_bounds(spec, j)
    return spec.total(j) / upper


def normalize(spec: RankOneSpec, lo: Fraction, hi: Fraction, j: int = 1) -> tuple[Fraction, Fraction]:
    """Probability bounds from un-normalized bounds, dividing by certified totals."""
    m_lo, m_hi = total_measure_bounds(spec, j)
    return lo / m_hi, hi / m_lo
