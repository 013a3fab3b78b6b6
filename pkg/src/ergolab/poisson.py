"""Poisson configurations over a finite window of an infinite-measure base.

A configuration is a finite point multiset in the window; counts in
disjoint sets are independent Poisson variables.  The suspension map is
never applied to configurations: the count of ``T_o^n x`` in ``A`` equals the
count of ``x`` in ``T^{-n} A``, so shifted counts are read from exact
images of ``A`` under the base map.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import stats

from . import rank_one
from .core_sets import IntervalSet, format_rational
from .errors import DomainError
from .rank_one import LevelSet, RankOneSpec

DEFAULT_BATCH = 8192


@dataclass(frozen=True)
class PoissonWindow:
    support: IntervalSet
    base: RankOneSpec | None = None
    stage: int | None = None

    @classmethod
    def from_stage(cls, base: RankOneSpec, stage: int) -> "PoissonWindow":
        support = IntervalSet([(0, base.total(stage))], "ray")
        return cls(support, base, stage)

    @property
    def mass(self) -> Fraction:
        return self.support.measure()

    def as_intervals(self, s) -> IntervalSet:
        """Interval form of a query set; level sets go through the base layout."""
        if isinstance(s, LevelSet):
            if self.base is None:
                raise DomainError("level sets need a window built on a rank-one base")
            return rank_one.to_interval_set(self.base, s)
        if isinstance(s, IntervalSet):
            return s if s.ambient == "ray" else IntervalSet(s.intervals, "ray")
        raise DomainError(f"cannot place a {type(s).__name__} in a Poisson window")

    def check_inside(self, s: IntervalSet):
        if not (s - self.support).is_empty():
            raise DomainError("query set is not contained in the window")


@dataclass
class PoissonSample:
    """Configurations stored flat: ``points`` with the owning configuration in ``owner``."""

    seed: int
    count: int
    batch: int
    window: PoissonWindow = field(repr=False)
    totals: np.ndarray = field(repr=False)
    points: np.ndarray = field(repr=False)
    owner: np.ndarray = field(repr=False)

    def counts(self, s) -> np.ndarray:
        """Points of each configuration lying in ``s``."""
        s = self.window.as_intervals(s)
        if s.is_empty() or len(self.points) == 0:
            return np.zeros(self.count, dtype=np.int64)
        edges = np.array([float(e) for iv in s.intervals for e in iv])
        inside = np.searchsorted(edges, self.points, side="right") % 2 == 1
        return np.bincount(self.owner[inside], minlength=self.count)

    def describe(self) -> dict:
        return {"seed": self.seed, "count": self.count, "batch": self.batch, "window_mass": format_rational(self.window.mass)}


def _poisson_table(mass: float) -> np.ndarray:
    if mass == 0:
        return np.array([1.0])
    k_max = int(mass + 12 * math.sqrt(mass) + 30)
    return stats.poisson.cdf(np.arange(k_max + 1), mass)


def _sample_batch(seq: np.random.SeedSequence, n: int, cdf: np.ndarray, lefts, cum, mass: float):
    rng = np.random.Generator(np.random.PCG64(seq))
    totals = np.searchsorted(cdf, rng.random(n), side="right").astype(np.int64)
    m = int(totals.sum())
    u = rng.random(m) * mass
    comp = np.searchsorted(cum, u, side="right") - 1
    comp = np.clip(comp, 0, len(lefts) - 1)
    pts = lefts[comp] + (u - cum[comp])
    return totals, pts


def sample_configs(window: PoissonWindow, count: int, seed: int, batch: int = DEFAULT_BATCH, threads: int = 1) -> PoissonSample:
    """``count`` independent configurations, reproducible from ``seed``.

    Point totals come from inverting the Poisson CDF; locations are uniform
    on the window, placed on its components in proportion to their lengths.
    Each batch has its own spawned seed, so results do not depend on
    ``threads``.
    """
    if count < 1:
        raise DomainError("count must be >= 1")
    mass = float(window.mass)
    cdf = _poisson_table(mass)
    ivs = window.support.intervals
    lefts = np.array([float(l) for l, _ in ivs]) if ivs else np.zeros(1)
    lengths = np.array([float(r - l) for l, r in ivs]) if ivs else np.zeros(1)
    cum = np.concatenate([[0.0], np.cumsum(lengths)[:-1]])
    sizes = [min(batch, count - s) for s in range(0, count, batch)]
    seqs = np.random.SeedSequence(seed).spawn(len(sizes))
    work = lambda a: _sample_batch(a[0], a[1], cdf, lefts, cum, mass)
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            parts = list(ex.map(work, zip(seqs, sizes)))
    else:
        parts = [work(a) for a in zip(seqs, sizes)]
    totals = np.concatenate([t for t, _ in parts])
    points = np.concatenate([p for _, p in parts])
    owner = np.repeat(np.arange(count), totals)
    return PoissonSample(seed, count, batch, window, totals, points, owner)


# ---------------------------------------------------------------------------
# Statistics


@dataclass
class CountDistribution:
    label: str
    mu: Fraction
    rows: list
    chi2: float
    dof: int
    p_value: float
    mean: float
    variance: float

    @property
    def passed(self) -> bool:
        return all(r["pass"] for r in self.rows)

    def to_dict(self) -> dict:
        return {
            "set": self.label,
            "mu": format_rational(self.mu),
            "rows": self.rows,
            "chi2": self.chi2,
            "dof": self.dof,
            "p_value": self.p_value,
            "mean": self.mean,
            "variance": self.variance,
        }


def count_distribution(sample: PoissonSample, A, K: int | None = None, z: float = 4.0, label: str = "A") -> CountDistribution:
    """Empirical law of ``|x ∩ A|`` against Poisson(``mu(A)``)."""
    s = sample.window.as_intervals(A)
    sample.window.check_inside(s)
    mu = s.measure()
    c = sample.counts(s)
    n = sample.count
    if K is None:
        K = max(int(c.max()) if n else 0, 2)
    emp = np.bincount(c, minlength=K + 1)[: K + 1] / n
    ref = stats.poisson.pmf(np.arange(K + 1), float(mu)) if mu > 0 else np.eye(1, K + 1)[0]
    rows = []
    for k in range(K + 1):
        sigma = math.sqrt(ref[k] * (1 - ref[k]) / n)
        dev = abs(emp[k] - ref[k])
        rows.append({"k": k, "empirical": float(emp[k]), "reference": float(ref[k]), "sigma": sigma, "pass": bool(dev <= z * sigma + 1e-15)})
    chi2, dof, p = _chi_square(c, float(mu), n)
    return CountDistribution(label, mu, rows, chi2, dof, p, float(c.mean()), float(c.var()))


def _chi_square(c: np.ndarray, mu: float, n: int):
    """Pearson statistic on bins with expected count >= 5; the tail is pooled."""
    if mu == 0:
        return 0.0, 0, 1.0
    k_hi = int(c.max()) + 1
    ref = stats.poisson.pmf(np.arange(k_hi + 1), mu) * n
    obs = np.bincount(c, minlength=k_hi + 1)[: k_hi + 1].astype(float)
    bins_o, bins_e, acc_o, acc_e = [], [], 0.0, 0.0
    for o, e in zip(obs, ref):
        acc_o += o
        acc_e += e
        if acc_e >= 5:
            bins_o.append(acc_o)
            bins_e.append(acc_e)
            acc_o = acc_e = 0.0
    tail_e = n - sum(bins_e)
    tail_o = n - sum(bins_o)
    if bins_e and tail_e < 5:
        bins_o[-1] += tail_o
        bins_e[-1] += tail_e
    else:
        bins_o.append(tail_o)
        bins_e.append(tail_e)
    o, e = np.array(bins_o), np.array(bins_e)
    chi2 = float(np.sum((o - e) ** 2 / e))
    dof = max(len(o) - 1, 1)
    return chi2, dof, float(stats.chi2.sf(chi2, dof))


def _disjoint(window: PoissonWindow, A, B) -> bool:
    if isinstance(A, LevelSet) and isinstance(B, LevelSet) and window.base is not None:
        lo, hi = rank_one.shifted_meet(window.base, A, B, 0)
        return hi == 0
    return (window.as_intervals(A) & window.as_intervals(B)).is_empty()


@dataclass
class IndependenceReport:
    cells: list
    correlation: float
    correlation_bound: float

    @property
    def passed(self) -> bool:
        return all(c["pass"] for c in self.cells) and abs(self.correlation) <= self.correlation_bound

    def to_dict(self) -> dict:
        return {"cells": self.cells, "correlation": self.correlation, "correlation_bound": self.correlation_bound, "pass": self.passed}


def independence_check(sample: PoissonSample, A, B, z: float = 4.0) -> IndependenceReport:
    """Joint versus product frequencies of ``C(A,k) ∩ C(B,m)`` for ``k, m`` in 0..2."""
    if not _disjoint(sample.window, A, B):
        raise DomainError("independence needs disjoint sets")
    for s in (A, B):
        sample.window.check_inside(sample.window.as_intervals(s))
    ca, cb = sample.counts(A), sample.counts(B)
    n = sample.count
    cells = []
    for k in range(3):
        ea = ca == k
        pa = ea.mean()
        for m in range(3):
            eb = cb == m
            pb = eb.mean()
            joint = (ea & eb).mean()
            dev = abs(joint - pa * pb)
            sigma = math.sqrt(pa * (1 - pa) * pb * (1 - pb) / n)
            cells.append({"k": k, "m": m, "joint": float(joint), "product": float(pa * pb), "sigma": sigma, "pass": bool(dev <= z * sigma + 1e-15)})
    if ca.std() > 0 and cb.std() > 0:
        corr = float(np.corrcoef(ca, cb)[0, 1])
    else:
        corr = 0.0
    return IndependenceReport(cells, corr, 4 / math.sqrt(n))


def xi_entropy(mu: float) -> float:
    """Entropy of ``{C(A,0), C(A,1), C(A,>=2)}`` under Poisson(``mu``) counts."""
    p0 = math.exp(-mu)
    p1 = mu * p0
    return -sum(p * math.log(p) for p in (p0, p1, 1 - p0 - p1) if p > 0)


@dataclass
class SuspensionEntropy:
    estimate: float
    reference: float
    j: int
    L: int
    translates: list

    @property
    def ratio(self) -> float:
        return self.estimate / self.reference if self.reference else float("nan")

    def to_dict(self) -> dict:
        return {
            "estimate": self.estimate,
            "reference": self.reference,
            "ratio": self.ratio,
            "j": self.j,
            "L": self.L,
            "translates": self.translates,
            "disjoint_certified": True,
        }


def suspension_pentropy(window: PoissonWindow, A: LevelSet, j: int, L: int, count: int, seed: int, threads: int = 1) -> SuspensionEntropy:
    """Plugin entropy of ``xi`` joined along ``T_o^{p h_j}``, ``p = 1..L``, divided by ``L``.

    ``xi`` sorts configurations by the count in ``A`` (0, 1, 2 or more).
    The translates ``T^{p h_j} A`` (``p = 0..L``) are computed exactly and
    every pair is certified disjoint (upper bound exactly 0) before any
    sampling.
    """
    spec = window.base
    if spec is None:
        raise DomainError("suspension entropy needs a rank-one base")
    if not isinstance(A, LevelSet):
        raise DomainError("A must be a level set")
    if L < 1 or j < 1:
        raise DomainError("need j >= 1 and L >= 1")
    h = spec.height(j)
    if min(spec.spacer_vector(j)) <= L * h:
        raise DomainError(f"spacers at stage {j} do not exceed L h_j = {L * h}")
    translates = [A] + [rank_one.shift_levelset(spec, A, p * h) for p in range(1, L + 1)]
    for a in range(L + 1):
        for b in range(a + 1, L + 1):
            _, hi = rank_one.shifted_meet(spec, translates[a], translates[b], 0)
            if hi != 0:
                raise DomainError(f"T^{a * h}A and T^{b * h}A are not certified disjoint")
    images = translates[1:]
    sets = [window.as_intervals(s) for s in images]
    for s in sets:
        if not (s - window.support).is_empty():
            raise DomainError("a translate leaves the window; use a deeper window stage")
    sample = sample_configs(window, count, seed, threads=threads)
    labels = np.stack([np.minimum(sample.counts(s), 2) for s in sets], axis=1)
    _, freq = np.unique(labels, axis=0, return_counts=True)
    p = freq / count
    est = float(-np.sum(p * np.log(p))) / L
    ref = xi_entropy(float(A.measure(spec)))
    return SuspensionEntropy(est, ref, j, L, [s.to_dict() for s in images])
