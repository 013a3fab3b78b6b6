"""Correlation sequences, Cesaro diagnostics, weak-limit fits and metrics on systems.

Convention: ``c_n(A, B) = mu(T^n A ∩ B)``.  For exact systems every value is
a Fraction pair ``(c, c)``; rank-one constructions give certified intervals.
"""
from __future__ import annotations

import itertools
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import rank_one
from .errors import DomainError
from .rank_one import LevelSet, RankOneSpec

THETA = "theta"


@dataclass
class CorrelationSeries:
    labels: tuple[str, str]
    values: dict[int, tuple[Fraction, Fraction]]
    mu_a: Fraction
    mu_b: Fraction
    theta: Fraction
    exact: bool = True

    def value(self, n: int) -> Fraction:
        lo, hi = self.values[n]
        return (lo + hi) / 2

    def to_rows(self):
        return [(n, lo, hi) for n, (lo, hi) in sorted(self.values.items())]


@dataclass
class WeakLimitFit:
    basis: list
    coefficients: dict
    residual: float
    status: str = "ok"
    support: tuple = field(default=())

    def to_dict(self) -> dict:
        return {
            "basis": [str(b) for b in self.basis],
            "coefficients": {str(k): v for k, v in self.coefficients.items()},
            "residual": self.residual,
            "status": self.status,
        }


def _is_rank_one(target) -> bool:
    return isinstance(target, RankOneSpec)


def measure_of(target, s) -> Fraction:
    return s.measure(target) if _is_rank_one(target) else s.measure()


def correlation(target, A, B, n: int, tol=None) -> tuple[Fraction, Fraction]:
    """Bounds on ``mu(T^n A ∩ B)``; exact pair for exact systems."""
    if _is_rank_one(target):
        if not (isinstance(A, LevelSet) and isinstance(B, LevelSet)):
            raise DomainError("rank-one correlations take level sets")
        return rank_one.shifted_meet(target, A, B, n, tol)
    c = (target.image(A, n) & B).measure()
    return c, c


def theta_value(target, A, B) -> Fraction:
    """``<Theta chi_A, chi_B>`` in the system's own (possibly un-normalized) measure."""
    mu_a, mu_b = measure_of(target, A), measure_of(target, B)
    if _is_rank_one(target):
        if not target.finite:
            return Fraction(0)
        m_lo, m_hi = rank_one.total_measure_bounds(target, max(A.stage, B.stage))
        return mu_a * mu_b / ((m_lo + m_hi) / 2)
    return mu_a * mu_b


def correlation_series(target, A, B, n_range, tol=None, labels=("A", "B"), threads: int = 1) -> CorrelationSeries:
    ns = list(n_range)
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            vals = list(ex.map(lambda n: correlation(target, A, B, n, tol), ns))
    else:
        vals = [correlation(target, A, B, n, tol) for n in ns]
    values = dict(zip(ns, vals))
    return CorrelationSeries(
        tuple(labels),
        values,
        measure_of(target, A),
        measure_of(target, B),
        theta_value(target, A, B),
        exact=all(lo == hi for lo, hi in vals),
    )


def cesaro_diagnostics(series: CorrelationSeries, target: Fraction | None = None, N: int | None = None):
    """Running ``avg_N = (1/N) sum c_i`` and ``absdev_N = (1/N) sum |c_i - target|``.

    Sums run over ``i = 1..N``.  Both come back as lists of ``(lo, hi)``
    Fraction pairs indexed by ``N - 1``.
    """
    if target is None:
        target = series.theta
    target = Fraction(target)
    if N is None:
        N = max(series.values)
    missing = [i for i in range(1, N + 1) if i not in series.values]
    if missing:
        raise DomainError(f"series lacks lags {missing[:5]}...")
    avg, dev = [], []
    s_lo = s_hi = d_lo = d_hi = Fraction(0)
    for i in range(1, N + 1):
        lo, hi = series.values[i]
        s_lo += lo
        s_hi += hi
        if lo <= target <= hi:
            d_lo += 0
        else:
            d_lo += min(abs(lo - target), abs(hi - target))
        d_hi += max(abs(lo - target), abs(hi - target))
        avg.append((s_lo / i, s_hi / i))
        dev.append((d_lo / i, d_hi / i))
    return avg, dev


# ---------------------------------------------------------------------------
# Weak-limit fitting on the probability simplex


def _simplex_lsq(X: np.ndarray, y: np.ndarray, support: tuple[int, ...]):
    """Least squares on ``support`` subject to sum = 1 (signs unconstrained)."""
    Xs = X[:, support]
    k = len(support)
    kkt = np.zeros((k + 1, k + 1))
    kkt[:k, :k] = 2 * Xs.T @ Xs
    kkt[:k, k] = 1
    kkt[k, :k] = 1
    rhs = np.concatenate([2 * Xs.T @ y, [1.0]])
    sol = np.linalg.lstsq(kkt, rhs, rcond=None)[0]
    a = np.zeros(X.shape[1])
    a[list(support)] = sol[:k]
    return a


def simplex_least_squares(X: np.ndarray, y: np.ndarray, feas_tol: float = 1e-12):
    """Exact-enumeration minimizer of ``||X a - y||^2`` over the probability simplex.

    Every support pattern is solved as an equality-constrained problem; the
    feasible solution with the smallest residual wins, ties going to the
    lexicographically smallest support.
    """
    m = X.shape[1]
    best = None
    for size in range(1, m + 1):
        for support in itertools.combinations(range(m), size):
            a = _simplex_lsq(X, y, support)
            if a.min() < -feas_tol or abs(a.sum() - 1) > 1e-9:
                continue
            a = np.clip(a, 0, None)
            a /= a.sum()
            r = float(np.sum((X @ a - y) ** 2))
            if best is None or r < best[0] - 1e-15 * (1 + abs(best[0])) or (
                abs(r - best[0]) <= 1e-15 * (1 + abs(best[0])) and support < best[2]
            ):
                best = (r, a, support)
    return best


def level_pair_family(spec: RankOneSpec, stage: int) -> list[tuple[LevelSet, LevelSet]]:
    """All ordered pairs of single levels of ``stage``."""
    h = spec.height(stage)
    return [(LevelSet(stage, [a]), LevelSet(stage, [b])) for b in range(h) for a in range(h)]


def _profile_lookup(target, family, lags, tol):
    """Batch correlations when every ``A`` is a single level of one stage.

    One refinement pass per ``(B, lag)`` then serves all such ``A``.
    Returns ``None`` when the family does not have that shape.
    """
    if not _is_rank_one(target):
        return None
    stages = {A.stage for A, _ in family}
    if len(stages) != 1 or any(len(A.levels) != 1 for A, _ in family):
        return None
    stage = stages.pop()
    cache: dict = {}

    def lookup(A, B, k):
        key = (B.stage, tuple(sorted(B.levels)), k)
        if key not in cache:
            cache[key] = rank_one.shifted_meet_profile(target, B, k, stage, tol)
        lo, hi = cache[key]
        a = next(iter(A.levels))
        return lo[a], hi[a]

    return lookup


def fit_weak_limit(target, n: int, test_family: Sequence[tuple], basis: Sequence[int], tol=None) -> WeakLimitFit:
    """Fit ``T^n ≈ a_Θ Θ + sum_k a_k T^k`` on a finite family of set pairs."""
    basis = sorted(set(int(k) for k in basis))
    if len(basis) > 10:
        raise DomainError("at most 10 exponents in the basis")
    if len(test_family) < len(basis) + 1:
        raise DomainError("test family needs at least |K| + 1 pairs")
    rows, ys = [], []
    profile = _profile_lookup(target, test_family, [n] + basis, tol)
    for A, B in test_family:
        if profile is not None:
            lo, hi = profile(A, B, n)
        else:
            lo, hi = correlation(target, A, B, n, tol)
        ys.append(float((lo + hi) / 2))
        row = [float(theta_value(target, A, B))]
        for k in basis:
            klo, khi = profile(A, B, k) if profile is not None else correlation(target, A, B, k, tol)
            row.append(float((klo + khi) / 2))
        rows.append(row)
    X, y = np.array(rows), np.array(ys)
    status = "ok"
    if np.linalg.matrix_rank(X) < X.shape[1]:
        status = "degenerate"
        warnings.warn("test family is rank deficient; the fit is not unique", stacklevel=2)
    r, a, support = simplex_least_squares(X, y)
    labels = [THETA] + basis
    return WeakLimitFit(labels, dict(zip(labels, a.tolist())), r, status, support)


# ---------------------------------------------------------------------------
# Metrics


def halmos_distance(S, T, depth: int) -> tuple[Fraction, Fraction]:
    """Truncated Halmos distance over the canonical dyadic family, plus a tail bound.

    ``rho(S, T) = sum_i 2^-i (mu(S A_i Δ T A_i) + mu(S^-1 A_i Δ T^-1 A_i))``
    for ``i = 1..depth``; the omitted tail is at most ``4 * 2^-depth``.
    """
    if _is_rank_one(S) or _is_rank_one(T):
        raise DomainError("Halmos distance needs systems acting on a common set family")
    if S.family is not T.family or getattr(S, "dim", None) != getattr(T, "dim", None):
        raise DomainError("systems act on different set families")
    total = Fraction(0)
    for i in range(1, depth + 1):
        A = S.canonical_set(i)
        fwd = (S.image(A, 1) ^ T.image(A, 1)).measure()
        back = (S.image(A, -1) ^ T.image(A, -1)).measure()
        total += Fraction(1, 2**i) * (fwd + back)
    return total, Fraction(4, 2**depth)


def _inner(sysU, n: int, A, B) -> Fraction:
    """``<U^n chi_A, chi_B> = mu(T^-n A ∩ B)``; ``sysU`` may be ``THETA``."""
    if sysU == THETA:
        return A.measure() * B.measure()
    return (sysU.image(A, -n) & B).measure()


def weak_distance(sysU, sysV, n_u: int, n_v: int, depth: int) -> Fraction:
    """``sum_{i,j <= depth} 2^{-i-j} |<(U^n_u - V^n_v) chi_A_i, chi_A_j>|``.

    Either operator may be ``THETA`` (the projection onto constants).
    """
    ref = sysU if sysU != THETA else sysV
    if ref == THETA:
        return Fraction(0)
    if _is_rank_one(ref) or (sysV != THETA and _is_rank_one(sysV)):
        raise DomainError("weak distance needs exact systems")
    if sysU != THETA and sysV != THETA and sysU.family is not sysV.family:
        raise DomainError("systems act on different set families")
    sets = [ref.canonical_set(i) for i in range(1, depth + 1)]
    total = Fraction(0)
    for i, A in enumerate(sets, 1):
        for j, B in enumerate(sets, 1):
            d = _inner(sysU, n_u, A, B) - _inner(sysV, n_v, A, B)
            total += Fraction(1, 2 ** (i + j)) * abs(d)
    return total
