"""Spectral measures of simple functions from their autocovariances.

``sigma_hat(i) = <U^i f, f>`` is assembled from exact correlations of the
sets making up ``f``.  The Fejer-weighted partial sum

    rho_N(theta) = sum_{|i| < N} (1 - |i|/N) sigma_hat(i) e^{-i i theta}

is the density of a measure converging weakly to the spectral measure, and
Wiener averages pick out its atoms.  Angles follow ``z = e^{i theta}`` with
``theta`` in ``[0, 2 pi)``; an eigenfunction with ``U g = e^{i a} g``
produces an atom at ``theta = a``.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.linalg import toeplitz

from . import koopman
from .errors import DomainError
from .rank_one import RankOneSpec

TWO_PI = 2 * math.pi


@dataclass(frozen=True)
class FunctionSpec:
    """Simple function ``f = sum q_k chi_{S_k}``, optionally minus its mean."""

    terms: tuple
    center: bool = False

    def __init__(self, terms, center: bool = False):
        terms = tuple((Fraction(q), s) for q, s in terms)
        if not terms:
            raise DomainError("function needs at least one term")
        if len({type(s) for _, s in terms}) > 1:
            raise DomainError("function terms mix set families")
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "center", bool(center))

    def integral(self, target=None) -> Fraction:
        return sum((q * koopman.measure_of(target, s) for q, s in self.terms), Fraction(0))

    def mean(self, target=None) -> Fraction:
        """Mean of the uncentered function (integral over total mass)."""
        total = Fraction(1)
        if isinstance(target, RankOneSpec):
            if not target.finite:
                raise DomainError("an infinite-measure system has no mean to subtract")
            lo, hi = _total_bounds(target, self)
            total = (lo + hi) / 2
        return self.integral(target) / total

    def __call__(self, x) -> Fraction:
        """Value at a point (exact systems only)."""
        v = sum((q for q, s in self.terms if s.contains(x)), Fraction(0))
        if self.center:
            v -= self.mean()
        return v

    def is_integer_valued(self) -> bool:
        # integer coefficients on possibly overlapping sets keep integer values
        return all(q.denominator == 1 for q, _ in self.terms) and not self.center


def _total_bounds(spec: RankOneSpec, f: FunctionSpec):
    stage = max(s.stage for _, s in f.terms)
    return koopman.rank_one.total_measure_bounds(spec, stage)


@dataclass
class Autocovariance:
    """``sigma_hat(i)`` for ``0 <= i <= N``; negative lags by conjugation."""

    values: dict
    exact: bool = True
    error: float = 0.0

    @property
    def N(self) -> int:
        return max(self.values)

    def __getitem__(self, i: int):
        if i < 0:
            return np.conj(self.values[-i]) if not isinstance(self.values[-i], Fraction) else self.values[-i]
        return self.values[i]

    def array(self, N: int | None = None) -> np.ndarray:
        """``sigma_hat(0..N)`` as complex doubles."""
        N = self.N if N is None else N
        if N > self.N:
            raise DomainError(f"autocovariance covers lags up to {self.N}, {N} requested")
        return np.array([complex(self.values[i]) for i in range(N + 1)])

    def to_rows(self):
        return [(i, float(complex(v).real), float(complex(v).imag)) for i, v in sorted(self.values.items())]


def autocovariance(target, f: FunctionSpec, N: int, tol=None, threads: int = 1) -> Autocovariance:
    """``sigma_hat(i) = sum_{k,l} q_k q_l mu(T^i S_k ∩ S_l)`` for ``i = 0..N``.

    Centering subtracts ``(integral f)^2 / m``.  Rank-one correlations come
    back as midpoints with the accumulated half-width in ``error``.
    """
    if N < 1:
        raise DomainError("autocovariance needs N >= 1")
    shift = Fraction(0)
    if f.center:
        shift = f.integral(target) * f.mean(target)

    def one(i):
        val = Fraction(0)
        err = Fraction(0)
        for qk, Sk in f.terms:
            for ql, Sl in f.terms:
                lo, hi = koopman.correlation(target, Sk, Sl, i, tol)
                val += qk * ql * (lo + hi) / 2
                err += abs(qk * ql) * (hi - lo) / 2
        return val - shift, err

    lags = range(N + 1)
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            out = list(ex.map(one, lags))
    else:
        out = [one(i) for i in lags]
    values = {i: v for i, (v, _) in zip(lags, out)}
    error = max(float(e) for _, e in out)
    exact = error == 0 and not isinstance(target, RankOneSpec)
    if not exact:
        values = {i: float(v) for i, v in values.items()}
    return Autocovariance(values, exact, error)


def toeplitz_min_eigenvalue(ac: Autocovariance, size: int = 12) -> float:
    """Smallest eigenvalue of the Hermitian Toeplitz matrix ``[sigma_hat(j - k)]``."""
    col = ac.array(size - 1)
    mat = toeplitz(col, np.conj(col))
    return float(np.linalg.eigvalsh(mat).min())


# ---------------------------------------------------------------------------
# Densities and atoms


@dataclass
class SpectralDensity:
    grid: np.ndarray
    values: np.ndarray
    N: int

    def to_rows(self):
        return list(zip(self.grid.tolist(), self.values.tolist()))


def _folded_transform(coeffs: np.ndarray, lags: np.ndarray, M: int) -> np.ndarray:
    """``sum_k coeffs[k] e^{-2 pi i lags[k] m / M}`` for ``m = 0..M-1``."""
    buf = np.zeros(M, dtype=complex)
    np.add.at(buf, np.mod(lags, M), coeffs)
    return np.fft.fft(buf)


def fejer_density(ac: Autocovariance, N: int, M: int = 4096) -> SpectralDensity:
    if N < 1 or M < 1:
        raise DomainError("fejer_density needs N >= 1 and M >= 1")
    if ac.N < N - 1:
        raise DomainError(f"Fejer density of order {N} needs lags up to {N - 1}, have {ac.N}")
    pos = ac.array(N - 1)
    lags = np.arange(-(N - 1), N)
    sig = np.concatenate([np.conj(pos[:0:-1]), pos])
    weights = 1 - np.abs(lags) / N
    rho = _folded_transform(weights * sig, lags, M).real
    return SpectralDensity(TWO_PI * np.arange(M) / M, rho, N)


def wiener_atom(ac: Autocovariance, angle: float, N: int | None = None) -> float:
    """``(1/N) |sum_{i=1}^N sigma_hat(i) e^{-i angle i}|``."""
    N = ac.N if N is None else N
    sig = ac.array(N)[1:]
    i = np.arange(1, N + 1)
    return float(abs(np.sum(sig * np.exp(-1j * angle * i))) / N)


@dataclass
class EigenScan:
    atoms: list
    closure: list = field(default_factory=list)
    resolution: float = 0.0

    @property
    def closed(self) -> bool:
        return all(c["closed"] for c in self.closure)

    def to_dict(self) -> dict:
        return {
            "atoms": [{"angle": a, "mass": m} for a, m in self.atoms],
            "closure": self.closure,
            "group_closed": self.closed,
            "resolution": self.resolution,
        }


def _circ_dist(a: float, b: float) -> float:
    d = abs(a - b) % TWO_PI
    return min(d, TWO_PI - d)


def _amplitude(sig: np.ndarray, angle: float) -> complex:
    i = np.arange(1, len(sig) + 1)
    return complex(np.sum(sig * np.exp(-1j * angle * i)) / len(sig))


def eigen_scan(
    ac: Autocovariance, M: int = 4096, threshold: float = 0.01, N: int | None = None, max_atoms: int = 64
) -> EigenScan:
    """Atoms whose Wiener estimate exceeds ``threshold``.

    Peaks are taken one at a time: the strongest grid angle is refined on a
    fine local grid, recorded, and its contribution ``c e^{i a i}`` removed
    from the sequence before the next scan, so the side lobes of a large
    atom are not reported as atoms of their own.  The closure report checks,
    for each detected pair ``(a, b)``, whether ``a + b`` lies within two grid
    cells of a detected angle.
    """
    if threshold <= 0:
        raise DomainError("threshold must be positive")
    N = ac.N if N is None else N
    sig = ac.array(N)[1:].copy()
    lags = np.arange(1, N + 1)
    step = TWO_PI / M
    found: dict[int, list] = {}
    for _ in range(max_atoms):
        est = np.abs(_folded_transform(sig, lags, M)) / N
        peak = int(np.argmax(est))
        if est[peak] <= threshold:
            break
        fine = peak * step + np.linspace(-step, step, 65)
        amps = [_amplitude(sig, t) for t in fine]
        k = int(np.argmax(np.abs(amps)))
        angle, amp = float(fine[k] % TWO_PI), amps[k]
        sig = sig - amp * np.exp(1j * angle * lags)
        slot = int(round(angle / step)) % M
        if slot in found:
            found[slot][1] += amp
        else:
            found[slot] = [angle, amp]
    atoms = sorted((angle, abs(amp)) for angle, amp in found.values())
    atoms = [(a, m) for a, m in atoms if m > threshold]
    tol = 2 * step
    closure = []
    for x in range(len(atoms)):
        for y in range(x, len(atoms)):
            a, b = atoms[x][0], atoms[y][0]
            s = (a + b) % TWO_PI
            closure.append({"a": a, "b": b, "sum": s, "closed": any(_circ_dist(s, c) <= tol for c, _ in atoms)})
    return EigenScan(atoms, closure, step)


def default_function(target) -> FunctionSpec:
    """Centered indicator of a half of the space (``[0,1/2)`` or ``{x_0 = 0}`` analog)."""
    from .systems import BakerMap, BernoulliShift, Rotation, TorusTranslation
    from .core_sets import BoxSet, CylinderSet, DyadicRectangleSet, IntervalSet

    if isinstance(target, Rotation):
        s = IntervalSet([(0, Fraction(1, 2))])
    elif isinstance(target, TorusTranslation):
        s = BoxSet([[(0, Fraction(1, 2))] + [(0, 1)] * (target.dim - 1)], target.dim)
    elif isinstance(target, BernoulliShift):
        s = CylinderSet.fixed({0: 0})
    elif isinstance(target, BakerMap):
        s = DyadicRectangleSet(cylinder=CylinderSet.fixed({0: 0}))
    elif isinstance(target, RankOneSpec):
        from .rank_one import LevelSet

        return FunctionSpec([(1, LevelSet(1, [0]))], center=target.finite)
    else:
        raise DomainError(f"no default function for {type(target).__name__}")
    return FunctionSpec([(1, s)], center=True)


def spectrum_summary(ac: Autocovariance, N: int, M: int = 4096) -> dict:
    dens = fejer_density(ac, N, M)
    return {
        "N": N,
        "M": M,
        "min": float(dens.values.min()),
        "max": float(dens.values.max()),
        "grid_mean": float(dens.values.mean()),
        "sigma0": float(complex(ac[0]).real),
        "peak_angle": float(dens.grid[int(np.argmax(dens.values))]),
    }
