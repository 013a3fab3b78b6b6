"""Batch front end: one JSON config describes one task.

    ergolab --config run.json [--seed N] [--threads N] [--out result.json]

The result is written as stable-key-ordered JSON; tasks producing series
also write ``<out stem>.<name>.csv`` next to it.  Exact values appear as
``{"exact": "p/q", "decimal": ...}``.  A one-line summary goes to stdout.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import koopman, pentropy, poisson, rank_one, recurrence, spectral
from .core_sets import (
    Partition,
    format_rational,
    parse_boxes,
    parse_cylinder,
    parse_interval_list,
    parse_rational,
    parse_rectangles,
)
from .errors import DomainError, ErgolabError
from .rank_one import LevelSet, RankOneSpec
from .systems import BakerMap, BernoulliShift, Rotation, TorusTranslation, make_system

TASKS = (
    "stage",
    "correlate",
    "cesaro",
    "fit-limit",
    "metric",
    "spectrum",
    "atoms",
    "entropy",
    "recur",
    "roth",
    "cocycle",
    "poisson-pmf",
    "poisson-indep",
    "poisson-entropy",
)


class ConfigError(ErgolabError):
    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


# ---------------------------------------------------------------------------
# Serialization


def to_jsonable(v):
    if isinstance(v, Fraction):
        return {"exact": format_rational(v), "decimal": float(v)}
    if isinstance(v, bool) or v is None or isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return float(v)
    if isinstance(v, complex):
        return {"re": v.real, "im": v.imag}
    if isinstance(v, dict):
        return {str(k): to_jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [to_jsonable(x) for x in v]
    if hasattr(v, "to_dict"):
        return to_jsonable(v.to_dict())
    raise TypeError(f"cannot serialize {type(v).__name__}")


def dumps(obj) -> str:
    return json.dumps(to_jsonable(obj), sort_keys=True, indent=2) + "\n"


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([float(x) if isinstance(x, Fraction) else x for x in r])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Config parsing


class Context:
    """Resolved config: the target system plus typed accessors for fields."""

    def __init__(self, cfg: dict, seed: int, threads: int):
        self.cfg = cfg
        self.seed = seed
        self.threads = threads
        self.target = self._target()

    def _target(self):
        cfg = self.cfg
        try:
            if "system" in cfg:
                return make_system(cfg["system"])
            if "rank_one" in cfg:
                return rank_one.make_spec(cfg["rank_one"])
            if "preset" in cfg:
                return rank_one.make_spec(cfg["preset"])
        except DomainError as exc:
            raise ConfigError("system", str(exc)) from None
        return None

    def need(self, key):
        if key not in self.cfg:
            raise ConfigError(key, "missing")
        return self.cfg[key]

    def get(self, key, default=None):
        return self.cfg.get(key, default)

    def int(self, key, default=None) -> int:
        v = self.cfg.get(key, default)
        if v is None:
            raise ConfigError(key, "missing")
        if isinstance(v, bool) or not isinstance(v, (int, str)):
            raise ConfigError(key, f"expected an integer, got {v!r}")
        try:
            return int(v)
        except ValueError:
            raise ConfigError(key, f"expected an integer, got {v!r}") from None

    def rational(self, key, default=None):
        v = self.cfg.get(key, default)
        if v is None:
            return None
        try:
            return parse_rational(v)
        except DomainError as exc:
            raise ConfigError(key, str(exc)) from None

    def rank_one(self) -> RankOneSpec:
        if not isinstance(self.target, RankOneSpec):
            raise ConfigError("rank_one", "this task needs a rank-one construction")
        return self.target

    def set(self, key, literal=None):
        lit = self.need(key) if literal is None else literal
        if isinstance(lit, str) and lit in self.cfg.get("named", {}):
            lit = self.cfg["named"][lit]
        try:
            return parse_set(self.target, lit)
        except (DomainError, ValueError, KeyError, TypeError) as exc:
            raise ConfigError(key, str(exc)) from None

    def function(self, key="f") -> spectral.FunctionSpec:
        lit = self.cfg.get(key, "default")
        if lit == "default":
            return spectral.default_function(self.target)
        if not isinstance(lit, dict) or "terms" not in lit:
            raise ConfigError(key, "expected 'default' or {\"terms\": [[coef, set], ...]}")
        try:
            terms = [(parse_rational(q), parse_set(self.target, s)) for q, s in lit["terms"]]
            return spectral.FunctionSpec(terms, center=bool(lit.get("center", False)))
        except (DomainError, ValueError, TypeError) as exc:
            raise ConfigError(key, str(exc)) from None

    def point(self, key="x"):
        lit = self.cfg.get(key, {"seed": self.seed})
        t = self.target
        try:
            if isinstance(lit, dict) and "seed" in lit:
                return t.start_point(int(lit["seed"]))
            if isinstance(t, Rotation):
                return parse_rational(lit)
            if isinstance(t, TorusTranslation):
                return tuple(parse_rational(c) for c in lit)
        except (DomainError, ValueError, TypeError) as exc:
            raise ConfigError(key, str(exc)) from None
        raise ConfigError(key, "points of this system are given as {\"seed\": N}")

    def shift(self, key):
        """An integer, or ``{"height": j}`` for ``h_j`` of the rank-one spec."""
        v = self.need(key)
        if isinstance(v, dict) and "height" in v:
            return self.rank_one().height(int(v["height"]))
        return self.int(key)


def parse_level_set(lit) -> LevelSet:
    """``{"stage": 3, "levels": [0, 1]}`` or ``"3:0,1,4-6"``."""
    if isinstance(lit, dict):
        return LevelSet(int(lit["stage"]), [int(l) for l in lit["levels"]])
    text = str(lit)
    if ":" not in text:
        raise DomainError(f"level-set literal {text!r} needs 'stage:levels'")
    stage, body = text.split(":", 1)
    levels = []
    for part in body.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            a, b = part.split("-", 1)
            levels.extend(range(int(a), int(b) + 1))
        else:
            levels.append(int(part))
    return LevelSet(int(stage), levels)


def parse_set(target, lit):
    if isinstance(target, RankOneSpec):
        ls = parse_level_set(lit)
        ls.validate(target)
        return ls
    if lit == "full":
        return target.full_set()
    if isinstance(target, Rotation):
        return parse_interval_list(lit)
    if isinstance(target, TorusTranslation):
        return parse_boxes(lit, target.dim)
    if isinstance(target, BernoulliShift):
        return parse_cylinder(lit)
    if isinstance(target, BakerMap):
        return parse_rectangles(lit)
    raise DomainError("no system configured for set literals")


# ---------------------------------------------------------------------------
# Tasks


def task_stage(ctx: Context):
    spec = ctx.rank_one()
    j = ctx.int("j")
    st = rank_one.build_stage(spec, j)
    lo, hi = rank_one.total_measure_bounds(spec, j) if spec.finite else (None, None)
    out = st.to_dict()
    out["measure_bounds"] = None if lo is None else [lo, hi]
    out["finite"] = spec.finite
    return out, {}, f"h={st.h}"


def task_correlate(ctx: Context):
    a, b = ctx.need("range")
    A, B = ctx.set("A"), ctx.set("B")
    s = koopman.correlation_series(ctx.target, A, B, range(int(a), int(b) + 1), ctx.rational("tol"), threads=ctx.threads)
    out = {"mu_a": s.mu_a, "mu_b": s.mu_b, "theta": s.theta, "exact": s.exact, "series": [[n, lo, hi] for n, lo, hi in s.to_rows()]}
    return out, {"series": (["n", "lo", "hi"], s.to_rows())}, f"{len(s.values)} lags"


def task_cesaro(ctx: Context):
    N = ctx.int("N")
    A, B = ctx.set("A"), ctx.set("B")
    s = koopman.correlation_series(ctx.target, A, B, range(1, N + 1), ctx.rational("tol"), threads=ctx.threads)
    target = ctx.rational("target")
    avg, dev = koopman.cesaro_diagnostics(s, target, N)
    out = {"N": N, "target": s.theta if target is None else target, "avg": list(avg[-1]), "absdev": list(dev[-1])}
    rows = [(n, a[0], a[1], d[0], d[1]) for n, (a, d) in enumerate(zip(avg, dev), 1)]
    return out, {"cesaro": (["N", "avg_lo", "avg_hi", "absdev_lo", "absdev_hi"], rows)}, f"avg_N={float(avg[-1][0]):.6g}"


def task_fit_limit(ctx: Context):
    t = ctx.target
    n = ctx.shift("n")
    basis = [int(k) for k in ctx.get("basis", [0])]
    fam = ctx.get("family", {})
    if isinstance(t, RankOneSpec):
        family = koopman.level_pair_family(t, int(fam.get("stage", 2)))
    else:
        depth = int(fam.get("depth", 6))
        sets = [t.canonical_set(i) for i in range(1, depth + 1)]
        family = [(A, B) for A in sets for B in sets]
    fit = koopman.fit_weak_limit(t, n, family, basis, ctx.rational("tol"))
    out = fit.to_dict()
    out["n"] = n
    out["pairs"] = len(family)
    top = max(fit.coefficients, key=lambda k: fit.coefficients[k])
    return out, {}, f"n={n} largest={top}"


def task_metric(ctx: Context):
    kind = ctx.get("metric", "halmos")
    depth = ctx.int("depth", 8)
    S = ctx.target
    other = ctx.need("other")
    T = koopman.THETA if other == "theta" else make_system(other)
    if kind == "halmos":
        if T == koopman.THETA:
            raise ConfigError("other", "the Halmos distance compares two systems")
        v, tail = koopman.halmos_distance(S, T, depth)
        return {"metric": kind, "depth": depth, "value": v, "tail_bound": tail}, {}, f"rho={float(v):.6g}"
    if kind == "weak":
        v = koopman.weak_distance(S, T, ctx.int("n_u", 1), ctx.int("n_v", 1), depth)
        return {"metric": kind, "depth": depth, "value": v}, {}, f"w={float(v):.6g}"
    raise ConfigError("metric", f"unknown metric {kind!r}")


def _autocov(ctx: Context, N: int):
    return spectral.autocovariance(ctx.target, ctx.function(), N, ctx.rational("tol"), threads=ctx.threads)


def task_spectrum(ctx: Context):
    N = ctx.int("N")
    M = ctx.int("M", 4096)
    ac = _autocov(ctx, N)
    dens = spectral.fejer_density(ac, N, M)
    out = spectral.spectrum_summary(ac, N, M)
    out["toeplitz_min_eigenvalue"] = spectral.toeplitz_min_eigenvalue(ac, min(12, N + 1))
    out["exact"] = ac.exact
    csvs = {"autocov": (["lag", "re", "im"], ac.to_rows()), "density": (["theta", "rho"], dens.to_rows())}
    return out, csvs, f"min={out['min']:.3g} max={out['max']:.3g}"


def task_atoms(ctx: Context):
    N = ctx.int("N")
    ac = _autocov(ctx, N)
    scan = spectral.eigen_scan(ac, ctx.int("M", 4096), float(ctx.get("threshold", 0.01)))
    out = scan.to_dict()
    if "angle" in ctx.cfg:
        out["wiener_at_angle"] = spectral.wiener_atom(ac, float(ctx.cfg["angle"]), N)
    return out, {}, f"{len(scan.atoms)} atoms"


def task_entropy(ctx: Context):
    t = ctx.target
    cells = [ctx.set("xi", lit) for lit in ctx.need("xi")]
    if isinstance(t, RankOneSpec):
        xi = cells
    else:
        try:
            xi = Partition(cells)
        except DomainError as exc:
            raise ConfigError("xi", str(exc)) from None
    family = pentropy.ProgressionFamily.parse(ctx.get("L", "j"))
    prof = pentropy.pentropy_profile(t, xi, family, ctx.int("j_max", 6), threads=ctx.threads)
    rows = prof.rows
    lo, hi = prof.limsup
    return prof.to_dict(), {"profile": (["j", "L", "h_lo", "h_hi"], rows)}, f"max h={hi:.6g}"


def task_recur(ctx: Context):
    mode = ctx.get("mode", "birkhoff")
    N = ctx.int("N")
    t = ctx.target
    if mode == "birkhoff":
        ob = recurrence.birkhoff_average(t, ctx.function(), ctx.point(), N)
        return {"mode": mode, "N": N, "average": ob.average}, {}, f"average={float(ob.average):.6g}"
    if mode == "vn":
        ac = _autocov(ctx, max(N - 1, 1))
        v = recurrence.vn_norm(ac, N)
        return {"mode": mode, "N": N, "norm": v}, {}, f"norm={v:.6g}"
    if mode == "multirec":
        A = ctx.set("A")
        sets = [ctx.set("others", s) for s in ctx.need("others")]
        ser = recurrence.multirec_average(t, A, sets, N, ctx.rational("tol"), threads=ctx.threads)
        out = {"mode": mode, "N": N, "k": len(sets), "average": list(ser.averages[-1]), "exact": ser.exact}
        rows = ser.to_rows()
        return out, {"multirec": (["i", "term_lo", "term_hi", "avg_lo", "avg_hi"], rows)}, f"average={float(ser.averages[-1][0]):.6g}"
    raise ConfigError("mode", f"unknown recurrence mode {mode!r}")


def task_roth(ctx: Context):
    rep = recurrence.roth_min_i(ctx.target, ctx.set("A"), ctx.int("i_max", 100), ctx.rational("tol"))
    return rep.to_dict(), {}, f"i_min={rep.i_min}"


def task_cocycle(ctx: Context):
    f = ctx.function()
    floor = ctx.int("N_floor", 0)
    budget = ctx.int("budget", recurrence.DEFAULT_BUDGET)
    if "sweep" in ctx.cfg:
        sw = ctx.cfg["sweep"]
        res = recurrence.cocycle_sweep(ctx.target, f, int(sw.get("count", 100)), int(sw.get("seed", ctx.seed)), floor, budget)
        times = [n for _, n in res]
        found = sum(n is not None for n in times)
        out = {"N_floor": floor, "budget": budget, "found": found, "count": len(times), "times": times}
        return out, {}, f"{found}/{len(times)} found"
    n = recurrence.cocycle_first_zero(ctx.target, f, ctx.point(), floor, budget)
    return {"N_floor": floor, "budget": budget, "N": n}, {}, f"N={n}"


def _window(ctx: Context) -> poisson.PoissonWindow:
    if ctx.target is None:
        ctx.target = rank_one.infinite_l()
    return poisson.PoissonWindow.from_stage(ctx.rank_one(), ctx.int("window_stage", 1))


def _poisson_set(ctx: Context, key):
    lit = ctx.need(key)
    if isinstance(lit, str) and ".." in lit:
        try:
            return parse_interval_list(lit, "ray")
        except DomainError as exc:
            raise ConfigError(key, str(exc)) from None
    return ctx.set(key)


def task_poisson_pmf(ctx: Context):
    w = _window(ctx)
    sample = poisson.sample_configs(w, ctx.int("count", 10**5), ctx.seed, threads=ctx.threads)
    cd = poisson.count_distribution(sample, _poisson_set(ctx, "A"), ctx.get("K"))
    out = cd.to_dict()
    out["sample"] = sample.describe()
    return out, {}, f"chi2={cd.chi2:.4g} dof={cd.dof}"


def task_poisson_indep(ctx: Context):
    w = _window(ctx)
    sample = poisson.sample_configs(w, ctx.int("count", 10**5), ctx.seed, threads=ctx.threads)
    rep = poisson.independence_check(sample, _poisson_set(ctx, "A"), _poisson_set(ctx, "B"))
    out = rep.to_dict()
    out["sample"] = sample.describe()
    return out, {}, f"pass={rep.passed}"


def task_poisson_entropy(ctx: Context):
    w = _window(ctx)
    res = poisson.suspension_pentropy(w, ctx.set("A"), ctx.int("j"), ctx.int("L"), ctx.int("count", 10**5), ctx.seed, threads=ctx.threads)
    out = res.to_dict()
    out["seed"] = ctx.seed
    return out, {}, f"ratio={res.ratio:.4f}"


HANDLERS = {
    "stage": task_stage,
    "correlate": task_correlate,
    "cesaro": task_cesaro,
    "fit-limit": task_fit_limit,
    "metric": task_metric,
    "spectrum": task_spectrum,
    "atoms": task_atoms,
    "entropy": task_entropy,
    "recur": task_recur,
    "roth": task_roth,
    "cocycle": task_cocycle,
    "poisson-pmf": task_poisson_pmf,
    "poisson-indep": task_poisson_indep,
    "poisson-entropy": task_poisson_entropy,
}


def run(cfg: dict, seed: int | None = None, threads: int = 1):
    """Run one task; returns ``(result dict, csv tables, summary line)``."""
    if not isinstance(cfg, dict):
        raise ConfigError("config", "top level must be an object")
    task = cfg.get("task")
    if task not in HANDLERS:
        raise ConfigError("task", f"expected one of {', '.join(TASKS)}, got {task!r}")
    if seed is None:
        seed = int(cfg.get("seed", 0))
    ctx = Context(cfg, seed, threads)
    if ctx.target is None and not task.startswith("poisson"):
        raise ConfigError("system", "config needs 'system', 'rank_one' or 'preset'")
    result, tables, summary = HANDLERS[task](ctx)
    result = {"task": task, "seed": seed, "result": result}
    return result, tables, f"{task}: {summary}"


def write_outputs(out: Path, result, tables):
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(dumps(result))
    for name, (header, rows) in sorted(tables.items()):
        out.with_name(f"{out.stem}.{name}.csv").write_text(_csv_text(header, rows))


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="ergolab", description="Run one ergodic-theory experiment from a JSON config.")
    ap.add_argument("--config", required=True, type=Path)
    ap.add_argument("--seed", type=int, default=None, help="overrides the config's seed")
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--out", type=Path, default=None, help="JSON result path (default: stdout)")
    args = ap.parse_args(argv)
    try:
        text = args.config.read_text()
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        print(f"error: {args.config}: line {exc.lineno} column {exc.colno}: {exc.msg}", file=sys.stderr)
        return 2
    try:
        result, tables, summary = run(cfg, args.seed, max(1, args.threads))
    except ConfigError as exc:
        print(f"error: {args.config}: field {exc}", file=sys.stderr)
        return 2
    except ErgolabError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    if args.out is None:
        sys.stdout.write(dumps(result))
    else:
        write_outputs(args.out, result, tables)
    print(summary if args.out is None else f"{summary} -> {args.out}", file=sys.stderr if args.out is None else sys.stdout)
    return 0


if __name__ == "__main__":
    sys.exit(main())
