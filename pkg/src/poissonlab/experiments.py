"""Config-driven experiment runner and report emission."""
from __future__ import annotations

import copy
import csv
import io
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from ._accel import backend_name
from .convergence import (
    IntervalRing,
    TargetLaw,
    gof_from_laws,
    ks_distance,
    law_from_counts,
    ring_from_config,
    sandwich_bound_check,
)
from .errors import ConfigError
from .measure import (
    check_window,
    density_from_config,
    normalize_to_window,
    window_from_config,
    window_mass,
)
from .rng import replicate_rng
from .runs import estimate_neighborhood_condition, model_from_config, sample_runs
from .tessellation import (
    circumradius_process,
    coupled_min_statistics,
    extreme_statistics,
    inradius_pair,
    scale_factor,
)
from .voronoi import alpha2_with_error, estimate_p_k

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
EXPERIMENTS = ("runs", "inradius", "inradius_hat", "circumradius", "sandwich",
               "pk_estimate", "null_calibration")

_BOX2 = {"kind": "constant", "c": 1.0, "support": [[-1.0, -1.0], [2.0, 2.0]]}
_UNIT_SQUARE = {"lo": [0.0, 0.0], "hi": [1.0, 1.0]}

DEFAULT_PARAMS = {
    "runs": {
        "model": {"kind": "iid", "k": 2, "p_exponent": -0.25},
        "rings": [[[0, 3]], [[0, 1.5], [2, 3.5]], [[1, 4]], [[0.5, 2], [3, 5]]],
        "u_max": 12.0, "k_max": 6, "level": 0.01, "ks_max": 0.03,
        "hypothesis_reps": 20000, "hypothesis_max": None,
    },
    "inradius": {
        "density": _BOX2, "window": _UNIT_SQUARE, "u_grid": [0.0, 1.0, 2.0], "u_top": 50.0,
        "rings": [[[-1, 50]], [[-0.5, 1.5]], [[-1, 0], [1, 50]]],
        "k_max": 6, "level": 0.01, "ks_max": 0.05,
    },
    "circumradius": {
        "density": _BOX2, "window": _UNIT_SQUARE, "atom_cutoff": 4.0,
        "pk_samples": 10_000_000, "pk_seed": 12345, "u_grid": [0.5, 1.0],
        "rings": [[[0, 1]], [[0, 0.5], [0.8, 1.2]], [[0.5, 1.5]]],
        "k_max": 6, "level": 0.01, "ks_max": None,
    },
    "sandwich": {
        "phi": {"kind": "step", "edges": [[-1.0, 0.5, 2.0]], "values": [0.8, 1.2]},
        "f1": {"kind": "piecewise_linear", "knots": [-1.0, 0.5, 0.6, 2.0],
               "values": [0.8, 0.8, 1.2, 1.2]},
        "f2": {"kind": "piecewise_linear", "knots": [-1.0, 0.4, 0.5, 2.0],
               "values": [0.8, 0.8, 1.2, 1.2]},
        "window": {"lo": [0.0], "hi": [1.0]}, "s": 0.5, "r": 2.0, "u_grid": [0.5, 1.0],
    },
    "pk_estimate": {
        "cases": [{"d": 1, "k": 2, "expected": 0.5, "tol": 0.01}, {"d": 2, "k": 3}],
    },
    "null_calibration": {
        "measure": "lebesgue_halfline", "mu_W": 1.0, "d": 1, "lo": 0.0, "hi": 6.0,
        "rings": [[[0, 3]], [[0, 1.5], [2, 3.5]], [[1, 4]], [[0.5, 2], [3, 5]]],
        "replicates_per_trial": 1000, "k_max": 6, "level": 0.01, "max_rejection": 0.03,
    },
}
DEFAULT_PARAMS["inradius_hat"] = copy.deepcopy(DEFAULT_PARAMS["inradius"])
DEFAULT_SCHEDULE = {"runs": [100000], "inradius": [10000.0], "inradius_hat": [10000.0],
                    "circumradius": [10000.0], "sandwich": [10000.0], "pk_estimate": [0],
                    "null_calibration": [0]}
DEFAULT_REPLICATES = {"runs": 5000, "inradius": 2000, "inradius_hat": 2000,
                      "circumradius": 2000, "sandwich": 2000, "pk_estimate": 100000,
                      "null_calibration": 1000}


@dataclass
class ExperimentConfig:
    experiment: str
    seed: int = 0
    replicates: int = 0
    schedule: list = field(default_factory=list)
    params: dict = field(default_factory=dict)
    workers: int = 1
    out: str | None = None
    schema_version: int = SCHEMA_VERSION

    @classmethod
    def default(cls, experiment, **over):
        if experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {experiment!r}; choose from {EXPERIMENTS}")
        cfg = cls(experiment, replicates=DEFAULT_REPLICATES[experiment],
                  schedule=list(DEFAULT_SCHEDULE[experiment]),
                  params=copy.deepcopy(DEFAULT_PARAMS[experiment]))
        for k, v in over.items():
            setattr(cfg, k, v)
        return cfg

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        exp = data.get("experiment")
        if exp not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {exp!r}; choose from {EXPERIMENTS}")
        version = data.get("schema_version", SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema_version {version}")
        unknown = set(data) - {"experiment", "seed", "replicates", "schedule", "params",
                               "workers", "out", "schema_version"}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        base = cls.default(exp)
        params = {**base.params, **data.get("params", {})}
        cfg = cls(exp, int(data.get("seed", 0)), int(data.get("replicates", base.replicates)),
                  list(data.get("schedule", base.schedule)), params,
                  int(data.get("workers", 1)), data.get("out"), version)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path):
        try:
            return cls.from_dict(json.loads(Path(path).read_text()))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not valid JSON ({exc})") from None

    def to_dict(self):
        return {"experiment": self.experiment, "schema_version": self.schema_version,
                "seed": self.seed, "replicates": self.replicates,
                "schedule": list(self.schedule), "params": copy.deepcopy(self.params),
                "workers": self.workers, "out": self.out}

    def validate(self):
        if not self.schedule:
            raise ConfigError("schedule must be non-empty")
        if self.replicates < 1:
            raise ConfigError("replicates must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        try:
            for spec in self.params.get("rings", []):
                ring_from_config(spec)
            _resolve(self)
        except (ValueError, TypeError, KeyError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"invalid params: {exc}") from exc
        return self

    def describe(self):
        res = _resolve(self)
        return {"experiment": self.experiment, "schedule": list(self.schedule),
                "replicates": self.replicates, "seed": self.seed, "workers": self.workers,
                "resolved": res}


# -- setup shared by the parent and the workers ---------------------------------


def _resolve(cfg):
    """Derived constants computed once in the parent (alpha_2, mu(W), ...)."""
    p = cfg.params
    exp = cfg.experiment
    if exp in ("inradius", "inradius_hat", "circumradius"):
        dens = density_from_config(p["density"])
        win = window_from_config(p["window"])
        check_window(dens, win, require_convex=exp == "circumradius")
        mu = window_mass(dens, win)
        out = {"dim": dens.dim, "mu_W": mu}
        if exp == "circumradius":
            if dens.dim not in (1, 2):
                raise ConfigError("circumradius experiments support d = 1 and d = 2")
            out.update(_alpha2_for(dens.dim, int(p.get("pk_samples", 10_000_000)),
                                   int(p.get("pk_seed", 12345)), p.get("alpha2")))
        return out
    if exp == "sandwich":
        phi, f1, f2 = (density_from_config(p[k]) for k in ("phi", "f1", "f2"))
        win = window_from_config(p["window"])
        check_window(phi, win, require_convex=True)
        _check_sandwich(phi, f1, f2, float(p["s"]), float(p["r"]))
        return {"dim": phi.dim, "theta_W": window_mass(phi, win), "alpha2": 1.0
                if phi.dim == 1 else None}
    if exp == "runs":
        model_from_config(p["model"])
        return {}
    return {}


@lru_cache(maxsize=8)
def _alpha2_cached(d, n, seed):
    p, se = estimate_p_k(d, d + 1, n, seed)
    return p, se


def _alpha2_for(d, n, seed, fixed=None):
    if fixed is not None:
        return {"alpha2": float(fixed), "alpha2_se": 0.0, "alpha2_exact": True}
    if d == 1:
        # the cell of 0 among two points is inside (-1, 1) iff they straddle 0
        return {"alpha2": 1.0, "alpha2_se": 0.0, "alpha2_exact": True, "p_d1": 0.5}
    p, se = _alpha2_cached(d, n, seed)
    a, a_se = alpha2_with_error(d, p, se)
    return {"alpha2": a, "alpha2_se": a_se, "alpha2_exact": False, "p_d1": p, "p_d1_se": se}


def _check_sandwich(phi, f1, f2, s, r):
    g = np.linspace(phi.support_lo, phi.support_hi, 20001).reshape(-1, phi.dim)
    vp, v1, v2 = phi.evaluate(g), f1.evaluate(g), f2.evaluate(g)
    tol = 1e-12
    if not (np.all(s * vp <= v1 + tol) and np.all(v1 <= vp + tol)):
        raise ConfigError("need s*phi <= f1 <= phi on the support")
    if not (np.all(vp <= v2 + tol) and np.all(v2 <= r * vp + tol)):
        raise ConfigError("need phi <= f2 <= r*phi on the support")


@lru_cache(maxsize=8)
def _context(cfg_json, resolved_json):
    cfg = json.loads(cfg_json)
    res = json.loads(resolved_json)
    p = cfg["params"]
    exp = cfg["experiment"]
    ctx = {"params": p, "resolved": res}
    if exp in ("inradius", "inradius_hat", "circumradius"):
        dens = density_from_config(p["density"])
        win = window_from_config(p["window"])
        if exp != "circumradius":
            dens, win = normalize_to_window(dens, win)
        else:
            win = win.with_mass(res["mu_W"])
        ctx.update(density=dens, window=win)
    elif exp == "sandwich":
        ctx.update({k: density_from_config(p[k]) for k in ("phi", "f1", "f2")})
        ctx["window"] = window_from_config(p["window"])
    elif exp == "runs":
        ctx["model"] = model_from_config(p["model"])
    if "rings" in p:
        ctx["rings"] = [ring_from_config(r) for r in p["rings"]]
    return ctx


# -- one replicate per experiment ----------------------------------------------


def _replicate(exp, ctx, point, rng):
    p = ctx["params"]
    if exp == "runs":
        sample, t_first = sample_runs(ctx["model"], int(point), float(p["u_max"]), rng)
        return {"counts": [r.count(sample) for r in ctx["rings"]],
                "stats": {"first_arrival": t_first}}
    if exp in ("inradius", "inradius_hat"):
        main, other = inradius_pair(ctx["density"], ctx["window"], float(point), rng,
                                    hat=exp == "inradius_hat")
        u_top = float(p["u_top"])
        tails = [main.count_in(u, u_top) for u in p["u_grid"]]
        stats_ = {"max": extreme_statistics(main)[0], "n_atoms": len(main)}
        if exp == "inradius_hat":
            diff = np.abs(main.atoms - other.atoms) if len(main) == len(other) else [math.inf]
            stats_["max_abs_atom_diff"] = float(np.max(diff)) if len(main) else 0.0
            stats_["ring_count_abs_diff"] = sum(abs(r.count(main) - r.count(other))
                                                for r in ctx["rings"])
        return {"counts": [r.count(main) for r in ctx["rings"]], "tails": tails,
                "stats": stats_}
    if exp == "circumradius":
        res = ctx["resolved"]
        sample = circumradius_process(ctx["density"], ctx["window"], float(point), rng,
                                      res["alpha2"], atom_cutoff=p.get("atom_cutoff"))
        return {"counts": [r.count(sample) for r in ctx["rings"]],
                "tails": [sample.count_in(0.0, u, closed_left=True, closed_right=True)
                          for u in p["u_grid"]],
                "stats": {"min": extreme_statistics(sample)[1],
                          "unbounded": sample.counters["unbounded"],
                          "above_cutoff": sample.counters["above_cutoff"]}}
    if exp == "sandwich":
        out = coupled_min_statistics(ctx["phi"], ctx["f1"], ctx["f2"], float(point),
                                     ctx["window"], rng, ctx["resolved"]["alpha2"] or 1.0)
        return {"stats": {k: float(v) for k, v in out.items()}}
    if exp == "null_calibration":
        target = TargetLaw.process(p["measure"], p["mu_W"], p["d"])
        n = int(p["replicates_per_trial"])
        lo, hi = float(p["lo"]), float(p["hi"])
        counts = np.empty((len(ctx["rings"]), n), dtype=np.int64)
        for j in range(n):
            s = target.sample_process(rng, lo, hi)
            counts[:, j] = [r.count(s) for r in ctx["rings"]]
        laws = [law_from_counts(c, r.measure(target), r) for c, r in zip(counts, ctx["rings"])]
        rep = gof_from_laws(laws, k_max=int(p["k_max"]), level=float(p["level"]))
        return {"stats": {"reject": float(not rep["pass"])}}
    raise ConfigError(f"no replicate runner for {exp!r}")


def _run_chunk(cfg_json, resolved_json, sched_idx, start, stop):
    cfg = json.loads(cfg_json)
    ctx = _context(cfg_json, resolved_json)
    point = cfg["schedule"][sched_idx]
    out = []
    for rep in range(start, stop):
        rng = replicate_rng(cfg["seed"], sched_idx, rep)
        out.append(_replicate(cfg["experiment"], ctx, point, rng))
    return out


def _run_replicates(cfg, resolved, sched_idx):
    cfg_json = json.dumps(cfg.to_dict(), sort_keys=True)
    res_json = json.dumps(resolved, sort_keys=True)
    R = cfg.replicates
    if cfg.workers <= 1:
        return _run_chunk(cfg_json, res_json, sched_idx, 0, R)
    size = max(1, math.ceil(R / (4 * cfg.workers)))
    bounds = [(a, min(a + size, R)) for a in range(0, R, size)]
    with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
        parts = pool.map(_run_chunk, [cfg_json] * len(bounds), [res_json] * len(bounds),
                         [sched_idx] * len(bounds), *zip(*bounds))
        return [row for part in parts for row in part]


# -- summaries --------------------------------------------------------------------


def num(value, se=None, exact=False):
    """A reported number: value plus standard error, or flagged exact."""
    out = {"value": value}
    if se is not None:
        out["se"] = se
    if exact or se is None:
        out["exact"] = bool(exact)
    return out


def _check(name, statistic, threshold, passed, relation):
    return {"name": name, "statistic": statistic, "threshold": threshold,
            "relation": relation, "pass": bool(passed)}


def _mean_se(x):
    x = np.asarray(x, dtype=float)
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size)) if x.size > 1 else 0.0


def _gof(rows, rings, target, p):
    laws = [law_from_counts([r["counts"][j] for r in rows], ring.measure(target), ring)
            for j, ring in enumerate(rings)]
    return gof_from_laws(laws, k_max=int(p.get("k_max", 6)), level=float(p.get("level", 0.01)))


def _cdf_pairs(name, values, target, n_grid=101):
    v = np.sort(np.asarray(values, dtype=float))
    fin = v[np.isfinite(v)]
    if fin.size == 0:
        return []
    grid = np.quantile(fin, np.linspace(0, 1, n_grid))
    emp = np.searchsorted(v, grid, side="right") / v.size
    tgt = target.cdf(grid)
    return [{"statistic": name, "x": float(x), "empirical": float(e), "target": float(t)}
            for x, e, t in zip(grid, emp, tgt)]


def _summarize(cfg, resolved, point, rows):
    exp = cfg.experiment
    p = cfg.params
    checks, summary, cdf_rows = [], {}, []
    if exp == "runs":
        rings = [ring_from_config(r) for r in p["rings"]]
        target = TargetLaw.process("lebesgue_halfline")
        gof = _gof(rows, rings, target, p)
        summary["gof"] = gof
        checks.append(_check("gof", gof["n_checks"], gof["per_check_threshold"], gof["pass"],
                             "all p >= threshold"))
        checks.append(_check("dk_within_4se", None, 4.0, gof["all_dk_within_4se"],
                             "|D_k| <= 4 se"))
        fa = [r["stats"]["first_arrival"] for r in rows]
        ks, n = ks_distance(fa, TargetLaw("exp_unit"))
        summary["first_arrival_ks"] = num(ks, exact=True)
        summary["censored"] = num(int(np.sum(~np.isfinite(fa))), exact=True)
        checks.append(_check("first_arrival_ks", ks, p["ks_max"], ks <= p["ks_max"], "<="))
        cdf_rows += _cdf_pairs("first_arrival", fa, TargetLaw("exp_unit"))
        model = model_from_config(p["model"])
        hyp = estimate_neighborhood_condition(model, int(point), int(p["hypothesis_reps"]),
                                              replicate_rng(cfg.seed, 10_000, 0))
        summary["y_n"] = num(model.y(int(point)), exact=True)
        summary["hypothesis"] = num(hyp.estimate, hyp.std_error)
        summary["pairwise_bound"] = num(hyp.pairwise_bound, hyp.pairwise_se)
        if p.get("hypothesis_max") is not None:
            checks.append(_check("hypothesis", hyp.estimate, p["hypothesis_max"],
                                 hyp.estimate + 3 * hyp.std_error < p["hypothesis_max"],
                                 "estimate + 3 se <"))
    elif exp in ("inradius", "inradius_hat"):
        rings = [ring_from_config(r) for r in p["rings"]]
        target = TargetLaw.process("exp_tail")
        tails = []
        for j, u in enumerate(p["u_grid"]):
            m, se = _mean_se([r["tails"][j] for r in rows])
            lam = target.measure_of(u, p["u_top"])
            ok = abs(m - lam) <= 3 * se
            tails.append({"u": u, "mean": num(m, se), "target": num(lam, exact=True),
                          "pass": ok})
            checks.append(_check(f"intensity_u={u:g}", m, lam, ok, "|mean - target| <= 3 se"))
        summary["intensity"] = tails
        maxs = [r["stats"]["max"] for r in rows]
        ks, _ = ks_distance(maxs, TargetLaw("gumbel"))
        summary["max_ks"] = num(ks, exact=True)
        checks.append(_check("gumbel_ks", ks, p["ks_max"], ks <= p["ks_max"], "<="))
        cdf_rows += _cdf_pairs("max", maxs, TargetLaw("gumbel"))
        gof = _gof(rows, rings, target, p)
        summary["gof"] = gof
        checks.append(_check("gof", gof["n_checks"], gof["per_check_threshold"], gof["pass"],
                             "all p >= threshold"))
        if exp == "inradius_hat":
            diff = max(r["stats"]["max_abs_atom_diff"] for r in rows)
            m, se = _mean_se([r["stats"]["ring_count_abs_diff"] for r in rows])
            summary["max_abs_atom_diff_vs_xi"] = num(diff, exact=True)
            summary["mean_abs_count_diff_vs_xi"] = num(m, se)
    elif exp == "circumradius":
        d = resolved["dim"]
        mu = resolved["mu_W"]
        rings = [ring_from_config(r) for r in p["rings"]]
        target = TargetLaw.process("power_law", mu, d)
        law = TargetLaw("weibull", mu_W=mu, d=d)
        mins = np.array([r["stats"]["min"] for r in rows])
        ks, _ = ks_distance(mins, law)
        a, a_se = resolved["alpha2"], resolved["alpha2_se"]
        # atoms scale linearly in alpha_2, so rescale the minima
        ks_band = [ks_distance(mins * (a + s * a_se) / a, law)[0] for s in (-2.0, 2.0)]
        ks_worst = max([ks] + ks_band)
        ks_max = p.get("ks_max") or (0.05 if d == 1 else 0.07)
        summary["alpha2"] = num(a, a_se, exact=resolved["alpha2_exact"])
        summary["min_ks"] = num(ks, exact=True)
        summary["min_ks_alpha2_band"] = num(ks_worst, exact=True)
        checks.append(_check("weibull_ks", ks_worst, ks_max, ks_worst <= ks_max,
                             "max KS over alpha2 +- 2se <="))
        cdf_rows += _cdf_pairs("min", mins, law)
        tails = []
        for j, u in enumerate(p["u_grid"]):
            m, se = _mean_se([r["tails"][j] for r in rows])
            tails.append({"u": u, "mean": num(m, se),
                          "limit": num(target.measure_of(0.0, u), exact=True)})
        summary["intensity"] = tails
        summary["dropped_unbounded"] = num(int(sum(r["stats"]["unbounded"] for r in rows)),
                                           exact=True)
        summary["above_cutoff"] = num(int(sum(r["stats"]["above_cutoff"] for r in rows)),
                                      exact=True)
        summary["gof"] = _gof(rows, rings, target, p)
    elif exp == "sandwich":
        stats_ = [r["stats"] for r in rows]
        for s_ in stats_:
            s_["nested"] = bool(s_["nested"])
        rep = sandwich_bound_check(stats_, float(p["s"]), float(p["r"]), p["u_grid"],
                                   resolved["theta_W"], resolved["dim"])
        summary["sandwich"] = rep
        for row in rep["rows"]:
            rel = "tail <= bound + 3 se" if row["side"] == "upper" else "tail >= bound - 3 se"
            checks.append(_check(f"{row['side']}_u={row['u']:g}", row["tail"], row["bound"],
                                 row["pass"], rel))
        checks.append(_check("nested", None, None, rep["nested_every_replicate"], "all"))
        checks.append(_check("min_order", None, None, rep["min_order_every_replicate"], "all"))
    elif exp == "null_calibration":
        rej = [r["stats"]["reject"] for r in rows]
        rate, se = _mean_se(rej)
        summary["rejection_rate"] = num(rate, se)
        checks.append(_check("rejection_rate", rate, p["max_rejection"],
                             rate <= p["max_rejection"], "<="))
    return summary, checks, cdf_rows


def _pk_experiment(cfg):
    results, checks = [], []
    n = cfg.replicates
    for i, case in enumerate(cfg.params["cases"]):
        d, k = int(case["d"]), int(case["k"])
        p, se = estimate_p_k(d, k, n, replicate_rng(cfg.seed, i))
        row = {"d": d, "k": k, "p": num(p, se)}
        if k == d + 1 and p > 0:
            a, a_se = alpha2_with_error(d, p, se)
            row["alpha2"] = num(a, a_se)
        if "expected" in case:
            tol = float(case.get("tol", 3 * se))
            ok = abs(p - case["expected"]) <= tol
            checks.append(_check(f"p_{k}(d={d})", p, case["expected"], ok, f"|p - x| <= {tol}"))
        results.append(row)
    return results, checks


def run_experiment(config):
    """Run every schedule point; write files when ``config.out`` is set."""
    cfg = config if isinstance(config, ExperimentConfig) else ExperimentConfig.from_dict(config)
    cfg.validate()
    started = time.perf_counter()
    resolved = _resolve(cfg)
    points, all_checks, counts_rows, extremes_rows, cdf_rows = [], [], [], [], []
    if cfg.experiment == "pk_estimate":
        res, all_checks = _pk_experiment(cfg)
        points.append({"schedule": None, "summary": {"cases": res}})
    else:
        for si, point in enumerate(cfg.schedule):
            rows = _run_replicates(cfg, resolved, si)
            summary, checks, cdf = _summarize(cfg, resolved, point, rows)
            for c in checks:
                c["schedule"] = point
            all_checks += checks
            points.append({"schedule": point, "summary": summary})
            labels = [ring_from_config(r).label() for r in cfg.params.get("rings", [])]
            for rep, row in enumerate(rows):
                for lab, c in zip(labels, row.get("counts", [])):
                    counts_rows.append({"replicate": rep, "t": point,
                                        "statistic": f"count{lab}", "value": c})
                for name, v in row["stats"].items():
                    extremes_rows.append({"replicate": rep, "t": point, "statistic": name,
                                          "value": v})
            cdf_rows += [{**r, "t": point} for r in cdf]
    report = {
        "schema_version": SCHEMA_VERSION,
        "experiment": cfg.experiment,
        "config": cfg.to_dict(),
        "resolved": resolved,
        "backend": backend_name(),
        "results": points,
        "verdict": {"pass": all(c["pass"] for c in all_checks), "checks": all_checks},
        "runtime_seconds": round(time.perf_counter() - started, 3),
        "tables": {"counts": counts_rows, "extremes": extremes_rows, "cdf_pairs": cdf_rows},
    }
    if cfg.out:
        emit_report(report, cfg.out)
    return report


# -- emission -----------------------------------------------------------------------


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        if math.isnan(f):
            return None
        if math.isinf(f):
            return "inf" if f > 0 else "-inf"
        return f
    return obj


def report_json(report):
    body = {k: v for k, v in report.items() if k != "tables"}
    return json.dumps(_clean(body), indent=2, sort_keys=True) + "\n"


_CSV_FIELDS = {
    "counts.csv": ("replicate", "t", "statistic", "value"),
    "extremes.csv": ("replicate", "t", "statistic", "value"),
    "cdf_pairs.csv": ("t", "statistic", "x", "empirical", "target"),
}


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def report_csvs(report):
    tables = report.get("tables", {})
    out = {}
    for name, fields in _CSV_FIELDS.items():
        rows = tables.get(name.split(".")[0], [])
        key = (lambda r: (str(r["t"]), r["statistic"], r["x"])) if name == "cdf_pairs.csv" \
            else (lambda r: (str(r["t"]), r["statistic"], r["replicate"]))
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(fields)
        for r in sorted(rows, key=key):
            w.writerow([_fmt(r[f]) for f in fields])
        out[name] = buf.getvalue()
    return out


def emit_report(report, out_dir, formats=("json", "csv")):
    """Write report.json and the CSV bundle; returns the written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    if "json" in formats:
        path = out / "report.json"
        path.write_text(report_json(report))
        paths.append(path)
    if "csv" in formats:
        for name, text in report_csvs(report).items():
            path = out / name
            path.write_text(text)
            paths.append(path)
    return paths


def empty_report():
    return {"schema_version": SCHEMA_VERSION, "experiment": None, "results": [],
            "verdict": {"pass": True, "checks": []}, "tables": {}}
