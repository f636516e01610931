"""Convergence diagnostics for point processes on the line.

For a Poisson count N with mean lam, k P(N = k) = lam P(N = k - 1) for every
k >= 1, and only Poisson laws satisfy this. The statistic
D_k = k P(N = k) - lam P(N = k - 1) is estimated per interval ring and
compared with its Monte Carlo standard error.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .errors import EmptySampleError, InsufficientReplicatesError, SupportExceededError
from .rescaled import RescaledSample

MIN_REPLICATES = 100
NECESSARY_ONLY = ("A finite battery of rings and k values can only refute convergence; "
                  "passing every check is necessary, not sufficient.")


@dataclass(frozen=True)
class IntervalRing:
    """Finite union of disjoint bounded open intervals, stored sorted."""

    intervals: tuple = ()

    def __post_init__(self):
        ivs = sorted((float(a), float(b)) for a, b in self.intervals)
        for a, b in ivs:
            if not (math.isfinite(a) and math.isfinite(b)) or not a < b:
                raise ValueError(f"({a}, {b}) is not a bounded open interval")
        for (_, b0), (a1, _) in zip(ivs, ivs[1:]):
            if a1 < b0:
                raise ValueError("intervals of a ring must be disjoint")
        object.__setattr__(self, "intervals", tuple(ivs))

    @classmethod
    def of(cls, *pairs):
        return cls(tuple(pairs))

    @property
    def is_empty(self):
        return not self.intervals

    @property
    def lower(self):
        return self.intervals[0][0]

    @property
    def upper(self):
        return self.intervals[-1][1]

    def label(self):
        if self.is_empty:
            return "{}"
        return "U".join(f"({a:g},{b:g})" for a, b in self.intervals)

    def count(self, sample):
        """xi(B) for a RescaledSample; refuses sets outside its complete range."""
        total = 0
        for a, b in self.intervals:
            if not sample.covers(a, b):
                raise SupportExceededError(
                    f"ring interval ({a}, {b}) leaves the sample range {sample.support}")
            total += sample.count_in(a, b)
        return total

    def measure(self, target):
        return float(sum(target.measure_of(a, b) for a, b in self.intervals))


def ring_from_config(spec):
    return IntervalRing(tuple(tuple(p) for p in spec))


@dataclass(frozen=True)
class TargetLaw:
    """Limit law: a Poisson process with measure M, or a scalar CDF."""

    kind: str
    measure: str | None = None
    mu_W: float = 1.0
    d: int = 1

    KINDS = ("poisson_process", "gumbel", "weibull", "exp_unit")
    MEASURES = ("lebesgue_halfline", "exp_tail", "power_law")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown target kind {self.kind!r}")
        if self.kind == "poisson_process" and self.measure not in self.MEASURES:
            raise ValueError(f"unknown measure descriptor {self.measure!r}")

    @classmethod
    def process(cls, measure, mu_W=1.0, d=1):
        return cls("poisson_process", measure, float(mu_W), int(d))

    def measure_of(self, a, b):
        """M((a, b)) in closed form."""
        if b <= a:
            return 0.0
        if self.measure == "lebesgue_halfline":
            return max(b, 0.0) - max(a, 0.0)
        if self.measure == "exp_tail":
            return math.exp(-a) - math.exp(-b)
        if self.measure == "power_law":
            e = self.d + 1
            return self.mu_W * (max(b, 0.0) ** e - max(a, 0.0) ** e)
        raise ValueError("scalar laws have no intensity measure")

    def _inverse_mass(self, a, m):
        """Point x > a with M((a, x)) = m."""
        if self.measure == "lebesgue_halfline":
            return max(a, 0.0) + m
        if self.measure == "exp_tail":
            return -np.log(np.exp(-a) - m)
        e = self.d + 1
        return (max(a, 0.0) ** e + m / self.mu_W) ** (1.0 / e)

    def cdf(self, u):
        u = np.asarray(u, dtype=float)
        with np.errstate(over="ignore", invalid="ignore"):
            if self.kind == "gumbel":
                return np.exp(-np.exp(-u))
            if self.kind == "exp_unit":
                return np.where(u > 0, -np.expm1(-np.maximum(u, 0.0)), 0.0)
            if self.kind == "weibull":
                v = np.maximum(u, 0.0)
                return np.where(u > 0, -np.expm1(-self.mu_W * v ** (self.d + 1)), 0.0)
        raise ValueError("Poisson process targets have no scalar CDF")

    def sample_process(self, rng, lo, hi, meta=None):
        """Atoms of the Poisson process with measure M, restricted to (lo, hi)."""
        total = self.measure_of(lo, hi)
        n = int(rng.poisson(total))
        atoms = self._inverse_mass(lo, total * rng.random(n))
        return RescaledSample(atoms, {"transform": "target", **(meta or {})}, (lo, hi))

    def describe(self):
        return {"kind": self.kind, "measure": self.measure, "mu_W": self.mu_W, "d": self.d}


@dataclass(frozen=True, eq=False)
class EmpiricalLaw:
    ring: IntervalRing
    counts: np.ndarray
    lam: float
    histogram: np.ndarray = field(init=False)

    def __post_init__(self):
        c = np.asarray(self.counts, dtype=np.int64).reshape(-1)
        if np.any(c < 0):
            raise ValueError("counts must be non-negative")
        if self.lam < 0:
            raise ValueError("lambda(B) must be non-negative")
        object.__setattr__(self, "counts", c)
        object.__setattr__(self, "histogram", np.bincount(c) if c.size else np.zeros(1, int))

    @property
    def R(self):
        return int(self.counts.size)

    def pmf_hat(self, k):
        if k < 0 or k >= self.histogram.size:
            return 0.0
        return float(self.histogram[k]) / self.R


def count_distribution(samples, ring, target):
    """Tabulate xi(B) over replicates; lambda(B) comes from the target measure."""
    counts = np.array([ring.count(s) for s in samples], dtype=np.int64)
    return EmpiricalLaw(ring, counts, ring.measure(target))


def law_from_counts(counts, lam, ring=None):
    return EmpiricalLaw(ring or IntervalRing(), np.asarray(counts), float(lam))


@dataclass(frozen=True)
class DkResult:
    k: int
    value: float
    std_error: float
    null_se: float

    def __iter__(self):
        return iter((self.value, self.std_error))


def _dk_variance(k, lam, pk, pk1):
    return k * k * pk * (1 - pk) + lam * lam * pk1 * (1 - pk1) + 2 * k * lam * pk * pk1


def consecutive_ratio_statistic(law, ring=None, k=1):
    """D_k estimate with its plug-in standard error (unpacks as (value, se)).

    The standard error treats D_k as the mean of k 1{N = k} - lam 1{N = k-1}
    over replicates. ``null_se`` is the same quantity under Poisson(lam).
    """
    if ring is not None and ring != law.ring:
        raise ValueError("ring does not match the empirical law")
    if law.R < MIN_REPLICATES:
        raise InsufficientReplicatesError(f"need at least {MIN_REPLICATES} replicates, got {law.R}")
    if k < 1:
        raise ValueError("k must be >= 1")
    lam = law.lam
    pk, pk1 = law.pmf_hat(k), law.pmf_hat(k - 1)
    value = k * pk - lam * pk1
    se = math.sqrt(max(_dk_variance(k, lam, pk, pk1), 0.0) / law.R)
    q = stats.poisson.pmf([k, k - 1], lam) if lam > 0 else np.array([0.0, float(k == 1)])
    null_se = math.sqrt(max(_dk_variance(k, lam, q[0], q[1]), 0.0) / law.R)
    return DkResult(k, value, se, null_se)


def ks_distance(values, target):
    """Sup distance between the empirical CDF of ``values`` and the target CDF."""
    x = np.asarray(values, dtype=float).reshape(-1)
    if x.size == 0:
        raise EmptySampleError("no values")
    res = stats.kstest(x, target.cdf)
    return float(res.statistic), int(x.size)


def ks_critical_value(n, level=0.01):
    """Exact one-sample KS critical value at the given level."""
    return float(stats.kstwo.isf(level, n))


def _pooled_chisquare(law):
    lam = law.lam
    n_max = max(int(law.counts.max()) if law.R else 0, int(stats.poisson.ppf(1 - 1e-12, lam)) + 1)
    ks = np.arange(n_max + 1)
    probs = stats.poisson.pmf(ks, lam) if lam > 0 else (ks == 0).astype(float)
    probs[-1] = max(1.0 - probs[:-1].sum(), 0.0)
    obs = np.bincount(law.counts, minlength=n_max + 1)[: n_max + 1].astype(float)
    obs[-1] += law.R - obs.sum()
    exp = probs * law.R
    # pool cells from both ends until every expected count is at least 5
    bins_o, bins_e = [], []
    acc_o = acc_e = 0.0
    for o, e in zip(obs, exp):
        acc_o += o
        acc_e += e
        if acc_e >= 5:
            bins_o.append(acc_o)
            bins_e.append(acc_e)
            acc_o = acc_e = 0.0
    if bins_e:
        bins_o[-1] += acc_o
        bins_e[-1] += acc_e
    if len(bins_e) < 2:
        return math.nan, 1.0, len(bins_e)
    stat = float(np.sum((np.array(bins_o) - bins_e) ** 2 / np.array(bins_e)))
    p = float(stats.chi2.sf(stat, len(bins_e) - 1))
    return stat, p, len(bins_e)


def poisson_process_gof(samples, rings, target, k_max=6, level=0.01, min_rings=3):
    """Joint goodness-of-fit report of replicated processes against a Poisson target.

    Per ring: D_k for k = 1..k_max (two-sided z tests), a chi-square test of
    the count histogram against Poisson(lambda(B)) and a z test of the mean
    count. All p-values are compared with level / (number of checks).
    """
    if len(rings) < min_rings:
        raise ValueError(f"need at least {min_rings} interval rings")
    if target.kind != "poisson_process":
        raise ValueError("target must be a Poisson process law")
    laws = [count_distribution(samples, ring, target) for ring in rings]
    return gof_from_laws(laws, k_max=k_max, level=level)


def gof_from_laws(laws, k_max=6, level=0.01):
    checks = []
    for law in laws:
        label = law.ring.label()
        for k in range(1, k_max + 1):
            res = consecutive_ratio_statistic(law, k=k)
            scale = max(res.std_error, res.null_se)
            z = 0.0 if scale == 0 and res.value == 0 else (
                math.inf if scale == 0 else res.value / scale)
            checks.append({
                "ring": label, "check": "D_k", "k": k, "lambda": law.lam,
                "statistic": res.value, "se": res.std_error, "null_se": res.null_se,
                "z": z, "p_value": float(2 * stats.norm.sf(abs(z))),
                "within_4se": bool(abs(res.value) <= 4 * res.std_error),
            })
        chi, p, nb = _pooled_chisquare(law)
        checks.append({"ring": label, "check": "chi_square", "k": None, "lambda": law.lam,
                       "statistic": chi, "se": None, "bins": nb, "p_value": p})
        mean = float(law.counts.mean())
        se0 = math.sqrt(law.lam / law.R) if law.lam > 0 else 0.0
        z = 0.0 if se0 == 0 and mean == law.lam else (
            math.inf if se0 == 0 else (mean - law.lam) / se0)
        checks.append({"ring": label, "check": "mean", "k": None, "lambda": law.lam,
                       "statistic": mean, "se": float(law.counts.std(ddof=1) / math.sqrt(law.R)),
                       "z": z, "p_value": float(2 * stats.norm.sf(abs(z)))})
    m = len(checks)
    threshold = level / m if m else level
    for c in checks:
        c["threshold"] = threshold
        c["pass"] = bool(c["p_value"] >= threshold)
    return {
        "level": level,
        "n_checks": m,
        "per_check_threshold": threshold,
        "pass": all(c["pass"] for c in checks),
        "all_dk_within_4se": all(c.get("within_4se", True) for c in checks),
        "checks": checks,
        "note": NECESSARY_ONLY,
    }


def sandwich_bound_check(coupled_results, s, r, u_grid, theta_W, d=1):
    """Check the two one-sided exponential bounds on the coupled minimum statistic.

    ``coupled_results`` holds per-replicate dicts with the middle-layer
    minimum ``mid`` (scaled by alpha_2 t^((d+2)/(d+1))) and the coupling flags.
    """
    if not (0 < s <= 1) or r < 1:
        raise ValueError("need s in (0, 1] and r >= 1")
    mins = np.array([c["mid"] for c in coupled_results], dtype=float)
    R = mins.size
    rows = []
    for u in u_grid:
        e = d + 1
        for name, factor, bound, sense in (
                ("upper", s, math.exp(-s * theta_W * u ** e), "le"),
                ("lower", r, math.exp(-r * theta_W * u ** e), "ge")):
            tail = float(np.mean(factor * mins > u))
            se = math.sqrt(tail * (1 - tail) / R)
            ok = tail <= bound + 3 * se if sense == "le" else tail >= bound - 3 * se
            rows.append({"u": float(u), "side": name, "factor": factor, "tail": tail,
                         "se": se, "bound": bound, "pass": bool(ok)})
    nested = all(c.get("nested", True) for c in coupled_results)
    ordered = all(c["upper"] <= c["mid"] <= c["lower"] for c in coupled_results)
    return {"rows": rows, "nested_every_replicate": bool(nested),
            "min_order_every_replicate": bool(ordered),
            "pass": bool(nested and ordered and all(x["pass"] for x in rows))}
