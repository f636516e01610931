"""k-head runs in Bernoulli arrays and their rescaled point processes.

Both model families are driven by an i.i.d. Bernoulli stream B. The iid
family uses X = B with success probability p. The block family sets
X_i = 1{U_i <= a, ..., U_{i+m} <= a}, i.e. X_i = B_i * ... * B_{i+m} with
B ~ Bernoulli(a); then X_q and X_l are independent once |q - l| >= m + 1.
In both cases a k-head run starting at i is a window of k + m ones in B
(m = 0 for iid), which gives y_n = p^k or a^(k + m).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional, Union

import numpy as np

from .errors import ConfigError
from .rescaled import RescaledSample
from .rng import as_generator, seed_label


@dataclass(frozen=True)
class BernoulliModel:
    kind: str
    k: int
    p: Union[float, Callable[[int], float], None] = None
    a: Optional[float] = None
    m: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError("run length k must be >= 1")
        if self.kind == "iid":
            if self.p is None:
                raise ConfigError("iid model needs p")
        elif self.kind == "block":
            if self.a is None or not (0 <= self.a <= 1) or self.m < 0:
                raise ConfigError("block model needs 0 <= a <= 1 and m >= 0")
        else:
            raise ConfigError(f"unknown Bernoulli model kind {self.kind!r}")

    @classmethod
    def iid(cls, p, k):
        return cls("iid", int(k), p=p)

    @classmethod
    def block(cls, a, m, k):
        return cls("block", int(k), a=float(a), m=int(m))

    def base_prob(self, n=None):
        """Success probability of the underlying stream B."""
        if self.kind == "block":
            return self.a
        p = self.p(n) if callable(self.p) else self.p
        if not (0 <= p <= 1):
            raise ConfigError(f"p = {p!r} is not a probability")
        return float(p)

    @property
    def lag(self):
        """Extra ones of B a single X needs beyond its own (m)."""
        return self.m if self.kind == "block" else 0

    def dependence_range(self, n=None):
        """f(n): X_q is independent of X_l for |q - l| >= f(n)."""
        return self.lag + 1

    def window(self):
        return self.k + self.lag

    def y(self, n=None):
        """P(X_q = ... = X_{q+k-1} = 1), exact for both families."""
        return self.base_prob(n) ** self.window()

    def describe(self, n=None):
        out = {"kind": self.kind, "k": self.k, "f": self.dependence_range(n)}
        if self.kind == "iid":
            out["p"] = self.base_prob(n)
        else:
            out.update(a=self.a, m=self.m)
        return out


def power_law_p(exponent):
    """p_n = n**exponent, e.g. exponent = -1/4."""
    return lambda n: float(n) ** exponent


def model_from_config(cfg):
    cfg = dict(cfg)
    kind = cfg.get("kind", "iid")
    k = int(cfg.get("k", 2))
    if kind == "iid":
        if "p_exponent" in cfg:
            return BernoulliModel.iid(power_law_p(float(cfg["p_exponent"])), k)
        if "p" not in cfg:
            raise ConfigError("iid model needs p or p_exponent")
        return BernoulliModel.iid(float(cfg["p"]), k)
    if kind == "block":
        try:
            return BernoulliModel.block(cfg["a"], cfg["m"], k)
        except KeyError as exc:
            raise ConfigError(f"block model is missing {exc}") from None
    raise ConfigError(f"unknown Bernoulli model kind {kind!r}")


def _base_ones(p, length, rng):
    """Sorted 0-based positions of ones in an i.i.d. Bernoulli(p) stream."""
    if p >= 1:
        return np.arange(length, dtype=np.int64)
    if p <= 0 or length <= 0:
        return np.zeros(0, dtype=np.int64)
    if p > 0.05:
        return np.flatnonzero(rng.random(length) < p).astype(np.int64)
    # sparse streams: draw the count, then a uniform subset of positions
    count = int(rng.binomial(length, p))
    return np.sort(rng.choice(length, size=count, replace=False)).astype(np.int64)


def window_starts(ones, w, length):
    """0-based starts i with ones at i..i+w-1, given sorted positions of ones."""
    if w <= 0:
        return np.arange(length, dtype=np.int64)
    if ones.size == 0:
        return np.zeros(0, dtype=np.int64)
    brk = np.flatnonzero(np.diff(ones) != 1)
    first = np.concatenate([[0], brk + 1])
    last = np.concatenate([brk, [ones.size - 1]])
    run_start = ones[first]
    run_len = ones[last] - run_start + 1
    n_win = np.maximum(run_len - w + 1, 0)
    keep = n_win > 0
    if not keep.any():
        return np.zeros(0, dtype=np.int64)
    base = np.repeat(run_start[keep], n_win[keep])
    offs = np.arange(base.size) - np.repeat(np.cumsum(n_win[keep]) - n_win[keep], n_win[keep])
    starts = base + offs
    return starts[starts + w <= length]


def simulate_bernoulli_array(model, n, horizon, seed):
    """X_1..X_horizon as a uint8 array (index 0 holds X_1)."""
    horizon = int(horizon)
    if horizon < model.k:
        raise ValueError("horizon must be at least k")
    rng = as_generator(seed)
    ones = _base_ones(model.base_prob(n), horizon + model.lag, rng)
    bits = np.zeros(horizon, dtype=np.uint8)
    bits[window_starts(ones, model.lag + 1, horizon + model.lag)[:horizon]] = 1
    return bits


def run_indicators(bits, k):
    """I_i = 1{bits i..i+k-1 all one}, i = 1..len-k+1 (overlapping windows)."""
    b = np.asarray(bits).astype(np.int64).reshape(-1)
    if b.size < k:
        return np.zeros(0, dtype=np.uint8)
    c = np.concatenate([[0], np.cumsum(b)])
    return (c[k:] - c[:-k] == k).astype(np.uint8)


def build_run_process(bits, k, y, meta=None, indicators=False):
    """xi_n = sum_i I_i delta_{i y}; pass ``indicators=True`` if ``bits`` are already I."""
    if not y > 0:
        raise ValueError("y must be positive")
    ind = np.asarray(bits).reshape(-1) if indicators else run_indicators(bits, k)
    pos = np.flatnonzero(ind) + 1
    # atoms are complete up to the last index with a full window
    support = (0.0, ind.size * y)
    return RescaledSample(pos * y, {"transform": "runs", "k": k, "y": y, **(meta or {})},
                          support)


def first_arrival(bits, k, y, indicators=False):
    """y * T with T the first run start (1-based); inf when censored."""
    ind = np.asarray(bits).reshape(-1) if indicators else run_indicators(bits, k)
    hit = np.flatnonzero(ind)
    return math.inf if hit.size == 0 else float((hit[0] + 1) * y)


def horizon_for(model, n, u_max):
    """Bits needed so every atom up to u_max is observed: ceil(u_max/y) + f + k."""
    y = model.y(n)
    return int(math.ceil(u_max / y)) + model.dependence_range(n) + model.k


def sample_runs(model, n, u_max, seed, meta=None):
    """Run process and first-arrival time for one replicate, via sparse ones."""
    rng = as_generator(seed)
    y = model.y(n)
    if y <= 0:
        raise ConfigError("y_n must be positive")
    n_ind = int(math.ceil(u_max / y)) + 1
    length = n_ind + model.window() - 1
    ones = _base_ones(model.base_prob(n), length, rng)
    starts = window_starts(ones, model.window(), length)
    starts = starts[starts < n_ind]
    info = {"transform": "runs", "k": model.k, "y": y, "n": n, "seed": seed_label(seed),
            "model": model.describe(n), **(meta or {})}
    sample = RescaledSample((starts + 1) * y, info, (0.0, n_ind * y))
    t_first = math.inf if starts.size == 0 else float((starts[0] + 1) * y)
    return sample, t_first


class NeighborhoodEstimate(NamedTuple):
    estimate: float
    std_error: float
    pairwise_bound: float
    pairwise_se: float
    positions: tuple


def _conditional_w(model, n, i, reps, rng):
    """Given I_i = 1, draw W_i = sum of I_j over 1 <= |j - i| <= f + k - 2, j >= 1."""
    k = model.k
    w = model.window()
    reach = model.dependence_range(n) + k - 2
    if reach <= 0:
        return np.zeros(reps)
    j_lo = max(1, i - reach)
    j_hi = i + reach
    length = j_hi + w - j_lo  # base stream positions j_lo .. j_hi + w - 1
    p = model.base_prob(n)
    base = rng.random((reps, length)) < p
    base[:, i - j_lo: i - j_lo + w] = True
    c = np.concatenate([np.zeros((reps, 1), np.int64), np.cumsum(base, axis=1)], axis=1)
    ind = (c[:, w:] - c[:, :-w]) == w  # I_j for j = j_lo .. j_hi
    ind[:, i - j_lo] = False
    return ind.sum(axis=1).astype(float)


def estimate_neighborhood_condition(model, n, reps, seed, positions=None):
    """Monte Carlo sup_i y^-1 E[I_i 1{W_i > 0}] and the pairwise-moment bound.

    Both are computed conditionally on I_i = 1: the first is P(W_i > 0 | I_i = 1),
    the second E[W_i | I_i = 1] = y^-1 sum_j E[I_i I_j].
    """
    rng = as_generator(seed)
    reps = int(reps)
    if reps < 1:
        raise ValueError("reps must be positive")
    step = model.dependence_range(n) + model.k
    positions = tuple(positions or (1, step, 2 * step))
    best = None
    for i in positions:
        w = _conditional_w(model, n, int(i), reps, rng)
        hit = (w > 0).astype(float)
        est = NeighborhoodEstimate(
            float(hit.mean()), float(hit.std(ddof=1) / math.sqrt(reps)) if reps > 1 else 0.0,
            float(w.mean()), float(w.std(ddof=1) / math.sqrt(reps)) if reps > 1 else 0.0,
            positions)
        if best is None or est.estimate > best.estimate:
            best = est
    return best


def estimate_y(model, n, reps, seed, q=1):
    """Monte Carlo P(X_q = ... = X_{q+k-1} = 1) with its standard error."""
    rng = as_generator(seed)
    hits = 0
    reps = int(reps)
    for start in range(0, reps, 100_000):
        m = min(100_000, reps - start)
        base = rng.random((m, q - 1 + model.window())) < model.base_prob(n)
        hits += int(np.sum(np.all(base[:, q - 1:], axis=1)))
    y = hits / reps
    return y, math.sqrt(max(y * (1 - y), 0.0) / reps)
