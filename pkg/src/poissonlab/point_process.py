"""Poisson, binomial and coupled-sandwich samplers on a box."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError, InfiniteIntensityError, OrderingViolationError
from .measure import Window, window_mass
from .rng import as_generator, seed_label


@dataclass(frozen=True, eq=False)
class PointConfig:
    """Finite point configuration in R^d together with how it was generated."""

    points: np.ndarray
    box_lo: np.ndarray
    box_hi: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        lo = np.atleast_1d(np.asarray(self.box_lo, dtype=float))
        hi = np.atleast_1d(np.asarray(self.box_hi, dtype=float))
        pts = pts.reshape(-1, lo.size)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "box_lo", lo)
        object.__setattr__(self, "box_hi", hi)
        if pts.size and not np.all((pts >= lo) & (pts <= hi)):
            raise ValueError("points outside the declared sampling box")

    @property
    def dim(self):
        return self.box_lo.size

    def __len__(self):
        return len(self.points)

    def has_duplicates(self):
        if len(self.points) < 2:
            return False
        return len(np.unique(self.points, axis=0)) < len(self.points)

    def write_csv(self, path):
        """Write points as CSV (x1..xd) plus a JSON metadata sidecar."""
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"x{i + 1}" for i in range(self.dim)])
            for p in self.points:
                w.writerow([repr(float(v)) for v in p])
        side = {"box": [self.box_lo.tolist(), self.box_hi.tolist()], **self.meta}
        path.with_suffix(".json").write_text(json.dumps(side, indent=2, sort_keys=True))
        return path

    @classmethod
    def read_csv(cls, path):
        path = Path(path)
        side = json.loads(path.with_suffix(".json").read_text())
        lo, hi = side.pop("box")
        rows = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(rows.reshape(-1, len(lo)), lo, hi, side)


def _box_arrays(box):
    if isinstance(box, Window):
        return box.lo.copy(), box.hi.copy()
    lo, hi = box
    return np.atleast_1d(np.asarray(lo, dtype=float)), np.atleast_1d(np.asarray(hi, dtype=float))


def _envelope(density, lo, hi):
    if density.box_bounds is not None:
        return float(density.box_bounds(lo, hi)[1])
    return float(density.f_max)


def _check_inside(density, lo, hi):
    if np.any(lo < density.support_lo - 1e-12) or np.any(hi > density.support_hi + 1e-12):
        raise ConfigError("sampling box must lie inside the support box")


def _uniform_marked(rng, mean, lo, hi):
    if not np.isfinite(mean):
        raise InfiniteIntensityError("proposal intensity is not finite")
    n = int(rng.poisson(mean))
    x = lo + (hi - lo) * rng.random((n, lo.size))
    marks = rng.random(n)
    return x, marks


def _assert_distinct(cfg):
    if cfg.has_duplicates():  # pragma: no cover - probability zero
        raise RuntimeError("sampler produced coincident points")
    return cfg


def sample_poisson(density, t, box, seed):
    """Poisson process with intensity t*f on ``box`` by thinning a uniform envelope."""
    lo, hi = _box_arrays(box)
    _check_inside(density, lo, hi)
    t = float(t)
    if t <= 0:
        raise ValueError("t must be positive")
    rng = as_generator(seed)
    fmax = _envelope(density, lo, hi)
    x, marks = _uniform_marked(rng, t * fmax * float(np.prod(hi - lo)), lo, hi)
    keep = marks * fmax <= density.evaluate(x) if len(x) else np.zeros(0, bool)
    meta = {"kind": "poisson", "t": t, "seed": seed_label(seed), "density": density.name}
    return _assert_distinct(PointConfig(x[keep], lo, hi, meta))


def sample_binomial(density, n, box, seed, mass_rtol=1e-6):
    """n i.i.d. points with density f on ``box`` (f must integrate to 1 there)."""
    lo, hi = _box_arrays(box)
    _check_inside(density, lo, hi)
    n = int(n)
    if n < 0:
        raise ValueError("n must be non-negative")
    mass = window_mass(density, Window.box(lo, hi))
    if abs(mass - 1.0) > mass_rtol:
        raise ConfigError(f"density integrates to {mass!r} over the box, not 1")
    rng = as_generator(seed)
    fmax = _envelope(density, lo, hi)
    accepted = []
    have = 0
    while have < n:
        want = max(2 * (n - have), 16)
        x = lo + (hi - lo) * rng.random((want, lo.size))
        ok = rng.random(want) * fmax <= density.evaluate(x)
        accepted.append(x[ok])
        have += int(ok.sum())
    pts = np.concatenate(accepted)[:n] if accepted else np.zeros((0, lo.size))
    meta = {"kind": "binomial", "n": n, "seed": seed_label(seed), "density": density.name}
    return _assert_distinct(PointConfig(pts, lo, hi, meta))


def _ordering_grid(lo, hi, per_axis):
    axes = [np.linspace(lo[i], hi[i], per_axis) for i in range(lo.size)]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, lo.size)


def _eval_or_zero(density, x):
    return np.zeros(len(x)) if density is None else density.evaluate(x)


def sample_coupled_sandwich(phi, f1, f2, t, box, seed, grid_points=None):
    """Three nested Poisson processes from one marked uniform process.

    A point (x, y) of the process on box x [0, t*sup f2] is kept in the lower,
    middle and upper layer when y <= t*f1(x), t*phi(x), t*f2(x) respectively.
    ``f1=None`` stands for the zero density.
    """
    lo, hi = _box_arrays(box)
    for dens in (phi, f1, f2):
        if dens is not None:
            _check_inside(dens, lo, hi)
    if grid_points is None:
        grid_points = {1: 20001, 2: 401, 3: 61}[lo.size]
    g = _ordering_grid(lo, hi, grid_points)
    vp, v1, v2 = phi.evaluate(g), _eval_or_zero(f1, g), f2.evaluate(g)
    tol = 1e-12 * max(1.0, float(np.max(v2)))
    if np.any(v1 > vp + tol) or np.any(vp > v2 + tol):
        bad = int(np.flatnonzero((v1 > vp + tol) | (vp > v2 + tol))[0])
        raise OrderingViolationError(f"f1 <= phi <= f2 fails at {g[bad].tolist()}")
    rng = as_generator(seed)
    t = float(t)
    top = _envelope(f2, lo, hi)
    x, marks = _uniform_marked(rng, t * top * float(np.prod(hi - lo)), lo, hi)
    y = marks * top
    # every layer is a subset of the next, even where grid checks could miss
    in_up = y <= f2.evaluate(x)
    in_mid = in_up & (y <= phi.evaluate(x))
    in_low = in_mid & (y <= _eval_or_zero(f1, x))
    base = {"t": t, "seed": seed_label(seed)}
    out = []
    for name, mask, dens in (("lower", in_low, f1), ("mid", in_mid, phi), ("upper", in_up, f2)):
        meta = {**base, "kind": "coupled-layer", "layer": name,
                "density": "zero" if dens is None else dens.name}
        out.append(_assert_distinct(PointConfig(x[mask], lo, hi, meta)))
    return tuple(out)


def restrict(config, region):
    """Sub-configuration of the points inside ``region`` (Window, box pair or mask)."""
    if isinstance(region, Window):
        mask = region.contains(config.points) if len(config) else np.zeros(0, bool)
    elif callable(region):
        mask = np.asarray(region(config.points), dtype=bool)
    else:
        lo, hi = _box_arrays(region)
        mask = np.all((config.points >= lo) & (config.points <= hi), axis=1)
    return replace(config, points=config.points[mask], meta=dict(config.meta))
