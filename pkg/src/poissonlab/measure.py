"""Densities, windows and ball masses mu(B(x, r)) with their inverse solvers.

All densities live on an open axis-aligned support box ``A`` on which they are
bounded away from zero. Closed-form ball masses are attached where they exist;
everything else falls back to adaptive quadrature.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, NamedTuple, Optional

import numpy as np
from scipy import integrate, optimize
from scipy.special import gamma
from scipy.stats import qmc

from .errors import (
    BallEscapesSupportError,
    BelowT0Error,
    ConfigError,
    MassExceedsReachError,
    NonFiniteDensityError,
    NonPositiveMinimumError,
)

QUAD_EPSREL = 1e-11
RADIUS_XTOL = 1e-12
_SLACK = 1e-12


def unit_ball_volume(d):
    """Volume k_d of the d-dimensional unit ball."""
    return math.pi ** (d / 2) / gamma(d / 2 + 1)


@dataclass(frozen=True, eq=False)
class DensityModel:
    """Density f of the reference measure mu, restricted to the open box A.

    ``func`` maps an ``(n, d)`` array to ``n`` densities. Optional hooks give
    exact answers where a formula exists: ``ball_mass(centers, radii)``,
    ``box_mass(lo, hi)`` and ``box_bounds(lo, hi) -> (min, max)``.
    """

    dim: int
    func: Callable[[np.ndarray], np.ndarray]
    support_lo: np.ndarray
    support_hi: np.ndarray
    f_min: float
    f_max: float
    ball_mass: Optional[Callable] = None
    box_mass: Optional[Callable] = None
    box_bounds: Optional[Callable] = None
    lipschitz: Optional[float] = None
    breakpoints: tuple = ()
    name: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        lo = np.asarray(self.support_lo, dtype=float).reshape(-1)
        hi = np.asarray(self.support_hi, dtype=float).reshape(-1)
        object.__setattr__(self, "support_lo", lo)
        object.__setattr__(self, "support_hi", hi)
        if lo.size != self.dim or hi.size != self.dim:
            raise ValueError("support box does not match dimension")
        if np.any(hi <= lo):
            raise ValueError("support box must have positive side lengths")
        if not (self.f_min > 0):
            raise NonPositiveMinimumError(f"f_min must be positive, got {self.f_min}")
        if not (np.isfinite(self.f_max) and self.f_max >= self.f_min):
            raise ValueError("f_max must be finite and >= f_min")

    @property
    def has_closed_form(self):
        return self.ball_mass is not None

    def evaluate(self, x):
        pts = np.asarray(x, dtype=float).reshape(-1, self.dim)
        return np.asarray(self.func(pts), dtype=float).reshape(-1)

    __call__ = evaluate

    def scaled(self, factor):
        """Same shape, multiplied by ``factor > 0``."""
        factor = float(factor)
        if factor <= 0:
            raise ValueError("scale factor must be positive")
        func = self.func
        ball = self.ball_mass
        box = self.box_mass
        bounds = self.box_bounds
        return replace(
            self,
            func=lambda x: factor * func(x),
            f_min=self.f_min * factor,
            f_max=self.f_max * factor,
            ball_mass=None if ball is None else (lambda c, r: factor * ball(c, r)),
            box_mass=None if box is None else (lambda lo, hi: factor * box(lo, hi)),
            box_bounds=None if bounds is None else (
                lambda lo, hi: tuple(factor * v for v in bounds(lo, hi))),
            lipschitz=None if self.lipschitz is None else self.lipschitz * factor,
            params={**self.params, "scale": self.params.get("scale", 1.0) * factor},
        )

    def describe(self):
        return {
            "name": self.name,
            "params": _jsonable(self.params),
            "support": [self.support_lo.tolist(), self.support_hi.tolist()],
            "f_min": self.f_min,
            "f_max": self.f_max,
        }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _box(lo, hi):
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    return lo, hi


# -- density families -------------------------------------------------------


def constant_density(c, lo, hi):
    lo, hi = _box(lo, hi)
    d = lo.size
    kd = unit_ball_volume(d)
    c = float(c)
    return DensityModel(
        dim=d,
        func=lambda x: np.full(len(x), c),
        support_lo=lo,
        support_hi=hi,
        f_min=c,
        f_max=c,
        ball_mass=lambda centers, radii: c * kd * np.asarray(radii, float) ** d,
        box_mass=lambda a, b: c * float(np.prod(np.asarray(b) - np.asarray(a))),
        box_bounds=lambda a, b: (c, c),
        lipschitz=0.0,
        name="constant",
        params={"c": c},
    )


def linear_density(a, b, lo, hi):
    """f(y) = max(a + b*y_1, 0); must stay positive on A."""
    lo, hi = _box(lo, hi)
    d = lo.size
    kd = unit_ball_volume(d)
    a, b = float(a), float(b)
    ends = (a + b * lo[0], a + b * hi[0])
    fmin, fmax = min(ends), max(ends)
    if fmin <= 0:
        raise NonPositiveMinimumError("linear density is not positive on the support")

    def func(x):
        return np.maximum(a + b * x[:, 0], 0.0)

    def ball(centers, radii):
        centers = np.asarray(centers, float).reshape(-1, d)
        # no clipping inside A, so the linear part averages to its centre value
        return (a + b * centers[:, 0]) * kd * np.asarray(radii, float) ** d

    def box(p, q):
        p, q = _box(p, q)
        return float(np.prod(q - p)) * (a + b * 0.5 * (p[0] + q[0]))

    def bounds(p, q):
        v = (a + b * p[0], a + b * q[0])
        return min(v), max(v)

    return DensityModel(d, func, lo, hi, fmin, fmax, ball, box, bounds,
                        lipschitz=abs(b), name="linear", params={"a": a, "b": b})


def quadratic_density(a, b, center, lo, hi):
    """f(y) = a + b*|y - center|^2 (smooth, Hoelder on bounded sets)."""
    lo, hi = _box(lo, hi)
    d = lo.size
    kd = unit_ball_volume(d)
    a, b = float(a), float(b)
    ctr = np.asarray(center, dtype=float).reshape(d)

    def sq_range(p, q):
        near = np.clip(ctr, p, q)
        far = np.where(np.abs(p - ctr) > np.abs(q - ctr), p, q)
        return float(np.sum((near - ctr) ** 2)), float(np.sum((far - ctr) ** 2))

    smin, smax = sq_range(lo, hi)
    vals = (a + b * smin, a + b * smax)
    fmin, fmax = min(vals), max(vals)
    if fmin <= 0:
        raise NonPositiveMinimumError("quadratic density is not positive on the support")

    def func(x):
        return a + b * np.sum((x - ctr) ** 2, axis=1)

    def ball(centers, radii):
        centers = np.asarray(centers, float).reshape(-1, d)
        r = np.asarray(radii, float)
        s2 = np.sum((centers - ctr) ** 2, axis=1)
        return kd * r ** d * (a + b * s2 + b * d * r ** 2 / (d + 2))

    def box(p, q):
        p, q = _box(p, q)
        side = q - p
        vol = float(np.prod(side))
        second = ((q - ctr) ** 3 - (p - ctr) ** 3) / 3.0
        return a * vol + b * float(np.sum(vol / side * second))

    def bounds(p, q):
        s0, s1 = sq_range(*_box(p, q))
        v = (a + b * s0, a + b * s1)
        return min(v), max(v)

    radius = float(np.sqrt(max(smax, 0.0)))
    return DensityModel(d, func, lo, hi, fmin, fmax, ball, box, bounds,
                        lipschitz=2 * abs(b) * radius, name="quadratic",
                        params={"a": a, "b": b, "center": ctr.tolist()})


def _disk_quadrant_area(x, y, r):
    """Area of {|z| < r, z_1 < x, z_2 < y}, elementwise."""
    x, y, r = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float),
                                  np.asarray(r, float))
    xe = np.clip(x, -r, r)

    def prim(t):
        t = np.clip(t, -r, r)
        return 0.5 * (t * np.sqrt(np.maximum(r * r - t * t, 0.0))
                      + r * r * np.arcsin(np.clip(t / np.where(r > 0, r, 1.0), -1, 1)))

    def two_h(p, q):
        qq = np.clip(xe, p, q)
        return 2.0 * (prim(qq) - prim(p))

    def y_plus_h(p, q, yy):
        qq = np.clip(xe, p, q)
        return yy * (qq - p) + prim(qq) - prim(p)

    yc = np.clip(y, -r, r)
    s = np.sqrt(np.maximum(r * r - yc * yc, 0.0))
    full = two_h(-r, r)
    upper = two_h(-r, -s) + y_plus_h(-s, s, yc) + two_h(s, r)
    lower = y_plus_h(-s, s, yc)
    out = np.where(y >= r, full, np.where(y >= 0, upper, np.where(y > -r, lower, 0.0)))
    return np.where(r > 0, out, 0.0)


def disk_rectangle_area(cx, cy, r, x0, x1, y0, y1):
    """Exact area of the disk B((cx, cy), r) intersected with [x0,x1]x[y0,y1]."""
    A = _disk_quadrant_area
    return (A(x1 - cx, y1 - cy, r) - A(x0 - cx, y1 - cy, r)
            - A(x1 - cx, y0 - cy, r) + A(x0 - cx, y0 - cy, r))


def step_density(edges, values):
    """Piecewise-constant density on a rectangular grid of cells (d = 1 or 2).

    ``edges`` holds one increasing edge array per axis; the support box is the
    hull of the grid. ``values`` has shape ``(len(e_0) - 1, ...)``.
    """
    edges = [np.asarray(e, dtype=float) for e in edges]
    d = len(edges)
    if d not in (1, 2):
        raise ConfigError("step densities are implemented for d = 1 and d = 2")
    vals = np.asarray(values, dtype=float).reshape([len(e) - 1 for e in edges])
    if np.any(vals <= 0):
        raise NonPositiveMinimumError("step density values must be positive")
    lo = np.array([e[0] for e in edges])
    hi = np.array([e[-1] for e in edges])

    def cell_index(x):
        idx = [np.clip(np.searchsorted(e, x[:, i], side="right") - 1, 0, len(e) - 2)
               for i, e in enumerate(edges)]
        return tuple(idx)

    def func(x):
        return vals[cell_index(x)]

    if d == 1:
        e = edges[0]
        cum = np.concatenate([[0.0], np.cumsum(vals * np.diff(e))])

        def cdf(x):
            x = np.clip(x, e[0], e[-1])
            j = np.clip(np.searchsorted(e, x, side="right") - 1, 0, len(e) - 2)
            return cum[j] + vals[j] * (x - e[j])

        def ball(centers, radii):
            c = np.asarray(centers, float).reshape(-1)
            r = np.asarray(radii, float)
            return cdf(c + r) - cdf(c - r)

        def box(p, q):
            return float(cdf(np.atleast_1d(q)[0]) - cdf(np.atleast_1d(p)[0]))
    else:
        ex, ey = edges

        def ball(centers, radii):
            c = np.asarray(centers, float).reshape(-1, 2)
            r = np.broadcast_to(np.asarray(radii, float), (len(c),))
            out = np.zeros(len(c))
            for i in range(len(ex) - 1):
                for j in range(len(ey) - 1):
                    out += vals[i, j] * disk_rectangle_area(
                        c[:, 0], c[:, 1], r, ex[i], ex[i + 1], ey[j], ey[j + 1])
            return out

        def box(p, q):
            p, q = _box(p, q)
            ox = np.clip(np.minimum(ex[1:], q[0]) - np.maximum(ex[:-1], p[0]), 0, None)
            oy = np.clip(np.minimum(ey[1:], q[1]) - np.maximum(ey[:-1], p[1]), 0, None)
            return float(np.sum(vals * np.outer(ox, oy)))

    def bounds(p, q):
        p, q = _box(p, q)
        sel = []
        for i, e in enumerate(edges):
            sel.append((e[1:] > p[i]) & (e[:-1] < q[i]))
        mask = sel[0] if d == 1 else np.outer(sel[0], sel[1])
        v = vals[mask]
        return float(v.min()), float(v.max())

    brk = tuple(float(b) for b in edges[0][1:-1]) if d == 1 else ()
    return DensityModel(d, func, lo, hi, float(vals.min()), float(vals.max()), ball,
                        box, bounds, lipschitz=None, breakpoints=brk, name="step",
                        params={"edges": [e.tolist() for e in edges],
                                "values": vals.tolist()})


def piecewise_linear_density(knots, values):
    """Continuous piecewise-linear density on the line, support (knots[0], knots[-1])."""
    k = np.asarray(knots, dtype=float)
    v = np.asarray(values, dtype=float)
    if k.ndim != 1 or k.size != v.size or k.size < 2 or np.any(np.diff(k) <= 0):
        raise ConfigError("knots must be increasing and match values")
    if np.any(v <= 0):
        raise NonPositiveMinimumError("piecewise-linear density values must be positive")
    slope = np.diff(v) / np.diff(k)
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (v[1:] + v[:-1]) * np.diff(k))])

    def cdf(x):
        x = np.clip(x, k[0], k[-1])
        j = np.clip(np.searchsorted(k, x, side="right") - 1, 0, k.size - 2)
        dx = x - k[j]
        return cum[j] + v[j] * dx + 0.5 * slope[j] * dx * dx

    def func(x):
        return np.interp(x[:, 0], k, v)

    def ball(centers, radii):
        c = np.asarray(centers, float).reshape(-1)
        r = np.asarray(radii, float)
        return cdf(c + r) - cdf(c - r)

    def box(p, q):
        return float(cdf(np.atleast_1d(q)[0]) - cdf(np.atleast_1d(p)[0]))

    def bounds(p, q):
        a, b = float(np.atleast_1d(p)[0]), float(np.atleast_1d(q)[0])
        inner = v[(k > a) & (k < b)]
        cand = np.concatenate([inner, np.interp([a, b], k, v)])
        return float(cand.min()), float(cand.max())

    return DensityModel(1, func, k[:1], k[-1:], float(v.min()), float(v.max()), ball,
                        box, bounds, lipschitz=float(np.max(np.abs(slope))),
                        breakpoints=tuple(k[1:-1].tolist()), name="piecewise_linear",
                        params={"knots": k.tolist(), "values": v.tolist()})


def density_from_config(cfg):
    """Build a density from ``{"kind": ..., ...}`` as written in experiment configs."""
    cfg = dict(cfg)
    kind = cfg.pop("kind", None)
    scale = cfg.pop("scale", None)
    try:
        if kind == "constant":
            dens = constant_density(cfg["c"], *cfg["support"])
        elif kind == "linear":
            dens = linear_density(cfg["a"], cfg["b"], *cfg["support"])
        elif kind == "quadratic":
            dens = quadratic_density(cfg["a"], cfg["b"], cfg["center"], *cfg["support"])
        elif kind == "step":
            dens = step_density(cfg["edges"], cfg["values"])
        elif kind == "piecewise_linear":
            dens = piecewise_linear_density(cfg["knots"], cfg["values"])
        else:
            raise ConfigError(f"unknown density kind {kind!r}")
    except KeyError as exc:
        raise ConfigError(f"density {kind!r} is missing parameter {exc}") from None
    return dens if scale is None else dens.scaled(scale)


# -- windows -----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Window:
    """Compact observation window W: an axis-aligned box or a convex polygon."""

    dim: int
    lo: np.ndarray
    hi: np.ndarray
    vertices: Optional[np.ndarray] = None
    mu_W: Optional[float] = None
    convex_flag: bool = True

    @classmethod
    def box(cls, lo, hi):
        lo, hi = _box(lo, hi)
        if np.any(hi <= lo):
            raise ValueError("window box must have positive side lengths")
        return cls(lo.size, lo, hi)

    @classmethod
    def polygon(cls, vertices):
        v = np.asarray(vertices, dtype=float).reshape(-1, 2)
        if len(v) < 3:
            raise ValueError("polygon needs at least three vertices")
        area2 = np.sum(v[:, 0] * np.roll(v[:, 1], -1) - np.roll(v[:, 0], -1) * v[:, 1])
        if area2 < 0:
            v = v[::-1].copy()
        e = np.roll(v, -1, axis=0) - v
        turns = e[:, 0] * np.roll(e[:, 1], -1) - e[:, 1] * np.roll(e[:, 0], -1)
        return cls(2, v.min(axis=0), v.max(axis=0), v, None, bool(np.all(turns > 0)))

    @property
    def is_box(self):
        return self.vertices is None

    @property
    def volume(self):
        if self.is_box:
            return float(np.prod(self.hi - self.lo))
        v = self.vertices
        return 0.5 * abs(float(np.sum(v[:, 0] * np.roll(v[:, 1], -1)
                                      - np.roll(v[:, 0], -1) * v[:, 1])))

    def contains(self, points):
        pts = np.asarray(points, dtype=float).reshape(-1, self.dim)
        inside = np.all((pts >= self.lo) & (pts <= self.hi), axis=1)
        if self.is_box:
            return inside
        v = self.vertices
        e = np.roll(v, -1, axis=0) - v
        rel = pts[:, None, :] - v[None, :, :]
        cross = e[None, :, 0] * rel[:, :, 1] - e[None, :, 1] * rel[:, :, 0]
        return inside & np.all(cross >= -1e-15, axis=1)

    def dilated_box(self, margin):
        return self.lo - margin, self.hi + margin

    def with_mass(self, mu):
        return replace(self, mu_W=float(mu))

    def describe(self):
        out = {"lo": self.lo.tolist(), "hi": self.hi.tolist(), "mu_W": self.mu_W}
        if not self.is_box:
            out["vertices"] = self.vertices.tolist()
        return out


def window_from_config(cfg):
    if "vertices" in cfg:
        return Window.polygon(cfg["vertices"])
    return Window.box(cfg["lo"], cfg["hi"])


def support_margin(density, window):
    """Distance from the window's bounding box to the boundary of A."""
    return float(min(np.min(window.lo - density.support_lo),
                     np.min(density.support_hi - window.hi)))


def check_window(density, window, require_convex=False):
    if window.dim != density.dim:
        raise ConfigError("window and density dimensions differ")
    if support_margin(density, window) <= 0:
        raise ConfigError("window must lie inside the support box with positive margin")
    if require_convex and not window.convex_flag:
        raise ConfigError("circumradius experiments need a convex window")


def window_mass(density, window):
    """mu(W), exact when the density knows its box masses."""
    if window.is_box:
        if density.box_mass is not None:
            return float(density.box_mass(window.lo, window.hi))
        return _quad_box_mass(density, window.lo, window.hi)
    v = window.vertices
    total = 0.0
    for i in range(1, len(v) - 1):
        total += _quad_triangle_mass(density, v[0], v[i], v[i + 1])
    return total


def normalize_to_window(density, window):
    """Rescale f so that mu(W) = 1; returns the new density and window."""
    mu = window_mass(density, window)
    return density.scaled(1.0 / mu), window.with_mass(1.0)


def _scalar_f(density):
    d = density.dim

    def f(*coords):
        return float(density.func(np.array(coords, dtype=float).reshape(1, d))[0])
    return f


def _quad_box_mass(density, lo, hi):
    f = _scalar_f(density)
    d = density.dim
    if d == 1:
        val, _ = integrate.quad(f, lo[0], hi[0], epsrel=QUAD_EPSREL, limit=200,
                                points=_inner_breaks(density, lo[0], hi[0]))
    elif d == 2:
        val, _ = integrate.dblquad(lambda y, x: f(x, y), lo[0], hi[0], lo[1], hi[1],
                                   epsrel=1e-10)
    else:
        val, _ = integrate.tplquad(lambda z, y, x: f(x, y, z), lo[0], hi[0], lo[1],
                                   hi[1], lo[2], hi[2], epsrel=1e-8)
    return float(val)


def _quad_triangle_mass(density, v0, v1, v2):
    f = _scalar_f(density)
    e1 = v1 - v0
    e2 = v2 - v0
    jac = abs(e1[0] * e2[1] - e1[1] * e2[0])

    def integrand(w, s):
        p = v0 + s * ((1 - w) * e1 + w * e2)
        return f(p[0], p[1]) * s * jac

    val, _ = integrate.dblquad(integrand, 0.0, 1.0, 0.0, 1.0, epsrel=1e-10)
    return float(val)


def _inner_breaks(density, a, b):
    pts = [p for p in density.breakpoints if a < p < b]
    return pts or None


# -- ball masses ---------------------------------------------------------------


def _check_ball(density, centers, radii):
    lo_ok = centers - radii[:, None] >= density.support_lo - _SLACK
    hi_ok = centers + radii[:, None] <= density.support_hi + _SLACK
    bad = ~np.all(lo_ok & hi_ok, axis=1)
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise BallEscapesSupportError(
            f"B({centers[i].tolist()}, {radii[i]!r}) is not inside the support box")


def quadrature_ball_mass(density, center, radius):
    """Numerical mu(B(x, r)); polar adaptive quadrature for d <= 2, QMC for d = 3."""
    x = np.asarray(center, dtype=float).reshape(density.dim)
    r = float(radius)
    if r == 0.0:
        return 0.0
    d = density.dim
    f = _scalar_f(density)
    if d == 1:
        val, _ = integrate.quad(f, x[0] - r, x[0] + r, epsrel=QUAD_EPSREL, epsabs=0.0,
                                limit=200, points=_inner_breaks(density, x[0] - r, x[0] + r))
    elif d == 2:
        def polar(rho, theta):
            return f(x[0] + rho * math.cos(theta), x[1] + rho * math.sin(theta)) * rho
        val, _ = integrate.dblquad(polar, 0.0, 2 * math.pi, 0.0, r,
                                   epsrel=QUAD_EPSREL, epsabs=0.0)
    elif d == 3:
        u = qmc.Sobol(3, scramble=True, seed=12345).random_base2(16)
        rho = r * np.cbrt(u[:, 0])
        cos_phi = 1.0 - 2.0 * u[:, 1]
        sin_phi = np.sqrt(np.maximum(1.0 - cos_phi ** 2, 0.0))
        theta = 2 * math.pi * u[:, 2]
        pts = x + rho[:, None] * np.column_stack(
            [sin_phi * np.cos(theta), sin_phi * np.sin(theta), cos_phi])
        val = unit_ball_volume(3) * r ** 3 * float(np.mean(density.evaluate(pts)))
    else:
        raise ValueError("quadrature is implemented for d <= 3")
    return float(val)


def ball_measure_many(density, centers, radii):
    """Vectorised mu(B(x_i, r_i)); loops over quadrature when no closed form exists."""
    centers = np.asarray(centers, dtype=float).reshape(-1, density.dim)
    radii = np.broadcast_to(np.asarray(radii, dtype=float), (len(centers),)).copy()
    if np.any(radii < 0):
        raise ValueError("radii must be non-negative")
    _check_ball(density, centers, radii)
    if density.ball_mass is not None:
        out = np.asarray(density.ball_mass(centers, radii), dtype=float).reshape(-1)
    else:
        out = np.array([quadrature_ball_mass(density, c, r) for c, r in zip(centers, radii)])
    out = np.where(radii == 0, 0.0, out)
    if not np.all(np.isfinite(out)):
        raise NonFiniteDensityError("density produced a non-finite ball mass")
    return out


def ball_measure(density, center, radius):
    """mu(B(center, radius)) for a ball inside the support box."""
    return float(ball_measure_many(density, np.reshape(center, (1, -1)), [radius])[0])


def reach_radius(density, center):
    """Distance from ``center`` to the boundary of the support box."""
    x = np.asarray(center, dtype=float).reshape(density.dim)
    return float(min(np.min(x - density.support_lo), np.min(density.support_hi - x)))


def invert_ball_measure(density, center, mass):
    """Radius g with mu(B(center, g)) = mass, bracketed on [0, reach]."""
    mass = float(mass)
    if mass < 0:
        raise ValueError("mass must be non-negative")
    if mass == 0.0:
        return 0.0
    r_max = reach_radius(density, center)
    if r_max <= 0:
        raise BallEscapesSupportError("center is not inside the support box")
    full = ball_measure(density, center, r_max)
    if mass > full * (1 + 1e-12):
        raise MassExceedsReachError(
            f"mass {mass!r} exceeds mu(B(x, {r_max!r})) = {full!r}")
    if mass >= full:
        return r_max
    return float(optimize.brentq(lambda r: ball_measure(density, center, r) - mass,
                                 0.0, r_max, xtol=RADIUS_XTOL, rtol=4 * np.finfo(float).eps,
                                 maxiter=500))


class ThresholdRadii(NamedTuple):
    v: float
    q: float


def threshold_radii(density, center, u, t):
    """Solve t*mu(B(x, 2v)) = u + log t and 2^d*t*mu(B(x, q)) = u + log t."""
    t = float(t)
    level = float(u) + math.log(t)
    if t <= 0 or level <= 0:
        raise ValueError("need t > 0 and u + log(t) > 0")
    d = density.dim
    try:
        v = 0.5 * invert_ball_measure(density, center, level / t)
        q = invert_ball_measure(density, center, level / (2 ** d * t))
    except MassExceedsReachError as exc:
        raise BelowT0Error(
            f"threshold equations unsolvable inside A at x={np.ravel(center).tolist()}, "
            f"u={u!r}, t={t!r}") from exc
    return ThresholdRadii(v, q)


def threshold_radius_bound(u, t, f_min, d):
    """Upper bound ((u + log t) / (2^d f_min k_d t))^(1/d) on v_t and q_t."""
    return ((u + math.log(t)) / (2 ** d * f_min * unit_ball_volume(d) * t)) ** (1.0 / d)


def circumradius_radius_bound(mass, beta, d):
    """Bound (2u / (beta k_d))^(1/d) on the radius g(x, u) for small masses u."""
    return (2.0 * mass / (beta * unit_ball_volume(d))) ** (1.0 / d)


def density_bounds(density, region):
    """(beta, sup) = (min, max) of f over the region.

    Exact for densities that know their box extremes. Otherwise a dense grid
    is polished by bounded local search; when the density declares a
    Lipschitz constant the grid values are widened by ``L * h * sqrt(d) / 2``
    so the returned pair brackets the true extremes.
    """
    if isinstance(region, Window):
        lo, hi, win = region.lo, region.hi, region
    else:
        lo, hi = _box(*region)
        win = Window.box(lo, hi)
    if np.any(lo < density.support_lo - _SLACK) or np.any(hi > density.support_hi + _SLACK):
        raise ValueError("region must lie inside the support box")
    if win.is_box and density.box_bounds is not None:
        beta, sup = (float(v) for v in density.box_bounds(lo, hi))
    else:
        beta, sup = _grid_bounds(density, win)
    if beta <= 0:
        raise NonPositiveMinimumError(f"estimated minimum {beta!r} is not positive")
    return beta, sup


def _grid_bounds(density, win):
    d = density.dim
    n = {1: 4097, 2: 257, 3: 41}[d]
    axes = [np.linspace(win.lo[i], win.hi[i], n) for i in range(d)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    if not win.is_box:
        grid = np.vstack([grid[win.contains(grid)], win.vertices])
    vals = density.evaluate(grid)
    gmin, gmax = float(vals.min()), float(vals.max())
    if win.is_box:
        bnds = list(zip(win.lo, win.hi))
        for sign, x0 in ((1.0, grid[np.argmin(vals)]), (-1.0, grid[np.argmax(vals)])):
            res = optimize.minimize(lambda z: sign * density.evaluate(z)[0], x0,
                                    method="L-BFGS-B", bounds=bnds)
            val = float(density.evaluate(res.x)[0])
            gmin, gmax = min(gmin, val), max(gmax, val)
    if density.lipschitz is not None:
        h = max((win.hi[i] - win.lo[i]) / (n - 1) for i in range(d))
        pad = density.lipschitz * h * math.sqrt(d) / 2
        gmin, gmax = gmin - pad, gmax + pad
    return gmin, gmax
