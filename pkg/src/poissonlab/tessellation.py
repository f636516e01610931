"""Rescaled inradius and circumradius processes of Poisson-Voronoi tessellations."""
from __future__ import annotations

import logging
import math

import numpy as np

from .errors import ConfigError, MarginTooSmallError, UnsupportedDimensionError
from .measure import ball_measure_many, check_window, density_bounds, unit_ball_volume, window_mass
from .point_process import sample_coupled_sandwich, sample_poisson
from .rescaled import RescaledSample
from .rng import as_generator, replicate_rng, seed_label
from .voronoi import cells_bounded_2d, circumradii_2d, nearest_distances, one_sided_gaps

log = logging.getLogger(__name__)

VARIANTS = ("two_c", "two_pow_d_c")
# an atom above this level has probability ~e^-20 per replicate, so a margin
# sized for it is essentially never too small
TAIL_LEVEL = 20.0


def _nuclei(config, window):
    if len(config) == 0:
        return np.zeros(0, dtype=np.int64)
    return np.flatnonzero(window.contains(config.points))


def _clearance(config, idx):
    pts = config.points[idx]
    return np.minimum(np.min(pts - config.box_lo, axis=1), np.min(config.box_hi - pts, axis=1))


def _current_margin(config, window):
    return float(min(np.min(window.lo - config.box_lo), np.min(config.box_hi - window.hi)))


def scale_factor(alpha2_value, t, d):
    """s_t = alpha_2 t^((d+2)/(d+1))."""
    return float(alpha2_value) * float(t) ** ((d + 2) / (d + 1))


def inradius_atoms(config, density, window, t, variant="two_c"):
    """Atoms t mu(B(x, 2c)) - log t (or 2^d t mu(B(x, c)) - log t) for nuclei in W."""
    if variant not in VARIANTS:
        raise ConfigError(f"unknown inradius variant {variant!r}")
    d = config.dim
    if d > 3:
        raise UnsupportedDimensionError("inradius processes are implemented for d <= 3")
    idx = _nuclei(config, window)
    if idx.size == 0:
        return np.zeros(0), np.zeros(0)
    nn = nearest_distances(config.points, idx)
    clear = _clearance(config, idx)
    bad = nn > clear
    if np.any(bad):
        need = _current_margin(config, window) + float(np.max(nn[bad] - clear[bad]))
        raise MarginTooSmallError(
            f"nearest neighbour of a nucleus may lie outside the box (need margin > {need:.4g})",
            required=need)
    pts = config.points[idx]
    if variant == "two_c":
        mass = ball_measure_many(density, pts, nn)
    else:
        mass = 2.0 ** d * ball_measure_many(density, pts, 0.5 * nn)
    return float(t) * mass - math.log(t), nn


def default_inradius_margin(density, t, d, level=TAIL_LEVEL):
    """Radius r with t f_min k_d r^d = log t + level."""
    return ((math.log(t) + level) / (float(t) * density.f_min * unit_ball_volume(d))) ** (1.0 / d)


def _require_unit_mass(density, window, tol=1e-6):
    mu = window.mu_W if window.mu_W is not None else window_mass(density, window)
    if abs(mu - 1.0) > tol:
        raise ConfigError(f"inradius processes need mu(W) = 1, got {mu!r}; normalise first")


def _simulation_box(density, window, margin):
    lo = np.maximum(window.lo - margin, density.support_lo)
    hi = np.minimum(window.hi + margin, density.support_hi)
    clipped = bool(np.any(window.lo - margin < density.support_lo)
                   or np.any(window.hi + margin > density.support_hi))
    return lo, hi, clipped


def _with_retries(density, window, margin, build, max_retries):
    """Run ``build(lo, hi)`` and double the margin on MarginTooSmallError."""
    retries = 0
    while True:
        lo, hi, clipped = _simulation_box(density, window, margin)
        try:
            return build(lo, hi), margin, retries
        except MarginTooSmallError as exc:
            if clipped or retries >= max_retries:
                raise
            new = max(2.0 * margin, 1.1 * (exc.required or 0.0))
            log.warning("margin %.4g too small, resimulating with %.4g", margin, new)
            margin = new
            retries += 1


def inradius_process(density, window, t, seed, variant="two_c", margin=None, max_retries=8):
    """One realisation of the rescaled inradius process of the nuclei in W."""
    check_window(density, window)
    _require_unit_mass(density, window)
    d = density.dim
    rng = as_generator(seed)
    margin = default_inradius_margin(density, t, d) if margin is None else float(margin)
    state = {}

    def build(lo, hi):
        cfg = sample_poisson(density, t, (lo, hi), rng)
        atoms, _ = inradius_atoms(cfg, density, window, t, variant)
        state["n_points"] = len(cfg)
        return atoms

    atoms, margin, retries = _with_retries(density, window, margin, build, max_retries)
    meta = {"transform": f"inradius_{variant}", "t": float(t), "seed": seed_label(seed),
            "density": density.name, "margin": margin, "n_points": state["n_points"]}
    return RescaledSample(atoms, meta, (-math.inf, math.inf),
                          {"nuclei": int(atoms.size), "margin_retries": retries})


def inradius_pair(density, window, t, seed, hat=False, margin=None, max_retries=8):
    """Inradius process plus, for ``hat=True``, the other variant on the same nuclei.

    Returns ``(main, other)``; ``main`` uses 2^d c when ``hat`` is set and
    ``other`` is None otherwise.
    """
    check_window(density, window)
    _require_unit_mass(density, window)
    d = density.dim
    rng = as_generator(seed)
    margin = default_inradius_margin(density, t, d) if margin is None else float(margin)
    variants = ("two_pow_d_c", "two_c") if hat else ("two_c",)

    def build(lo, hi):
        cfg = sample_poisson(density, t, (lo, hi), rng)
        return [inradius_atoms(cfg, density, window, t, v)[0] for v in variants]

    atoms, margin, retries = _with_retries(density, window, margin, build, max_retries)
    out = [RescaledSample(a, {"transform": f"inradius_{v}", "t": float(t), "margin": margin},
                          (-math.inf, math.inf), {"nuclei": int(a.size), "margin_retries": retries})
           for a, v in zip(atoms, variants)]
    return out[0], (out[1] if hat else None)


def screen_radius(cutoff, s_t, f_lo, d):
    """Radius beyond which s_t mu(B(x, R)) surely exceeds ``cutoff`` (f >= f_lo)."""
    return (cutoff / (s_t * f_lo * unit_ball_volume(d))) ** (1.0 / d)


def circumradius_atoms(config, density, window, t, alpha2_value, atom_cutoff=None):
    """Atoms s_t mu(B(x, C(x))) for nuclei in W.

    Returns ``(atoms, lower, counters)``; ``lower`` holds s_t mu(B(x, c(x)))
    for the same nuclei. With ``atom_cutoff`` every atom at or below the
    cutoff is exact and cells that cannot reach it are only counted.
    """
    d = config.dim
    if d not in (1, 2):
        raise UnsupportedDimensionError("circumradius processes are implemented for d = 1, 2")
    s_t = scale_factor(alpha2_value, t, d)
    idx = _nuclei(config, window)
    counters = {"nuclei": int(idx.size), "unbounded": 0, "above_cutoff": 0}
    if idx.size == 0:
        return np.zeros(0), np.zeros(0), counters
    pts = config.points[idx]
    if atom_cutoff is not None:
        f_lo, _ = density_bounds(density, (config.box_lo, config.box_hi))
        r_s = screen_radius(float(atom_cutoff), s_t, f_lo, d)
    else:
        r_s = math.inf
    if d == 1:
        gl, gr = one_sided_gaps(config.points)
        gl, gr = gl[idx], gr[idx]
        C = 0.5 * np.maximum(gl, gr)
        c = 0.5 * np.minimum(gl, gr)
        unb = ~np.isfinite(C)
        above = ~unb & (C > r_s)
        if atom_cutoff is not None:
            above |= unb
            unb = np.zeros_like(unb)
        ok = ~(unb | above)
    else:
        nn = nearest_distances(config.points, idx)
        c = 0.5 * nn
        clear = _clearance(config, idx)
        cap = np.minimum(r_s, 0.5 * clear)
        C, status = circumradii_2d(config.points, idx, np.minimum(c, cap), cap,
                                   double_up=atom_cutoff is None)
        stuck = status != 0
        unb = np.zeros(idx.size, dtype=bool)
        above = np.zeros(idx.size, dtype=bool)
        if atom_cutoff is not None:
            above = stuck & (r_s <= 0.5 * clear)
            stuck &= ~above
        if np.any(stuck):
            bounded = cells_bounded_2d(config.points, idx[stuck])
            if np.any(bounded):
                need = 2.0 * _current_margin(config, window)
                raise MarginTooSmallError(
                    "a bounded cell reaches beyond the simulated box", required=need)
            unb[stuck] = True
        ok = ~(unb | above)
    counters["unbounded"] = int(unb.sum())
    counters["above_cutoff"] = int(above.sum())
    atoms = s_t * ball_measure_many(density, pts[ok], C[ok])
    lower = s_t * ball_measure_many(density, pts[ok], c[ok])
    return atoms, lower, counters


def default_circumradius_margin(density, t, d, alpha2_value, atom_cutoff=None):
    if atom_cutoff is not None:
        s_t = scale_factor(alpha2_value, t, d)
        return 2.2 * screen_radius(float(atom_cutoff), s_t, density.f_min, d)
    if d == 1:
        return (math.log(t) + TAIL_LEVEL) / (float(t) * density.f_min)
    return 2.0 * default_inradius_margin(density, t, d)


def circumradius_process(density, window, t, seed, alpha2_value, atom_cutoff=None,
                         margin=None, max_retries=8):
    """One realisation of the rescaled circumradius process of the nuclei in W."""
    check_window(density, window, require_convex=True)
    d = density.dim
    rng = as_generator(seed)
    if margin is None:
        margin = default_circumradius_margin(density, t, d, alpha2_value, atom_cutoff)
    state = {}

    def build(lo, hi):
        cfg = sample_poisson(density, t, (lo, hi), rng)
        atoms, _, counters = circumradius_atoms(cfg, density, window, t, alpha2_value,
                                                atom_cutoff)
        state.update(counters, n_points=len(cfg))
        return atoms

    atoms, margin, retries = _with_retries(density, window, float(margin), build, max_retries)
    upper = math.inf if atom_cutoff is None else float(atom_cutoff)
    meta = {"transform": "circumradius", "t": float(t), "seed": seed_label(seed),
            "density": density.name, "alpha2": float(alpha2_value), "margin": margin,
            "n_points": state.pop("n_points")}
    return RescaledSample(atoms, meta, (0.0, upper), {**state, "margin_retries": retries})


def extreme_statistics(sample):
    """(max, min) of the atoms with the conventions (-inf, +inf) when empty."""
    a = sample.atoms if isinstance(sample, RescaledSample) else np.sort(np.asarray(sample, float))
    if a.size == 0:
        return -math.inf, math.inf
    return float(a[-1]), float(a[0])


def intensity_estimate(density, window, t, ring, reps, seed, process_kind="inradius", **kwargs):
    """Monte Carlo mean of xi_t(B) over ``reps`` replicates, with its standard error."""
    reps = int(reps)
    if reps < 2:
        raise ValueError("need at least two replicates for a standard error")
    if ring.is_empty:
        return 0.0, 0.0
    counts = np.empty(reps)
    for r in range(reps):
        rng = replicate_rng(seed, r)
        if process_kind in ("inradius", "inradius_hat"):
            variant = "two_pow_d_c" if process_kind == "inradius_hat" else "two_c"
            sample = inradius_process(density, window, t, rng, variant=variant, **kwargs)
        elif process_kind == "circumradius":
            sample = circumradius_process(density, window, t, rng, **kwargs)
        else:
            raise ConfigError(f"unknown process kind {process_kind!r}")
        counts[r] = ring.count(sample)
    return float(counts.mean()), float(counts.std(ddof=1) / math.sqrt(reps))


def coupled_min_statistics(phi, f1, f2, t, window, seed, alpha2_value=1.0, margin=None):
    """Scaled minimal circumradius masses for the three coupled layers.

    All three use the measure with density ``phi``. Returns a dict with the
    per-layer minima (inf when a layer has no usable nucleus in W) and
    whether the layers were nested.
    """
    check_window(phi, window, require_convex=True)
    d = phi.dim
    if margin is None:
        margin = default_circumradius_margin(phi, t, d, alpha2_value)
    lo, hi, _ = _simulation_box(phi, window, margin)
    low, mid, up = sample_coupled_sandwich(phi, f1, f2, t, (lo, hi), seed)
    nested = _is_subset(low.points, mid.points) and _is_subset(mid.points, up.points)
    out = {"nested": bool(nested)}
    for name, cfg in (("lower", low), ("mid", mid), ("upper", up)):
        atoms, _, counters = circumradius_atoms(cfg, phi, window, t, alpha2_value)
        out[name] = float(atoms.min()) if atoms.size else math.inf
        out[f"{name}_unbounded"] = counters["unbounded"]
    return out


def _is_subset(a, b):
    if len(a) == 0:
        return True
    rows_b = {tuple(r) for r in b}
    return all(tuple(r) in rows_b for r in a)
