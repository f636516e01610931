"""Independent reference implementations used only by the tests."""
import math

import numpy as np


def clip_cell(x, others, big=1e4):
    """Voronoi cell of x as a polygon, by clipping a huge square with bisectors."""
    x = np.asarray(x, float)
    poly = [x + np.array(v) for v in [(-big, -big), (big, -big), (big, big), (-big, big)]]
    for y in np.asarray(others, float):
        n = y - x
        c = n @ (x + y) / 2
        out = []
        for i in range(len(poly)):
            p, q = poly[i], poly[(i + 1) % len(poly)]
            fp, fq = n @ p - c, n @ q - c
            if fp <= 0:
                out.append(p)
            if fp * fq < 0:
                out.append(p + (q - p) * fp / (fp - fq))
        poly = out
    return np.array(poly)


def polygon_circumradius(x, poly):
    return float(np.max(np.linalg.norm(poly - x, axis=1)))


def polygon_inradius(x, poly):
    """Distance from x to the boundary of a convex polygon containing it."""
    best = math.inf
    for i in range(len(poly)):
        p, q = poly[i], poly[(i + 1) % len(poly)]
        e = q - p
        s = np.clip((x - p) @ e / (e @ e), 0.0, 1.0)
        best = min(best, float(np.linalg.norm(p + s * e - x)))
    return best


def hull_contains_interior(x, others):
    """Boundedness oracle: the cell is bounded iff the clipped polygon never
    touches the artificial frame."""
    poly = clip_cell(x, others, big=1e6)
    return polygon_circumradius(x, poly) < 1e5


def direction_sweep_circumradius(x, others, n_dir=100_000):
    """max over directions of the distance to the first bisector hit."""
    th = np.linspace(0, 2 * math.pi, n_dir, endpoint=False)
    u = np.stack([np.cos(th), np.sin(th)], axis=1)
    off = np.asarray(others, float) - x
    proj = u @ off.T
    half = 0.5 * np.sum(off * off, axis=1)
    with np.errstate(divide="ignore"):
        hit = np.where(proj > 0, half / proj, np.inf)
    return float(np.max(np.min(hit, axis=1)))


def brute_run_count(bits, k):
    b = list(bits)
    return sum(all(b[i:i + k]) for i in range(len(b) - k + 1))
