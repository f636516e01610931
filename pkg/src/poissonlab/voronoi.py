"""Inradius, circumscribed radius and boundedness of Voronoi cells.

The circumscribed radius uses the cap-coverage criterion: the cell of x lies
in B(x, R) iff the caps {u : <u, e_j> >= |x_j - x| / (2R)} of the neighbours
within 2R cover the unit sphere of directions. For d = 2 these caps are arcs
and coverage is a sorted sweep around the circle.
"""
import math
import warnings

import numpy as np

from ._accel import USE_NUMBA, njit
from .errors import (
    DegeneratePositionWarning,
    EmptyNeighborhoodError,
    UnsupportedDimensionError,
)
from .rng import as_generator
from .spatial import (
    build_grid,
    cell_table,
    gather_fill,
    nearest_neighbors,
    neighbors_within_padded,
)

UNBOUNDED = math.inf
BISECTION_TOL = 1e-10
DEGENERATE_TOL = 1e-12
TWO_PI = 2.0 * math.pi


def _as_points(config):
    pts = getattr(config, "points", config)
    pts = np.asarray(pts, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    return pts


def _others(x, config):
    pts = _as_points(config)
    x = np.asarray(x, dtype=float).reshape(-1)
    if pts.shape[1] != x.size:
        raise ValueError("point and configuration dimensions differ")
    off = pts - x
    dist = np.sqrt(np.sum(off * off, axis=1))
    keep = dist > 0
    return off[keep], dist[keep]


# -- cap coverage ------------------------------------------------------------------


@njit
def arcs_cover_circle(ang, dist, m, R, rel, end):
    """True iff the arcs of the first ``m`` neighbours cover the circle at radius R.

    ``rel`` and ``end`` are scratch buffers of length >= m.
    """
    two_r = 2.0 * R
    best = -1.0
    ref = -1
    for j in range(m):
        if dist[j] <= two_r:
            hw = math.acos(min(dist[j] / two_r, 1.0))
            if hw > best:
                best = hw
                ref = j
    if ref < 0:
        return False
    s0 = ang[ref] - best
    k = 0
    for j in range(m):
        if j == ref or dist[j] > two_r:
            continue
        hw = math.acos(min(dist[j] / two_r, 1.0))
        r = (ang[j] - hw - s0) % TWO_PI
        rel[k] = r
        end[k] = r + 2.0 * hw
        k += 1
    reach = 2.0 * best
    if k > 32:
        idx = np.argsort(rel[:k])
        for t in range(k):
            j = idx[t]
            if rel[j] > reach:
                return False
            if end[j] > reach:
                reach = end[j]
        return reach >= TWO_PI
    # short lists: insertion sort in place, no allocation
    for t in range(1, k):
        r, e = rel[t], end[t]
        j = t - 1
        while j >= 0 and rel[j] > r:
            rel[j + 1] = rel[j]
            end[j + 1] = end[j]
            j -= 1
        rel[j + 1] = r
        end[j + 1] = e
    for t in range(k):
        if rel[t] > reach:
            return False
        if end[t] > reach:
            reach = end[t]
    return reach >= TWO_PI


def arcs_cover_rows(ang, dist, R):
    """Vectorised twin of :func:`arcs_cover_circle` for (n, m) arrays, padding = inf."""
    ang = np.asarray(ang, dtype=float)
    dist = np.asarray(dist, dtype=float)
    two_r = 2.0 * np.asarray(R, dtype=float).reshape(-1, 1)
    valid = dist <= two_r
    with np.errstate(invalid="ignore", divide="ignore"):
        hw = np.where(valid, np.arccos(np.minimum(dist / two_r, 1.0)), -1.0)
    rows = np.arange(len(ang))
    ref = np.argmax(hw, axis=1)
    has = hw[rows, ref] >= 0
    s0 = ang[rows, ref] - hw[rows, ref]
    rel = np.mod(ang - hw - s0[:, None], TWO_PI)
    rel[rows, ref] = 0.0
    rel = np.where(valid, rel, np.inf)
    end = np.where(valid, rel + 2.0 * hw, -np.inf)
    order = np.argsort(rel, axis=1, kind="stable")
    rel = np.take_along_axis(rel, order, axis=1)
    end = np.take_along_axis(end, order, axis=1)
    reach = np.maximum.accumulate(end, axis=1)
    gap = np.any(np.isfinite(rel[:, 1:]) & (rel[:, 1:] > reach[:, :-1]), axis=1)
    return has & ~gap & (reach[:, -1] >= TWO_PI)


def cell_contained_in_ball(x, config, R):
    """Whether the Voronoi cell of x (w.r.t. ``config``) lies inside B(x, R)."""
    off, dist = _others(x, config)
    d = off.shape[1]
    if d == 1:
        near = dist <= 2.0 * R
        return bool(np.any(near & (off[:, 0] < 0)) and np.any(near & (off[:, 0] > 0)))
    if d != 2:
        raise UnsupportedDimensionError("cap coverage is implemented for d = 1 and d = 2")
    if R <= 0 or off.shape[0] == 0:
        return False
    ang = np.arctan2(off[:, 1], off[:, 0])
    m = len(ang)
    return bool(arcs_cover_circle(ang, dist, m, float(R), np.empty(m), np.empty(m)))


def is_cell_bounded(x, neighbors):
    """Whether x lies in the interior of the convex hull of ``neighbors``."""
    off, _ = _others(x, neighbors)
    d = off.shape[1]
    if d == 1:
        left = off[:, 0] < 0
        right = off[:, 0] > 0
        return bool(left.any() and right.any())
    if d != 2:
        raise UnsupportedDimensionError("boundedness test is implemented for d = 1 and d = 2")
    if len(off) < 3:
        return False
    ang = np.sort(np.arctan2(off[:, 1], off[:, 0]))
    gaps = np.diff(np.concatenate([ang, [ang[0] + TWO_PI]]))
    widest = float(gaps.max())
    if abs(widest - math.pi) <= DEGENERATE_TOL:
        warnings.warn("nucleus lies on the hull boundary of its neighbours",
                      DegeneratePositionWarning, stacklevel=2)
    return widest < math.pi


def inradius(x, config):
    """Half the distance from x to its nearest other point of ``config``."""
    _, dist = _others(x, config)
    if dist.size == 0:
        raise EmptyNeighborhoodError("configuration has no point other than x")
    return 0.5 * float(dist.min())


def circumradius(x, config, tol=BISECTION_TOL):
    """Smallest R with the cell of x inside B(x, R); ``UNBOUNDED`` if none."""
    off, dist = _others(x, config)
    d = off.shape[1]
    if d not in (1, 2):
        raise UnsupportedDimensionError("circumradius is implemented for d = 1 and d = 2")
    if d == 1:
        left = -off[off[:, 0] < 0, 0]
        right = off[off[:, 0] > 0, 0]
        if left.size == 0 or right.size == 0:
            return UNBOUNDED
        return 0.5 * max(float(left.min()), float(right.min()))
    if not is_cell_bounded(x, config):
        return UNBOUNDED
    ang = np.arctan2(off[:, 1], off[:, 0])
    m = len(ang)
    rel, end = np.empty(m), np.empty(m)
    lo = 0.5 * float(dist.min())
    hi = lo
    while not arcs_cover_circle(ang, dist, m, hi, rel, end):
        lo, hi = hi, 2.0 * hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if arcs_cover_circle(ang, dist, m, mid, rel, end):
            hi = mid
        else:
            lo = mid
    return hi


# -- batch kernels over a whole configuration --------------------------------------


def nearest_distances(points, queries, grid=None):
    """Nearest-neighbour distance for each query index (inf if alone)."""
    pts = _as_points(points)
    queries = np.asarray(queries, dtype=np.int64)
    d = pts.shape[1]
    if d == 1:
        order = np.argsort(pts[:, 0], kind="stable")
        x = pts[order, 0]
        gl = np.concatenate([[np.inf], np.diff(x)])
        gr = np.concatenate([np.diff(x), [np.inf]])
        nn = np.empty(len(x))
        nn[order] = np.minimum(gl, gr)
        return nn[queries]
    grid = build_grid(pts) if grid is None else grid
    dist, _ = nearest_neighbors(grid, queries, d)
    return dist


def one_sided_gaps(points):
    """Left and right gaps to the neighbours of each point on the line."""
    x = _as_points(points)[:, 0]
    order = np.argsort(x, kind="stable")
    xs = x[order]
    gl = np.empty(len(x))
    gr = np.empty(len(x))
    gl[order] = np.concatenate([[np.inf], np.diff(xs)])
    gr[order] = np.concatenate([np.diff(xs), [np.inf]])
    return gl, gr


@njit
def _circ_kernel(pts, cells, shape, starts, order, h, queries, lo_arr, cap_arr,
                 double_up, tol, out_r, out_status):
    n = pts.shape[0]
    idx = np.empty(n, dtype=np.int64)
    ang = np.empty(n)
    dist = np.empty(n)
    rel = np.empty(n)
    end = np.empty(n)
    for qi in range(queries.shape[0]):
        i = queries[qi]
        lo = lo_arr[qi]
        cap = cap_arr[qi]
        hi = min(2.0 * lo, cap) if double_up else cap
        while True:
            m = gather_fill(pts, cells, shape, starts, order, h, i, 2.0 * hi, idx)
            for t in range(m):
                j = idx[t]
                dx = pts[j, 0] - pts[i, 0]
                dy = pts[j, 1] - pts[i, 1]
                ang[t] = math.atan2(dy, dx)
                dist[t] = math.sqrt(dx * dx + dy * dy)
            if arcs_cover_circle(ang, dist, m, hi, rel, end):
                break
            if hi >= cap:
                m = -1
                break
            lo = hi
            hi = min(2.0 * hi, cap)
        if m < 0:
            out_r[qi] = np.inf
            out_status[qi] = 1
            continue
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if arcs_cover_circle(ang, dist, m, mid, rel, end):
                hi = mid
            else:
                lo = mid
        out_r[qi] = hi
        out_status[qi] = 0


def _circ_numpy(grid, queries, lo_arr, cap_arr, double_up, tol):
    out_r = np.full(len(queries), np.inf)
    status = np.ones(len(queries), dtype=np.int64)
    table = cell_table(grid)
    lo = lo_arr.astype(float).copy()
    hi = np.minimum(2.0 * lo, cap_arr) if double_up else cap_arr.astype(float).copy()
    pending = np.arange(len(queries))
    solved_ang = {}
    while pending.size:
        radius = 2.0 * float(hi[pending].max())
        _, diff, dist = neighbors_within_padded(grid, queries[pending], radius, 2, table)
        ang = np.arctan2(diff[..., 1], diff[..., 0])
        ok = arcs_cover_rows(ang, dist, hi[pending])
        for row in np.flatnonzero(ok):
            solved_ang[int(pending[row])] = (ang[row], dist[row])
        stuck = ~ok & (hi[pending] >= cap_arr[pending])
        grow = ~ok & ~stuck
        lo[pending[grow]] = hi[pending[grow]]
        hi[pending[grow]] = np.minimum(2.0 * hi[pending[grow]], cap_arr[pending[grow]])
        pending = pending[grow]
    done = np.array(sorted(solved_ang), dtype=np.int64)
    if done.size == 0:
        return out_r, status
    width = max(len(solved_ang[i][0]) for i in done)
    A = np.full((done.size, width), 0.0)
    D = np.full((done.size, width), np.inf)
    for r, i in enumerate(done):
        a, dd = solved_ang[int(i)]
        A[r, : a.size] = a
        D[r, : dd.size] = dd
    a_lo, a_hi = lo[done], hi[done]
    while np.any(a_hi - a_lo > tol):
        mid = 0.5 * (a_lo + a_hi)
        ok = arcs_cover_rows(A, D, mid)
        a_hi = np.where(ok, mid, a_hi)
        a_lo = np.where(ok, a_lo, mid)
    out_r[done] = a_hi
    status[done] = 0
    return out_r, status


def circumradii_2d(points, queries, lower, cap, double_up=True, tol=BISECTION_TOL, grid=None):
    """Batch circumradii in the plane.

    ``lower`` must be a lower bound per query (the inradius works) and ``cap``
    the largest radius worth resolving. Returns ``(radius, status)`` where
    status 0 means exact and 1 means the cell is not inside B(x, cap).
    """
    pts = _as_points(points)
    queries = np.ascontiguousarray(queries, dtype=np.int64)
    lower = np.ascontiguousarray(np.broadcast_to(lower, queries.shape), dtype=float)
    cap = np.ascontiguousarray(np.broadcast_to(cap, queries.shape), dtype=float)
    grid = build_grid(pts) if grid is None else grid
    if queries.size == 0:
        return np.empty(0), np.empty(0, dtype=np.int64)
    if USE_NUMBA:
        out_r = np.empty(len(queries))
        status = np.empty(len(queries), dtype=np.int64)
        _circ_kernel(grid.pts, grid.cells, grid.shape, grid.starts, grid.order, grid.h,
                     queries, lower, cap, bool(double_up), float(tol), out_r, status)
        return out_r, status
    return _circ_numpy(grid, queries, lower, cap, double_up, tol)


def cells_bounded_2d(points, queries):
    """Boundedness of each query's cell w.r.t. all other points (max angular gap < pi)."""
    pts = _as_points(points)
    out = np.empty(len(queries), dtype=bool)
    for r, i in enumerate(np.asarray(queries, dtype=np.int64)):
        off = np.delete(pts, i, axis=0) - pts[i]
        if len(off) < 3:
            out[r] = False
            continue
        ang = np.sort(np.arctan2(off[:, 1], off[:, 0]))
        out[r] = np.diff(np.concatenate([ang, [ang[0] + TWO_PI]])).max() < math.pi
    return out


# -- p_k and alpha_2 ----------------------------------------------------------------


@njit
def _pk_kernel(ang, rad, R):
    n, k = ang.shape
    rel = np.empty(k)
    end = np.empty(k)
    hits = 0
    for s in range(n):
        if arcs_cover_circle(ang[s], rad[s], k, R, rel, end):
            hits += 1
    return hits


def estimate_p_k(d, k, n_samples, seed, chunk=200_000):
    """Monte Carlo P(cell of 0 among k uniform points in B(0, 2) lies in B(0, 1))."""
    if d not in (1, 2):
        raise UnsupportedDimensionError("p_k is implemented for d = 1 and d = 2")
    if k < 1 or n_samples < 1:
        raise ValueError("need k >= 1 and n_samples >= 1")
    rng = as_generator(seed)
    hits = 0
    left = int(n_samples)
    while left > 0:
        m = min(chunk, left)
        left -= m
        if d == 1:
            y = rng.uniform(-2.0, 2.0, size=(m, k))
            # any |y| <= 2 gives a half-line cap at R = 1, so only the signs matter
            hits += int(np.sum(np.any(y < 0, axis=1) & np.any(y > 0, axis=1)))
            continue
        rad = 2.0 * np.sqrt(rng.random((m, k)))
        ang = rng.uniform(-math.pi, math.pi, size=(m, k))
        if USE_NUMBA:
            hits += int(_pk_kernel(ang, rad, 1.0))
        else:
            hits += int(np.sum(arcs_cover_rows(ang, rad, np.ones(m))))
    p = hits / n_samples
    return p, math.sqrt(max(p * (1.0 - p), 0.0) / n_samples)


def alpha2(d, p):
    """(2^(d(d+1)) / (d+1)! * p)^(1/(d+1))."""
    if not (0 < p <= 1):
        raise ValueError("p must lie in (0, 1]")
    return (2.0 ** (d * (d + 1)) / math.factorial(d + 1) * p) ** (1.0 / (d + 1))


def alpha2_with_error(d, p, se):
    """alpha_2 and its delta-method standard error."""
    a = alpha2(d, p)
    return a, a * se / ((d + 1) * p)
