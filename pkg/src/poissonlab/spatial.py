"""Uniform-grid spatial hash with nearest-neighbour and fixed-radius queries.

Points are padded to three columns so one kernel serves d = 1, 2, 3.
"""
import math
from dataclasses import dataclass

import numpy as np

from ._accel import USE_NUMBA, njit


@dataclass(frozen=True, eq=False)
class GridIndex:
    pts: np.ndarray      # (n, 3) padded coordinates
    lo: np.ndarray       # (3,)
    h: float
    shape: np.ndarray    # (3,) int64
    starts: np.ndarray   # (ncell + 1,) offsets into order
    order: np.ndarray    # point indices sorted by cell
    cells: np.ndarray    # (n, 3) integer cell coordinates

    @property
    def n(self):
        return len(self.pts)


def pad3(points):
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    out = np.zeros((len(pts), 3))
    out[:, : pts.shape[1]] = pts
    return out


def build_grid(points, lo=None, hi=None, cell=None):
    """Hash points into cubic cells of side ``cell`` (default: mean spacing)."""
    raw = np.asarray(points, dtype=float)
    d = 1 if raw.ndim == 1 else raw.shape[1]
    pts = pad3(raw)
    lo3 = pts.min(axis=0) if lo is None else pad3(np.reshape(lo, (1, -1)))[0]
    hi3 = pts.max(axis=0) if hi is None else pad3(np.reshape(hi, (1, -1)))[0]
    lo3 = np.minimum(lo3, pts.min(axis=0)) if len(pts) else lo3
    hi3 = np.maximum(hi3, pts.max(axis=0)) if len(pts) else hi3
    span = np.maximum(hi3[:d] - lo3[:d], 1e-300)
    if cell is None:
        n = max(len(pts), 1)
        # flat or collinear inputs: keep about n cells along the longest side
        cell = max(float(np.prod(span) / n) ** (1.0 / d), float(np.max(span)) / n)
    cell = max(float(cell), float(np.max(span)) / 2 ** 20, 1e-300)
    shape = np.ones(3, dtype=np.int64)
    shape[:d] = np.maximum(np.ceil(span / cell).astype(np.int64), 1)
    cells = np.zeros((len(pts), 3), dtype=np.int64)
    cells[:, :d] = np.clip(((pts[:, :d] - lo3[:d]) / cell).astype(np.int64), 0, shape[:d] - 1)
    flat = (cells[:, 0] * shape[1] + cells[:, 1]) * shape[2] + cells[:, 2]
    order = np.argsort(flat, kind="stable").astype(np.int64)
    ncell = int(np.prod(shape))
    starts = np.searchsorted(flat[order], np.arange(ncell + 1)).astype(np.int64)
    return GridIndex(pts, lo3, cell, shape, starts, order, cells)


# -- numba kernels ---------------------------------------------------------------


@njit
def _nn_kernel(pts, cells, shape, starts, order, h, queries, out_d, out_j):
    maxr = max(shape[0], max(shape[1], shape[2]))
    for qi in range(queries.shape[0]):
        i = queries[qi]
        cx, cy, cz = cells[i, 0], cells[i, 1], cells[i, 2]
        best = np.inf
        bj = -1
        r = 0
        while r <= maxr:
            for ix in range(max(cx - r, 0), min(cx + r, shape[0] - 1) + 1):
                for iy in range(max(cy - r, 0), min(cy + r, shape[1] - 1) + 1):
                    for iz in range(max(cz - r, 0), min(cz + r, shape[2] - 1) + 1):
                        if max(abs(ix - cx), max(abs(iy - cy), abs(iz - cz))) != r:
                            continue
                        c = (ix * shape[1] + iy) * shape[2] + iz
                        for p in range(starts[c], starts[c + 1]):
                            j = order[p]
                            if j == i:
                                continue
                            dx = pts[j, 0] - pts[i, 0]
                            dy = pts[j, 1] - pts[i, 1]
                            dz = pts[j, 2] - pts[i, 2]
                            d2 = dx * dx + dy * dy + dz * dz
                            if d2 < best:
                                best = d2
                                bj = j
            # anything not yet visited is at least r*h away
            if best <= (r * h) * (r * h):
                break
            r += 1
        out_d[qi] = math.sqrt(best)
        out_j[qi] = bj


@njit
def gather_fill(pts, cells, shape, starts, order, h, i, radius, out_idx):
    rr = int(math.ceil(radius / h))
    cx, cy, cz = cells[i, 0], cells[i, 1], cells[i, 2]
    r2 = radius * radius
    m = 0
    for ix in range(max(cx - rr, 0), min(cx + rr, shape[0] - 1) + 1):
        for iy in range(max(cy - rr, 0), min(cy + rr, shape[1] - 1) + 1):
            for iz in range(max(cz - rr, 0), min(cz + rr, shape[2] - 1) + 1):
                c = (ix * shape[1] + iy) * shape[2] + iz
                for p in range(starts[c], starts[c + 1]):
                    j = order[p]
                    if j == i:
                        continue
                    dx = pts[j, 0] - pts[i, 0]
                    dy = pts[j, 1] - pts[i, 1]
                    dz = pts[j, 2] - pts[i, 2]
                    if dx * dx + dy * dy + dz * dz <= r2:
                        out_idx[m] = j
                        m += 1
    return m


# -- numpy twins -------------------------------------------------------------------


def cell_table(grid):
    """(ncell + 1, occ) table of point indices per cell, -1 padded; last row empty."""
    counts = np.diff(grid.starts)
    occ = max(int(counts.max()) if counts.size else 0, 1)
    ncell = counts.size
    table = np.full((ncell + 1, occ), -1, dtype=np.int64)
    cell_of = np.repeat(np.arange(ncell), counts)
    rank = np.arange(grid.n) - np.repeat(grid.starts[:-1], counts)
    table[cell_of, rank] = grid.order
    return table


def _shell_offsets(r, dims):
    rng = np.arange(-r, r + 1)
    axes = [rng if k < dims else np.zeros(1, dtype=np.int64) for k in range(3)]
    off = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
    return off[np.max(np.abs(off), axis=1) == r]


def _box_offsets(r, dims):
    rng = np.arange(-r, r + 1)
    axes = [rng if k < dims else np.zeros(1, dtype=np.int64) for k in range(3)]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)


def _candidates(grid, table, queries, offsets):
    cells = grid.cells[queries][:, None, :] + offsets[None, :, :]
    ok = np.all((cells >= 0) & (cells < grid.shape), axis=2)
    flat = (cells[..., 0] * grid.shape[1] + cells[..., 1]) * grid.shape[2] + cells[..., 2]
    flat = np.where(ok, flat, table.shape[0] - 1)
    cand = table[flat].reshape(len(queries), -1)
    cand = np.where(cand == queries[:, None], -1, cand)
    return cand


def _nn_numpy(grid, queries, dims):
    table = cell_table(grid)
    best = np.full(len(queries), np.inf)
    bidx = np.full(len(queries), -1, dtype=np.int64)
    pending = np.arange(len(queries))
    maxr = int(grid.shape.max())
    r = 0
    while pending.size and r <= maxr:
        q = queries[pending]
        cand = _candidates(grid, table, q, _shell_offsets(r, dims))
        if cand.shape[1]:
            diff = grid.pts[np.maximum(cand, 0)] - grid.pts[q][:, None, :]
            d2 = np.where(cand >= 0, np.einsum("ijk,ijk->ij", diff, diff), np.inf)
            k = np.argmin(d2, axis=1)
            m = d2[np.arange(len(q)), k]
            better = m < best[pending]
            best[pending[better]] = m[better]
            bidx[pending[better]] = cand[better, k[better]]
        done = best[pending] <= (r * grid.h) ** 2
        pending = pending[~done]
        r += 1
    return np.sqrt(best), bidx


def nearest_neighbors(grid, queries, dims):
    """Distance to and index of the nearest other point for each query index."""
    queries = np.ascontiguousarray(queries, dtype=np.int64)
    if grid.n < 2:
        return np.full(len(queries), np.inf), np.full(len(queries), -1, dtype=np.int64)
    if USE_NUMBA:
        out_d = np.empty(len(queries))
        out_j = np.empty(len(queries), dtype=np.int64)
        _nn_kernel(grid.pts, grid.cells, grid.shape, grid.starts, grid.order, grid.h,
                   queries, out_d, out_j)
        return out_d, out_j
    return _nn_numpy(grid, queries, dims)


def neighbors_within_padded(grid, queries, radius, dims, table=None):
    """(n_query, m) candidate indices within ``radius`` (-1 padded) and offsets.

    Numpy helper for the vectorised paths; returns displacement vectors and
    distances with ``inf`` for padding.
    """
    queries = np.asarray(queries, dtype=np.int64)
    table = cell_table(grid) if table is None else table
    rr = int(math.ceil(radius / grid.h))
    cand = _candidates(grid, table, queries, _box_offsets(rr, dims))
    diff = grid.pts[np.maximum(cand, 0)] - grid.pts[queries][:, None, :]
    dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    keep = (cand >= 0) & (dist <= radius)
    dist = np.where(keep, dist, np.inf)
    # compact columns so rows stay short
    order = np.argsort(dist, axis=1, kind="stable")
    width = max(int(keep.sum(axis=1).max()) if keep.size else 0, 1)
    order = order[:, :width]
    cand = np.take_along_axis(np.where(keep, cand, -1), order, axis=1)
    dist = np.take_along_axis(dist, order, axis=1)
    diff = np.take_along_axis(diff, order[:, :, None], axis=1)
    return cand, diff, dist
