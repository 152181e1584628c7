"""Bounding volume hierarchy over triangle soup with batched ray queries.

Median split over the longest centroid axis, leaves hold at most 4
triangles. Queries are vectorized over ray batches; the closest-hit rule
is canonical (min t, then min triangle index) so results match the
brute-force scan bit for bit, including ties.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LEAF_SIZE = 4
T_EPS = 1e-3  # intersection epsilon, mm
_DET_EPS = 1e-12


@dataclass
class Bvh:
    node_min: np.ndarray  # (K, 3)
    node_max: np.ndarray  # (K, 3)
    node_right: np.ndarray  # (K,) right-child index; left child is node + 1
    node_start: np.ndarray  # (K,) first triangle slot for leaves
    node_count: np.ndarray  # (K,) triangle count, 0 for inner nodes
    order: np.ndarray  # triangle indices grouped by leaf

    @property
    def n_nodes(self) -> int:
        return len(self.node_min)


def build_bvh(v0: np.ndarray, e1: np.ndarray, e2: np.ndarray) -> Bvh:
    n = len(v0)
    tri_min = np.minimum(np.minimum(v0, v0 + e1), v0 + e2)
    tri_max = np.maximum(np.maximum(v0, v0 + e1), v0 + e2)
    centroids = (tri_min + tri_max) / 2.0

    node_min: list[np.ndarray] = []
    node_max: list[np.ndarray] = []
    node_right: list[int] = []
    node_start: list[int] = []
    node_count: list[int] = []
    order: list[int] = []

    def add_node() -> int:
        node_min.append(np.zeros(3))
        node_max.append(np.zeros(3))
        node_right.append(-1)
        node_start.append(0)
        node_count.append(0)
        return len(node_min) - 1

    def build(tri_idx: np.ndarray) -> int:
        me = add_node()
        node_min[me] = tri_min[tri_idx].min(axis=0)
        node_max[me] = tri_max[tri_idx].max(axis=0)
        if len(tri_idx) <= LEAF_SIZE:
            node_start[me] = len(order)
            node_count[me] = len(tri_idx)
            order.extend(int(i) for i in tri_idx)
            return me
        extent = node_max[me] - node_min[me]
        axis = int(np.argmax(extent))
        keys = centroids[tri_idx][:, axis]
        half = len(tri_idx) // 2
        split = np.argpartition(keys, half)
        build(tri_idx[split[:half]])  # left child lands at me + 1
        node_right[me] = build(tri_idx[split[half:]])
        return me

    if n > 0:
        build(np.arange(n))
    else:
        root = add_node()
        node_count[root] = 0
        node_start[root] = 0

    return Bvh(
        node_min=np.asarray(node_min),
        node_max=np.asarray(node_max),
        node_right=np.asarray(node_right, dtype=np.int64),
        node_start=np.asarray(node_start, dtype=np.int64),
        node_count=np.asarray(node_count, dtype=np.int64),
        order=np.asarray(order, dtype=np.int64),
    )


def _ray_triangle(o, d, v0, e1, e2):
    """Moller-Trumbore over a (rays, tris) cross product; returns (t, valid)."""
    pvec = np.cross(d[:, None, :], e2[None, :, :])
    det = np.einsum("ij,rij->ri", e1, pvec)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv_det = np.where(np.abs(det) > _DET_EPS, 1.0 / det, 0.0)
    tvec = o[:, None, :] - v0[None, :, :]
    u = np.einsum("rij,rij->ri", tvec, pvec) * inv_det
    qvec = np.cross(tvec, e1[None, :, :])
    v = np.einsum("rj,rij->ri", d, qvec) * inv_det
    t = np.einsum("ij,rij->ri", e2, qvec) * inv_det
    valid = (
        (np.abs(det) > _DET_EPS)
        & (u >= 0.0)
        & (v >= 0.0)
        & (u + v <= 1.0)
        & (t > T_EPS)
    )
    return t, valid


def _update_best(t_best, idx_best, rows, t_new, idx_new, valid):
    """Canonical closest-hit update: smaller t wins, ties go to the smaller
    triangle index."""
    t_cand = np.where(valid, t_new, np.inf)
    idx_cand = np.where(valid, idx_new, np.iinfo(np.int64).max)
    cur_t = t_best[rows]
    cur_i = idx_best[rows]
    better = (t_cand < cur_t) | ((t_cand == cur_t) & (idx_cand < cur_i))
    t_best[rows] = np.where(better, t_cand, cur_t)
    idx_best[rows] = np.where(better, idx_cand, cur_i)


def _leaf_best(o, d, leaf_tris, v0, e1, e2):
    """Per-ray best (t, tri) within one leaf under the canonical rule."""
    t, valid = _ray_triangle(o, d, v0[leaf_tris], e1[leaf_tris], e2[leaf_tris])
    t = np.where(valid, t, np.inf)
    tmin = t.min(axis=1)
    big = np.iinfo(np.int64).max
    idx = np.where(t == tmin[:, None], leaf_tris[None, :], big).min(axis=1)
    return tmin, idx


def _slab(node_lo, node_hi, o, inv_d, t_limit):
    with np.errstate(invalid="ignore"):
        t1 = (node_lo[None, :] - o) * inv_d
        t2 = (node_hi[None, :] - o) * inv_d
    lo = np.fmin(t1, t2)
    hi = np.fmax(t1, t2)
    tn = np.fmax(np.fmax(lo[:, 0], lo[:, 1]), lo[:, 2])
    tf = np.fmin(np.fmin(hi[:, 0], hi[:, 1]), hi[:, 2])
    return (tf >= np.fmax(tn, 0.0)) & (tn <= t_limit)


def closest_hit(
    bvh: Bvh,
    v0: np.ndarray,
    e1: np.ndarray,
    e2: np.ndarray,
    origins: np.ndarray,
    dirs: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Batched closest hit; returns (t, tri_index) with -1 for misses."""
    m = len(origins)
    t_best = np.full(m, np.inf)
    idx_best = np.full(m, np.iinfo(np.int64).max, dtype=np.int64)
    if len(v0) == 0 or m == 0:
        return t_best, np.full(m, -1, dtype=np.int64)
    with np.errstate(divide="ignore"):
        inv = 1.0 / dirs
    stack = [(0, np.arange(m))]
    while stack:
        node, rays = stack.pop()
        mask = _slab(bvh.node_min[node], bvh.node_max[node], origins[rays], inv[rays], t_best[rays])
        rays = rays[mask]
        if rays.size == 0:
            continue
        count = bvh.node_count[node]
        if count > 0:
            leaf_tris = bvh.order[bvh.node_start[node] : bvh.node_start[node] + count]
            t_new, idx_new = _leaf_best(origins[rays], dirs[rays], leaf_tris, v0, e1, e2)
            _update_best(t_best, idx_best, rays, t_new, idx_new, np.isfinite(t_new))
        else:
            stack.append((bvh.node_right[node], rays))
            stack.append((node + 1, rays))
    misses = ~np.isfinite(t_best)
    idx_out = np.where(misses, -1, idx_best).astype(np.int64)
    return t_best, idx_out


def any_hit(
    bvh: Bvh,
    v0: np.ndarray,
    e1: np.ndarray,
    e2: np.ndarray,
    origins: np.ndarray,
    dirs: np.ndarray,
    t_max: np.ndarray,
) -> np.ndarray:
    """True per ray when any triangle lies within (T_EPS, t_max)."""
    m = len(origins)
    hit = np.zeros(m, dtype=bool)
    if len(v0) == 0 or m == 0:
        return hit
    with np.errstate(divide="ignore"):
        inv = 1.0 / dirs
    stack = [(0, np.arange(m))]
    while stack:
        node, rays = stack.pop()
        rays = rays[~hit[rays]]
        if rays.size == 0:
            continue
        mask = _slab(bvh.node_min[node], bvh.node_max[node], origins[rays], inv[rays], t_max[rays])
        rays = rays[mask]
        if rays.size == 0:
            continue
        count = bvh.node_count[node]
        if count > 0:
            leaf_tris = bvh.order[bvh.node_start[node] : bvh.node_start[node] + count]
            t, valid = _ray_triangle(origins[rays], dirs[rays], v0[leaf_tris], e1[leaf_tris], e2[leaf_tris])
            found = np.any(valid & (t < t_max[rays][:, None]), axis=1)
            hit[rays[found]] = True
        else:
            stack.append((bvh.node_right[node], rays))
            stack.append((node + 1, rays))
    return hit


def linear_closest_hit(
    v0: np.ndarray,
    e1: np.ndarray,
    e2: np.ndarray,
    origins: np.ndarray,
    dirs: np.ndarray,
    chunk: int = 512,
) -> tuple[np.ndarray, np.ndarray]:
    """Brute-force closest hit over every triangle; the no-BVH oracle."""
    m = len(origins)
    t_best = np.full(m, np.inf)
    idx_best = np.full(m, np.iinfo(np.int64).max, dtype=np.int64)
    rows = np.arange(m)
    for start in range(0, len(v0), chunk):
        tris = np.arange(start, min(start + chunk, len(v0)))
        t_new, idx_new = _leaf_best(origins, dirs, tris, v0, e1, e2)
        _update_best(t_best, idx_best, rows, t_new, idx_new, np.isfinite(t_new))
    misses = ~np.isfinite(t_best)
    return t_best, np.where(misses, -1, idx_best).astype(np.int64)
