"""2D polygon and 3D box math shared by layout, samplers and the renderer.

Conventions: world space is right-handed with y up; floor-plane points are
(x, z) pairs in millimeters. A floor polygon is counter-clockwise when its
shoelace sum over (x, z) is positive.
"""

from __future__ import annotations

import math

import numpy as np

Vec2 = tuple[float, float]


def shoelace_area_mm2(corners: list[Vec2] | np.ndarray) -> float:
    """Signed area of a closed polygon in mm^2 (positive = CCW)."""
    pts = np.asarray(corners, dtype=float)
    x, z = pts[:, 0], pts[:, 1]
    return 0.5 * float(np.sum(x * np.roll(z, -1) - np.roll(x, -1) * z))


def polygon_area_m2(corners: list[Vec2] | np.ndarray) -> float:
    return abs(shoelace_area_mm2(corners)) / 1e6


def is_ccw(corners: list[Vec2] | np.ndarray) -> bool:
    return shoelace_area_mm2(corners) > 0.0


def _segments_properly_intersect(p1, p2, p3, p4) -> bool:
    def orient(a, b, c):
        v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        if v > 1e-9:
            return 1
        if v < -1e-9:
            return -1
        return 0

    o1, o2 = orient(p1, p2, p3), orient(p1, p2, p4)
    o3, o4 = orient(p3, p4, p1), orient(p3, p4, p2)
    return o1 != o2 and o3 != o4 and 0 not in (o1, o2, o3, o4)


def is_simple_polygon(corners: list[Vec2] | np.ndarray) -> bool:
    """True when no two non-adjacent edges cross (O(n^2), rooms are small)."""
    pts = [tuple(map(float, p)) for p in corners]
    n = len(pts)
    if n < 3:
        return False
    for i in range(n):
        a1, a2 = pts[i], pts[(i + 1) % n]
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue
            b1, b2 = pts[j], pts[(j + 1) % n]
            if _segments_properly_intersect(a1, a2, b1, b2):
                return False
    return True


def point_in_polygon(point: Vec2, corners: np.ndarray, tol: float = 1e-7) -> bool:
    """Even-odd test; points within tol of an edge count as inside."""
    x, z = float(point[0]), float(point[1])
    pts = np.asarray(corners, dtype=float)
    n = len(pts)
    inside = False
    for i in range(n):
        x1, z1 = pts[i]
        x2, z2 = pts[(i + 1) % n]
        if _point_segment_distance((x, z), (x1, z1), (x2, z2)) <= tol:
            return True
        if (z1 > z) != (z2 > z):
            t = (z - z1) / (z2 - z1)
            if x < x1 + t * (x2 - x1):
                inside = not inside
    return inside


def _point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> float:
    px, pz = p
    ax, az = a
    bx, bz = b
    dx, dz = bx - ax, bz - az
    denom = dx * dx + dz * dz
    if denom <= 0.0:
        return math.hypot(px - ax, pz - az)
    t = max(0.0, min(1.0, ((px - ax) * dx + (pz - az) * dz) / denom))
    return math.hypot(px - (ax + t * dx), pz - (az + t * dz))


def points_in_polygon(points: np.ndarray, corners: np.ndarray) -> np.ndarray:
    """Vectorized even-odd test for an (N, 2) point array."""
    pts = np.asarray(points, dtype=float)
    poly = np.asarray(corners, dtype=float)
    x = pts[:, 0][:, None]
    z = pts[:, 1][:, None]
    x1, z1 = poly[:, 0][None, :], poly[:, 1][None, :]
    x2 = np.roll(poly[:, 0], -1)[None, :]
    z2 = np.roll(poly[:, 1], -1)[None, :]
    straddle = (z1 > z) != (z2 > z)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (z - z1) / (z2 - z1)
        cross = x < x1 + t * (x2 - x1)
    hits = straddle & cross
    return (hits.sum(axis=1) % 2).astype(bool)


def points_in_convex(points: np.ndarray, corners: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Vectorized containment in a convex CCW polygon (boundary counts)."""
    pts = np.asarray(points, dtype=float)
    poly = np.asarray(corners, dtype=float)
    a = poly
    b = np.roll(poly, -1, axis=0)
    ex = (b[:, 0] - a[:, 0])[None, :]
    ez = (b[:, 1] - a[:, 1])[None, :]
    px = pts[:, 0][:, None] - a[:, 0][None, :]
    pz = pts[:, 1][:, None] - a[:, 1][None, :]
    cross = ex * pz - ez * px
    return np.all(cross >= -tol, axis=1)


def distance_to_boundary(point: Vec2, corners: np.ndarray) -> float:
    """Unsigned distance from a point to the polygon boundary."""
    pts = np.asarray(corners, dtype=float)
    n = len(pts)
    return min(
        _point_segment_distance(tuple(point), tuple(pts[i]), tuple(pts[(i + 1) % n]))
        for i in range(n)
    )


def polygon_contains_polygon(inner: np.ndarray, outer: np.ndarray) -> bool:
    """All inner vertices inside outer and no edge crossings."""
    inner = np.asarray(inner, dtype=float)
    outer = np.asarray(outer, dtype=float)
    if not all(point_in_polygon(p, outer) for p in inner):
        return False
    ni, no = len(inner), len(outer)
    for i in range(ni):
        a1, a2 = inner[i], inner[(i + 1) % ni]
        for j in range(no):
            b1, b2 = outer[j], outer[(j + 1) % no]
            if _segments_properly_intersect(tuple(a1), tuple(a2), tuple(b1), tuple(b2)):
                return False
    return True


def clip_convex(subject: np.ndarray, clip: np.ndarray) -> np.ndarray:
    """Sutherland-Hodgman intersection of two convex CCW polygons."""
    out = [tuple(map(float, p)) for p in subject]
    cl = np.asarray(clip, dtype=float)
    n = len(cl)
    for i in range(n):
        if not out:
            break
        a, b = cl[i], cl[(i + 1) % n]
        ex, ez = b[0] - a[0], b[1] - a[1]
        cur = out
        out = []
        for k in range(len(cur)):
            p, q = cur[k], cur[(k + 1) % len(cur)]
            sp = ex * (p[1] - a[1]) - ez * (p[0] - a[0])
            sq = ex * (q[1] - a[1]) - ez * (q[0] - a[0])
            p_in = sp >= -1e-9  # interior of a CCW polygon is left of each edge
            q_in = sq >= -1e-9
            if p_in:
                out.append(p)
            if p_in != q_in:
                t = sp / (sp - sq)
                out.append((p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])))
    return np.asarray(out, dtype=float).reshape(-1, 2)


def convex_overlap_area_mm2(poly_a: np.ndarray, poly_b: np.ndarray) -> float:
    inter = clip_convex(poly_a, poly_b)
    if len(inter) < 3:
        return 0.0
    return abs(shoelace_area_mm2(inter))


def rotate2(points: np.ndarray, yaw: float) -> np.ndarray:
    """Rotate (x, z) points by yaw about the origin (positive = CCW in plan)."""
    c, s = math.cos(yaw), math.sin(yaw)
    pts = np.asarray(points, dtype=float)
    return np.stack([c * pts[:, 0] - s * pts[:, 1], s * pts[:, 0] + c * pts[:, 1]], axis=1)


def oriented_rect(center: Vec2, half_x: float, half_z: float, yaw: float) -> np.ndarray:
    """Corners of a yaw-rotated rectangle, CCW order."""
    base = np.array(
        [[-half_x, -half_z], [half_x, -half_z], [half_x, half_z], [-half_x, half_z]],
        dtype=float,
    )
    rot = rotate2(base, yaw)
    rot[:, 0] += center[0]
    rot[:, 1] += center[1]
    if shoelace_area_mm2(rot) < 0:
        rot = rot[::-1].copy()
    return rot


def triangulate_polygon(corners: np.ndarray) -> list[tuple[int, int, int]]:
    """Ear-clipping triangulation of a simple CCW polygon; returns index triples."""
    pts = np.asarray(corners, dtype=float)
    idx = list(range(len(pts)))
    tris: list[tuple[int, int, int]] = []

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    def ear_ok(i_prev, i_cur, i_next):
        a, b, c = pts[i_prev], pts[i_cur], pts[i_next]
        if cross(a, b, c) <= 1e-9:
            return False
        for j in idx:
            if j in (i_prev, i_cur, i_next):
                continue
            p = pts[j]
            if (
                cross(a, b, p) >= -1e-9
                and cross(b, c, p) >= -1e-9
                and cross(c, a, p) >= -1e-9
            ):
                return False
        return True

    guard = 0
    while len(idx) > 3 and guard < 10000:
        guard += 1
        n = len(idx)
        clipped = False
        for k in range(n):
            i_prev, i_cur, i_next = idx[k - 1], idx[k], idx[(k + 1) % n]
            if ear_ok(i_prev, i_cur, i_next):
                tris.append((i_prev, i_cur, i_next))
                idx.pop(k)
                clipped = True
                break
        if not clipped:
            break
    if len(idx) == 3:
        tris.append((idx[0], idx[1], idx[2]))
    return tris


def rotation_matrix(yaw: float, pitch: float = 0.0, roll: float = 0.0) -> np.ndarray:
    """World rotation R = Ry(yaw) @ Rx(pitch) @ Rz(roll), y-up."""
    cy, sy = math.cos(yaw), math.sin(yaw)
    cp, sp = math.cos(pitch), math.sin(pitch)
    cr, sr = math.cos(roll), math.sin(roll)
    ry = np.array([[cy, 0, sy], [0, 1, 0], [-sy, 0, cy]])
    rx = np.array([[1, 0, 0], [0, cp, -sp], [0, sp, cp]])
    rz = np.array([[cr, -sr, 0], [sr, cr, 0], [0, 0, 1]])
    return ry @ rx @ rz


def transform_points(points: np.ndarray, position, rotation, scale) -> np.ndarray:
    """Apply scale, then yaw-pitch-roll rotation, then translation."""
    r = rotation_matrix(*rotation)
    pts = np.asarray(points, dtype=float) * np.asarray(scale, dtype=float)
    return pts @ r.T + np.asarray(position, dtype=float)


def aabb_of_points(points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    pts = np.asarray(points, dtype=float)
    return pts.min(axis=0), pts.max(axis=0)


def point_aabb_distance(point: np.ndarray, box_min: np.ndarray, box_max: np.ndarray) -> float:
    d = np.maximum(np.maximum(box_min - point, 0.0), point - box_max)
    return float(np.linalg.norm(d))
