"""Camera trajectory generation.

RANDOM trajectories integrate two point bodies (camera position and
look-at target) under uniform random forces with linear drag, a vertical
spring toward the requested height, and reflect-and-halve collision
response against padded scene AABBs and room walls. KEYPOINTS trajectories
interpolate a user path at constant speed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import geometry
from .scene import TrajectoryParams


class TrajectoryError(RuntimeError):
    pass


@dataclass
class TrajectoryConfig:
    drag: float = 2.0  # 1/s
    stiffness: float = 4.0  # 1/s^2
    substeps: int = 10  # integration steps per output frame
    start_tries: int = 1000


@dataclass
class Keyframe:
    t: float
    position: list[float]
    look_at: list[float]


@dataclass
class TrajectoryResult:
    traj_id: str
    fps: float
    duration: float
    camera_entity: str = ""
    keyframes: list[Keyframe] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "traj_id": self.traj_id,
            "camera_entity": self.camera_entity,
            "fps": self.fps,
            "duration": self.duration,
            "keyframes": [
                {"t": k.t, "position": list(k.position), "look_at": list(k.look_at)}
                for k in self.keyframes
            ],
        }


@dataclass
class RoamSpace:
    """Free-space description the trajectory must respect."""

    room_polygon: np.ndarray  # (n, 2) CCW, mm
    ceiling: float  # mm
    obstacles: list[tuple[np.ndarray, np.ndarray]]  # world AABBs (min, max)

    def clearance_ok(self, p: np.ndarray, padding: float) -> bool:
        if not geometry.point_in_polygon((p[0], p[2]), self.room_polygon):
            return False
        if geometry.distance_to_boundary((p[0], p[2]), self.room_polygon) < padding:
            return False
        if p[1] < padding or p[1] > self.ceiling - padding:
            return False
        for bmin, bmax in self.obstacles:
            if geometry.point_aabb_distance(p, bmin, bmax) < padding:
                return False
        return True

    def violation_normal(self, p: np.ndarray, padding: float) -> np.ndarray | None:
        """Outward-pointing escape direction for the first violated constraint."""
        if p[1] < padding:
            return np.array([0.0, 1.0, 0.0])
        if p[1] > self.ceiling - padding:
            return np.array([0.0, -1.0, 0.0])
        poly = self.room_polygon
        inside = geometry.point_in_polygon((p[0], p[2]), poly)
        if not inside or geometry.distance_to_boundary((p[0], p[2]), poly) < padding:
            n = _nearest_edge_inward_normal(poly, (p[0], p[2]))
            return np.array([n[0], 0.0, n[1]])
        for bmin, bmax in self.obstacles:
            if geometry.point_aabb_distance(p, bmin, bmax) < padding:
                clamped = np.clip(p, bmin, bmax)
                d = p - clamped
                norm = np.linalg.norm(d)
                if norm < 1e-9:
                    # inside the box: exit along the axis of least penetration
                    depth = np.minimum(p - bmin, bmax - p)
                    axis = int(np.argmin(depth))
                    d = np.zeros(3)
                    d[axis] = 1.0 if (p[axis] - bmin[axis]) > (bmax[axis] - p[axis]) else -1.0
                    return d
                return d / norm
        return None


def _nearest_edge_inward_normal(poly: np.ndarray, p) -> tuple[float, float]:
    n_edges = len(poly)
    best_d, best = math.inf, (0.0, 1.0)
    for i in range(n_edges):
        a, b = poly[i], poly[(i + 1) % n_edges]
        d = geometry._point_segment_distance(tuple(p), tuple(a), tuple(b))
        if d < best_d:
            ex, ez = b[0] - a[0], b[1] - a[1]
            length = math.hypot(ex, ez) or 1.0
            best_d, best = d, (-ez / length, ex / length)
    return best


def _step_body(
    pos: np.ndarray,
    vel: np.ndarray,
    rng: np.random.Generator,
    space: RoamSpace,
    params: TrajectoryParams,
    cfg: TrajectoryConfig,
    dt: float,
) -> tuple[np.ndarray, np.ndarray]:
    force_cap = cfg.drag * params.speed  # terminal speed under drag == params.speed
    force = rng.uniform(-force_cap, force_cap, size=3)
    accel = force - cfg.drag * vel
    accel[1] += -cfg.stiffness * (pos[1] - params.height)
    vel = vel + accel * dt
    speed = float(np.linalg.norm(vel))
    if speed > params.speed:
        vel = vel * (params.speed / speed)
    candidate = pos + vel * dt
    if space.clearance_ok(candidate, params.collision_padding):
        return candidate, vel
    normal = space.violation_normal(candidate, params.collision_padding)
    if normal is not None:
        vn = float(np.dot(vel, normal))
        if vn < 0:
            vel = vel - 1.5 * vn * normal  # reflect the approach component, halved
    return pos, vel


def _sample_start(space: RoamSpace, params: TrajectoryParams, rng: np.random.Generator, tries: int) -> np.ndarray:
    lo = space.room_polygon.min(axis=0)
    hi = space.room_polygon.max(axis=0)
    for _ in range(tries):
        p = np.array(
            [
                rng.uniform(lo[0], hi[0]),
                params.height,
                rng.uniform(lo[1], hi[1]),
            ]
        )
        if space.clearance_ok(p, params.collision_padding):
            return p
    raise TrajectoryError(
        f"no collision-free start position found after {tries} rejection samples"
    )


def generate_trajectory(
    traj_id: str,
    params: TrajectoryParams,
    space: RoamSpace,
    rng: np.random.Generator,
    config: TrajectoryConfig | None = None,
) -> TrajectoryResult:
    cfg = config or TrajectoryConfig()
    if params.kind == "KEYPOINTS":
        return _keypoints_trajectory(traj_id, params, space)
    n_frames = int(math.floor(params.fps * params.duration + 1e-9))
    result = TrajectoryResult(traj_id=traj_id, fps=params.fps, duration=params.duration)
    if n_frames <= 0:
        return result
    dt = 1.0 / (cfg.substeps * params.fps)

    pos = _sample_start(space, params, rng, cfg.start_tries)
    look = _sample_start(space, params, rng, cfg.start_tries)
    vel_p = np.zeros(3)
    vel_l = np.zeros(3)
    prev_dir = np.array([0.0, 0.0, 1.0])

    for frame in range(n_frames):
        for _ in range(cfg.substeps):
            pos, vel_p = _step_body(pos, vel_p, rng, space, params, cfg, dt)
            look, vel_l = _step_body(look, vel_l, rng, space, params, cfg, dt)
        gaze = look - pos
        if np.linalg.norm(gaze) < 1e-6:
            gaze = prev_dir
        prev_dir = gaze
        result.keyframes.append(
            Keyframe(
                t=(frame + 1) / params.fps,
                position=[float(v) for v in pos],
                look_at=[float(v) for v in pos + gaze],
            )
        )
    return result


def _keypoints_trajectory(traj_id: str, params: TrajectoryParams, space: RoamSpace) -> TrajectoryResult:
    if not params.keypoints or len(params.keypoints) < 2:
        raise TrajectoryError("KEYPOINTS trajectory needs at least two keypoints")
    points = np.asarray(params.keypoints, dtype=float)
    seg_vec = np.diff(points, axis=0)
    seg_len = np.linalg.norm(seg_vec, axis=1)
    total = float(seg_len.sum())
    if total <= 0:
        raise TrajectoryError("keypoint path has zero length")
    duration = total / params.speed
    n_frames = int(math.floor(params.fps * duration + 1e-9))
    result = TrajectoryResult(traj_id=traj_id, fps=params.fps, duration=duration)
    cum = np.concatenate([[0.0], np.cumsum(seg_len)])
    step = params.speed / params.fps
    for frame in range(n_frames):
        s = min((frame + 1) * step, total)
        seg = min(int(np.searchsorted(cum, s, side="right")) - 1, len(seg_len) - 1)
        t_seg = (s - cum[seg]) / seg_len[seg] if seg_len[seg] > 0 else 0.0
        p = points[seg] + t_seg * seg_vec[seg]
        p = _push_clear(p, space, params.collision_padding)
        direction = seg_vec[seg] / (seg_len[seg] or 1.0)
        result.keyframes.append(
            Keyframe(
                t=(frame + 1) / params.fps,
                position=[float(v) for v in p],
                look_at=[float(v) for v in p + direction * 1000.0],
            )
        )
    return result


def _push_clear(p: np.ndarray, space: RoamSpace, padding: float, max_iter: int = 8) -> np.ndarray:
    """Nudge a path point out of padded obstacles (user keypoints may graze)."""
    p = p.copy()
    for _ in range(max_iter):
        if space.clearance_ok(p, padding):
            return p
        n = space.violation_normal(p, padding)
        if n is None:
            return p
        p = p + n * (padding * 0.25 + 1.0)
    return p
