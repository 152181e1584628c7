"""Multi-channel frame rendering: one-primary-ray-per-pixel ray casting
with visibility-tested Lambertian shading, or low-sample path tracing.
Both modes share the same G-buffer (depth, normal, semantic, instance)
computed from non-jittered pixel-center rays.

Depth semantics: planar cameras store distance along the camera forward
axis; panoramic cameras store radial Euclidean distance. Values quantize
to uint16 millimeters with 0 reserved for no-hit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bvh import any_hit, closest_hit
from .camera import CameraModel, primary_rays
from .scenegeo import RenderScene

SHADOW_OFFSET = 0.1  # mm along the surface normal


@dataclass
class RenderConfig:
    mode: str = "raycast"  # raycast | pathtrace
    samples: int = 8
    bounces: int = 2
    ambient: float = 0.2


@dataclass
class FrameSet:
    color: np.ndarray  # (H, W, 3) uint8
    depth: np.ndarray  # (H, W) uint16 mm, 0 = no hit
    normal: np.ndarray  # (H, W, 3) uint8 encoded world normals
    semantic: np.ndarray  # (H, W) uint16
    instance: np.ndarray  # (H, W) uint16
    depth_clipped: bool = False


def render(
    scene: RenderScene,
    camera: CameraModel,
    config: RenderConfig | None = None,
    rng: np.random.Generator | None = None,
) -> FrameSet:
    config = config or RenderConfig()
    w, h = camera.width, camera.height
    origins, dirs = primary_rays(camera)
    t, tri = closest_hit(scene.bvh, scene.v0, scene.e1, scene.e2, origins, dirs)
    hit = tri >= 0

    _right, _up, forward = camera.basis()
    if camera.kind == "panoramic":
        depth_f = t
    else:
        depth_f = t * (dirs @ forward)
    depth_f = np.where(hit, depth_f, 0.0)
    clipped = bool(np.any(depth_f > 65535.0))
    depth = np.where(hit, np.clip(np.rint(depth_f), 1, 65535), 0).astype(np.uint16)

    normals = np.zeros_like(dirs)
    semantic = np.zeros(len(t), dtype=np.uint16)
    instance = np.zeros(len(t), dtype=np.uint16)
    if np.any(hit):
        tri_h = tri[hit]
        n = np.cross(scene.e1[tri_h], scene.e2[tri_h])
        n = n / np.linalg.norm(n, axis=1, keepdims=True)
        facing = np.einsum("ij,ij->i", n, dirs[hit])
        n = np.where(facing[:, None] > 0, -n, n)
        normals[hit] = n
        obj = scene.tri_object[tri_h]
        semantic[hit] = scene.obj_semantic[obj]
        instance[hit] = scene.obj_instance[obj]

    normal_u8 = np.rint((normals + 1.0) / 2.0 * 255.0).astype(np.uint8)

    if config.mode == "pathtrace":
        color_lin = _pathtrace(scene, camera, config, rng or np.random.default_rng(0))
    else:
        color_lin = _shade_raycast(scene, config, origins, dirs, t, tri, normals, hit)

    color = np.rint(np.clip(color_lin, 0.0, 1.0) * 255.0).astype(np.uint8)

    return FrameSet(
        color=color.reshape(h, w, 3),
        depth=depth.reshape(h, w),
        normal=normal_u8.reshape(h, w, 3),
        semantic=semantic.reshape(h, w),
        instance=instance.reshape(h, w),
        depth_clipped=clipped,
    )


def _direct_light(scene: RenderScene, points, normals, active) -> np.ndarray:
    """Sum of visibility-tested Lambertian light terms at the given points;
    intensity converts as lumens / (4 pi r_m^2)."""
    shade = np.zeros(len(points))
    if not np.any(active) or len(scene.light_positions) == 0:
        return shade
    idx = np.nonzero(active)[0]
    p = points[idx]
    n = normals[idx]
    offset = p + n * SHADOW_OFFSET
    for li in range(len(scene.light_positions)):
        lpos = scene.light_positions[li]
        vec = lpos[None, :] - p
        dist = np.linalg.norm(vec, axis=1)
        ldir = vec / np.maximum(dist[:, None], 1e-9)
        lambert = np.maximum(0.0, np.einsum("ij,ij->i", n, ldir))
        occluded = any_hit(
            scene.bvh, scene.v0, scene.e1, scene.e2, offset, ldir, np.maximum(dist - 2 * SHADOW_OFFSET, 0.0)
        )
        r_m = np.maximum(dist / 1000.0, 1e-6)
        irradiance = scene.light_intensities[li] / (4.0 * math.pi * r_m**2)
        shade[idx] += np.where(occluded, 0.0, irradiance * lambert)
    return shade


def _shade_raycast(scene, config, origins, dirs, t, tri, normals, hit) -> np.ndarray:
    color = np.zeros((len(t), 3))
    if not np.any(hit):
        return color
    points = origins + dirs * np.where(hit, t, 0.0)[:, None]
    shade = _direct_light(scene, points, normals, hit)
    obj = np.where(hit, scene.tri_object[np.where(hit, tri, 0)], 0)
    base = scene.obj_color[obj]
    color = np.where(hit[:, None], base * (config.ambient + shade[:, None]), 0.0)
    return color


def _cosine_hemisphere(normals: np.ndarray, u1: np.ndarray, u2: np.ndarray) -> np.ndarray:
    helper = np.where(
        np.abs(normals[:, 1:2]) < 0.9,
        np.tile(np.array([0.0, 1.0, 0.0]), (len(normals), 1)),
        np.tile(np.array([1.0, 0.0, 0.0]), (len(normals), 1)),
    )
    t1 = np.cross(helper, normals)
    t1 = t1 / np.maximum(np.linalg.norm(t1, axis=1, keepdims=True), 1e-12)
    t2 = np.cross(normals, t1)
    r = np.sqrt(u1)
    phi = 2.0 * math.pi * u2
    return (
        (r * np.cos(phi))[:, None] * t1
        + (r * np.sin(phi))[:, None] * t2
        + np.sqrt(np.maximum(0.0, 1.0 - u1))[:, None] * normals
    )


def _pathtrace(scene, camera, config, rng) -> np.ndarray:
    """Unidirectional path tracing with next-event estimation at each
    bounce; same direct-light convention as the raycast shader so the two
    modes agree on directly lit surfaces."""
    w, h = camera.width, camera.height
    m = w * h
    accum = np.zeros((m, 3))
    for _ in range(max(1, config.samples)):
        jitter = rng.random((m, 2))
        origins, dirs = primary_rays(camera, jitter=jitter)
        beta = np.ones((m, 3))
        radiance = np.zeros((m, 3))
        active = np.ones(m, dtype=bool)
        for _bounce in range(max(1, config.bounces + 1)):
            u1 = rng.random(m)
            u2 = rng.random(m)
            if not np.any(active):
                continue
            t, tri = closest_hit(scene.bvh, scene.v0, scene.e1, scene.e2, origins, dirs)
            found = (tri >= 0) & active
            active = found
            if not np.any(found):
                continue
            points = origins + dirs * np.where(found, t, 0.0)[:, None]
            tri_safe = np.where(found, tri, 0)
            n = np.cross(scene.e1[tri_safe], scene.e2[tri_safe])
            n = n / np.maximum(np.linalg.norm(n, axis=1, keepdims=True), 1e-12)
            facing = np.einsum("ij,ij->i", n, dirs)
            n = np.where(facing[:, None] > 0, -n, n)
            base = scene.obj_color[scene.tri_object[tri_safe]]
            shade = _direct_light(scene, points, n, found)
            radiance += np.where(found[:, None], beta * base * shade[:, None], 0.0)
            beta = beta * np.where(found[:, None], base, 1.0)
            bounce_dirs = _cosine_hemisphere(n, u1, u2)
            origins = np.where(found[:, None], points + n * SHADOW_OFFSET, origins)
            dirs = np.where(found[:, None], bounce_dirs, dirs)
        accum += radiance
    return accum / max(1, config.samples)
