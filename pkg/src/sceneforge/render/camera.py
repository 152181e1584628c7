"""Camera models and primary ray generation.

Bases are right-handed and y-up: right = up x forward renormalized, so
right x up = forward. Pixel x grows toward `right`, pixel y grows downward
(toward -up). Panoramic cameras use the equirectangular mapping
theta = 2*pi*u - pi (azimuth about `up`), phi = pi/2 - pi*v (inclination).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass
class CameraModel:
    kind: str  # perspective | orthographic | panoramic
    position: np.ndarray  # mm
    look_at: np.ndarray  # mm
    up: np.ndarray | None = None
    width: int = 640
    height: int = 480
    fov_deg: float = 60.0
    ortho_half_height: float = 1500.0

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float)
        self.look_at = np.asarray(self.look_at, dtype=float)
        self.up = np.asarray(self.up if self.up is not None else [0.0, 1.0, 0.0], dtype=float)

    def basis(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        forward = self.look_at - self.position
        norm = np.linalg.norm(forward)
        if norm < 1e-12:
            forward = np.array([0.0, 0.0, 1.0])
            norm = 1.0
        forward = forward / norm
        up_hint = self.up
        if abs(float(np.dot(up_hint, forward))) > 0.999:
            up_hint = np.array([0.0, 0.0, 1.0])
        right = np.cross(up_hint, forward)
        right = right / np.linalg.norm(right)
        up = np.cross(forward, right)
        return right, up, forward


def primary_rays(
    camera: CameraModel,
    jitter: np.ndarray | None = None,
    pixels: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Origins and unit directions for raster pixels.

    `pixels` is an (N, 2) array of integer (x, y) raster coordinates; by
    default every pixel of the frame in row-major order. `jitter` holds the
    matching intra-pixel offsets in [0, 1)^2 (default: pixel centers).
    """
    w, h = camera.width, camera.height
    if pixels is None:
        ys, xs = np.mgrid[0:h, 0:w]
        pixels = np.stack([xs.reshape(-1), ys.reshape(-1)], axis=1)
    pixels = np.asarray(pixels, dtype=float)
    if jitter is None:
        jitter = np.full_like(pixels, 0.5, dtype=float)
    px = pixels[:, 0] + jitter[:, 0]
    py = pixels[:, 1] + jitter[:, 1]
    right, up, forward = camera.basis()

    if camera.kind == "panoramic":
        u = px / w
        v = py / h
        theta = 2.0 * math.pi * u - math.pi
        phi = math.pi / 2.0 - math.pi * v
        cos_phi = np.cos(phi)
        dirs = (
            (cos_phi * np.sin(theta))[:, None] * right
            + np.sin(phi)[:, None] * up
            + (cos_phi * np.cos(theta))[:, None] * forward
        )
        origins = np.broadcast_to(camera.position, dirs.shape).copy()
        return origins, _normalize(dirs)

    ndc_x = 2.0 * px / w - 1.0
    ndc_y = 1.0 - 2.0 * py / h
    if camera.kind == "perspective":
        tan_half = math.tan(math.radians(camera.fov_deg) / 2.0)
        dirs = (
            forward[None, :]
            + (ndc_x * tan_half)[:, None] * right
            + (ndc_y * tan_half * h / w)[:, None] * up
        )
        origins = np.broadcast_to(camera.position, dirs.shape).copy()
        return origins, _normalize(dirs)

    if camera.kind == "orthographic":
        half_h = camera.ortho_half_height
        half_w = half_h * w / h
        origins = (
            camera.position[None, :]
            + (ndc_x * half_w)[:, None] * right
            + (ndc_y * half_h)[:, None] * up
        )
        dirs = np.broadcast_to(forward, origins.shape).copy()
        return origins, dirs

    raise ValueError(f"unknown camera kind {camera.kind!r}")


def panoramic_pixel_of_direction(camera: CameraModel, dirs: np.ndarray) -> np.ndarray:
    """Continuous (x, y) raster coordinates hit by world-space directions;
    inverse of the equirectangular mapping in `primary_rays`."""
    right, up, forward = camera.basis()
    d = _normalize(np.atleast_2d(np.asarray(dirs, dtype=float)))
    xr = d @ right
    yu = d @ up
    zf = d @ forward
    theta = np.arctan2(xr, zf)
    phi = np.arcsin(np.clip(yu, -1.0, 1.0))
    u = (theta + math.pi) / (2.0 * math.pi)
    v = (math.pi / 2.0 - phi) / math.pi
    return np.stack([u * camera.width, v * camera.height], axis=1)


def _normalize(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def camera_from_entity(transform_position, transform_rotation, cam_component, width=None, height=None) -> CameraModel:
    """CameraModel for a scene camera entity: forward is local +z rotated by
    the entity's yaw-pitch-roll."""
    from .. import geometry

    rot = geometry.rotation_matrix(*transform_rotation)
    forward = rot @ np.array([0.0, 0.0, 1.0])
    position = np.asarray(transform_position, dtype=float)
    return CameraModel(
        kind=cam_component.model,
        position=position,
        look_at=position + forward * 1000.0,
        width=int(width or cam_component.image_width),
        height=int(height or cam_component.image_height),
        fov_deg=float(cam_component.fov_deg or 60.0),
        ortho_half_height=float(cam_component.ortho_half_height or 1500.0),
    )
