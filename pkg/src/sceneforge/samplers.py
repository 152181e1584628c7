"""Entity-level randomization: lights, materials, CAD model replacement,
transform perturbation, camera attributes, and pick-record export."""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import geometry
from .catalog import AssetCatalog
from .scene import Camera, DistributionDescriptor, Entity, Light, Room

LIGHT_MODES = {
    # mode: (intensity lo, hi) lumens, (temperature lo, hi) kelvin
    "day": ((200.0, 1200.0), (5000.0, 6500.0)),
    "night": ((50.0, 500.0), (2700.0, 4000.0)),
    "free": ((1.0, 2000.0), (1000.0, 12000.0)),
}

SUPPORT_SNAP_MM = 5.0


class SamplerError(RuntimeError):
    pass


def tune_light(light: Light, mode: str, rng: np.random.Generator) -> Light:
    """Resample both intensity and color temperature for the given mode."""
    intensity_range, temp_range = _mode_ranges(mode)
    return Light(
        intensity=float(rng.uniform(*intensity_range)),
        color_temperature=float(rng.uniform(*temp_range)),
        light_type=light.light_type,
    )


def tune_temp(light: Light, mode: str, rng: np.random.Generator) -> Light:
    _, temp_range = _mode_ranges(mode)
    return Light(
        intensity=light.intensity,
        color_temperature=float(rng.uniform(*temp_range)),
        light_type=light.light_type,
    )


def tune_intensity(light: Light, mode: str, rng: np.random.Generator) -> Light:
    intensity_range, _ = _mode_ranges(mode)
    return Light(
        intensity=float(rng.uniform(*intensity_range)),
        color_temperature=light.color_temperature,
        light_type=light.light_type,
    )


def _mode_ranges(mode: str):
    try:
        return LIGHT_MODES[mode]
    except KeyError:
        raise SamplerError(f"unknown lighting mode {mode!r}") from None


def replace_material(entity: Entity, catalog: AssetCatalog, rng: np.random.Generator) -> Entity:
    """Redraw the entity's MaterialRef from its category's series."""
    mesh = entity.get("MeshRef")
    mat = entity.get("MaterialRef")
    if mesh is None or mat is None:
        raise SamplerError(f"{entity.entity_id!r} needs MeshRef and MaterialRef")
    material_id = catalog.sample_material(mesh.category_id, rng)
    new = copy.deepcopy(entity)
    new.components["MaterialRef"].material_id = material_id
    new.components["MaterialRef"].series_id = catalog.series_for_material(material_id)
    return new


def world_aabb(entity: Entity, catalog: AssetCatalog) -> tuple[np.ndarray, np.ndarray]:
    """World-space AABB of the entity's placed asset geometry."""
    mesh = entity.get("MeshRef")
    tf = entity.get("Transform")
    if mesh is None or tf is None:
        raise SamplerError(f"{entity.entity_id!r} has no placed mesh")
    asset = catalog.assets[mesh.asset_id]
    corners = _box_corners(asset.aabb_min, asset.aabb_max)
    world = geometry.transform_points(corners, tf.position, tf.rotation, tf.scale)
    return world.min(axis=0), world.max(axis=0)


def _box_corners(bmin, bmax) -> np.ndarray:
    bmin = np.asarray(bmin, dtype=float)
    bmax = np.asarray(bmax, dtype=float)
    return np.array(
        [
            [x, y, z]
            for x in (bmin[0], bmax[0])
            for y in (bmin[1], bmax[1])
            for z in (bmin[2], bmax[2])
        ]
    )


def support_height(
    entity: Entity, others: list[Entity], catalog: AssetCatalog
) -> float:
    """Height the entity rests on: the top of a supporting entity's AABB when
    the current bottom sits within the snap threshold of one, else the floor."""
    bmin, bmax = world_aabb(entity, catalog)
    bottom = float(bmin[1])
    footprint = [(bmin[0], bmin[2]), (bmax[0], bmax[2])]
    for other in others:
        if other.entity_id == entity.entity_id or not other.has("MeshRef") or not other.has("Transform"):
            continue
        omin, omax = world_aabb(other, catalog)
        top = float(omax[1])
        if abs(bottom - top) > SUPPORT_SNAP_MM:
            continue
        overlap_x = min(footprint[1][0], omax[0]) - max(footprint[0][0], omin[0])
        overlap_z = min(footprint[1][1], omax[2]) - max(footprint[0][1], omin[2])
        if overlap_x > 0 and overlap_z > 0:
            return top
    return 0.0


def replace_model(
    entity: Entity,
    others: list[Entity],
    catalog: AssetCatalog,
    rng: np.random.Generator,
    k: int = 8,
) -> Entity:
    """Swap the CAD model for one of the k nearest same-category assets,
    keeping the footprint center and yaw and re-seating on the support."""
    mesh = entity.get("MeshRef")
    tf = entity.get("Transform")
    if mesh is None or tf is None:
        raise SamplerError(f"{entity.entity_id!r} needs MeshRef and Transform")
    desc = entity.distributions.get("MeshRef")
    if desc is not None and desc.kind == "similarity":
        k = int(desc.params["k"])
    neighbors = catalog.nearest_models(mesh.asset_id, k)
    candidates = [a for a in neighbors if catalog.assets[a].category_id == mesh.category_id]
    if not candidates:
        raise SamplerError(
            f"no same-category neighbor among {k} nearest of {mesh.asset_id!r}"
        )
    choice = candidates[int(rng.integers(len(candidates)))]

    old_min, old_max = world_aabb(entity, catalog)
    center_x = (old_min[0] + old_max[0]) / 2
    center_z = (old_min[2] + old_max[2]) / 2
    support_y = support_height(entity, others, catalog)

    new = copy.deepcopy(entity)
    new.components["MeshRef"].asset_id = choice
    asset = catalog.assets[choice]
    corners = _box_corners(asset.aabb_min, asset.aabb_max)
    rotated = geometry.transform_points(corners, [0.0, 0.0, 0.0], tf.rotation, tf.scale)
    rot_min = rotated.min(axis=0)
    rot_max = rotated.max(axis=0)
    new.components["Transform"].position = [
        float(center_x - (rot_min[0] + rot_max[0]) / 2),
        float(support_y - rot_min[1]),
        float(center_z - (rot_min[2] + rot_max[2]) / 2),
    ]
    return new


def sample_transform(
    entity: Entity,
    descriptor: DistributionDescriptor,
    rng: np.random.Generator,
    room: Room | None = None,
    catalog: AssetCatalog | None = None,
) -> Entity:
    """Perturb position (and yaw via a 4th dimension) by a uniform or
    gaussian offset, clamping the footprint inside the owning room."""
    tf = entity.get("Transform")
    if tf is None:
        raise SamplerError(f"{entity.entity_id!r} has no Transform")
    if descriptor.kind not in ("uniform", "gaussian"):
        raise SamplerError(f"{descriptor.kind} descriptor incompatible with transforms")
    descriptor.validate()
    if descriptor.kind == "uniform":
        lo = np.atleast_1d(np.asarray(descriptor.params["lo"], dtype=float))
        hi = np.atleast_1d(np.asarray(descriptor.params["hi"], dtype=float))
        offset = rng.uniform(lo, hi)
    else:
        mean = np.atleast_1d(np.asarray(descriptor.params["mean"], dtype=float))
        sigma = np.atleast_1d(np.asarray(descriptor.params["sigma"], dtype=float))
        offset = rng.normal(mean, sigma)
    if offset.size not in (3, 4):
        raise SamplerError("transform descriptor needs 3 dims (position) or 4 (position + yaw)")

    new = copy.deepcopy(entity)
    ntf = new.components["Transform"]
    dx, dy, dz = (float(offset[0]), float(offset[1]), float(offset[2]))
    if offset.size == 4:
        ntf.rotation[0] = float(ntf.rotation[0] + offset[3])

    if room is not None:
        t = _max_feasible_step(entity, (dx, dz), ntf.rotation[0], room, catalog)
        dx, dz = dx * t, dz * t
    ntf.position = [tf.position[0] + dx, tf.position[1] + dy, tf.position[2] + dz]
    return new


def _max_feasible_step(entity, dxz, yaw, room: Room, catalog: AssetCatalog | None) -> float:
    poly = room.corner_array
    tf = entity.get("Transform")
    mesh = entity.get("MeshRef")

    def ok(t: float) -> bool:
        cx = tf.position[0] + dxz[0] * t
        cz = tf.position[2] + dxz[1] * t
        if mesh is not None and catalog is not None:
            asset = catalog.assets[mesh.asset_id]
            ext = (asset.aabb_max - asset.aabb_min) / 2
            rect = geometry.oriented_rect((cx, cz), float(ext[0]), float(ext[2]), yaw)
            return geometry.polygon_contains_polygon(rect, poly)
        return geometry.point_in_polygon((cx, cz), poly)

    if ok(1.0):
        return 1.0
    lo_t, hi_t = 0.0, 1.0
    for _ in range(12):
        mid = (lo_t + hi_t) / 2
        if ok(mid):
            lo_t = mid
        else:
            hi_t = mid
    return lo_t


_CAMERA_ATTRS = {
    "imageWidth": "image_width",
    "imageHeight": "image_height",
    "fov": "fov_deg",
    "model": "model",
    "orthoHalfHeight": "ortho_half_height",
}


def set_camera_attr(entity: Entity, name: str, value) -> Entity:
    cam = entity.get("Camera")
    if cam is None:
        raise SamplerError(f"{entity.entity_id!r} has no Camera")
    attr = _CAMERA_ATTRS.get(name)
    if attr is None:
        raise SamplerError(f"unknown camera attribute {name!r}")
    if attr in ("image_width", "image_height"):
        iv = int(value)
        if iv != value or iv < 1:
            raise SamplerError(f"{name} must be a whole number >= 1")
        value = iv
    elif attr == "fov_deg":
        if not 0.0 < float(value) < 180.0:
            raise SamplerError("fov must lie in (0, 180)")
        value = float(value)
    elif attr == "model":
        if value not in ("perspective", "orthographic", "panoramic"):
            raise SamplerError(f"unknown camera model {value!r}")
    elif attr == "ortho_half_height":
        if float(value) <= 0:
            raise SamplerError("orthoHalfHeight must be positive")
        value = float(value)
    new = copy.deepcopy(entity)
    setattr(new.components["Camera"], attr, value)
    return new


@dataclass
class PickSink:
    """Accumulates pick records in execution order for one scene."""

    records: list[dict] = field(default_factory=list)

    def export(self, record: dict) -> None:
        if "type" not in record or "id" not in record:
            raise SamplerError("pick record needs 'type' and 'id' keys")
        try:
            json.dumps(record)
        except (TypeError, ValueError) as exc:
            raise SamplerError(f"pick record not serializable: {exc}") from exc
        self.records.append(record)

    def write(self, path) -> bool:
        """Write picks.json; no file at all when nothing was picked."""
        if not self.records:
            return False
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.records, fh, indent=1, sort_keys=True)
        return True


def default_camera() -> Camera:
    return Camera(model="perspective", fov_deg=60.0, image_width=640, image_height=480)


def yaw_towards(from_xz, to_xz) -> float:
    return math.atan2(to_xz[0] - from_xz[0], to_xz[1] - from_xz[1])
