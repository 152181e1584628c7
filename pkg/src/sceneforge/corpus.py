"""Procedural mini-corpus: seeded generation of small house designs that
stand in for a commercial scene database during tests and demos."""

from __future__ import annotations

import math

import numpy as np

from . import geometry
from .catalog import AssetCatalog, CatalogError
from .rng import seed_for
from .scene import (
    Camera,
    Entity,
    Light,
    MaterialRef,
    MeshRef,
    Room,
    SceneDocument,
    SemanticLabel,
    Transform,
)

ROOM_TYPE_POOL = ["bedroom", "living", "kitchen", "bath", "other"]


def _room_polygon(rng: np.random.Generator, x_off: float) -> list[tuple[float, float]]:
    w = float(rng.uniform(3000, 6500))
    d = float(rng.uniform(3000, 6500))
    if rng.uniform() < 0.3 and w > 3600 and d > 3600:
        # L-shape: notch cut from the (x1, z1) corner
        nx = float(rng.uniform(1200, w / 2))
        nz = float(rng.uniform(1200, d / 2))
        return [
            (x_off, 0.0),
            (x_off + w, 0.0),
            (x_off + w, d - nz),
            (x_off + w - nx, d - nz),
            (x_off + w - nx, d),
            (x_off, d),
        ]
    return [(x_off, 0.0), (x_off + w, 0.0), (x_off + w, d), (x_off, d)]


def _place_footprint(rng, room: Room, half_x: float, half_z: float, yaw: float, tries: int = 60):
    """Uniform rejection-sample a center keeping the rotated footprint inside."""
    poly = room.corner_array
    lo = poly.min(axis=0)
    hi = poly.max(axis=0)
    for _ in range(tries):
        cx = float(rng.uniform(lo[0] + half_x, hi[0] - half_x))
        cz = float(rng.uniform(lo[1] + half_z, hi[1] - half_z))
        rect = geometry.oriented_rect((cx, cz), half_x, half_z, yaw)
        if geometry.polygon_contains_polygon(rect, poly):
            return cx, cz
    return None


def generate_scene(index: int, seed: int, catalog: AssetCatalog) -> SceneDocument:
    scene_id = f"scene_{seed:08x}_{index:05d}"
    rng = seed_for(seed, scene_id, "corpus")
    asset_ids = sorted(catalog.assets)
    if not asset_ids:
        raise CatalogError("cannot generate scenes from an empty catalog")

    n_rooms = int(rng.integers(1, 6))
    rooms: list[Room] = []
    x_off = 0.0
    for r in range(n_rooms):
        corners = _room_polygon(rng, x_off)
        x_off = max(c[0] for c in corners) + float(rng.uniform(100, 400))
        rooms.append(
            Room(
                room_id=f"room_{r}",
                corners=corners,
                height=float(rng.uniform(2600, 3200)),
                room_type=str(rng.choice(ROOM_TYPE_POOL)),
            )
        )

    entities: list[Entity] = []
    instance_counter = 1
    n_furniture = int(rng.integers(3, 26))
    supports: list[tuple[str, np.ndarray, np.ndarray]] = []  # (room_id, world aabb min, max)

    for f in range(n_furniture):
        room = rooms[int(rng.integers(len(rooms)))]
        asset = catalog.assets[asset_ids[int(rng.integers(len(asset_ids)))]]
        ext = asset.aabb_max - asset.aabb_min
        half_x, half_z = float(ext[0]) / 2, float(ext[2]) / 2
        yaw = float(rng.choice([0.0, math.pi / 2, math.pi, 3 * math.pi / 2])) if rng.uniform() < 0.6 else float(
            rng.uniform(0, 2 * math.pi)
        )
        if half_x * 2 > 2500 or half_z * 2 > 2500:
            yaw = 0.0  # keep big pieces axis-aligned so they fit
        spot = _place_footprint(rng, room, half_x, half_z, yaw)
        if spot is None:
            continue
        cx, cz = spot
        center_local = (asset.aabb_min + asset.aabb_max) / 2
        rot = geometry.rotate2(np.array([[center_local[0], center_local[2]]]), yaw)[0]
        pos_y = -float(asset.aabb_min[1])

        # Occasionally stack a small item on a previously placed slab
        if supports and ext[1] < 800 and half_x < 400 and rng.uniform() < 0.2:
            sup_room, smin, smax = supports[int(rng.integers(len(supports)))]
            if smax[1] - 0 < 2000 and (smax[0] - smin[0]) > 2 * half_x and (smax[2] - smin[2]) > 2 * half_z:
                cx = float((smin[0] + smax[0]) / 2)
                cz = float((smin[2] + smax[2]) / 2)
                pos_y = float(smax[1]) - float(asset.aabb_min[1])
                room = next(r for r in rooms if r.room_id == sup_room)

        position = [cx - float(rot[0]), pos_y, cz - float(rot[1])]
        try:
            material_id = catalog.sample_material(asset.category_id, rng)
            series_id = catalog.series_for_material(material_id)
        except CatalogError:
            material_id, series_id = "mat_default", "series_default"
        ent = Entity(
            entity_id=f"e{len(entities)}",
            room_id=room.room_id,
            components={
                "Transform": Transform(position=position, rotation=[yaw, 0.0, 0.0]),
                "MeshRef": MeshRef(asset_id=asset.asset_id, category_id=asset.category_id),
                "MaterialRef": MaterialRef(material_id=material_id, series_id=series_id),
                "SemanticLabel": SemanticLabel(category_id=asset.category_id, instance_id=instance_counter),
            },
        )
        instance_counter += 1
        entities.append(ent)
        world_min = np.array([cx - half_x, pos_y + float(asset.aabb_min[1]), cz - half_z])
        world_max = np.array([cx + half_x, pos_y + float(asset.aabb_max[1]), cz + half_z])
        if ext[1] > 300 and world_max[1] < 1400:
            supports.append((room.room_id, world_min, world_max))

    n_lights = int(rng.integers(1, 4))
    for li in range(n_lights):
        room = rooms[li % len(rooms)]
        poly = room.corner_array
        cx, cz = poly.mean(axis=0)
        entities.append(
            Entity(
                entity_id=f"e{len(entities)}",
                room_id=room.room_id,
                components={
                    "Transform": Transform(position=[float(cx), room.height - 200.0, float(cz)]),
                    "Light": Light(
                        intensity=float(rng.uniform(300, 1100)),
                        color_temperature=float(rng.uniform(2700, 6500)),
                        light_type="point" if rng.uniform() < 0.8 else "area",
                    ),
                },
            )
        )

    n_cameras = int(rng.integers(1, 3))
    for ci in range(n_cameras):
        room = rooms[int(rng.integers(len(rooms)))]
        poly = room.corner_array
        lo, hi = poly.min(axis=0), poly.max(axis=0)
        px = float(rng.uniform(lo[0] + 600, hi[0] - 600))
        pz = float(rng.uniform(lo[1] + 600, hi[1] - 600))
        cx, cz = poly.mean(axis=0)
        yaw = math.atan2(cx - px, cz - pz)
        entities.append(
            Entity(
                entity_id=f"e{len(entities)}",
                room_id=room.room_id,
                components={
                    "Transform": Transform(position=[px, float(rng.uniform(1400, 1700)), pz], rotation=[yaw, 0.0, 0.0]),
                    "Camera": Camera(model="perspective", fov_deg=float(rng.uniform(60, 90))),
                },
            )
        )

    return SceneDocument(
        scene_id=scene_id,
        rooms=rooms,
        entities=entities,
        meta={"designer": f"corpus_{seed:08x}", "room_count": n_rooms},
    )


def generate_corpus(n: int, seed: int, catalog: AssetCatalog) -> list[SceneDocument]:
    """n valid scenes, deterministic in seed."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return [generate_scene(i, seed, catalog) for i in range(n)]
