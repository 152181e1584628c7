"""Flattens a scene document plus catalog into renderable triangle arrays.

Room shells (floor, ceiling, walls) become fixed-category objects with
instance ids allocated after the entities' own, so every visible surface
carries a nonzero instance id and a semantic category.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import geometry
from ..catalog import CAT_CEILING, CAT_FLOOR, CAT_WALL, AssetCatalog
from ..scene import SceneDocument
from .bvh import Bvh, build_bvh

STRUCTURE_COLORS = {
    CAT_FLOOR: (0.55, 0.50, 0.45),
    CAT_WALL: (0.85, 0.85, 0.82),
    CAT_CEILING: (0.95, 0.95, 0.95),
}
DEFAULT_ENTITY_COLOR = (0.6, 0.6, 0.6)


@dataclass
class RenderScene:
    v0: np.ndarray  # (N, 3)
    e1: np.ndarray
    e2: np.ndarray
    tri_object: np.ndarray  # (N,) index into the per-object tables
    obj_semantic: np.ndarray  # (O,) uint16 category ids
    obj_instance: np.ndarray  # (O,) uint16 instance ids
    obj_color: np.ndarray  # (O, 3) float base colors
    light_positions: np.ndarray  # (L, 3) mm
    light_intensities: np.ndarray  # (L,) lumens
    bvh: Bvh = field(repr=False, default=None)

    def __post_init__(self):
        if self.bvh is None:
            self.bvh = build_bvh(self.v0, self.e1, self.e2)

    @property
    def n_triangles(self) -> int:
        return len(self.v0)

    def instance_semantic_table(self) -> dict[int, int]:
        return {int(i): int(s) for i, s in zip(self.obj_instance, self.obj_semantic)}


def build_render_scene(doc: SceneDocument, catalog: AssetCatalog) -> RenderScene:
    tris: list[np.ndarray] = []
    tri_object: list[np.ndarray] = []
    semantics: list[int] = []
    instances: list[int] = []
    colors: list[tuple[float, float, float]] = []

    used_instances = [
        e.get("SemanticLabel").instance_id
        for e in doc.entities
        if e.has("SemanticLabel") and e.has("MeshRef")
    ]
    next_instance = max(used_instances, default=0) + 1

    def add_object(triangles: np.ndarray, semantic: int, instance: int, color) -> None:
        if len(triangles) == 0:
            return
        obj = len(semantics)
        tris.append(np.asarray(triangles, dtype=float))
        tri_object.append(np.full(len(triangles), obj, dtype=np.int64))
        semantics.append(semantic)
        instances.append(instance)
        colors.append(tuple(color))

    for ent in sorted(doc.entities, key=lambda e: e.entity_id):
        mesh = ent.get("MeshRef")
        tf = ent.get("Transform")
        if mesh is None or tf is None:
            continue
        asset = catalog.assets.get(mesh.asset_id)
        if asset is None:
            continue
        placed = geometry.transform_points(
            asset.triangles.reshape(-1, 3), tf.position, tf.rotation, tf.scale
        ).reshape(-1, 3, 3)
        label = ent.get("SemanticLabel")
        if label is not None:
            semantic, instance = label.category_id, label.instance_id
        else:
            semantic, instance = mesh.category_id, next_instance
            next_instance += 1
        mat = ent.get("MaterialRef")
        color = DEFAULT_ENTITY_COLOR
        if mat is not None:
            try:
                color = catalog.material(mat.material_id).base_color
            except Exception:
                color = DEFAULT_ENTITY_COLOR
        add_object(placed, semantic, instance, color)

    for room in sorted(doc.rooms, key=lambda r: r.room_id):
        poly = room.corner_array
        tri_idx = geometry.triangulate_polygon(poly)
        floor = []
        ceiling = []
        for a, b, c in tri_idx:
            pa, pb, pc = poly[a], poly[b], poly[c]
            floor.append([[pa[0], 0.0, pa[1]], [pb[0], 0.0, pb[1]], [pc[0], 0.0, pc[1]]])
            h = room.height
            ceiling.append([[pa[0], h, pa[1]], [pc[0], h, pc[1]], [pb[0], h, pb[1]]])
        add_object(np.asarray(floor), CAT_FLOOR, next_instance, STRUCTURE_COLORS[CAT_FLOOR])
        next_instance += 1
        add_object(np.asarray(ceiling), CAT_CEILING, next_instance, STRUCTURE_COLORS[CAT_CEILING])
        next_instance += 1
        walls = []
        n = len(poly)
        for i in range(n):
            a, b = poly[i], poly[(i + 1) % n]
            h = room.height
            p00 = [a[0], 0.0, a[1]]
            p01 = [a[0], h, a[1]]
            p10 = [b[0], 0.0, b[1]]
            p11 = [b[0], h, b[1]]
            walls.append([p00, p10, p11])
            walls.append([p00, p11, p01])
        add_object(np.asarray(walls), CAT_WALL, next_instance, STRUCTURE_COLORS[CAT_WALL])
        next_instance += 1

    lights_pos = []
    lights_int = []
    for ent in sorted(doc.entities, key=lambda e: e.entity_id):
        light = ent.get("Light")
        tf = ent.get("Transform")
        if light is None or tf is None:
            continue
        lights_pos.append(list(tf.position))
        lights_int.append(light.intensity)

    if tris:
        all_tris = np.concatenate(tris)
        all_obj = np.concatenate(tri_object)
    else:
        all_tris = np.zeros((0, 3, 3))
        all_obj = np.zeros(0, dtype=np.int64)
    v0 = all_tris[:, 0, :]
    e1 = all_tris[:, 1, :] - v0
    e2 = all_tris[:, 2, :] - v0
    return RenderScene(
        v0=v0,
        e1=e1,
        e2=e2,
        tri_object=all_obj,
        obj_semantic=np.asarray(semantics, dtype=np.uint16),
        obj_instance=np.asarray(instances, dtype=np.uint16),
        obj_color=np.asarray(colors, dtype=float).reshape(-1, 3),
        light_positions=np.asarray(lights_pos, dtype=float).reshape(-1, 3),
        light_intensities=np.asarray(lights_int, dtype=float),
    )
