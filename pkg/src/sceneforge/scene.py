"""Scene representation: entities with typed components, optional sampling
distributions per component field, and whole-scene validation.

Lengths are millimeters, areas square meters, angles radians. A scene is a
plain value: pipeline code deep-copies it and mutates its private copy.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field, fields

import numpy as np

from . import geometry

ROOM_TYPES = ("bedroom", "living", "kitchen", "bath", "other")
LIGHT_TYPES = ("point", "area")
CAMERA_MODELS = ("perspective", "orthographic", "panoramic")
TRAJECTORY_KINDS = ("RANDOM", "KEYPOINTS")

MIN_COLOR_TEMP = 1000.0
MAX_COLOR_TEMP = 12000.0


class SceneError(ValueError):
    """Raised for operations on malformed scenes or descriptors."""


@dataclass
class Transform:
    position: list[float]  # x, y, z mm
    rotation: list[float] = field(default_factory=lambda: [0.0, 0.0, 0.0])  # yaw, pitch, roll
    scale: list[float] = field(default_factory=lambda: [1.0, 1.0, 1.0])


@dataclass
class MeshRef:
    asset_id: str
    category_id: int


@dataclass
class MaterialRef:
    material_id: str
    series_id: str


@dataclass
class Light:
    intensity: float  # lumens
    color_temperature: float  # kelvin
    light_type: str = "point"


@dataclass
class Camera:
    model: str = "perspective"
    fov_deg: float | None = 60.0
    ortho_half_height: float | None = None
    image_width: int = 640
    image_height: int = 480


@dataclass
class TrajectoryParams:
    fps: float
    speed: float  # mm/s
    height: float  # mm
    collision_padding: float  # mm
    kind: str = "RANDOM"
    duration: float = 5.0  # s
    keypoints: list[list[float]] | None = None


@dataclass
class SemanticLabel:
    category_id: int
    instance_id: int


Component = Transform | MeshRef | MaterialRef | Light | Camera | TrajectoryParams | SemanticLabel

_KIND_TO_CLASS = {
    "Transform": Transform,
    "MeshRef": MeshRef,
    "MaterialRef": MaterialRef,
    "Light": Light,
    "Camera": Camera,
    "TrajectoryParams": TrajectoryParams,
    "SemanticLabel": SemanticLabel,
}
_CLASS_TO_KIND = {v: k for k, v in _KIND_TO_CLASS.items()}

_JSON_TAGS = {
    "Transform": "transform",
    "MeshRef": "mesh_ref",
    "MaterialRef": "material_ref",
    "Light": "light",
    "Camera": "camera",
    "TrajectoryParams": "trajectory_params",
    "SemanticLabel": "semantic_label",
}
_TAGS_TO_KIND = {v: k for k, v in _JSON_TAGS.items()}


@dataclass
class DistributionDescriptor:
    kind: str  # uniform | gaussian | discrete | similarity
    params: dict

    def validate(self) -> None:
        p = self.params
        if self.kind == "uniform":
            lo = np.atleast_1d(np.asarray(p["lo"], dtype=float))
            hi = np.atleast_1d(np.asarray(p["hi"], dtype=float))
            if lo.shape != hi.shape or np.any(lo > hi):
                raise SceneError("uniform descriptor requires lo <= hi per dimension")
        elif self.kind == "gaussian":
            sigma = np.atleast_1d(np.asarray(p["sigma"], dtype=float))
            if np.any(sigma < 0):
                raise SceneError("gaussian descriptor requires sigma >= 0")
        elif self.kind == "discrete":
            weights = np.asarray(p["weights"], dtype=float)
            values = p["values"]
            if len(values) != len(weights) or np.any(weights < 0) or weights.sum() <= 0:
                raise SceneError("discrete descriptor needs weights >= 0 with positive sum")
        elif self.kind == "similarity":
            if int(p["k"]) < 1:
                raise SceneError("similarity descriptor requires k >= 1")
        else:
            raise SceneError(f"unknown descriptor kind {self.kind!r}")


@dataclass
class Entity:
    entity_id: str
    room_id: str | None = None
    components: dict[str, Component] = field(default_factory=dict)
    distributions: dict[str, DistributionDescriptor] = field(default_factory=dict)

    def get(self, kind: str) -> Component | None:
        return self.components.get(kind)

    def has(self, kind: str) -> bool:
        return kind in self.components


@dataclass
class Room:
    room_id: str
    corners: list[tuple[float, float]]  # (x, z) mm, CCW
    height: float  # mm
    room_type: str = "other"
    area: float | None = None  # m^2, derived from corners

    def __post_init__(self):
        if self.area is None:
            self.area = geometry.polygon_area_m2(self.corners)

    @property
    def corner_array(self) -> np.ndarray:
        return np.asarray(self.corners, dtype=float)


@dataclass
class SceneDocument:
    scene_id: str
    rooms: list[Room] = field(default_factory=list)
    entities: list[Entity] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def room(self, room_id: str) -> Room | None:
        for r in self.rooms:
            if r.room_id == room_id:
                return r
        return None

    def entity(self, entity_id: str) -> Entity | None:
        for e in self.entities:
            if e.entity_id == entity_id:
                return e
        return None

    def copy(self) -> "SceneDocument":
        return copy.deepcopy(self)


@dataclass
class Violation:
    kind: str
    where: str
    message: str


def validate_scene(scene: SceneDocument) -> list[Violation]:
    """Collect every invariant violation; an empty list means valid."""
    out: list[Violation] = []

    room_ids = [r.room_id for r in scene.rooms]
    if len(set(room_ids)) != len(room_ids):
        out.append(Violation("duplicate_id", scene.scene_id, "duplicate room ids"))
    for room in scene.rooms:
        where = f"{scene.scene_id}/{room.room_id}"
        if len(room.corners) < 3 or not geometry.is_simple_polygon(room.corners):
            out.append(Violation("bad_polygon", where, "room polygon must be simple"))
            continue
        if not geometry.is_ccw(room.corners):
            out.append(Violation("bad_polygon", where, "room polygon must be counter-clockwise"))
        expect = geometry.polygon_area_m2(room.corners)
        if room.area is None or abs(room.area - expect) > 1e-9 * max(1.0, expect):
            out.append(Violation("area_mismatch", where, f"area {room.area} != shoelace {expect}"))
        if room.height <= 0:
            out.append(Violation("bad_room", where, "room height must be positive"))
        if room.room_type not in ROOM_TYPES:
            out.append(Violation("bad_room", where, f"unknown room_type {room.room_type!r}"))

    entity_ids = [e.entity_id for e in scene.entities]
    seen: set[str] = set()
    for eid in entity_ids:
        if eid in seen:
            out.append(Violation("duplicate_id", f"{scene.scene_id}/{eid}", "duplicate entity id"))
        seen.add(eid)

    known_rooms = set(room_ids)
    instance_ids: dict[int, str] = {}
    for ent in scene.entities:
        where = f"{scene.scene_id}/{ent.entity_id}"
        if ent.room_id is not None and ent.room_id not in known_rooms:
            out.append(Violation("unknown_room", where, f"room_id {ent.room_id!r} not in scene"))
        if ent.has("MeshRef") and not ent.has("Transform"):
            out.append(Violation("missing_transform", where, "MeshRef requires a Transform"))
        light = ent.get("Light")
        if light is not None:
            if light.intensity <= 0:
                out.append(Violation("bad_component", where, "light intensity must be > 0"))
            if not MIN_COLOR_TEMP <= light.color_temperature <= MAX_COLOR_TEMP:
                out.append(Violation("bad_component", where, "color temperature out of range"))
            if light.light_type not in LIGHT_TYPES:
                out.append(Violation("bad_component", where, f"unknown light type {light.light_type!r}"))
        cam = ent.get("Camera")
        if cam is not None:
            if cam.model not in CAMERA_MODELS:
                out.append(Violation("bad_component", where, f"unknown camera model {cam.model!r}"))
            if cam.model == "perspective" and not (cam.fov_deg and 0.0 < cam.fov_deg < 180.0):
                out.append(Violation("bad_component", where, "perspective fov must lie in (0, 180)"))
            if cam.model == "orthographic" and not (cam.ortho_half_height and cam.ortho_half_height > 0):
                out.append(Violation("bad_component", where, "orthographic camera needs half height"))
            if cam.image_width < 1 or cam.image_height < 1:
                out.append(Violation("bad_component", where, "image dimensions must be >= 1"))
        label = ent.get("SemanticLabel")
        if label is not None and ent.has("MeshRef"):
            prev = instance_ids.get(label.instance_id)
            if prev is not None:
                out.append(
                    Violation("duplicate_instance", where, f"instance_id {label.instance_id} also on {prev}")
                )
            instance_ids[label.instance_id] = ent.entity_id
        traj = ent.get("TrajectoryParams")
        if traj is not None:
            if traj.kind not in TRAJECTORY_KINDS:
                out.append(Violation("bad_component", where, f"unknown trajectory kind {traj.kind!r}"))
            if traj.kind == "KEYPOINTS" and not traj.keypoints:
                out.append(Violation("bad_component", where, "KEYPOINTS trajectory needs keypoints"))
        for target, desc in ent.distributions.items():
            try:
                desc.validate()
                _target_spec(ent, target)
            except SceneError as exc:
                out.append(Violation("bad_descriptor", where, str(exc)))
    return out


# Numeric fields a uniform/gaussian descriptor may target: name -> (dims, legal lo, legal hi).
_NUMERIC_TARGETS = {
    "Transform.position": (3, -math.inf, math.inf),
    "Transform.rotation": (3, -math.inf, math.inf),
    "Light.intensity": (1, 0.0, math.inf),
    "Light.color_temperature": (1, MIN_COLOR_TEMP, MAX_COLOR_TEMP),
    "Camera.fov_deg": (1, 0.0, 180.0),
}
_DISCRETE_TARGETS = {"MaterialRef.material_id", "MaterialRef", "MeshRef.asset_id"}


def _target_spec(entity: Entity, target: str) -> tuple[str, str | None]:
    """Split 'Kind' or 'Kind.field' and verify the entity holds the component."""
    kind, _, fld = target.partition(".")
    if kind not in _KIND_TO_CLASS:
        raise SceneError(f"unknown component kind {kind!r}")
    if not entity.has(kind):
        raise SceneError(f"entity {entity.entity_id!r} has no {kind} component")
    if fld and fld not in {f.name for f in fields(_KIND_TO_CLASS[kind])}:
        raise SceneError(f"component {kind} has no field {fld!r}")
    return kind, fld or None


def attach_distribution(entity: Entity, target: str, descriptor: DistributionDescriptor) -> Entity:
    """Return a copy of the entity whose component (or component field)
    carries the descriptor. Target is 'Kind' or 'Kind.field'."""
    descriptor.validate()
    kind, fld = _target_spec(entity, target)
    key = f"{kind}.{fld}" if fld else kind
    if descriptor.kind in ("uniform", "gaussian"):
        spec = _NUMERIC_TARGETS.get(key)
        if spec is None:
            raise SceneError(f"{descriptor.kind} descriptor incompatible with {key}")
        dims, lo_legal, hi_legal = spec
        if descriptor.kind == "uniform":
            lo = np.atleast_1d(np.asarray(descriptor.params["lo"], dtype=float))
            hi = np.atleast_1d(np.asarray(descriptor.params["hi"], dtype=float))
            if lo.size not in (1, dims) or np.any(lo < lo_legal) or np.any(hi > hi_legal):
                raise SceneError(f"uniform range incompatible with {key}")
    elif descriptor.kind == "discrete":
        if key not in _DISCRETE_TARGETS:
            raise SceneError(f"discrete descriptor incompatible with {key}")
    elif descriptor.kind == "similarity":
        if kind != "MeshRef" or fld is not None:
            raise SceneError("similarity descriptor applies to MeshRef only")
    new = copy.deepcopy(entity)
    new.distributions[key] = descriptor
    return new


def sample_component(entity: Entity, component_kind: str, rng: np.random.Generator) -> Component:
    """Draw a fresh component value from the descriptor attached to it."""
    matches = {
        key: desc
        for key, desc in entity.distributions.items()
        if key == component_kind or key.startswith(component_kind + ".")
    }
    if not matches:
        raise SceneError(f"no descriptor attached to {component_kind} on {entity.entity_id!r}")
    comp = entity.get(component_kind)
    if comp is None:
        raise SceneError(f"entity {entity.entity_id!r} has no {component_kind} component")
    new = copy.deepcopy(comp)
    for key, desc in sorted(matches.items()):
        _, _, fld = key.partition(".")
        if desc.kind == "similarity":
            raise SceneError("similarity descriptors are sampled by replace_model, not sample_component")
        if desc.kind == "discrete":
            values = desc.params["values"]
            weights = np.asarray(desc.params["weights"], dtype=float)
            idx = int(rng.choice(len(values), p=weights / weights.sum()))
            if key == "MaterialRef":
                new.material_id = values[idx]
            else:
                setattr(new, fld, values[idx])
            continue
        dims, lo_legal, hi_legal = _NUMERIC_TARGETS[key]
        if desc.kind == "uniform":
            lo = np.broadcast_to(np.atleast_1d(np.asarray(desc.params["lo"], float)), (dims,))
            hi = np.broadcast_to(np.atleast_1d(np.asarray(desc.params["hi"], float)), (dims,))
            value = rng.uniform(lo, hi)
        else:
            mean = np.broadcast_to(np.atleast_1d(np.asarray(desc.params["mean"], float)), (dims,))
            sigma = np.broadcast_to(np.atleast_1d(np.asarray(desc.params["sigma"], float)), (dims,))
            value = np.clip(rng.normal(mean, sigma), lo_legal, hi_legal)
        if dims == 1:
            setattr(new, fld, float(value[0]))
        else:
            setattr(new, fld, [float(v) for v in value])
    return new


# ---------------------------------------------------------------------------
# JSON round trip (field names fixed by docs/scene_schema.md)

def component_to_json(comp: Component) -> dict:
    kind = _CLASS_TO_KIND[type(comp)]
    out: dict = {"type": _JSON_TAGS[kind]}
    for f in fields(comp):
        out[f.name] = getattr(comp, f.name)
    return out


def component_from_json(data: dict) -> Component:
    data = dict(data)
    kind = _TAGS_TO_KIND[data.pop("type")]
    return _KIND_TO_CLASS[kind](**data)


def scene_to_json(scene: SceneDocument) -> dict:
    return {
        "scene_id": scene.scene_id,
        "rooms": [
            {
                "room_id": r.room_id,
                "corners": [[float(x), float(z)] for x, z in r.corners],
                "height": r.height,
                "room_type": r.room_type,
                "area_m2": r.area,
            }
            for r in scene.rooms
        ],
        "entities": [
            {
                "entity_id": e.entity_id,
                "room_id": e.room_id,
                "components": [component_to_json(c) for _, c in sorted(e.components.items())],
                "distributions": {
                    key: {"kind": d.kind, "params": d.params}
                    for key, d in sorted(e.distributions.items())
                },
            }
            for e in scene.entities
        ],
        "meta": scene.meta,
    }


def scene_from_json(data: dict) -> SceneDocument:
    rooms = [
        Room(
            room_id=r["room_id"],
            corners=[(float(x), float(z)) for x, z in r["corners"]],
            height=float(r["height"]),
            room_type=r["room_type"],
            area=float(r["area_m2"]),
        )
        for r in data["rooms"]
    ]
    entities = []
    for e in data["entities"]:
        comps = {}
        for c in e["components"]:
            comp = component_from_json(c)
            comps[_CLASS_TO_KIND[type(comp)]] = comp
        dists = {
            key: DistributionDescriptor(kind=d["kind"], params=d["params"])
            for key, d in e.get("distributions", {}).items()
        }
        entities.append(
            Entity(entity_id=e["entity_id"], room_id=e.get("room_id"), components=comps, distributions=dists)
        )
    return SceneDocument(
        scene_id=data["scene_id"], rooms=rooms, entities=entities, meta=data.get("meta", {})
    )
