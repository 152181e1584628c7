"""Tree-walking interpreter for pipeline scripts.

Each scene execution owns a private StageContext; scene/entity stages see
a world view over the working scene document, the pixel stage sees only
rendered channels through an ImageHandler. All randomness flows through
the context's stream. `skip` anywhere filters the scene with code 7.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .. import layout as layout_mod
from .. import pixels as pixels_mod
from .. import samplers
from ..catalog import AssetCatalog, CatalogError
from ..geometry import oriented_rect, point_in_polygon, polygon_contains_polygon, rotate2
from ..render.framesio import load_channel, save_rgb, save_u16
from ..scene import (
    DistributionDescriptor,
    SceneDocument,
    SceneError,
    TrajectoryParams,
    attach_distribution,
)
from ..trajectory import RoamSpace, TrajectoryConfig, TrajectoryError, generate_trajectory
from . import ast
from .ast import Diagnostic
from .check import BUILTINS

FILTER_CODE = 7


class DslRuntimeError(RuntimeError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.diagnostic = Diagnostic(message, line, col)


class _SkipSignal(Exception):
    pass


@dataclass
class StageOutcome:
    status: str  # completed | filtered
    code: int | None = None

    @property
    def filtered(self) -> bool:
        return self.status == "filtered"


@dataclass
class FrameValue:
    data: np.ndarray

    @property
    def kind(self) -> str:
        return "u8" if self.data.ndim == 3 else "u16"

    def __eq__(self, other):
        return isinstance(other, FrameValue) and np.array_equal(self.data, other.data)


class WorldView:
    """Read surface the scene and entity stages iterate over."""

    def __init__(self, scene: SceneDocument, catalog: AssetCatalog):
        self._scene = scene
        self._catalog = catalog

    @property
    def rooms(self) -> list[dict]:
        return [
            {
                "id": r.room_id,
                "room_id": r.room_id,
                "area": float(r.area),
                "height": float(r.height),
                "room_type": r.room_type,
                "corners": [{"x": float(x), "y": 0.0, "z": float(z)} for x, z in r.corners],
            }
            for r in self._scene.rooms
        ]

    @property
    def instances(self) -> list[dict]:
        out = []
        for e in self._scene.entities:
            mesh = e.get("MeshRef")
            tf = e.get("Transform")
            if mesh is None or tf is None:
                continue
            mat = e.get("MaterialRef")
            out.append(
                {
                    "id": e.entity_id,
                    "label_name": self._catalog and _base_name(self._catalog, mesh.category_id),
                    "category_id": float(mesh.category_id),
                    "room_id": e.room_id,
                    "asset_id": mesh.asset_id,
                    "material_id": mat.material_id if mat else None,
                    "position": [float(v) for v in tf.position],
                    "yaw": float(tf.rotation[0]),
                }
            )
        return out

    @property
    def lights(self) -> list[dict]:
        out = []
        for e in self._scene.entities:
            light = e.get("Light")
            if light is None:
                continue
            tf = e.get("Transform")
            out.append(
                {
                    "id": e.entity_id,
                    "intensity": float(light.intensity),
                    "color_temperature": float(light.color_temperature),
                    "light_type": light.light_type,
                    "room_id": e.room_id,
                    "position": [float(v) for v in tf.position] if tf else [0.0, 0.0, 0.0],
                }
            )
        return out

    @property
    def cameras(self) -> list[dict]:
        out = []
        for e in self._scene.entities:
            cam = e.get("Camera")
            if cam is None:
                continue
            tf = e.get("Transform")
            out.append(
                {
                    "id": e.entity_id,
                    "model": cam.model,
                    "fov": float(cam.fov_deg) if cam.fov_deg is not None else None,
                    "image_width": float(cam.image_width),
                    "image_height": float(cam.image_height),
                    "room_id": e.room_id,
                    "position": [float(v) for v in tf.position] if tf else [0.0, 0.0, 0.0],
                }
            )
        return out


def _base_name(catalog: AssetCatalog, category_id: int) -> str:
    from ..catalog import base_of_category

    return base_of_category(int(category_id))


class ImageHandler:
    """Channel file access for the pixel stage, scoped to one scene's views."""

    def __init__(self, scene_dir: str | Path, view_ids: list[str]):
        self.scene_dir = Path(scene_dir)
        self._views = list(view_ids)

    def view_ids(self) -> list[str]:
        return list(self._views)

    def path(self, view_id: str, name: str) -> Path:
        return self.scene_dir / view_id / name

    def load(self, view_id: str, name: str) -> np.ndarray | None:
        p = self.path(view_id, name)
        if not p.exists():
            return None
        return load_channel(p)

    def save(self, view_id: str, name: str, array: np.ndarray) -> str:
        p = self.path(view_id, name)
        p.parent.mkdir(parents=True, exist_ok=True)
        if array.ndim == 3:
            save_rgb(p, array)
        else:
            save_u16(p, array)
        return str(p)


class StageContext:
    """Execution context for one (scene, stage) cell.

    Scene/entity contexts carry `scene` + `world`; the pixel context only
    carries `image_handler`, so pixel scripts cannot reach scene geometry.
    """

    def __init__(
        self,
        stage: str,
        rng: np.random.Generator,
        catalog: AssetCatalog,
        scene: SceneDocument | None = None,
        image_handler: ImageHandler | None = None,
        layout_config: layout_mod.LayoutConfig | None = None,
        trajectory_config: TrajectoryConfig | None = None,
        noise_config: pixels_mod.NoiseConfig | None = None,
    ):
        self.stage = stage
        self.rng = rng
        self.catalog = catalog
        self.picks = samplers.PickSink()
        self.trajectories = []
        self.layout_config = layout_config or layout_mod.LayoutConfig()
        self.trajectory_config = trajectory_config or TrajectoryConfig()
        self.noise_config = noise_config or pixels_mod.NoiseConfig()
        if stage == "pixel":
            if image_handler is None:
                raise ValueError("pixel stage needs an image handler")
            self.image_handler = image_handler
        else:
            if scene is None:
                raise ValueError(f"{stage} stage needs a scene")
            self.scene = scene
            self.world = WorldView(scene, catalog)


def execute_stage(script: ast.PipelineScript, stage_kind: str, ctx: StageContext) -> StageOutcome:
    block = script.stage(stage_kind)
    if block is None:
        return StageOutcome("completed")
    interp = _Interp(ctx)
    try:
        for stmt in block.body:
            interp.exec_stmt(stmt)
    except _SkipSignal:
        return StageOutcome("filtered", FILTER_CODE)
    return StageOutcome("completed")


def _fail(node, message: str):
    raise DslRuntimeError(message, getattr(node, "line", 0), getattr(node, "col", 0))


class _Interp:
    def __init__(self, ctx: StageContext):
        self.ctx = ctx
        self.env: dict[str, object] = {}
        if ctx.stage in ("scene", "entity"):
            self.env["world"] = ctx.world

    # -- statements -----------------------------------------------------------

    def exec_stmt(self, stmt) -> None:
        if isinstance(stmt, ast.Let):
            self.env[stmt.name] = self.eval(stmt.expr)
        elif isinstance(stmt, ast.Assign):
            value = self.eval(stmt.expr)
            target = stmt.target
            if isinstance(target, ast.Name):
                if target.ident not in self.env:
                    _fail(target, f"assignment to undefined name {target.ident!r}")
                self.env[target.ident] = value
            else:
                obj = self.eval(target.obj)
                if isinstance(obj, dict):
                    obj[target.name] = value
                elif isinstance(obj, WorldView):
                    _fail(target, "world collections are read-only; use builtins to mutate")
                else:
                    _fail(target, f"cannot assign field on {type(obj).__name__}")
        elif isinstance(stmt, ast.Skip):
            raise _SkipSignal()
        elif isinstance(stmt, ast.If):
            cond = self.eval(stmt.cond)
            if not isinstance(cond, bool):
                _fail(stmt.cond, "if condition must be a boolean")
            branch = stmt.then if cond else (stmt.orelse or [])
            for s in branch:
                self.exec_stmt(s)
        elif isinstance(stmt, ast.For):
            iterable = self.eval(stmt.iterable)
            if not isinstance(iterable, list):
                _fail(stmt.iterable, "for-in iterates lists only")
            snapshot = list(iterable)
            for item in snapshot:
                self.env[stmt.var] = item
                for s in stmt.body:
                    self.exec_stmt(s)
        elif isinstance(stmt, ast.ExprStmt):
            self.eval(stmt.expr)
        else:
            _fail(stmt, f"cannot execute {type(stmt).__name__}")

    # -- expressions ------------------------------------------------------------

    def eval(self, node):
        if isinstance(node, ast.Number):
            return float(node.value)
        if isinstance(node, ast.String):
            return node.value
        if isinstance(node, ast.Bool):
            return node.value
        if isinstance(node, ast.Name):
            if node.ident not in self.env:
                _fail(node, f"unknown name {node.ident!r}")
            return self.env[node.ident]
        if isinstance(node, ast.ListLit):
            return [self.eval(item) for item in node.items]
        if isinstance(node, ast.RecordLit):
            return {key: self.eval(value) for key, value in node.fields}
        if isinstance(node, ast.FieldAccess):
            return self.field(node)
        if isinstance(node, ast.BinOp):
            return self.binop(node)
        if isinstance(node, ast.UnaryOp):
            operand = self.eval(node.operand)
            if node.op == "-":
                if not isinstance(operand, float):
                    _fail(node, "unary minus needs a number")
                return -operand
            if not isinstance(operand, bool):
                _fail(node, "'not' needs a boolean")
            return not operand
        if isinstance(node, ast.Call):
            return self.call(node)
        _fail(node, f"cannot evaluate {type(node).__name__}")

    def field(self, node: ast.FieldAccess):
        obj = self.eval(node.obj)
        if isinstance(obj, WorldView):
            if node.name in ("rooms", "instances", "lights", "cameras"):
                return getattr(obj, node.name)
            _fail(node, f"world has no collection {node.name!r}")
        if isinstance(obj, dict):
            if node.name not in obj:
                _fail(node, f"unknown field {node.name!r}")
            return obj[node.name]
        _fail(node, f"{type(obj).__name__} has no fields")

    def binop(self, node: ast.BinOp):
        op = node.op
        if op in ("and", "or"):
            left = self.eval(node.left)
            if not isinstance(left, bool):
                _fail(node.left, f"'{op}' needs booleans")
            if op == "and" and not left:
                return False
            if op == "or" and left:
                return True
            right = self.eval(node.right)
            if not isinstance(right, bool):
                _fail(node.right, f"'{op}' needs booleans")
            return right
        left = self.eval(node.left)
        right = self.eval(node.right)
        if op == "==":
            return left == right
        if op == "!=":
            return left != right
        if op == "+":
            if isinstance(left, float) and isinstance(right, float):
                return left + right
            if isinstance(left, str) and isinstance(right, str):
                return left + right
            if isinstance(left, list) and isinstance(right, list):
                return left + right
            _fail(node, "'+' needs two numbers, two strings, or two lists")
        if op in ("-", "*", "/"):
            if not (isinstance(left, float) and isinstance(right, float)):
                _fail(node, f"'{op}' needs numbers")
            if op == "-":
                return left - right
            if op == "*":
                return left * right
            if right == 0.0:
                _fail(node, "division by zero")
            return left / right
        if op in ("<", "<=", ">", ">="):
            if not (isinstance(left, float) and isinstance(right, float)):
                _fail(node, f"'{op}' compares numbers")
            return {"<": left < right, "<=": left <= right, ">": left > right, ">=": left >= right}[op]
        _fail(node, f"unknown operator {op!r}")

    # -- builtin dispatch ----------------------------------------------------------

    def call(self, node: ast.Call):
        if isinstance(node.func, ast.Name):
            name, receiver = node.func.ident, None
        elif isinstance(node.func, ast.FieldAccess):
            name = node.func.name
            receiver = self.eval(node.func.obj)
        else:
            _fail(node, "only builtins can be called")
        spec = BUILTINS.get(name)
        if spec is None:
            _fail(node, f"unknown builtin {name!r}")
        if spec.stage != self.ctx.stage:
            _fail(node, f"builtin {name!r} belongs to the {spec.stage} stage")
        if name == "map_pixels":
            return self._map_pixels(node)
        args = [self.eval(a) for a in node.args]
        named = {}
        for key, value in node.named:
            named[key] = self.eval(value)
        handler = getattr(self, f"_b_{name}")
        return handler(node, receiver, args, named)

    # -- shared helpers ----------------------------------------------------------

    def _int(self, node, value, what: str) -> int:
        if isinstance(value, float) and value.is_integer():
            return int(value)
        if isinstance(value, int):
            return value
        _fail(node, f"{what} must be a whole number, got {value!r}")

    def _entity_for(self, node, receiver, args, named, needs: str):
        target = receiver
        if target is None and args:
            target = args[0]
        if target is None:
            target = named.get("id")
        if isinstance(target, dict):
            target = target.get("id")
        if not isinstance(target, str):
            _fail(node, f"{needs} needs an entity record or id")
        ent = self.ctx.scene.entity(target)
        if ent is None:
            _fail(node, f"unknown entity {target!r}")
        return ent

    def _replace_entity(self, old, new) -> None:
        ents = self.ctx.scene.entities
        for i, e in enumerate(ents):
            if e.entity_id == old.entity_id:
                ents[i] = new
                return

    # -- scene-stage builtins ----------------------------------------------------

    def _b_count(self, node, receiver, args, named):
        target = receiver if receiver is not None else args[0]
        if isinstance(target, (list, str)):
            return float(len(target))
        _fail(node, "count takes a list or string")

    def _b_randomize_layout(self, node, receiver, args, named):
        target = receiver if receiver is not None else (args[0] if args else None)
        if isinstance(target, dict):
            target = target.get("room_id") or target.get("id")
        room = self.ctx.scene.room(target) if isinstance(target, str) else None
        if room is None:
            _fail(node, f"unknown room {target!r}")
        iterations = None
        if "iterations" in named:
            iterations = self._int(node, named["iterations"], "iterations")
            if iterations < 0:
                _fail(node, "iterations must be >= 0")
        poly = room.corner_array
        items = []
        ents = []
        for e in self.ctx.scene.entities:
            if e.room_id != room.room_id or not e.has("MeshRef") or not e.has("Transform"):
                continue
            if e.has("Camera") or e.has("Light"):
                continue
            mesh = e.get("MeshRef")
            tf = e.get("Transform")
            asset = self.ctx.catalog.assets.get(mesh.asset_id)
            if asset is None:
                continue
            half = (asset.aabb_max - asset.aabb_min) / 2.0
            center_local = (asset.aabb_min + asset.aabb_max) / 2.0
            yaw = float(tf.rotation[0])
            offset = rotate2(np.array([[center_local[0], center_local[2]]]), yaw)[0]
            center = (tf.position[0] + float(offset[0]), tf.position[2] + float(offset[1]))
            rect = oriented_rect(center, float(half[0]), float(half[2]), yaw)
            if not polygon_contains_polygon(rect, poly):
                continue  # out-of-room furniture is left untouched
            items.append(
                layout_mod.FurnitureItem(
                    entity_id=e.entity_id,
                    position=center,
                    yaw=yaw,
                    half_x=float(half[0]),
                    half_z=float(half[2]),
                    category=_base_name(self.ctx.catalog, mesh.category_id),
                )
            )
            ents.append(e)
        if not items:
            return None
        state = layout_mod.LayoutState(room=poly, items=items)
        best = layout_mod.randomize_layout(state, self.ctx.rng, iterations, self.ctx.layout_config)
        for e, item in zip(ents, best.items):
            mesh = e.get("MeshRef")
            tf = e.get("Transform")
            asset = self.ctx.catalog.assets[mesh.asset_id]
            center_local = (asset.aabb_min + asset.aabb_max) / 2.0
            offset = rotate2(np.array([[center_local[0], center_local[2]]]), item.yaw)[0]
            tf.position[0] = item.position[0] - float(offset[0])
            tf.position[2] = item.position[1] - float(offset[1])
            tf.rotation[0] = item.yaw
        return None

    # -- entity-stage builtins ------------------------------------------------------

    def _b_replace_model(self, node, receiver, args, named):
        ent = self._entity_for(node, receiver, args, named, "replace_model")
        k = self._int(node, named["k"], "k") if "k" in named else 8
        try:
            new = samplers.replace_model(ent, self.ctx.scene.entities, self.ctx.catalog, self.ctx.rng, k=k)
        except (samplers.SamplerError, CatalogError, KeyError) as exc:
            _fail(node, f"replace_model failed: {exc}")
        self._replace_entity(ent, new)
        return None

    def _b_replace_material(self, node, receiver, args, named):
        ent = self._entity_for(node, receiver, args, named, "replace_material")
        try:
            new = samplers.replace_material(ent, self.ctx.catalog, self.ctx.rng)
        except (samplers.SamplerError, CatalogError) as exc:
            _fail(node, f"replace_material failed: {exc}")
        self._replace_entity(ent, new)
        return None

    def _tuned(self, node, receiver, args, named, fn):
        ent = self._entity_for(node, receiver, args, named, "light tuning")
        light = ent.get("Light")
        if light is None:
            _fail(node, f"{ent.entity_id!r} has no Light component")
        mode = named.get("mode", "free")
        try:
            ent.components["Light"] = fn(light, mode, self.ctx.rng)
        except samplers.SamplerError as exc:
            _fail(node, str(exc))
        return None

    def _b_tune_temp(self, node, receiver, args, named):
        return self._tuned(node, receiver, args, named, samplers.tune_temp)

    def _b_tune_intensity(self, node, receiver, args, named):
        return self._tuned(node, receiver, args, named, samplers.tune_intensity)

    def _b_set_attr(self, node, receiver, args, named):
        values = ([receiver] if receiver is not None else []) + args
        if len(values) != 3:
            _fail(node, "set_attr takes (entity, name, value)")
        ent = self._entity_for(node, values[0], [], {}, "set_attr")
        name, value = values[1], values[2]
        if not isinstance(name, str):
            _fail(node, "attribute name must be a string")
        try:
            new = samplers.set_camera_attr(ent, name, value)
        except samplers.SamplerError as exc:
            _fail(node, str(exc))
        self._replace_entity(ent, new)
        return None

    def _b_add_trajectory(self, node, receiver, args, named):
        cam_target = receiver if receiver is not None else (args[0] if args else named.get("camera"))
        ent = self._entity_for(node, cam_target, [], {}, "add_trajectory")
        if not ent.has("Camera"):
            _fail(node, f"{ent.entity_id!r} has no Camera component")
        traj_id = named.get("id", f"traj_{ent.entity_id}")
        keypoints = named.get("keypoints")
        if keypoints is not None:
            keypoints = [[float(v) for v in p] for p in keypoints]
        params = TrajectoryParams(
            fps=float(named.get("fps", 3.0)),
            speed=float(named.get("speed", 1000.0)),
            height=float(named.get("height", 1500.0)),
            collision_padding=float(named.get("collision_padding", 300.0)),
            kind=str(named.get("kind", "RANDOM")),
            duration=float(named.get("duration", 5.0)),
            keypoints=keypoints,
        )
        if params.kind not in ("RANDOM", "KEYPOINTS"):
            _fail(node, f"unknown trajectory kind {params.kind!r}")
        ent.components["TrajectoryParams"] = params
        space = self._roam_space(node, ent)
        try:
            result = generate_trajectory(traj_id, params, space, self.ctx.rng, self.ctx.trajectory_config)
        except TrajectoryError as exc:
            _fail(node, str(exc))
        result.camera_entity = ent.entity_id
        self.ctx.trajectories.append(result)
        return None

    def _roam_space(self, node, ent) -> RoamSpace:
        scene = self.ctx.scene
        room = scene.room(ent.room_id) if ent.room_id else None
        if room is None:
            tf = ent.get("Transform")
            if tf is not None:
                for r in scene.rooms:
                    if point_in_polygon((tf.position[0], tf.position[2]), r.corner_array):
                        room = r
                        break
        if room is None:
            if not scene.rooms:
                _fail(node, "scene has no rooms to roam")
            room = scene.rooms[0]
        obstacles = []
        for other in scene.entities:
            if other.room_id == room.room_id and other.has("MeshRef") and other.has("Transform"):
                try:
                    obstacles.append(samplers.world_aabb(other, self.ctx.catalog))
                except (samplers.SamplerError, KeyError):
                    continue
        return RoamSpace(room_polygon=room.corner_array, ceiling=room.height, obstacles=obstacles)

    def _b_pick(self, node, receiver, args, named):
        try:
            self.ctx.picks.export(dict(named))
        except samplers.SamplerError as exc:
            _fail(node, str(exc))
        return None

    def _b_attach_distribution(self, node, receiver, args, named):
        ent = self._entity_for(node, receiver, args, named, "attach_distribution")
        component = named.get("component")
        kind = named.get("kind")
        if not isinstance(component, str) or not isinstance(kind, str):
            _fail(node, "attach_distribution needs component: and kind: strings")
        params = {}
        for key in ("lo", "hi", "mean", "sigma", "values", "weights"):
            if key in named:
                params[key] = named[key]
        if "k" in named:
            params["k"] = self._int(node, named["k"], "k")
        try:
            new = attach_distribution(ent, component, DistributionDescriptor(kind=kind, params=params))
        except SceneError as exc:
            _fail(node, str(exc))
        self._replace_entity(ent, new)
        return None

    # -- pixel-stage builtins ---------------------------------------------------------

    def _b_gen_depth(self, node, receiver, args, named):
        model = self._int(node, named["noise"], "noise model")
        if not 0 <= model <= 4:
            _fail(node, f"noise model must be 0..4, got {model}")
        overrides = {k: float(v) for k, v in named.items() if k != "noise"}
        try:
            cfg = dataclasses.replace(self.ctx.noise_config, **overrides)
            cfg.validate()
        except (TypeError, ValueError) as exc:
            _fail(node, f"bad noise parameters: {exc}")
        ih = self.ctx.image_handler
        for view in ih.view_ids():
            depth = ih.load(view, "camera_depth.png")
            if depth is None:
                continue
            noisy = pixels_mod.apply_noise(depth.astype(np.float64), model, self.ctx.rng, cfg)
            ih.save(view, "camera_depth_noisy.png", np.clip(np.rint(noisy), 0, 65535).astype(np.uint16))
        return None

    def _b_remap_labels(self, node, receiver, args, named):
        mapping = named.get("mapping")
        if mapping is None and args:
            mapping = args[0]
        if not isinstance(mapping, str):
            _fail(node, "remap_labels needs a mapping name")
        ih = self.ctx.image_handler
        for view in ih.view_ids():
            semantic = ih.load(view, "camera_semantic.png")
            if semantic is None:
                continue
            try:
                remapped = pixels_mod.remap_labels(semantic, mapping, self.ctx.catalog)
            except CatalogError as exc:
                _fail(node, str(exc))
            ih.save(view, f"camera_semantic_{mapping}.png", remapped.astype(np.uint16))
        return None

    def _b_load_images(self, node, receiver, args, named):
        name = args[0]
        if not isinstance(name, str):
            _fail(node, "load_images needs a file name")
        out = []
        ih = self.ctx.image_handler
        for view in ih.view_ids():
            data = ih.load(view, name)
            if data is None:
                continue
            out.append({"camera_id": view, "image": FrameValue(data)})
        return out

    def _b_save_files(self, node, receiver, args, named):
        camera_id = args[0] if args else None
        if not isinstance(camera_id, str):
            _fail(node, "save_files needs a camera id")
        content = named.get("content", args[1] if len(args) > 1 else None)
        if not isinstance(content, FrameValue):
            _fail(node, "save_files needs content: an image value")
        name = named.get("name", "custom.png")
        if not isinstance(name, str) or not name or "/" in name or "\\" in name or ".." in name:
            _fail(node, f"bad output file name {name!r}")
        if camera_id not in self.ctx.image_handler.view_ids():
            _fail(node, f"unknown camera id {camera_id!r}")
        self.ctx.image_handler.save(camera_id, name, content.data)
        return None

    def _map_pixels(self, node: ast.Call):
        if len(node.args) != 2:
            _fail(node, "map_pixels takes (frame, expression)")
        frame = self.eval(node.args[0])
        if not isinstance(frame, FrameValue):
            _fail(node.args[0], "map_pixels needs an image value")
        expr = node.args[1]
        data = frame.data.astype(np.float64)
        if frame.kind == "u8":
            bindings = {
                "v": data,
                "r": data[:, :, 0],
                "g": data[:, :, 1],
                "b": data[:, :, 2],
            }
            limit = 255.0
        else:
            bindings = {"v": data}
            limit = 65535.0
        result = self._pixel_eval(expr, bindings)
        if isinstance(result, list):
            if frame.kind != "u8" or len(result) != 3:
                _fail(expr, "channel-list pixel expressions need an RGB frame and 3 entries")
            planes = [np.broadcast_to(np.asarray(p, dtype=np.float64), data.shape[:2]) for p in result]
            result = np.stack(planes, axis=2)
        result = np.asarray(result, dtype=np.float64)
        if result.ndim == 0:
            result = np.full(data.shape, float(result))
        if frame.kind == "u8" and result.ndim == 2:
            result = np.repeat(result[:, :, None], 3, axis=2)
        if result.shape != data.shape:
            _fail(expr, f"pixel expression produced shape {result.shape}, frame is {data.shape}")
        clipped = np.clip(np.rint(result), 0, limit)
        return FrameValue(clipped.astype(frame.data.dtype))

    def _pixel_eval(self, expr, bindings):
        if isinstance(expr, ast.Number):
            return float(expr.value)
        if isinstance(expr, ast.Name):
            if expr.ident not in bindings:
                _fail(expr, f"pixel variable {expr.ident!r} not available for this frame")
            return bindings[expr.ident]
        if isinstance(expr, ast.ListLit):
            return [self._pixel_eval(item, bindings) for item in expr.items]
        if isinstance(expr, ast.UnaryOp) and expr.op == "-":
            return -self._pixel_eval(expr.operand, bindings)
        if isinstance(expr, ast.BinOp) and expr.op in ("+", "-", "*", "/"):
            left = self._pixel_eval(expr.left, bindings)
            right = self._pixel_eval(expr.right, bindings)
            if expr.op == "+":
                return left + right
            if expr.op == "-":
                return left - right
            if expr.op == "*":
                return left * right
            zero = np.asarray(right) == 0
            if np.any(zero):
                if zero.ndim >= 2:
                    first = np.argwhere(zero)[0]
                    _fail(expr, f"division by zero at pixel ({int(first[1])}, {int(first[0])})")
                _fail(expr, "division by zero")
            return left / right
        _fail(expr, "pixel expressions allow only + - * / over v, r, g, b")


def stage_order() -> tuple[str, ...]:
    return ("scene", "entity", "pixel")
