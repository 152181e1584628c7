"""Job orchestration: query the store, run the per-scene stage pipeline on
a worker pool, render every camera and trajectory frame, and write a
manifest.

Determinism: every random decision draws from a stream derived from
(master_seed, scene_id, stage, slot), so output bytes are identical across
runs and worker counts. Scenes are the unit of parallelism; a failing
scene yields an error entry and never aborts the others.
"""

from __future__ import annotations

import dataclasses
import json
import os
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from . import RNG_ALGORITHM
from .catalog import AssetCatalog, load_catalog
from .dsl import check, parse
from .dsl.interp import DslRuntimeError, ImageHandler, StageContext, execute_stage
from .layout import DEFAULT_WEIGHTS, LayoutConfig
from .pixels import NoiseConfig
from .render import CameraModel, RenderConfig, build_render_scene, render, save_frameset
from .render.camera import camera_from_entity
from .rng import seed_for, stream_key
from .scene import SceneDocument, sample_component
from .store import SceneQuery, SceneStore
from .trajectory import TrajectoryConfig


class JobError(RuntimeError):
    pass


@dataclass
class JobSpec:
    store_root: str
    catalog_path: str
    script_path: str
    output_root: str
    query: SceneQuery = field(default_factory=SceneQuery)
    render: RenderConfig = field(default_factory=RenderConfig)
    width: int | None = None  # override camera resolution when set
    height: int | None = None
    master_seed: int = 0
    workers: int = 1
    layout: LayoutConfig = field(default_factory=LayoutConfig)
    trajectory: TrajectoryConfig = field(default_factory=TrajectoryConfig)
    noise: NoiseConfig = field(default_factory=NoiseConfig)

    @classmethod
    def from_json(cls, data: dict, base_dir: str | Path = ".") -> "JobSpec":
        base = Path(base_dir)

        def _path(key):
            raw = data[key]
            p = Path(raw)
            return str(p if p.is_absolute() else base / p)

        render_cfg = RenderConfig()
        width = height = None
        if "render" in data:
            r = dict(data["render"])
            width = r.pop("width", None)
            height = r.pop("height", None)
            render_cfg = RenderConfig(**{**dataclasses.asdict(RenderConfig()), **r})
        layout_cfg = _layout_from_json(data.get("layout", {}))
        traj_cfg = TrajectoryConfig(**{**dataclasses.asdict(TrajectoryConfig()), **data.get("trajectory", {})})
        noise_cfg = NoiseConfig(**{**dataclasses.asdict(NoiseConfig()), **data.get("pixel", {}).get("noise", {})})
        spec = cls(
            store_root=_path("store_root"),
            catalog_path=_path("catalog_path"),
            script_path=_path("script_path"),
            output_root=_path("output_root"),
            query=SceneQuery.from_json(data.get("query", {})),
            render=render_cfg,
            width=width,
            height=height,
            master_seed=int(data.get("master_seed", 0)),
            workers=int(data.get("workers", 1)),
            layout=layout_cfg,
            trajectory=traj_cfg,
            noise=noise_cfg,
        )
        if spec.workers < 1:
            raise JobError("workers must be >= 1")
        return spec


def _layout_from_json(data: dict) -> LayoutConfig:
    cfg = LayoutConfig()
    weights = list(DEFAULT_WEIGHTS)
    for i in range(6):
        key = f"w{i + 1}"
        if key in data:
            weights[i] = float(data[key])
    kwargs = {}
    for key in ("margin", "grid", "sigma", "snap_prob", "alpha", "iters_per_furniture"):
        if key in data:
            kwargs[key] = type(getattr(cfg, key))(data[key])
    if "t0" in data:
        kwargs["t0"] = None if data["t0"] is None else float(data["t0"])
    return dataclasses.replace(cfg, weights=tuple(weights), **kwargs)


@dataclass
class Manifest:
    rng_algorithm: str
    master_seed: int
    config: dict
    scenes: dict[str, dict] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "rng_algorithm": self.rng_algorithm,
            "master_seed": self.master_seed,
            "config": self.config,
            "scenes": {k: self.scenes[k] for k in sorted(self.scenes)},
        }


def write_manifest(manifest: Manifest, output_root: str | Path) -> Path:
    out = Path(output_root)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "manifest.json"
    tmp = out / "manifest.json.tmp"
    tmp.write_text(json.dumps(manifest.to_json(), indent=1, sort_keys=True), encoding="utf-8")
    os.replace(tmp, path)
    return path


# Per-process caches; with fork workers these are warm copies of the parent's.
_CATALOGS: dict[str, AssetCatalog] = {}
_SCRIPTS: dict[str, object] = {}


def _cached_catalog(path: str) -> AssetCatalog:
    if path not in _CATALOGS:
        _CATALOGS[path] = load_catalog(path)
    return _CATALOGS[path]


def _cached_script(path: str):
    if path not in _SCRIPTS:
        source = Path(path).read_text(encoding="utf-8")
        result = parse(source)
        if result.diagnostics:
            raise JobError(f"script failed to parse: {result.diagnostics[0]}")
        _SCRIPTS[path] = result.script
    return _SCRIPTS[path]


def _stage_seeds(master_seed: int, scene_id: str) -> dict[str, str]:
    return {
        stage: f"{stream_key(master_seed, scene_id, stage, 0):032x}"
        for stage in ("scene", "entity", "sample", "render", "pixel")
    }


def process_scene(spec: JobSpec, scene_id: str) -> dict:
    """Run the full stage pipeline for one scene; returns its manifest entry.
    Never raises: failures become an error entry."""
    entry: dict = {"status": "completed", "views": {}, "timing": {}}
    entry["seeds"] = _stage_seeds(spec.master_seed, scene_id)
    stage = "load"
    try:
        store = SceneStore(spec.store_root)
        catalog = _cached_catalog(spec.catalog_path)
        script = _cached_script(spec.script_path)
        doc = store.load(scene_id)

        stage = "scene"
        t0 = time.perf_counter()
        ctx = StageContext(
            "scene",
            seed_for(spec.master_seed, scene_id, "scene"),
            catalog,
            scene=doc,
            layout_config=spec.layout,
            trajectory_config=spec.trajectory,
            noise_config=spec.noise,
        )
        outcome = execute_stage(script, "scene", ctx)
        entry["timing"]["scene"] = round(time.perf_counter() - t0, 6)
        if outcome.filtered:
            entry["status"] = "filtered"
            entry["code"] = outcome.code
            return entry

        stage = "entity"
        t0 = time.perf_counter()
        ctx = StageContext(
            "entity",
            seed_for(spec.master_seed, scene_id, "entity"),
            catalog,
            scene=doc,
            layout_config=spec.layout,
            trajectory_config=spec.trajectory,
            noise_config=spec.noise,
        )
        outcome = execute_stage(script, "entity", ctx)
        entry["timing"]["entity"] = round(time.perf_counter() - t0, 6)
        if outcome.filtered:
            entry["status"] = "filtered"
            entry["code"] = outcome.code
            return entry
        _sample_attached(doc, spec, scene_id)

        stage = "render"
        t0 = time.perf_counter()
        scene_dir = Path(spec.output_root) / scene_id
        views = _render_views(spec, scene_id, doc, catalog, ctx.trajectories, scene_dir)
        entry["views"] = {vid: info["files"] for vid, info in views.items()}
        if any(info["depth_clipped"] for info in views.values()):
            entry["flags"] = {"depth_clipped": True}
        entry["timing"]["render"] = round(time.perf_counter() - t0, 6)

        if ctx.picks.records:
            scene_dir.mkdir(parents=True, exist_ok=True)
            ctx.picks.write(scene_dir / "picks.json")
            entry["picks"] = "picks.json"

        stage = "pixel"
        t0 = time.perf_counter()
        if script.stage("pixel") is not None and views:
            handler = ImageHandler(scene_dir, sorted(views))
            pctx = StageContext(
                "pixel",
                seed_for(spec.master_seed, scene_id, "pixel"),
                catalog,
                image_handler=handler,
                noise_config=spec.noise,
            )
            outcome = execute_stage(script, "pixel", pctx)
            if outcome.filtered:
                entry["status"] = "filtered"
                entry["code"] = outcome.code
                return entry
            for vid in views:
                vdir = scene_dir / vid
                entry["views"][vid] = sorted(p.name for p in vdir.iterdir() if p.is_file())
        entry["timing"]["pixel"] = round(time.perf_counter() - t0, 6)
        return entry
    except DslRuntimeError as exc:
        entry["status"] = "error"
        entry["error"] = {"stage": stage, "diagnostic": str(exc)}
        return entry
    except Exception as exc:  # crash isolation: one scene never kills the job
        entry["status"] = "error"
        entry["error"] = {
            "stage": stage,
            "diagnostic": f"{type(exc).__name__}: {exc}",
            "trace": traceback.format_exc(limit=5),
        }
        return entry


def _sample_attached(doc: SceneDocument, spec: JobSpec, scene_id: str) -> None:
    """Draw every component that carries a (non-similarity) descriptor;
    similarity descriptors are consumed by replace_model instead."""
    rng = seed_for(spec.master_seed, scene_id, "sample")
    for ent in sorted(doc.entities, key=lambda e: e.entity_id):
        kinds = sorted(
            {
                key.split(".")[0]
                for key, desc in ent.distributions.items()
                if desc.kind != "similarity"
            }
        )
        for kind in kinds:
            if ent.has(kind):
                ent.components[kind] = sample_component(ent, kind, rng)


def _render_views(
    spec: JobSpec,
    scene_id: str,
    doc: SceneDocument,
    catalog: AssetCatalog,
    trajectories: list,
    scene_dir: Path,
) -> dict[str, dict]:
    rscene = build_render_scene(doc, catalog)
    cameras = [e for e in doc.entities if e.has("Camera") and e.has("Transform")]
    cameras.sort(key=lambda e: e.entity_id)
    by_camera: dict[str, list] = {}
    for traj in trajectories:
        by_camera.setdefault(traj.camera_entity, []).append(traj)

    views: dict[str, dict] = {}
    slot = 0
    for ent in cameras:
        cam_comp = ent.get("Camera")
        tf = ent.get("Transform")
        trajs = by_camera.get(ent.entity_id, [])
        if not trajs:
            camera = camera_from_entity(tf.position, tf.rotation, cam_comp, spec.width, spec.height)
            views[ent.entity_id] = _render_one(spec, scene_id, rscene, camera, ent.entity_id, scene_dir, slot)
            slot += 1
            continue
        for traj in trajs:
            tdir = scene_dir / traj.traj_id
            tdir.mkdir(parents=True, exist_ok=True)
            (tdir / "trajectory.json").write_text(
                json.dumps(traj.to_json(), indent=1, sort_keys=True), encoding="utf-8"
            )
            for i, kf in enumerate(traj.keyframes):
                camera = CameraModel(
                    kind=cam_comp.model,
                    position=kf.position,
                    look_at=kf.look_at,
                    width=int(spec.width or cam_comp.image_width),
                    height=int(spec.height or cam_comp.image_height),
                    fov_deg=float(cam_comp.fov_deg or 60.0),
                    ortho_half_height=float(cam_comp.ortho_half_height or 1500.0),
                )
                view_id = f"{traj.traj_id}/f{i:03d}"
                views[view_id] = _render_one(spec, scene_id, rscene, camera, view_id, scene_dir, slot)
                slot += 1
    return views


def _render_one(spec, scene_id, rscene, camera, view_id, scene_dir, slot) -> dict:
    rng = seed_for(spec.master_seed, scene_id, "render", slot)
    frames = render(rscene, camera, spec.render, rng)
    files = save_frameset(frames, scene_dir / view_id)
    return {"files": files, "depth_clipped": frames.depth_clipped}


def run_job(spec: JobSpec) -> Manifest:
    catalog = _cached_catalog(spec.catalog_path)  # pre-flight: must load
    script_src = Path(spec.script_path).read_text(encoding="utf-8")
    result = parse(script_src)
    if result.diagnostics:
        raise JobError("script has parse errors:\n" + "\n".join(str(d) for d in result.diagnostics))
    diags = check(result.script)
    if diags:
        raise JobError("script failed checks:\n" + "\n".join(str(d) for d in diags))
    _SCRIPTS[spec.script_path] = result.script
    assert catalog is not None

    store = SceneStore(spec.store_root)
    scene_ids = store.query(spec.query)

    workers = spec.workers
    env_workers = os.environ.get("FORGE_WORKERS")
    if env_workers:
        workers = max(1, int(env_workers))

    manifest = Manifest(
        rng_algorithm=RNG_ALGORITHM,
        master_seed=spec.master_seed,
        config=_echo_config(spec),
    )
    if workers == 1 or len(scene_ids) <= 1:
        for sid in scene_ids:
            manifest.scenes[sid] = process_scene(spec, sid)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for sid, entry in zip(scene_ids, pool.map(process_scene, [spec] * len(scene_ids), scene_ids)):
                manifest.scenes[sid] = entry
    write_manifest(manifest, spec.output_root)
    return manifest


def _echo_config(spec: JobSpec) -> dict:
    data = dataclasses.asdict(spec)
    data["query"] = {
        k: (sorted(v) if isinstance(v, set) else v)
        for k, v in dataclasses.asdict(spec.query).items()
        if v is not None
    }
    return data
