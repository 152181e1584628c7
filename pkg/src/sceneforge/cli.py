"""forge: command-line front end.

    forge run --spec job.json          run a synthesis job
    forge check pipeline.mvs           parse + static-check a script
    forge store gen|ingest|query ...   manage the scene store
    forge catalog gen ...              build the demo asset catalog
    forge render-one ...               debug-render a single camera
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import __version__
from .catalog import build_demo_catalog, load_catalog, save_catalog
from .corpus import generate_corpus
from .dsl import check as check_script
from .dsl import parse
from .job import JobError, JobSpec, run_job
from .render import RenderConfig, build_render_scene, render, save_frameset
from .render.camera import camera_from_entity
from .rng import seed_for
from .scene import scene_from_json
from .store import SceneQuery, SceneStore, StoreError


@click.group()
@click.version_option(__version__)
def main() -> None:
    """Programmable indoor-scene data synthesis."""


@main.command("run")
@click.option("--spec", "spec_path", required=True, type=click.Path(exists=True), help="Job spec JSON.")
def run_cmd(spec_path: str) -> None:
    """Execute a job: query scenes, run all stages, render, write manifest."""
    base = Path(spec_path).resolve().parent
    data = json.loads(Path(spec_path).read_text(encoding="utf-8"))
    try:
        spec = JobSpec.from_json(data, base_dir=base)
        manifest = run_job(spec)
    except (JobError, StoreError, FileNotFoundError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    statuses = [e["status"] for e in manifest.scenes.values()]
    click.echo(
        f"{len(statuses)} scene(s): "
        f"{statuses.count('completed')} completed, "
        f"{statuses.count('filtered')} filtered, "
        f"{statuses.count('error')} error"
    )
    click.echo(f"manifest: {Path(spec.output_root) / 'manifest.json'}")


@main.command("check")
@click.argument("script", type=click.Path(exists=True))
def check_cmd(script: str) -> None:
    """Parse and static-check a pipeline script."""
    source = Path(script).read_text(encoding="utf-8")
    result = parse(source)
    diags = list(result.diagnostics)
    if not diags:
        diags = check_script(result.script)
    if diags:
        for d in diags:
            click.echo(f"{script}:{d}", err=True)
        sys.exit(1)
    click.echo(f"{script}: ok ({len(result.script.stages)} stage block(s))")


@main.group("store")
def store_group() -> None:
    """Scene store operations."""


@store_group.command("gen")
@click.option("--count", "count", default=10, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--store", "store_root", required=True, type=click.Path())
@click.option("--catalog", "catalog_path", required=True, type=click.Path(exists=True))
def store_gen(count: int, seed: int, store_root: str, catalog_path: str) -> None:
    """Generate a procedural mini-corpus into the store."""
    catalog = load_catalog(catalog_path)
    docs = generate_corpus(count, seed, catalog)
    store = SceneStore(store_root)
    ids = store.ingest_many(docs)
    click.echo(f"ingested {len(ids)} scenes into {store_root}")


@store_group.command("ingest")
@click.argument("path", type=click.Path(exists=True))
@click.option("--store", "store_root", required=True, type=click.Path())
def store_ingest(path: str, store_root: str) -> None:
    """Ingest one scene JSON document."""
    doc = scene_from_json(json.loads(Path(path).read_text(encoding="utf-8")))
    store = SceneStore(store_root)
    try:
        sid = store.ingest(doc)
    except StoreError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    click.echo(sid)


@store_group.command("query")
@click.option("--store", "store_root", required=True, type=click.Path(exists=True))
@click.option("--min-rooms", type=int, default=None)
@click.option("--max-rooms", type=int, default=None)
@click.option("--min-area", "min_area_m2", type=float, default=None)
@click.option("--room-type", "room_types", multiple=True)
@click.option("--limit", type=int, default=None)
@click.option("--json", "as_json", is_flag=True, help="Emit a JSON array.")
def store_query(store_root, min_rooms, max_rooms, min_area_m2, room_types, limit, as_json) -> None:
    """List scene ids matching the predicates."""
    q = SceneQuery(
        min_rooms=min_rooms,
        max_rooms=max_rooms,
        min_area_m2=min_area_m2,
        required_room_types=set(room_types) or None,
        limit=limit,
    )
    try:
        ids = SceneStore(store_root).query(q)
    except StoreError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    if as_json:
        click.echo(json.dumps(ids))
    else:
        for sid in ids:
            click.echo(sid)


@main.group("catalog")
def catalog_group() -> None:
    """Asset catalog operations."""


@catalog_group.command("gen")
@click.option("--assets", default=1000, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", "out_path", required=True, type=click.Path())
def catalog_gen(assets: int, seed: int, out_path: str) -> None:
    """Build the seeded demo catalog."""
    catalog = build_demo_catalog(assets, seed)
    problems = catalog.validate()
    if problems:
        click.echo("error: generated catalog failed validation", err=True)
        sys.exit(1)
    save_catalog(catalog, out_path)
    click.echo(f"wrote {len(catalog.assets)} assets to {out_path}")


@main.command("render-one")
@click.option("--scene", "scene_id", required=True)
@click.option("--camera", "camera_id", required=True)
@click.option("--store", "store_root", required=True, type=click.Path(exists=True))
@click.option("--catalog", "catalog_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--width", type=int, default=None)
@click.option("--height", type=int, default=None)
@click.option("--mode", type=click.Choice(["raycast", "pathtrace"]), default="raycast", show_default=True)
@click.option("--samples", type=int, default=8, show_default=True)
@click.option("--bounces", type=int, default=2, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
def render_one(scene_id, camera_id, store_root, catalog_path, out_dir, width, height, mode, samples, bounces, seed):
    """Render one camera of one scene (debugging aid)."""
    store = SceneStore(store_root)
    catalog = load_catalog(catalog_path)
    try:
        doc = store.load(scene_id)
    except StoreError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    ent = doc.entity(camera_id)
    if ent is None or not ent.has("Camera") or not ent.has("Transform"):
        click.echo(f"error: {camera_id!r} is not a camera entity of {scene_id!r}", err=True)
        sys.exit(1)
    camera = camera_from_entity(
        ent.get("Transform").position, ent.get("Transform").rotation, ent.get("Camera"), width, height
    )
    rscene = build_render_scene(doc, catalog)
    frames = render(rscene, camera, RenderConfig(mode=mode, samples=samples, bounces=bounces),
                    seed_for(seed, scene_id, "render"))
    files = save_frameset(frames, out_dir)
    click.echo(f"wrote {len(files)} channels to {out_dir}")


if __name__ == "__main__":
    main()
