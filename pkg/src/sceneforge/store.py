"""File-backed scene database: one JSON document per scene plus a compact
index, with predicate queries over the indexed summaries.

Writes are serialized by a store-level lock; index updates go through
write-to-temp-then-rename so readers never observe a torn file.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path

from filelock import FileLock

from .scene import SceneDocument, scene_from_json, scene_to_json, validate_scene


class StoreError(ValueError):
    pass


@dataclass
class SceneQuery:
    min_rooms: int | None = None
    max_rooms: int | None = None
    min_area_m2: float | None = None
    required_room_types: set[str] | None = None
    limit: int | None = None

    def validate(self) -> None:
        if self.min_rooms is not None and self.max_rooms is not None and self.min_rooms > self.max_rooms:
            raise StoreError("min_rooms must be <= max_rooms")
        if self.limit is not None and self.limit < 1:
            raise StoreError("limit must be >= 1")

    def matches(self, summary: dict) -> bool:
        if self.min_rooms is not None and summary["room_count"] < self.min_rooms:
            return False
        if self.max_rooms is not None and summary["room_count"] > self.max_rooms:
            return False
        if self.min_area_m2 is not None:
            # Area filter is per room: every room must clear the threshold.
            if any(a < self.min_area_m2 for a in summary["areas"]):
                return False
        if self.required_room_types:
            if not set(self.required_room_types) <= set(summary["room_types"]):
                return False
        return True

    @classmethod
    def from_json(cls, data: dict) -> "SceneQuery":
        q = cls(
            min_rooms=data.get("min_rooms"),
            max_rooms=data.get("max_rooms"),
            min_area_m2=data.get("min_area_m2"),
            required_room_types=set(data["required_room_types"]) if data.get("required_room_types") else None,
            limit=data.get("limit"),
        )
        q.validate()
        return q


def summarize(doc: SceneDocument) -> dict:
    return {
        "room_count": len(doc.rooms),
        "areas": [round(float(r.area), 9) for r in doc.rooms],
        "room_types": sorted({r.room_type for r in doc.rooms}),
    }


class SceneStore:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.scenes_dir = self.root / "scenes"
        self.index_path = self.root / "index.json"
        self.scenes_dir.mkdir(parents=True, exist_ok=True)
        self._lock = FileLock(str(self.root / ".store.lock"))

    # -- write path ----------------------------------------------------------

    def ingest(self, doc: SceneDocument) -> str:
        violations = validate_scene(doc)
        if violations:
            first = violations[0]
            raise StoreError(f"scene {doc.scene_id!r} invalid: {first.kind} at {first.where}: {first.message}")
        payload = json.dumps(scene_to_json(doc), sort_keys=True, indent=1)
        with self._lock:
            self._atomic_write(self.scenes_dir / f"{doc.scene_id}.json", payload)
            index = self._read_index()
            index[doc.scene_id] = summarize(doc)
            self._write_index(index)
        return doc.scene_id

    def ingest_many(self, docs: list[SceneDocument]) -> list[str]:
        for doc in docs:
            violations = validate_scene(doc)
            if violations:
                raise StoreError(f"scene {doc.scene_id!r} invalid: {violations[0].message}")
        with self._lock:
            index = self._read_index()
            for doc in docs:
                payload = json.dumps(scene_to_json(doc), sort_keys=True, indent=1)
                self._atomic_write(self.scenes_dir / f"{doc.scene_id}.json", payload)
                index[doc.scene_id] = summarize(doc)
            self._write_index(index)
        return [d.scene_id for d in docs]

    def _atomic_write(self, path: Path, payload: str) -> None:
        tmp = path.with_suffix(".tmp")
        tmp.write_text(payload, encoding="utf-8")
        os.replace(tmp, path)

    def _write_index(self, index: dict) -> None:
        ordered = {k: index[k] for k in sorted(index)}
        self._atomic_write(self.index_path, json.dumps(ordered, sort_keys=True, indent=1))

    # -- read path -----------------------------------------------------------

    def _read_index(self) -> dict:
        if not self.index_path.exists():
            return {}
        return json.loads(self.index_path.read_text(encoding="utf-8"))

    def scene_ids(self) -> list[str]:
        return sorted(self._read_index())

    def query(self, q: SceneQuery) -> list[str]:
        q.validate()
        index = self._read_index()
        hits = [sid for sid in sorted(index) if q.matches(index[sid])]
        if q.limit is not None:
            hits = hits[: q.limit]
        return hits

    def load(self, scene_id: str) -> SceneDocument:
        path = self.scenes_dir / f"{scene_id}.json"
        if not path.exists():
            raise StoreError(f"unknown scene {scene_id!r}")
        return scene_from_json(json.loads(path.read_text(encoding="utf-8")))

    def count(self) -> int:
        return len(self._read_index())
