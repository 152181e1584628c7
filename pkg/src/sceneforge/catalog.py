"""Asset catalog: CAD model records with precomputed feature vectors,
material series per category, and label taxonomies with mapping tables.

Model similarity is exact Euclidean k-NN over the feature vectors via a
linear scan (catalogs stay small, and oracle-equality tests need exact
results). Geometry is low-poly placeholder meshes sufficient for
occlusion-correct ground-truth rendering.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .rng import seed_for

FEATURE_DIM = 64

# Structural category ids are fixed; furniture starts at 10.
CAT_WALL, CAT_FLOOR, CAT_CEILING, CAT_DOOR, CAT_WINDOW = 1, 2, 3, 4, 5
STRUCTURE_CATEGORIES = {
    CAT_WALL: "wall",
    CAT_FLOOR: "floor",
    CAT_CEILING: "ceiling",
    CAT_DOOR: "door",
    CAT_WINDOW: "window",
}


class CatalogError(ValueError):
    pass


@dataclass
class AssetRecord:
    asset_id: str
    category_id: int
    aabb_min: np.ndarray  # mm, local frame (bottom at y=0 for the builders here)
    aabb_max: np.ndarray
    feature: np.ndarray  # unit norm, FEATURE_DIM
    triangles: np.ndarray  # (n, 3, 3) mm


@dataclass
class Material:
    material_id: str
    base_color: tuple[float, float, float]
    roughness: float
    metallic: float


@dataclass
class MaterialSeries:
    series_id: str
    category_id: int
    materials: list[Material]


@dataclass
class LabelMapping:
    name: str
    table: dict[int, int]
    other_id: int
    target_names: dict[int, str] = field(default_factory=dict)


@dataclass
class LabelTaxonomy:
    categories: dict[int, str]
    mappings: dict[str, LabelMapping] = field(default_factory=dict)


class AssetCatalog:
    def __init__(self, assets: list[AssetRecord], series: list[MaterialSeries], taxonomy: LabelTaxonomy):
        self.assets = {a.asset_id: a for a in assets}
        self.series = series
        self.taxonomy = taxonomy
        self._ordered_ids = sorted(self.assets)
        self._features = np.stack([self.assets[a].feature for a in self._ordered_ids]) if assets else np.zeros((0, FEATURE_DIM))
        self._series_by_category: dict[int, list[MaterialSeries]] = {}
        for s in series:
            self._series_by_category.setdefault(s.category_id, []).append(s)
        self._materials = {m.material_id: m for s in series for m in s.materials}

    # -- retrieval ---------------------------------------------------------

    def nearest_models(self, asset_id: str, k: int) -> list[str]:
        """The k nearest assets by Euclidean feature distance, query excluded,
        ties broken by ascending asset_id."""
        if asset_id not in self.assets:
            raise CatalogError(f"unknown asset {asset_id!r}")
        if k < 1 or k > len(self.assets) - 1:
            raise CatalogError(f"k={k} out of range for catalog of {len(self.assets)}")
        query = self.assets[asset_id].feature
        dist = np.linalg.norm(self._features - query, axis=1)
        order = sorted(
            (i for i, aid in enumerate(self._ordered_ids) if aid != asset_id),
            key=lambda i: (dist[i], self._ordered_ids[i]),
        )
        return [self._ordered_ids[i] for i in order[:k]]

    def feature_distance(self, a: str, b: str) -> float:
        return float(np.linalg.norm(self.assets[a].feature - self.assets[b].feature))

    def sample_material(self, category_id: int, rng: np.random.Generator) -> str:
        """Uniform over the union of materials across the category's series."""
        pool = [m.material_id for s in self._series_by_category.get(category_id, []) for m in s.materials]
        if not pool:
            raise CatalogError(f"no material series for category {category_id}")
        return pool[int(rng.integers(len(pool)))]

    def series_for_material(self, material_id: str) -> str:
        for s in self.series:
            if any(m.material_id == material_id for m in s.materials):
                return s.series_id
        raise CatalogError(f"unknown material {material_id!r}")

    def material(self, material_id: str) -> Material:
        try:
            return self._materials[material_id]
        except KeyError:
            raise CatalogError(f"unknown material {material_id!r}") from None

    def map_label(self, mapping_name: str, category_id: int) -> int:
        if mapping_name == "identity":
            return category_id
        mapping = self.taxonomy.mappings.get(mapping_name)
        if mapping is None:
            raise CatalogError(f"unknown label mapping {mapping_name!r}")
        return mapping.table.get(category_id, mapping.other_id)

    def category_name(self, category_id: int) -> str:
        return self.taxonomy.categories.get(category_id, f"category_{category_id}")

    def categories_of_base(self, base: str) -> list[int]:
        return [cid for cid, name in self.taxonomy.categories.items() if name.split("/")[0] == base]

    def validate(self) -> list[str]:
        problems = []
        for a in self.assets.values():
            if np.any(a.aabb_min > a.aabb_max):
                problems.append(f"{a.asset_id}: inverted aabb")
            if abs(np.linalg.norm(a.feature) - 1.0) > 1e-6:
                problems.append(f"{a.asset_id}: feature not unit norm")
            if len(a.triangles) == 0:
                problems.append(f"{a.asset_id}: empty geometry")
            else:
                pts = a.triangles.reshape(-1, 3)
                if np.any(pts < a.aabb_min - 1.0) or np.any(pts > a.aabb_max + 1.0):
                    problems.append(f"{a.asset_id}: geometry outside aabb")
        return problems


# ---------------------------------------------------------------------------
# Placeholder geometry builders (triangle soup in local frame, bottom y=0)

def _box(x0, y0, z0, x1, y1, z1) -> np.ndarray:
    v = np.array(
        [
            [x0, y0, z0], [x1, y0, z0], [x1, y1, z0], [x0, y1, z0],
            [x0, y0, z1], [x1, y0, z1], [x1, y1, z1], [x0, y1, z1],
        ],
        dtype=float,
    )
    quads = [
        (0, 1, 2, 3), (5, 4, 7, 6), (4, 0, 3, 7),
        (1, 5, 6, 2), (3, 2, 6, 7), (4, 5, 1, 0),
    ]
    tris = []
    for a, b, c, d in quads:
        tris.append([v[a], v[b], v[c]])
        tris.append([v[a], v[c], v[d]])
    return np.asarray(tris)


def _prism(radius: float, height: float, sides: int = 8) -> np.ndarray:
    ang = np.linspace(0, 2 * math.pi, sides, endpoint=False)
    bot = np.stack([radius * np.cos(ang), np.zeros(sides), radius * np.sin(ang)], axis=1)
    top = bot + np.array([0.0, height, 0.0])
    tris = []
    for i in range(sides):
        j = (i + 1) % sides
        tris.append([bot[i], bot[j], top[j]])
        tris.append([bot[i], top[j], top[i]])
    center_b = np.array([0.0, 0.0, 0.0])
    center_t = np.array([0.0, height, 0.0])
    for i in range(sides):
        j = (i + 1) % sides
        tris.append([center_b, bot[j], bot[i]])
        tris.append([center_t, top[i], top[j]])
    return np.asarray(tris)


def _shape_for(archetype: str, w: float, h: float, d: float, rng: np.random.Generator) -> np.ndarray:
    hw, hd = w / 2, d / 2
    if archetype == "table":
        leg = min(80.0, hw / 2, hd / 2)
        top = h * 0.08
        parts = [_box(-hw, h - top, -hd, hw, h, hd)]
        for sx in (-1, 1):
            for sz in (-1, 1):
                parts.append(_box(sx * hw - sx * leg, 0, sz * hd - sz * leg, sx * hw, h - top, sz * hd))
        return np.concatenate(parts)
    if archetype == "seat":
        seat_h = h * 0.45
        leg = min(60.0, hw / 2, hd / 2)
        parts = [_box(-hw, seat_h * 0.8, -hd, hw, seat_h, hd)]
        parts.append(_box(-hw, seat_h, hd - d * 0.12, hw, h, hd))  # back
        for sx in (-1, 1):
            for sz in (-1, 1):
                parts.append(_box(sx * hw - sx * leg, 0, sz * hd - sz * leg, sx * hw, seat_h * 0.8, sz * hd))
        return np.concatenate(parts)
    if archetype == "sofa":
        base_h = h * 0.5
        arm = w * 0.12
        parts = [
            _box(-hw, 0, -hd, hw, base_h, hd),
            _box(-hw, base_h, hd - d * 0.25, hw, h, hd),
            _box(-hw, base_h, -hd, -hw + arm, h * 0.8, hd),
            _box(hw - arm, base_h, -hd, hw, h * 0.8, hd),
        ]
        return np.concatenate(parts)
    if archetype == "shelf":
        side = w * 0.05
        n_shelves = int(rng.integers(3, 6))
        parts = [
            _box(-hw, 0, -hd, -hw + side, h, hd),
            _box(hw - side, 0, -hd, hw, h, hd),
            _box(-hw, 0, -hd, hw, h * 0.04, hd),
        ]
        for i in range(1, n_shelves + 1):
            y = h * i / (n_shelves + 1)
            parts.append(_box(-hw + side, y, -hd, hw - side, y + h * 0.03, hd))
        return np.concatenate(parts)
    if archetype == "bed":
        base_h = h * 0.45
        parts = [
            _box(-hw, 0, -hd, hw, base_h, hd),
            _box(-hw, 0, hd - d * 0.06, hw, h, hd),  # headboard
        ]
        return np.concatenate(parts)
    if archetype == "lamp":
        pole_r = max(15.0, w * 0.05)
        shade_h = h * 0.25
        parts = [
            _prism(min(hw, hd) * 0.6, h * 0.05, 8),
            _box(-pole_r, 0, -pole_r, pole_r, h - shade_h, pole_r),
            _prism(min(hw, hd), shade_h, 8) + np.array([0.0, h - shade_h, 0.0]),
        ]
        return np.concatenate(parts)
    if archetype == "panel":
        return _box(-hw, 0, -hd, hw, h, hd)
    if archetype == "extrusion":
        return _prism(min(hw, hd), h, int(rng.integers(6, 10)))
    return _box(-hw, 0, -hd, hw, h, hd)  # plain box


# ---------------------------------------------------------------------------
# Demo catalog: fixed taxonomy, seeded assets / series / features

_BASES = [
    # (base name, nyu40 target id, archetype, (w, h, d) ranges mm)
    ("sofa", 6, "sofa", (1600, 2400, 650, 900, 800, 1100)),
    ("armchair", 5, "seat", (700, 1000, 700, 1000, 650, 900)),
    ("chair", 5, "seat", (400, 550, 800, 1000, 400, 550)),
    ("stool", 39, "box", (350, 500, 400, 700, 350, 500)),
    ("bench", 39, "box", (1000, 1600, 400, 500, 350, 450)),
    ("table", 7, "table", (1200, 2000, 700, 800, 700, 1100)),
    ("desk", 14, "table", (1000, 1600, 700, 800, 500, 800)),
    ("coffee_table", 7, "table", (600, 1200, 380, 500, 500, 800)),
    ("nightstand", 32, "box", (400, 600, 450, 650, 350, 500)),
    ("dresser", 17, "box", (800, 1400, 700, 1100, 400, 600)),
    ("cabinet", 3, "box", (600, 1200, 900, 2000, 350, 600)),
    ("wardrobe", 3, "box", (1000, 2000, 1800, 2300, 500, 700)),
    ("bookshelf", 10, "shelf", (600, 1200, 1400, 2200, 250, 400)),
    ("shelves", 15, "shelf", (500, 1000, 900, 1600, 220, 350)),
    ("counter", 12, "box", (1200, 2400, 850, 950, 550, 700)),
    ("bed", 4, "bed", (1400, 2000, 900, 1200, 1900, 2200)),
    ("crib", 39, "box", (600, 800, 800, 1000, 1100, 1400)),
    ("sofa_bed", 6, "sofa", (1700, 2200, 700, 900, 900, 1200)),
    ("lamp", 35, "lamp", (250, 450, 400, 700, 250, 450)),
    ("floor_lamp", 35, "lamp", (300, 500, 1400, 1900, 300, 500)),
    ("television", 25, "panel", (900, 1600, 500, 900, 60, 120)),
    ("refrigerator", 24, "box", (600, 900, 1600, 2000, 600, 750)),
    ("toilet", 33, "box", (350, 450, 700, 800, 600, 750)),
    ("sink", 34, "box", (450, 700, 800, 900, 400, 550)),
    ("bathtub", 36, "box", (1500, 1800, 500, 650, 700, 850)),
    ("mirror", 19, "panel", (400, 900, 900, 1600, 30, 60)),
    ("picture", 11, "panel", (300, 900, 300, 900, 20, 50)),
    ("curtain", 16, "panel", (800, 1600, 1800, 2400, 30, 80)),
    ("rug", 20, "panel", (1200, 2400, 15, 30, 800, 1600)),
    ("plant", 40, "extrusion", (300, 600, 600, 1600, 300, 600)),
]
_STYLES = ["modern", "classic", "nordic", "industrial", "rustic", "minimal", "retro", "deco", "oak", "walnut"]

_NYU40_NAMES = {
    0: "other", 1: "wall", 2: "floor", 3: "cabinet", 4: "bed", 5: "chair", 6: "sofa", 7: "table",
    8: "door", 9: "window", 10: "bookshelf", 11: "picture", 12: "counter", 13: "blinds", 14: "desk",
    15: "shelves", 16: "curtain", 17: "dresser", 18: "pillow", 19: "mirror", 20: "floor_mat",
    21: "clothes", 22: "ceiling", 23: "books", 24: "refrigerator", 25: "television", 26: "paper",
    27: "towel", 28: "shower_curtain", 29: "box", 30: "whiteboard", 31: "person", 32: "night_stand",
    33: "toilet", 34: "sink", 35: "lamp", 36: "bathtub", 37: "bag", 38: "otherstructure",
    39: "otherfurniture", 40: "otherprop",
}

_STRUCTURE_NYU = {CAT_WALL: 1, CAT_FLOOR: 2, CAT_CEILING: 22, CAT_DOOR: 8, CAT_WINDOW: 9}


def default_taxonomy() -> LabelTaxonomy:
    """The fixed ~300-category taxonomy plus the built-in nyu40 mapping."""
    categories = dict(STRUCTURE_CATEGORIES)
    table = dict(_STRUCTURE_NYU)
    for b, (base, nyu, _arch, _dims) in enumerate(_BASES):
        for v, style in enumerate(_STYLES):
            cid = 10 + b * 10 + v
            categories[cid] = f"{base}/{style}"
            table[cid] = nyu
    mapping = LabelMapping(name="nyu40", table=table, other_id=0, target_names=dict(_NYU40_NAMES))
    return LabelTaxonomy(categories=categories, mappings={"nyu40": mapping})


def furniture_category_ids() -> list[int]:
    return [10 + b * 10 + v for b in range(len(_BASES)) for v in range(len(_STYLES))]


def base_of_category(category_id: int) -> str:
    if category_id in STRUCTURE_CATEGORIES:
        return STRUCTURE_CATEGORIES[category_id]
    b = (category_id - 10) // 10
    return _BASES[b][0] if 0 <= b < len(_BASES) else "unknown"


def build_demo_catalog(n_assets: int = 1000, seed: int = 0) -> AssetCatalog:
    """Seeded stand-in catalog: features are clustered per category so
    same-category assets retrieve as neighbors, geometry is archetypal."""
    taxonomy = default_taxonomy()
    cat_ids = furniture_category_ids()

    centroid_rng = seed_for(seed, "catalog", "centroids")
    centroids = {}
    for cid in sorted(set(cat_ids)):
        c = centroid_rng.normal(size=FEATURE_DIM)
        centroids[cid] = c / np.linalg.norm(c)

    assets = []
    for i in range(n_assets):
        rng = seed_for(seed, f"asset{i:05d}", "catalog")
        b = i % len(_BASES)
        base, _nyu, arch, (w0, w1, h0, h1, d0, d1) = _BASES[b]
        cid = 10 + b * 10 + int(rng.integers(len(_STYLES)))
        w = float(rng.uniform(w0, w1))
        h = float(rng.uniform(h0, h1))
        d = float(rng.uniform(d0, d1))
        tris = _shape_for(arch, w, h, d, rng)
        feat = centroids[cid] + 0.25 * rng.normal(size=FEATURE_DIM)
        feat = feat / np.linalg.norm(feat)
        pts = tris.reshape(-1, 3)
        assets.append(
            AssetRecord(
                asset_id=f"asset_{i:05d}",
                category_id=cid,
                aabb_min=pts.min(axis=0),
                aabb_max=pts.max(axis=0),
                feature=feat,
                triangles=tris,
            )
        )

    series = []
    series_rng = seed_for(seed, "catalog", "series")
    palette_cats = sorted(set(cat_ids)) + sorted(STRUCTURE_CATEGORIES)
    for cid in palette_cats:
        n_series = 1 if cid in STRUCTURE_CATEGORIES else int(series_rng.integers(1, 3))
        for s in range(n_series):
            mats = []
            for m in range(int(series_rng.integers(2, 6))):
                rgb = tuple(round(float(v), 4) for v in series_rng.uniform(0.08, 0.95, size=3))
                mats.append(
                    Material(
                        material_id=f"mat_{cid}_{s}_{m}",
                        base_color=rgb,
                        roughness=round(float(series_rng.uniform(0.1, 0.95)), 4),
                        metallic=round(float(series_rng.uniform(0.0, 0.4)), 4),
                    )
                )
            series.append(MaterialSeries(series_id=f"series_{cid}_{s}", category_id=cid, materials=mats))

    return AssetCatalog(assets, series, taxonomy)


# ---------------------------------------------------------------------------
# File formats: catalog JSON, mapping CSV

def save_catalog(catalog: AssetCatalog, path: str | Path) -> None:
    doc = {
        "assets": [
            {
                "asset_id": a.asset_id,
                "category_id": a.category_id,
                "aabb": [list(map(float, a.aabb_min)), list(map(float, a.aabb_max))],
                "feature": [round(float(v), 9) for v in a.feature],
                "triangles": [round(float(v), 3) for v in a.triangles.reshape(-1)],
            }
            for a in sorted(catalog.assets.values(), key=lambda a: a.asset_id)
        ],
        "series": [
            {
                "series_id": s.series_id,
                "category_id": s.category_id,
                "materials": [
                    {
                        "material_id": m.material_id,
                        "base_color": list(m.base_color),
                        "roughness": m.roughness,
                        "metallic": m.metallic,
                    }
                    for m in s.materials
                ],
            }
            for s in catalog.series
        ],
        "taxonomy": {
            "categories": {str(k): v for k, v in sorted(catalog.taxonomy.categories.items())},
            "mappings": {
                name: {
                    "other_id": m.other_id,
                    "table": {str(k): v for k, v in sorted(m.table.items())},
                    "target_names": {str(k): v for k, v in sorted(m.target_names.items())},
                }
                for name, m in catalog.taxonomy.mappings.items()
            },
        },
    }
    Path(path).write_text(json.dumps(doc, sort_keys=True), encoding="utf-8")


def load_catalog(path: str | Path) -> AssetCatalog:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    assets = []
    for a in doc["assets"]:
        tris = np.asarray(a["triangles"], dtype=float).reshape(-1, 3, 3)
        feat = np.asarray(a["feature"], dtype=float)
        feat = feat / np.linalg.norm(feat)
        assets.append(
            AssetRecord(
                asset_id=a["asset_id"],
                category_id=int(a["category_id"]),
                aabb_min=np.asarray(a["aabb"][0], dtype=float),
                aabb_max=np.asarray(a["aabb"][1], dtype=float),
                feature=feat,
                triangles=tris,
            )
        )
    series = [
        MaterialSeries(
            series_id=s["series_id"],
            category_id=int(s["category_id"]),
            materials=[
                Material(
                    material_id=m["material_id"],
                    base_color=tuple(m["base_color"]),
                    roughness=float(m["roughness"]),
                    metallic=float(m["metallic"]),
                )
                for m in s["materials"]
            ],
        )
        for s in doc["series"]
    ]
    tax = doc["taxonomy"]
    taxonomy = LabelTaxonomy(
        categories={int(k): v for k, v in tax["categories"].items()},
        mappings={
            name: LabelMapping(
                name=name,
                table={int(k): int(v) for k, v in m["table"].items()},
                other_id=int(m["other_id"]),
                target_names={int(k): v for k, v in m.get("target_names", {}).items()},
            )
            for name, m in tax["mappings"].items()
        },
    )
    return AssetCatalog(assets, series, taxonomy)


def save_mapping_csv(mapping: LabelMapping, path: str | Path) -> None:
    """CSV rows (category_id, target_id, target_name); the row with
    category_id -1 carries the default 'other' target."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["category_id", "target_id", "target_name"])
        w.writerow([-1, mapping.other_id, mapping.target_names.get(mapping.other_id, "other")])
        for cid in sorted(mapping.table):
            tid = mapping.table[cid]
            w.writerow([cid, tid, mapping.target_names.get(tid, str(tid))])


def load_mapping_csv(name: str, path: str | Path) -> LabelMapping:
    table: dict[int, int] = {}
    target_names: dict[int, str] = {}
    other_id = 0
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            cid = int(row["category_id"])
            tid = int(row["target_id"])
            target_names[tid] = row["target_name"]
            if cid == -1:
                other_id = tid
            else:
                table[cid] = tid
    return LabelMapping(name=name, table=table, other_id=other_id, target_names=target_names)
