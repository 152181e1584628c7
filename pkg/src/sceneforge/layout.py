"""Scene-level furniture rearrangement.

Random single-furniture moves are scored by a six-term cost (clearance,
circulation, group, alignment, distribution, rhythm) and accepted through
a simulated-annealing Metropolis rule; t0=0 degrades to greedy descent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import geometry

DEFAULT_WEIGHTS = (10.0, 5.0, 3.0, 1.0, 1.0, 1.0)


@dataclass
class LayoutConfig:
    weights: tuple[float, ...] = DEFAULT_WEIGHTS
    margin: float = 200.0  # clearance inflation per side, mm
    grid: float = 100.0  # occupancy cell size, mm
    sigma: float = 300.0  # position proposal sigma, mm
    yaw_jitter: float = math.pi / 6  # +-30 degrees
    snap_prob: float = 0.2
    t0: float | None = None  # None: initial cost total (or 1); 0: greedy
    alpha: float = 0.97
    iters_per_furniture: int = 20


@dataclass
class FurnitureItem:
    entity_id: str
    position: tuple[float, float]  # footprint center (x, z), mm
    yaw: float
    half_x: float
    half_z: float
    category: str = ""

    def footprint(self, inflate: float = 0.0) -> np.ndarray:
        return geometry.oriented_rect(
            self.position, self.half_x + inflate, self.half_z + inflate, self.yaw
        )


@dataclass
class LayoutState:
    room: np.ndarray  # CCW polygon (n, 2), mm
    items: list[FurnitureItem]
    groups: list[tuple[int, int, float]] = field(default_factory=list)  # (i, j, preferred mm)
    door: tuple[float, float] | None = None

    def __post_init__(self):
        self.room = np.asarray(self.room, dtype=float)
        if self.door is None:
            self.door = _default_door(self.room)

    def clone_with(self, idx: int, item: FurnitureItem) -> "LayoutState":
        items = list(self.items)
        items[idx] = item
        return LayoutState(room=self.room, items=items, groups=self.groups, door=self.door)


@dataclass
class CostBreakdown:
    clearance: float
    circulation: float
    group: float
    alignment: float
    distribution: float
    rhythm: float
    total: float

    def terms(self) -> tuple[float, ...]:
        return (self.clearance, self.circulation, self.group, self.alignment, self.distribution, self.rhythm)


class LayoutError(ValueError):
    pass


def _default_door(room: np.ndarray) -> tuple[float, float]:
    """Midpoint of the room polygon's longest edge."""
    n = len(room)
    best, best_len = 0, -1.0
    for i in range(n):
        a, b = room[i], room[(i + 1) % n]
        length = float(np.hypot(*(b - a)))
        if length > best_len:
            best, best_len = i, length
    a, b = room[best], room[(best + 1) % n]
    return (float((a[0] + b[0]) / 2), float((a[1] + b[1]) / 2))


def _wall_normal_angles(room: np.ndarray) -> list[float]:
    angles = []
    n = len(room)
    for i in range(n):
        a, b = room[i], room[(i + 1) % n]
        ex, ez = b[0] - a[0], b[1] - a[1]
        # interior of a CCW polygon lies left of the edge
        nx, nz = -ez, ex
        angles.append(math.atan2(nx, nz))
    return angles


def _wrap_pi(a: float) -> float:
    return (a + math.pi) % (2 * math.pi) - math.pi


def cost(state: LayoutState, config: LayoutConfig | None = None) -> CostBreakdown:
    config = config or LayoutConfig()
    items = state.items
    room = state.room
    for it in items:
        if not geometry.polygon_contains_polygon(it.footprint(), room):
            raise LayoutError(f"footprint of {it.entity_id!r} outside room")

    n = len(items)

    clearance = 0.0
    inflated = [it.footprint(config.margin) for it in items]
    boxes = [(fp.min(axis=0), fp.max(axis=0)) for fp in inflated]
    for i in range(n):
        for j in range(i + 1, n):
            if np.any(boxes[i][1] < boxes[j][0]) or np.any(boxes[j][1] < boxes[i][0]):
                continue
            clearance += geometry.convex_overlap_area_mm2(inflated[i], inflated[j])
    clearance /= 1e6

    circulation = _circulation(state, config)

    group = 0.0
    for i, j, preferred in state.groups:
        d = math.hypot(
            items[i].position[0] - items[j].position[0],
            items[i].position[1] - items[j].position[1],
        )
        group += max(0.0, d - preferred) ** 2 / 1e6

    normals = _wall_normal_angles(room)
    alignment = 0.0
    for it in items:
        dev = min(abs(_wrap_pi(it.yaw - a)) for a in normals)
        alignment += dev * dev

    diag = float(np.hypot(*(room.max(axis=0) - room.min(axis=0))))
    distribution = 0.0
    if n >= 2:
        centers = np.array([it.position for it in items])
        diff = centers[:, None, :] - centers[None, :, :]
        dist = np.sqrt((diff**2).sum(axis=2))
        np.fill_diagonal(dist, np.inf)
        nn = dist.min(axis=1) / diag
        distribution = float(np.var(nn))

    rhythm = 0.0
    by_cat: dict[str, list[FurnitureItem]] = {}
    for it in items:
        by_cat.setdefault(it.category or "_", []).append(it)
    for members in by_cat.values():
        if len(members) < 3:
            continue
        run = sorted(members, key=lambda it: (it.position[0], it.position[1]))
        gaps = [
            math.hypot(
                run[k + 1].position[0] - run[k].position[0],
                run[k + 1].position[1] - run[k].position[1],
            )
            / diag
            for k in range(len(run) - 1)
        ]
        rhythm += float(np.var(gaps))

    terms = (clearance, circulation, group, alignment, distribution, rhythm)
    total = sum(w * t for w, t in zip(config.weights, terms))
    return CostBreakdown(*terms, total=total)


def _circulation(state: LayoutState, config: LayoutConfig) -> float:
    """Fraction of free floor cells unreachable from the door cell;
    1.0 when the door cell itself is blocked."""
    room = state.room
    lo = room.min(axis=0)
    hi = room.max(axis=0)
    step = config.grid
    nx = max(1, int(math.ceil((hi[0] - lo[0]) / step)))
    nz = max(1, int(math.ceil((hi[1] - lo[1]) / step)))
    xs = lo[0] + (np.arange(nx) + 0.5) * step
    zs = lo[1] + (np.arange(nz) + 0.5) * step

    gx, gz = np.meshgrid(xs, zs, indexing="ij")
    cells = np.stack([gx.reshape(-1), gz.reshape(-1)], axis=1)
    free = geometry.points_in_polygon(cells, room)
    for it in state.items:
        fp = it.footprint()
        occupied = geometry.points_in_convex(cells, fp)
        free &= ~occupied
    free = free.reshape(nx, nz)

    total_free = int(free.sum())
    if total_free == 0:
        return 1.0

    door = state.door
    di = min(nx - 1, max(0, int((door[0] - lo[0]) / step)))
    dj = min(nz - 1, max(0, int((door[1] - lo[1]) / step)))
    if not free[di, dj]:
        # nudge once to the nearest free neighbor; door on a wall midpoint
        # often lands on a boundary cell
        candidates = [
            (i, j)
            for i in range(max(0, di - 1), min(nx, di + 2))
            for j in range(max(0, dj - 1), min(nz, dj + 2))
            if free[i, j]
        ]
        if not candidates:
            return 1.0
        di, dj = candidates[0]

    reached = np.zeros_like(free)
    reached[di, dj] = True
    while True:
        grown = reached.copy()
        grown[1:, :] |= reached[:-1, :]
        grown[:-1, :] |= reached[1:, :]
        grown[:, 1:] |= reached[:, :-1]
        grown[:, :-1] |= reached[:, 1:]
        grown &= free
        grown[di, dj] = True
        if np.array_equal(grown, reached):
            break
        reached = grown
    unreachable = total_free - int((reached & free).sum())
    return unreachable / total_free


def propose_move(state: LayoutState, rng: np.random.Generator, config: LayoutConfig | None = None) -> LayoutState:
    """Perturb one furniture item, keeping its footprint inside the room."""
    config = config or LayoutConfig()
    if not state.items:
        raise LayoutError("no movable furniture")
    idx = int(rng.integers(len(state.items)))
    item = state.items[idx]

    dx = float(rng.normal(0.0, config.sigma)) if config.sigma > 0 else 0.0
    dz = float(rng.normal(0.0, config.sigma)) if config.sigma > 0 else 0.0
    if rng.uniform() < config.snap_prob:
        new_yaw = round(item.yaw / (math.pi / 2)) * (math.pi / 2)
    else:
        new_yaw = item.yaw + float(rng.uniform(-config.yaw_jitter, config.yaw_jitter))

    def inside(cx: float, cz: float, yaw: float) -> bool:
        rect = geometry.oriented_rect((cx, cz), item.half_x, item.half_z, yaw)
        return geometry.polygon_contains_polygon(rect, state.room)

    ox, oz = item.position
    yaw = new_yaw if inside(ox, oz, new_yaw) else item.yaw

    t = 1.0
    if not inside(ox + dx, oz + dz, yaw):
        lo_t, hi_t = 0.0, 1.0
        for _ in range(12):
            mid = (lo_t + hi_t) / 2
            if inside(ox + mid * dx, oz + mid * dz, yaw):
                lo_t = mid
            else:
                hi_t = mid
        t = lo_t
    moved = replace(item, position=(ox + t * dx, oz + t * dz), yaw=yaw)
    return state.clone_with(idx, moved)


def anneal(
    state: LayoutState,
    rng: np.random.Generator,
    iterations: int | None = None,
    config: LayoutConfig | None = None,
) -> tuple[LayoutState, list[float]]:
    """Run accept/reject for `iterations` steps; returns the best state seen
    and the sequence of accepted cost totals (starting at the initial cost)."""
    config = config or LayoutConfig()
    if iterations is None:
        iterations = config.iters_per_furniture * max(1, len(state.items))
    current = state
    current_cost = cost(current, config)
    t0 = config.t0
    if t0 is None:
        t0 = current_cost.total if current_cost.total > 0 else 1.0
    best, best_cost = current, current_cost
    accepted = [current_cost.total]
    for k in range(iterations):
        temp = t0 * (config.alpha**k)
        candidate = propose_move(current, rng, config)
        cand_cost = cost(candidate, config)
        delta = cand_cost.total - current_cost.total
        take = delta <= 0 or (temp > 0 and rng.uniform() < math.exp(-delta / temp))
        if take:
            current, current_cost = candidate, cand_cost
            accepted.append(cand_cost.total)
            if cand_cost.total < best_cost.total:
                best, best_cost = candidate, cand_cost
    return best, accepted


def randomize_layout(
    state: LayoutState,
    rng: np.random.Generator,
    iterations: int | None = None,
    config: LayoutConfig | None = None,
) -> LayoutState:
    best, _ = anneal(state, rng, iterations, config)
    return best
