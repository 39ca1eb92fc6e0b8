"""Sub-maps for objectives that need their own playable space.

Three objective kinds get dedicated sub-maps (maze exit, wave survival,
item collection); defeat and chat objectives are realized in place on the
main map.  The main map keeps a portal tile at the nearest walkable cell
to the objective; the portal char is auto-assigned from unused printable
characters and appended to the legend.

Sub-map grids use their own small alphabet: '.' floor, 'W' wall, 'E' maze
exit, 'S' wave spawn marker, 'I' collectible item.  Everything except
walls is walkable.  Every generator checks entry-to-completion
connectivity before returning; a failure is a generator bug and raises.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .errors import BadSizeError, NotFoundError
from .grid import Objective, ObjectiveKind, TileGrid, TileLegend
from .pathfind import bfs_nearest_valid, connectivity_check

FLOOR = "."
WALL = "W"
EXIT = "E"
SPAWN = "S"
ITEM = "I"
SUBMAP_WALKABLE = frozenset({FLOOR, EXIT, SPAWN, ITEM})

SUBMAPPED_KINDS = frozenset(
    {ObjectiveKind.EXIT_MAZE, ObjectiveKind.SURVIVE_WAVES, ObjectiveKind.COLLECT_ITEMS}
)

PORTAL_CHAR_CANDIDATES = "0123456789*+=%&?!^~:;"
PORTAL_ENTRY_NAME = "Portal"

DEFAULT_SUBMAP_SIZE = 15
DEFAULT_WAVES = 3
DEFAULT_ITEMS = 5

_OPPOSITE = {"north": "south", "south": "north", "east": "west", "west": "east"}


@dataclass(frozen=True)
class Portal:
    main_map_position: tuple[int, int]
    submap_id: str
    return_position: tuple[int, int]


@dataclass(frozen=True)
class SubMap:
    id: str
    kind: ObjectiveKind
    grid: TileGrid
    entry: tuple[int, int]
    completion: dict

    def targets(self) -> list[tuple[int, int]]:
        """Cells that must stay reachable from the entry."""
        kind = self.completion["type"]
        if kind == "reach_exit":
            return [tuple(self.completion["exit"])]
        if kind == "survive_waves":
            return [tuple(pos) for wave in self.completion["spawns"] for pos in wave]
        if kind == "collect_items":
            return [tuple(pos) for pos in self.completion["items"]]
        raise ValueError(f"unknown completion type {kind!r}")


def _assert_connected(submap: SubMap) -> SubMap:
    result = connectivity_check(submap.grid, SUBMAP_WALKABLE, submap.entry, submap.targets())
    if not result.valid:
        raise RuntimeError(f"generator produced a disconnected sub-map {submap.id!r}")
    return submap


def generate_maze(
    size: int = DEFAULT_SUBMAP_SIZE,
    entry_side: str = "south",
    rng_seed: int | str = 0,
    submap_id: str = "maze",
) -> SubMap:
    """Perfect maze via DFS carving on the odd lattice; exit opposite the entry."""
    if size < 7 or size % 2 == 0:
        raise BadSizeError(f"maze size must be odd and >= 7, got {size}")
    if entry_side not in _OPPOSITE:
        raise ValueError(f"entry_side must be one of {sorted(_OPPOSITE)}")
    rng = random.Random(rng_seed)
    cells = [[WALL] * size for _ in range(size)]

    # Corridor cells live at odd coordinates; DFS carves the walls between.
    lattice = [(r, c) for r in range(1, size, 2) for c in range(1, size, 2)]
    start = rng.choice(lattice)
    cells[start[0]][start[1]] = FLOOR
    stack = [start]
    visited = {start}
    while stack:
        r, c = stack[-1]
        options = []
        for dr, dc in ((-2, 0), (2, 0), (0, -2), (0, 2)):
            nb = (r + dr, c + dc)
            if 1 <= nb[0] < size - 1 and 1 <= nb[1] < size - 1 and nb not in visited:
                options.append(nb)
        if not options:
            stack.pop()
            continue
        nr, nc = rng.choice(options)
        cells[(r + nr) // 2][(c + nc) // 2] = FLOOR
        cells[nr][nc] = FLOOR
        visited.add((nr, nc))
        stack.append((nr, nc))

    odd_coords = list(range(1, size - 1, 2))
    mid = odd_coords[len(odd_coords) // 2]

    def doorway(side: str, lane: int) -> tuple[int, int]:
        if side == "north":
            return (0, lane)
        if side == "south":
            return (size - 1, lane)
        if side == "west":
            return (lane, 0)
        return (lane, size - 1)

    entry = doorway(entry_side, mid)
    exit_pos = doorway(_OPPOSITE[entry_side], rng.choice(odd_coords))
    cells[entry[0]][entry[1]] = FLOOR
    cells[exit_pos[0]][exit_pos[1]] = EXIT

    submap = SubMap(
        id=submap_id,
        kind=ObjectiveKind.EXIT_MAZE,
        grid=TileGrid(tuple("".join(r) for r in cells)),
        entry=entry,
        completion={"type": "reach_exit", "exit": list(exit_pos)},
    )
    return _assert_connected(submap)


def _connected_after(cells: list[list[str]], pos: tuple[int, int], entry: tuple[int, int]) -> bool:
    """Would every remaining non-wall cell stay reachable from the entry?"""
    old = cells[pos[0]][pos[1]]
    cells[pos[0]][pos[1]] = WALL
    grid = TileGrid(tuple("".join(r) for r in cells))
    floor = [
        (r, c)
        for r in range(len(cells))
        for c in range(len(cells[0]))
        if cells[r][c] != WALL
    ]
    ok = connectivity_check(grid, SUBMAP_WALKABLE, entry, floor).valid
    cells[pos[0]][pos[1]] = old
    return ok


def _scatter_obstacles(
    rng: random.Random,
    cells: list[list[str]],
    size: int,
    entry: tuple[int, int],
    density: float,
    protected: set[tuple[int, int]],
) -> int:
    """Place wall cells without disconnecting any floor; returns count placed."""
    interior = [
        (r, c)
        for r in range(1, size - 1)
        for c in range(1, size - 1)
        if (r, c) != entry and (r, c) not in protected
    ]
    target = int(density * (size - 2) * (size - 2))
    placed = 0
    for pos in rng.sample(interior, len(interior)):
        if placed >= target:
            break
        if _connected_after(cells, pos, entry):
            cells[pos[0]][pos[1]] = WALL
            placed += 1
    return placed


def generate_arena(
    size: int = DEFAULT_SUBMAP_SIZE,
    waves: int = DEFAULT_WAVES,
    rng_seed: int | str = 0,
    submap_id: str = "arena",
) -> SubMap:
    """Walled arena with sparse obstacles and per-wave perimeter spawn markers."""
    if size < 9:
        raise BadSizeError(f"arena size must be >= 9, got {size}")
    if waves < 1:
        raise ValueError(f"waves must be >= 1, got {waves}")
    rng = random.Random(rng_seed)
    cells = [
        [WALL if r in (0, size - 1) or c in (0, size - 1) else FLOOR for c in range(size)]
        for r in range(size)
    ]
    entry = (size - 2, size // 2)

    # Spawns sit on the ring just inside the walls, away from the entry.
    ring = [
        (r, c)
        for r in range(1, size - 1)
        for c in range(1, size - 1)
        if (r in (1, size - 2) or c in (1, size - 2)) and (r, c) != entry
    ]
    spawn_waves: list[list[tuple[int, int]]] = []
    used: set[tuple[int, int]] = set()
    per_wave = 4
    for _ in range(waves):
        pool = [p for p in ring if p not in used] or ring
        wave = rng.sample(pool, min(per_wave, len(pool)))
        used.update(wave)
        spawn_waves.append(sorted(wave))
    for r, c in used:
        cells[r][c] = SPAWN

    # Interior obstacle density stays under 0.15 by construction.
    _scatter_obstacles(rng, cells, size, entry, density=0.12, protected=used)

    submap = SubMap(
        id=submap_id,
        kind=ObjectiveKind.SURVIVE_WAVES,
        grid=TileGrid(tuple("".join(r) for r in cells)),
        entry=entry,
        completion={
            "type": "survive_waves",
            "waves": waves,
            "spawns": [[list(p) for p in wave] for wave in spawn_waves],
        },
    )
    return _assert_connected(submap)


def generate_collect(
    size: int = DEFAULT_SUBMAP_SIZE,
    n_items: int = DEFAULT_ITEMS,
    rng_seed: int | str = 0,
    submap_id: str = "collect",
) -> SubMap:
    """Walled room scattered with collectible items, all reachable from the entry."""
    if size < 7:
        raise BadSizeError(f"collect room size must be >= 7, got {size}")
    if n_items < 1:
        raise ValueError(f"n_items must be >= 1, got {n_items}")
    rng = random.Random(rng_seed)
    cells = [
        [WALL if r in (0, size - 1) or c in (0, size - 1) else FLOOR for c in range(size)]
        for r in range(size)
    ]
    entry = (size - 2, size // 2)
    _scatter_obstacles(rng, cells, size, entry, density=0.08, protected=set())

    free = [
        (r, c)
        for r in range(1, size - 1)
        for c in range(1, size - 1)
        if cells[r][c] == FLOOR and (r, c) != entry
    ]
    count = min(n_items, len(free))  # clamp rather than fail on tiny rooms
    items = sorted(rng.sample(free, count))
    for r, c in items:
        cells[r][c] = ITEM

    submap = SubMap(
        id=submap_id,
        kind=ObjectiveKind.COLLECT_ITEMS,
        grid=TileGrid(tuple("".join(r) for r in cells)),
        entry=entry,
        completion={"type": "collect_items", "items": [list(p) for p in items]},
    )
    return _assert_connected(submap)


def ensure_portal_char(legend: TileLegend) -> tuple[TileLegend, str]:
    """Legend with a portal entry, adding one on an unused char if needed."""
    if PORTAL_ENTRY_NAME in legend.entries:
        return legend, legend.char_for(PORTAL_ENTRY_NAME)
    for ch in PORTAL_CHAR_CANDIDATES:
        if ch not in legend:
            return legend.with_entry(PORTAL_ENTRY_NAME, ch), ch
    raise RuntimeError("no unused char available for the portal tile")


def place_portal(
    grid: TileGrid,
    objective: Objective,
    walkable: frozenset[str] | set[str],
    submap_id: str = "",
    return_position: tuple[int, int] = (0, 0),
    reserved: frozenset[tuple[int, int]] | set[tuple[int, int]] = frozenset(),
) -> Portal:
    """Portal at the BFS-nearest walkable cell to the objective's position.

    ``reserved`` cells (other objectives' positions, typically) are skipped
    even when walkable so a portal never erases an anchor.
    """
    found = bfs_nearest_valid(
        grid,
        objective.position,
        lambda r, c: grid.rows[r][c] in walkable and (r, c) not in reserved,
    )
    if found is None:
        raise NotFoundError(f"no walkable cell near objective {objective.description!r}")
    return Portal(main_map_position=found, submap_id=submap_id, return_position=return_position)


def _generator_for(kind: ObjectiveKind, size: int, waves: int, n_items: int, seed: str, sid: str) -> SubMap:
    if kind is ObjectiveKind.EXIT_MAZE:
        maze_size = size if size % 2 == 1 else size + 1
        return generate_maze(maze_size, "south", seed, sid)
    if kind is ObjectiveKind.SURVIVE_WAVES:
        return generate_arena(size, waves, seed, sid)
    if kind is ObjectiveKind.COLLECT_ITEMS:
        return generate_collect(size, n_items, seed, sid)
    raise ValueError(f"kind {kind} does not take a sub-map")


@dataclass(frozen=True)
class SubmapBuild:
    grid: TileGrid
    legend: TileLegend
    walkable: frozenset[str]
    portals: tuple[Portal, ...]
    submaps: tuple[SubMap, ...]


def build_submaps(
    grid: TileGrid,
    legend: TileLegend,
    objectives: tuple[Objective, ...] | list[Objective],
    walkable: frozenset[str] | set[str],
    rng_seed: int = 0,
    size: int = DEFAULT_SUBMAP_SIZE,
    waves: int = DEFAULT_WAVES,
    n_items: int = DEFAULT_ITEMS,
) -> SubmapBuild:
    """Generate sub-maps for all sub-mapped objectives and stamp their portals."""
    wanted = [(i, o) for i, o in enumerate(objectives) if o.kind in SUBMAPPED_KINDS]
    if not wanted:
        return SubmapBuild(grid, legend, frozenset(walkable), (), ())

    legend, portal_char = ensure_portal_char(legend)
    portals: list[Portal] = []
    submaps: list[SubMap] = []
    terrain_walkable = frozenset(walkable)
    anchor_cells = {o.position for o in objectives}
    for index, objective in wanted:
        sid = f"submap-{index:02d}-{objective.kind.value}"
        sub = _generator_for(
            objective.kind, size, waves, n_items, f"submap:{rng_seed}:{index}", sid
        )
        # Previously stamped portal cells carry portal_char, which is not in
        # the terrain walkable set, so two portals never share a cell.
        portal = place_portal(
            grid,
            objective,
            terrain_walkable,
            submap_id=sid,
            return_position=sub.entry,
            reserved=anchor_cells,
        )
        grid = grid.with_cell(*portal.main_map_position, portal_char)
        portals.append(portal)
        submaps.append(sub)

    return SubmapBuild(
        grid=grid,
        legend=legend,
        walkable=terrain_walkable | {portal_char},
        portals=tuple(portals),
        submaps=tuple(submaps),
    )
