"""Grid search: A* with an iteration cap, BFS repair search, connectivity.

All movement is 4-connected (N, S, W, E) with unit step cost.  The start
cell is always treated as standable regardless of its character (an actor
is already there); a goal cell may be exempted the same way so that paths
can terminate on interactable, unwalkable tiles.
"""

from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import Callable

from .errors import OutOfBoundsError
from .grid import TileGrid

# Neighbor probe order is part of the contract: north, south, west, east.
NEIGHBOR_STEPS = ((-1, 0), (1, 0), (0, -1), (0, 1))

DEFAULT_ITERATION_CAP = 1000


class PathStatus(str, Enum):
    FOUND = "found"
    UNREACHABLE = "unreachable"
    ITERATION_CAP_EXCEEDED = "iteration_cap_exceeded"


@dataclass(frozen=True)
class PathQuery:
    """Inputs for a single A* search.

    ``max_iterations`` bounds node expansions (pops from the open set);
    None disables the cap.  ``goal_exempt`` lets the path end on an
    unwalkable goal cell (objective anchors are usually unwalkable).
    """

    grid: TileGrid
    walkable: frozenset[str]
    start: tuple[int, int]
    goal: tuple[int, int]
    max_iterations: int | None = DEFAULT_ITERATION_CAP
    goal_exempt: bool = True

    def __post_init__(self) -> None:
        if self.max_iterations is not None and self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1 or None")
        for pos in (self.start, self.goal):
            if not self.grid.in_bounds(*pos):
                raise OutOfBoundsError(f"{pos} outside grid")


@dataclass(frozen=True)
class PathResult:
    status: PathStatus
    path: tuple[tuple[int, int], ...] | None
    expanded: int

    @property
    def found(self) -> bool:
        return self.status is PathStatus.FOUND

    @property
    def steps(self) -> int | None:
        return None if self.path is None else len(self.path) - 1


def astar(query: PathQuery) -> PathResult:
    """Shortest 4-connected path under a Manhattan heuristic.

    Returns a minimal path when one exists within the expansion cap.
    Expansion counts exclude the goal pop (the goal is never expanded).
    """
    grid, walkable = query.grid, query.walkable
    start, goal = query.start, query.goal
    cap = query.max_iterations
    rows = grid.rows

    def passable(r: int, c: int) -> bool:
        if (r, c) == start:
            return True
        if (r, c) == goal:
            return query.goal_exempt or rows[r][c] in walkable
        return rows[r][c] in walkable

    gr, gc = goal
    g_score: dict[tuple[int, int], int] = {start: 0}
    parent: dict[tuple[int, int], tuple[int, int]] = {}
    counter = 0  # insertion tiebreak keeps expansion order deterministic
    open_heap: list[tuple[int, int, int, int]] = [(abs(start[0] - gr) + abs(start[1] - gc), 0, start[0], start[1])]
    expanded = 0

    while open_heap:
        f, _, r, c = heapq.heappop(open_heap)
        cell = (r, c)
        g = g_score[cell]
        if f - (abs(r - gr) + abs(c - gc)) > g:
            continue  # stale entry superseded by a shorter route
        if cell == goal:
            path = [cell]
            while cell != start:
                cell = parent[cell]
                path.append(cell)
            path.reverse()
            return PathResult(PathStatus.FOUND, tuple(path), expanded)
        if cap is not None and expanded >= cap:
            return PathResult(PathStatus.ITERATION_CAP_EXCEEDED, None, expanded)
        expanded += 1
        ng = g + 1
        for dr, dc in NEIGHBOR_STEPS:
            nr, nc = r + dr, c + dc
            if not (0 <= nr < len(rows) and 0 <= nc < len(rows[nr])):
                continue
            if not passable(nr, nc):
                continue
            nb = (nr, nc)
            if ng < g_score.get(nb, 1 << 30):
                g_score[nb] = ng
                parent[nb] = (r, c)
                counter += 1
                heapq.heappush(open_heap, (ng + abs(nr - gr) + abs(nc - gc), counter, nr, nc))

    return PathResult(PathStatus.UNREACHABLE, None, expanded)


def bfs_nearest_valid(
    grid: TileGrid,
    origin: tuple[int, int],
    predicate: Callable[[int, int], bool],
) -> tuple[int, int] | None:
    """Nearest cell (BFS over all cells, walkability ignored) accepted by ``predicate``.

    The origin itself is tested first.  Ties at equal depth resolve by
    neighbor order N, S, W, E and then by earlier enqueue.  Returns None
    when no cell qualifies.
    """
    if not grid.in_bounds(*origin):
        raise OutOfBoundsError(f"{origin} outside grid")
    seen = {origin}
    queue = deque([origin])
    while queue:
        r, c = queue.popleft()
        if predicate(r, c):
            return (r, c)
        for dr, dc in NEIGHBOR_STEPS:
            nb = (r + dr, c + dc)
            if grid.in_bounds(*nb) and nb not in seen:
                seen.add(nb)
                queue.append(nb)
    return None


def bfs_distances(
    grid: TileGrid,
    walkable: frozenset[str] | set[str],
    start: tuple[int, int],
) -> dict[tuple[int, int], int]:
    """Shortest-path step counts from ``start`` to every reachable walkable cell.

    The start cell is included at distance 0 even when its own character is
    not walkable.
    """
    if not grid.in_bounds(*start):
        raise OutOfBoundsError(f"{start} outside grid")
    rows = grid.rows
    dist = {start: 0}
    queue = deque([start])
    while queue:
        r, c = queue.popleft()
        d = dist[(r, c)] + 1
        for dr, dc in NEIGHBOR_STEPS:
            nr, nc = r + dr, c + dc
            nb = (nr, nc)
            if 0 <= nr < len(rows) and 0 <= nc < len(rows[nr]) and nb not in dist and rows[nr][nc] in walkable:
                dist[nb] = d
                queue.append(nb)
    return dist


def target_distance(
    distances: dict[tuple[int, int], int],
    grid: TileGrid,
    pos: tuple[int, int],
) -> int | None:
    """Steps needed to stand at or beside ``pos``, or None if unreachable.

    A flooded target cell counts directly; an unflooded one (typically an
    unwalkable anchor) counts through its cheapest flooded 4-neighbor.
    """
    if pos in distances:
        return distances[pos]
    best: int | None = None
    for dr, dc in NEIGHBOR_STEPS:
        nb = (pos[0] + dr, pos[1] + dc)
        if nb in distances and (best is None or distances[nb] < best):
            best = distances[nb]
    return best


@dataclass(frozen=True)
class ConnectivityResult:
    reachable: tuple[bool, ...]
    valid: bool
    flooded: frozenset[tuple[int, int]]


def connectivity_check(
    grid: TileGrid,
    walkable: frozenset[str] | set[str],
    start: tuple[int, int],
    targets: list[tuple[int, int]] | tuple[tuple[int, int], ...],
) -> ConnectivityResult:
    """One flood from ``start``; each target must be flooded or border a flooded cell."""
    flooded = frozenset(bfs_distances(grid, walkable, start))
    reachable = []
    for pos in targets:
        if not grid.in_bounds(*pos):
            raise OutOfBoundsError(f"target {pos} outside grid")
        ok = pos in flooded or any(
            (pos[0] + dr, pos[1] + dc) in flooded for dr, dc in NEIGHBOR_STEPS
        )
        reachable.append(ok)
    return ConnectivityResult(tuple(reachable), all(reachable), flooded)
