"""A ranger needs the shortest way through a cut of forest.

Builds a small map by hand, names its tiles, and asks the pathfinder
for a route from the ranger to the shrine.  Shows the two core types
(TileGrid, TileLegend) and the A* / connectivity calls everything else
builds on.
"""

from __future__ import annotations

from storyforge.grid import TileGrid, TileLegend
from storyforge.pathfind import PathQuery, astar, connectivity_check

ROWS = (
    "ggggggTTgggg",
    "gTTggggTggSg",
    "ggTggggTgggg",
    "g@TggggTTTgg",
    "ggTTggggggrg",
    "gggggTTggggg",
)

legend = TileLegend(
    {
        "Protagonist": "@",
        "Antagonist": "#",
        "Grass": "g",
        "Tree": "T",
        "River": "r",
        "Shrine": "S",
    }
)

grid = TileGrid(ROWS)
walkable = frozenset("g")
start = grid.find("@")
shrine = grid.find("S")

print("the forest cut:")
print(grid.as_text())

result = astar(PathQuery(grid, walkable, start, shrine))
print(f"route found: {result.found}, steps: {result.steps}")

# paint the route onto a copy of the map
cells = grid.to_mutable()
for r, c in result.path[1:-1]:
    cells[r][c] = "*"
print()
print("the ranger's route (*):")
print(TileGrid.from_mutable(cells).as_text())

# one flood answers reachability for any number of targets
report = connectivity_check(grid, walkable, start, [shrine, (4, 10)])
print(f"shrine reachable: {report.reachable[0]}")
print(f"river bank reachable: {report.reachable[1]}")
