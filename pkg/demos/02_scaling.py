"""Single tree tiles grow into 3x3 canopies, huts into 2x2 footprints.

A story map marks where a tree or a hut stands, but one character per
landmark makes for a cramped level.  Scaling rewrites each marked tile
into an s x s footprint, greedily, where the neighborhood looks most
like the tile being grown.
"""

from __future__ import annotations

from storyforge.grid import Objective, ObjectiveKind, TileGrid, classify_tiles
from storyforge.scaling import ScalingPlan, apply_scaling

ROWS = (
    "gggggggggggggg",
    "ggTggggggggHgg",
    "gggggggggggggg",
    "gggggg@ggggggg",
    "gggggggggggggg",
    "ggggggggggTggg",
    "ggHggggggggggg",
    "gggggggggggggg",
)

grid = TileGrid(ROWS)
# the '@' cell must survive scaling, so mark it as an anchor
objectives = (
    Objective("meet the hermit", ObjectiveKind.CHAT_WITH_NPC, "@", grid.find("@")),
)

plan = ScalingPlan(to_scale=("H", "T"), sizes={"T": 3, "H": 2})
classification = classify_tiles(grid, {"g"}, objectives, to_scale={"T", "H"})
result = apply_scaling(grid, classification, plan)

print("before:")
print(grid.as_text())
print("after:")
print(result.grid.as_text())
for p in result.placements:
    print(f"grew {p.tile!r} to {p.size}x{p.size} at {p.top_left} (score {p.score})")
print(f"hermit still at {result.grid.find('@')}")
