"""Objectives too big for one tile get their own rooms.

"Escape the hedge maze", "survive three waves", "gather five relics":
each becomes a self-contained sub-map reached through a portal on the
main map.  Every room is checked for connectivity before it ships.
"""

from __future__ import annotations

from storyforge.submap import generate_arena, generate_collect, generate_maze

maze = generate_maze(size=15, rng_seed="demo:maze")
print("hedge maze (E marks the exit, entry at the south edge):")
print(maze.grid.as_text())

arena = generate_arena(size=11, waves=3, rng_seed="demo:arena")
print("arena (S marks wave spawn points):")
print(arena.grid.as_text())
for i, wave in enumerate(arena.completion["spawns"], 1):
    print(f"wave {i} spawns: {[tuple(p) for p in wave]}")
print()

room = generate_collect(size=11, n_items=5, rng_seed="demo:relics")
print("relic room (I marks an item):")
print(room.grid.as_text())
print(f"relics at: {[tuple(p) for p in room.completion['items']]}")
