"""Three candidate maps for the same chapter, scored side by side.

Which layout should ship?  The evaluator reports tile diversity
(Shannon entropy over tile frequencies), the unwalkable-tile ratio,
whether every objective is reachable, and the mean shortest path from
the start to the objectives.  The corpus report aggregates a batch.
"""

from __future__ import annotations

from storyforge.grid import TileGrid
from storyforge.metrics import CorpusReport, composite_score, evaluate_map, ranking_weights

CANDIDATES = {
    "meadow": (
        "gggggggggg",
        "ggggggggeg",
        "gggggggggg",
        "g@gggggggg",
        "gggggggggg",
    ),
    "ravine": (
        "ggggrrgggg",
        "ggggrrggeg",
        "ggbbbbgggg",
        "g@ggrrgggg",
        "ggggrrgggg",
    ),
    "wallpit": (
        "ggggWWgggg",
        "ggggWWggeg",
        "ggggWWgggg",
        "g@ggWWgggg",
        "ggggWWgggg",
    ),
}

evaluations = []
for name, rows in CANDIDATES.items():
    grid = TileGrid(rows)
    evaluations.append(
        evaluate_map(
            map_id=name,
            grid=grid,
            walkable={"g", "b"},
            start=grid.find("@"),
            objectives=[grid.find("e")],
        )
    )

for ev in evaluations:
    print(
        f"{ev.map_id:8s} entropy {ev.entropy:.3f}  utr {ev.utr:.2f}  "
        f"playable {ev.valid}  path to goal {ev.aspao}"
    )

print()
print(CorpusReport(tuple(evaluations)).to_table())

# a panel ranked the three candidates; first place weighs most
votes = [6, 3, 1]
weights = ranking_weights(3)
print(f"panel score, meadow first: {composite_score(votes, weights):.2f}")
