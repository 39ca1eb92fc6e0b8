"""Quantitative map evaluation.

Per-map measures: Shannon entropy of the tile distribution (bits),
unwalkable-tile ratio (UTR), validity (every objective reachable from the
start), and average shortest-path steps from the start to each objective
(ASPAO, undefined when any objective is unreachable).  Corpus-level:
mean/std aggregates, plus a validity-weighted UTR (VUTR) computed as one
ratio over the whole corpus: sum of valid maps' unwalkable areas over the
summed area of all maps.

Preference voting is folded with ``composite_score``: weighted rank votes
normalized by the total number of votes cast.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import EmptyCorpusError, EmptyGridError, NoVotesError
from .grid import TileGrid
from .pathfind import bfs_distances, connectivity_check, target_distance


def shannon_entropy(grid: TileGrid) -> float:
    """Entropy in bits of the grid's tile-character distribution."""
    counts = Counter(grid.chars())
    total = sum(counts.values())
    if total == 0:
        raise EmptyGridError("entropy of a grid with no cells is undefined")
    probs = np.array(list(counts.values()), dtype=float) / total
    return float(-(probs * np.log2(probs)).sum())


def unwalkable_ratio(grid: TileGrid, walkable: frozenset[str] | set[str]) -> float:
    """Fraction of cells whose char is not in the walkable set."""
    area = grid.area
    if area == 0:
        raise EmptyGridError("UTR of a grid with no cells is undefined")
    blocked = sum(1 for ch in grid.chars() if ch not in walkable)
    return blocked / area


def aspao(
    grid: TileGrid,
    walkable: frozenset[str] | set[str],
    start: tuple[int, int],
    objectives: Sequence[tuple[int, int]],
) -> float | None:
    """Mean shortest-path steps from start to each objective, else None.

    An objective counts at its own cell when that cell is flooded, else
    through its cheapest reachable 4-neighbor.  Any unreachable objective
    makes the whole measure undefined.
    """
    if not objectives:
        raise ValueError("aspao needs at least one objective")
    distances = bfs_distances(grid, walkable, start)
    steps = []
    for pos in objectives:
        d = target_distance(distances, grid, pos)
        if d is None:
            return None
        steps.append(d)
    return float(np.mean(steps))


@dataclass(frozen=True)
class MapEvaluation:
    """One map's measurements, ready for corpus aggregation."""

    map_id: str
    area: int
    unwalkable_area: int
    valid: bool
    utr: float
    vutr_numerator: int
    entropy: float
    tile_type_count: int
    aspao: float | None

    def to_dict(self) -> dict:
        return {
            "map_id": self.map_id,
            "area": self.area,
            "unwalkable_area": self.unwalkable_area,
            "valid": self.valid,
            "utr": self.utr,
            "vutr_numerator": self.vutr_numerator,
            "entropy": self.entropy,
            "tile_type_count": self.tile_type_count,
            "aspao": self.aspao,
        }


def evaluate_map(
    map_id: str,
    grid: TileGrid,
    walkable: frozenset[str] | set[str],
    start: tuple[int, int],
    objectives: Sequence[tuple[int, int]],
) -> MapEvaluation:
    area = grid.area
    if area == 0:
        raise EmptyGridError(f"map {map_id!r} has no cells")
    unwalkable_area = sum(1 for ch in grid.chars() if ch not in walkable)
    if objectives:
        valid = connectivity_check(grid, walkable, start, list(objectives)).valid
        path_mean = aspao(grid, walkable, start, objectives)
    else:
        valid, path_mean = True, None
    return MapEvaluation(
        map_id=map_id,
        area=area,
        unwalkable_area=unwalkable_area,
        valid=valid,
        utr=unwalkable_area / area,
        vutr_numerator=unwalkable_area if valid else 0,
        entropy=shannon_entropy(grid),
        tile_type_count=len(set(grid.chars())),
        aspao=path_mean,
    )


def corpus_vutr(evaluations: Sequence[MapEvaluation]) -> float:
    """Validity-weighted UTR over a corpus: one ratio, not a mean of ratios."""
    if not evaluations:
        raise EmptyCorpusError("corpus VUTR over zero maps")
    total_area = sum(e.area for e in evaluations)
    return sum(e.vutr_numerator for e in evaluations) / total_area


def _stats(values: Sequence[float]) -> dict | None:
    if not values:
        return None
    arr = np.array(values, dtype=float)
    return {"mean": float(arr.mean()), "std": float(arr.std())}


@dataclass(frozen=True)
class CorpusReport:
    evaluations: tuple[MapEvaluation, ...]

    def __post_init__(self) -> None:
        if not self.evaluations:
            raise EmptyCorpusError("report over zero maps")

    def summary(self) -> dict:
        evals = self.evaluations
        per_map_vutr = [e.vutr_numerator / e.area for e in evals]
        aspao_values = [e.aspao for e in evals if e.aspao is not None]
        return {
            "maps": len(evals),
            "tile_type_count": _stats([e.tile_type_count for e in evals]),
            "entropy": _stats([e.entropy for e in evals]),
            "playability": _stats([1.0 if e.valid else 0.0 for e in evals]),
            "utr": _stats([e.utr for e in evals]),
            "vutr": _stats(per_map_vutr),
            "aspao": _stats(aspao_values),
            "corpus_vutr": corpus_vutr(evals),
            "debug": {
                # Unnormalized sums, kept for cross-checking the aggregates.
                "utr_sum": float(sum(e.utr for e in evals)),
                "vutr_sum": float(sum(per_map_vutr)),
            },
        }

    def to_json_dict(self) -> dict:
        return {
            "summary": self.summary(),
            "maps": [e.to_dict() for e in self.evaluations],
        }

    def to_table(self) -> str:
        """Aligned mean +/- std table for terminal output."""
        s = self.summary()
        rows = [("maps", f"{s['maps']}", "")]
        labels = [
            ("tile types", "tile_type_count"),
            ("shannon entropy", "entropy"),
            ("playability", "playability"),
            ("utr", "utr"),
            ("vutr", "vutr"),
            ("aspao", "aspao"),
        ]
        for label, key in labels:
            st = s[key]
            if st is None:
                rows.append((label, "n/a", ""))
            else:
                rows.append((label, f"{st['mean']:.4f}", f"+/- {st['std']:.4f}"))
        rows.append(("corpus vutr", f"{s['corpus_vutr']:.4f}", ""))
        width = max(len(r[0]) for r in rows)
        return "\n".join(f"{name:<{width}}  {mean:>10} {std}".rstrip() for name, mean, std in rows)


def ranking_weights(k: int) -> tuple[int, ...]:
    """Default rank weights: first place k-1 down to 0 for last place."""
    if k < 1:
        raise ValueError("need at least one rank")
    return tuple(k - i for i in range(1, k + 1))


def composite_score(votes: Sequence[int], weights: Sequence[float]) -> float:
    """Weighted preference score: sum(w_i * votes_i) / sum(votes)."""
    if len(votes) != len(weights):
        raise ValueError(f"{len(votes)} vote buckets vs {len(weights)} weights")
    if any(v < 0 for v in votes):
        raise ValueError("vote counts cannot be negative")
    total = sum(votes)
    if total < 1:
        raise NoVotesError("no votes cast")
    return float(sum(w * v for w, v in zip(weights, votes)) / total)
