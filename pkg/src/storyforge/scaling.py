"""Adaptive tile scaling: grow single-cell tiles into s x s footprints.

The scan walks the grid row-major.  Each anchor cell (a char in the plan
whose label is TO_SCALE) evaluates every s x s footprint whose top-left
corner lies in [i-s+1 .. i] x [j-s+1 .. j].  A footprint is invalid if it
leaves the grid or covers an OBJECTIVE or SCALED cell; otherwise it scores
the summed occurrence frequencies of the characters it covers, frozen from
the grid as it stood before any stamping.  The strictly best-scoring
footprint wins, ties resolving to the lexicographically smallest corner,
and is stamped with the anchor's char and the SCALED label.  Anchors with
no valid footprint are left untouched.

Structure templates give stamped footprints a voxel body.  Local template
coordinates: x = column, z = row within the footprint, y = height above
ground level.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Callable, NamedTuple

from .errors import MissingTemplateError
from .grid import (
    RESERVED_CHARS,
    TileClassification,
    TileGrid,
    TileRole,
    tile_frequencies,
)


class Block(NamedTuple):
    """One voxel: x = east, z = south, y = up."""

    x: int
    y: int
    z: int
    block: str


@dataclass(frozen=True)
class ScalingPlan:
    """Chars to scale and their footprint sizes (every size >= 2)."""

    to_scale: tuple[str, ...]
    sizes: dict[str, int]

    def __post_init__(self) -> None:
        for ch in self.to_scale:
            if ch in RESERVED_CHARS:
                raise ValueError(f"reserved char {ch!r} cannot be scaled")
            if len(ch) != 1:
                raise ValueError(f"to_scale entries must be single chars, got {ch!r}")
            size = self.sizes.get(ch)
            if size is None or size < 2:
                raise ValueError(f"char {ch!r} needs a footprint size >= 2, got {size!r}")

    @property
    def is_empty(self) -> bool:
        return not self.to_scale


EMPTY_PLAN = ScalingPlan(to_scale=(), sizes={})


@dataclass(frozen=True)
class Placement:
    """One executed footprint stamp."""

    tile: str
    top_left: tuple[int, int]
    size: int
    score: int


@dataclass(frozen=True)
class ScalingResult:
    grid: TileGrid
    classification: TileClassification
    placements: tuple[Placement, ...]


_BLOCKED_LABELS = (int(TileRole.OBJECTIVE), int(TileRole.SCALED))


def _footprint_score(
    rows: list[list[str]] | tuple[str, ...],
    labels: list[list[int]] | tuple[tuple[int, ...], ...],
    freqs: dict[str, int],
    m: int,
    n: int,
    size: int,
    n_rows: int,
    n_cols: int,
) -> int | None:
    if m < 0 or n < 0 or m + size > n_rows or n + size > n_cols:
        return None
    score = 0
    for r in range(m, m + size):
        row, lab = rows[r], labels[r]
        for c in range(n, n + size):
            if lab[c] in _BLOCKED_LABELS:
                return None
            score += freqs.get(row[c], 0)
    return score


def score_candidate(
    grid: TileGrid,
    freqs: dict[str, int],
    classification: TileClassification,
    top_left: tuple[int, int],
    size: int,
) -> int | None:
    """Score one footprint candidate, or None when it is invalid."""
    return _footprint_score(
        grid.rows, classification.labels, freqs, top_left[0], top_left[1], size, grid.n_rows, grid.n_cols
    )


def apply_scaling(
    grid: TileGrid,
    classification: TileClassification,
    plan: ScalingPlan,
    validator: Callable[[TileGrid], bool] | None = None,
) -> ScalingResult:
    """Run the scaling scan over a rectangular grid.

    ``validator``, when given, re-checks the map after each stamp and rolls
    the stamp back if it returns False (safe mode; off by default).
    """
    if not grid.is_rectangular:
        raise ValueError("scaling requires a rectangular grid; pad it first")
    if len(classification.labels) != grid.n_rows or any(
        len(lr) != len(gr) for lr, gr in zip(classification.labels, grid.rows)
    ):
        raise ValueError("classification shape does not match grid shape")
    if plan.is_empty:
        return ScalingResult(grid, classification, ())

    n_rows, n_cols = grid.n_rows, grid.n_cols
    rows = grid.to_mutable()
    labels = classification.to_mutable()
    freqs = tile_frequencies(grid)  # frozen before any stamping
    to_scale = set(plan.to_scale)
    to_scale_label = int(TileRole.TO_SCALE)
    scaled_label = int(TileRole.SCALED)
    placements: list[Placement] = []

    for i in range(n_rows):
        for j in range(n_cols):
            ch = rows[i][j]
            if ch not in to_scale or labels[i][j] != to_scale_label:
                continue
            size = plan.sizes[ch]
            best_score = 0
            best: tuple[int, int] | None = None
            for m in range(i - size + 1, i + 1):
                for n in range(j - size + 1, j + 1):
                    score = _footprint_score(rows, labels, freqs, m, n, size, n_rows, n_cols)
                    if score is not None and score > best_score:
                        best_score, best = score, (m, n)
            if best is None:
                continue  # no valid footprint; anchor stays as-is
            saved = [
                (r, c, rows[r][c], labels[r][c])
                for r in range(best[0], best[0] + size)
                for c in range(best[1], best[1] + size)
            ]
            for r, c, _, _ in saved:
                rows[r][c] = ch
                labels[r][c] = scaled_label
            if validator is not None and not validator(TileGrid.from_mutable(rows)):
                for r, c, old_ch, old_label in saved:
                    rows[r][c] = old_ch
                    labels[r][c] = old_label
                continue
            placements.append(Placement(ch, best, size, best_score))

    return ScalingResult(
        TileGrid.from_mutable(rows), TileClassification.from_mutable(labels), tuple(placements)
    )


@dataclass(frozen=True)
class StructureTemplate:
    """Voxel body for a scaled footprint.

    The y == 0 layer must cover the full footprint (that is the structure's
    base) and every entrance must sit on the footprint border, named in
    (row, col) form.
    """

    tile: str
    footprint: int
    entrances: tuple[tuple[int, int], ...]
    voxels: tuple[Block, ...]

    def __post_init__(self) -> None:
        s = self.footprint
        if s < 2:
            raise ValueError(f"footprint must be >= 2, got {s}")
        base = set()
        for v in self.voxels:
            if not (0 <= v.x < s and 0 <= v.z < s) or v.y < 0:
                raise ValueError(f"voxel {v} outside local bounds for footprint {s}")
            if v.y == 0:
                base.add((v.x, v.z))
        if len(base) != s * s:
            raise ValueError(f"base layer covers {len(base)} cells, needs {s * s}")
        for r, c in self.entrances:
            if not (0 <= r < s and 0 <= c < s):
                raise ValueError(f"entrance {(r, c)} outside footprint")
            if r not in (0, s - 1) and c not in (0, s - 1):
                raise ValueError(f"entrance {(r, c)} is not on the footprint border")

    def to_dict(self) -> dict:
        return {
            "tile": self.tile,
            "footprint": self.footprint,
            "entrances": [list(e) for e in self.entrances],
            "voxels": [{"x": v.x, "y": v.y, "z": v.z, "block": v.block} for v in self.voxels],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> StructureTemplate:
        return cls(
            tile=doc["tile"],
            footprint=int(doc["footprint"]),
            entrances=tuple((int(r), int(c)) for r, c in doc["entrances"]),
            voxels=tuple(
                Block(int(v["x"]), int(v["y"]), int(v["z"]), str(v["block"])) for v in doc["voxels"]
            ),
        )


def fallback_template(
    tile: str,
    size: int,
    base_block: str = "stone_bricks",
    wall_block: str = "oak_planks",
) -> StructureTemplate:
    """Plain s x s structure: full base, two-high perimeter walls, one south door."""
    door = (size - 1, size // 2)
    voxels: list[Block] = []
    for z in range(size):
        for x in range(size):
            voxels.append(Block(x, 0, z, base_block))
            on_border = z in (0, size - 1) or x in (0, size - 1)
            if on_border and (z, x) != door:
                voxels.append(Block(x, 1, z, wall_block))
                voxels.append(Block(x, 2, z, wall_block))
    return StructureTemplate(tile=tile, footprint=size, entrances=(door,), voxels=tuple(voxels))


def add_fallback_templates(
    templates: dict[str, list[StructureTemplate]],
    placements: tuple[Placement, ...] | list[Placement],
) -> dict[str, list[StructureTemplate]]:
    """Extend a template library so every placement has at least one match."""
    extended = {tile: list(entries) for tile, entries in templates.items()}
    for p in placements:
        entries = extended.setdefault(p.tile, [])
        if not any(t.footprint == p.size for t in entries):
            entries.append(fallback_template(p.tile, p.size))
    return extended


@dataclass(frozen=True)
class StampedStructure:
    """A template instantiated at a placement, in world tile coordinates.

    ``voxels`` carry world x/z and ground-relative y (0 sits directly above
    the terrain layer).  ``open_cells`` are entrance cells, the only
    footprint cells meant to stay passable.
    """

    placement: Placement
    voxels: tuple[Block, ...]
    open_cells: tuple[tuple[int, int], ...]
    blocked_cells: tuple[tuple[int, int], ...]


def stamp_structures(
    placements: tuple[Placement, ...] | list[Placement],
    templates: dict[str, list[StructureTemplate]],
    rng_seed: int | str = 0,
) -> tuple[StampedStructure, ...]:
    """Pick a matching template per placement (seeded) and emit its voxels."""
    rng = random.Random(rng_seed)
    stamped: list[StampedStructure] = []
    for p in placements:
        choices = [t for t in templates.get(p.tile, []) if t.footprint == p.size]
        if not choices:
            raise MissingTemplateError(p.tile, p.size)
        template = choices[0] if len(choices) == 1 else rng.choice(choices)
        tr, tc = p.top_left
        voxels = tuple(Block(tc + v.x, v.y, tr + v.z, v.block) for v in template.voxels)
        open_cells = tuple((tr + r, tc + c) for r, c in template.entrances)
        blocked = tuple(
            (tr + r, tc + c)
            for r in range(p.size)
            for c in range(p.size)
            if (tr + r, tc + c) not in set(open_cells)
        )
        stamped.append(StampedStructure(p, voxels, open_cells, blocked))
    return tuple(stamped)
