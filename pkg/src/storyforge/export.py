"""Block-world export, top-down rendering, and the level bundle format.

A block world is a sparse voxel dict keyed by (x, y, z): x runs east
(grid column), z runs south (grid row), y is up.  Terrain emits one
ground block per cell at the base height, optionally one decorative
surface block above it; structure stamps sit above the untouched ground
layer.  Block JSON is an array of {x, y, z, block} records sorted by
(x, z, y) so exports are byte-stable.

Renders are binary portable pixmaps (P6): one flat-colored square per
cell, colors hashed from the tile char or block name so palettes stay
stable across runs and platforms.

A LevelBundle gathers everything one generated level needs for replay,
re-rendering, and evaluation, with a versioned JSON form that round-trips
losslessly and contains nothing wall-clock dependent.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import EmptyInputError, MissingBlockMappingError
from .grid import (
    Objective,
    ObjectiveKind,
    StorySpec,
    TileClassification,
    TileGrid,
    TileLegend,
)
from .scaling import Block, Placement, ScalingPlan, StampedStructure
from .submap import Portal, SubMap

SCHEMA_VERSION = 1

DEFAULT_BLOCK = "stone"

# Ordered keyword palette: the first keyword found in a tile's lowercased
# legend name decides its blocks.  An entry is either a ground block or a
# (ground, surface) pair; surfaces sit one above the ground layer.
_NAME_PALETTE: tuple[tuple[str, str | tuple[str, str]], ...] = (
    ("portal", "obsidian"),
    ("protagonist", ("grass_block", "gold_block")),
    ("antagonist", ("grass_block", "redstone_block")),
    ("bridge", "oak_planks"),
    ("water", "water"),
    ("river", "water"),
    ("lake", "water"),
    ("oasis", "water"),
    ("pond", "water"),
    ("lava", "lava"),
    ("swamp", "mud"),
    ("marsh", "mud"),
    ("path", "dirt_path"),
    ("road", "dirt_path"),
    ("trail", "dirt_path"),
    ("sand", "sand"),
    ("dune", "sand"),
    ("beach", "sand"),
    ("snow", "snow_block"),
    ("ice", "packed_ice"),
    ("ruin", "mossy_cobblestone"),
    ("cave", "cobblestone"),
    ("boulder", "cobblestone"),
    ("mountain", "stone"),
    ("cliff", "stone"),
    ("rock", "stone"),
    ("stone", "stone"),
    ("palm", ("sand", "jungle_log")),
    ("pine", ("grass_block", "spruce_log")),
    ("spruce", ("grass_block", "spruce_log")),
    ("tree", ("grass_block", "oak_log")),
    ("forest", ("grass_block", "oak_log")),
    ("wood", ("grass_block", "oak_log")),
    ("bush", ("grass_block", "oak_leaves")),
    ("shrub", ("grass_block", "oak_leaves")),
    ("leaves", ("grass_block", "oak_leaves")),
    ("flower", ("grass_block", "poppy")),
    ("garden", ("grass_block", "poppy")),
    ("mushroom", ("grass_block", "red_mushroom")),
    ("crystal", "amethyst_block"),
    ("temple", "chiseled_stone_bricks"),
    ("shrine", "chiseled_stone_bricks"),
    ("altar", "chiseled_stone_bricks"),
    ("house", "oak_planks"),
    ("hut", "oak_planks"),
    ("cottage", "oak_planks"),
    ("cabin", "oak_planks"),
    ("village", "oak_planks"),
    ("grass", "grass_block"),
    ("meadow", "grass_block"),
    ("field", "grass_block"),
    ("clearing", "grass_block"),
    ("dirt", "dirt"),
    ("mud", "mud"),
    ("wall", "cobblestone"),
)


def block_entry_for_name(name: str) -> str | tuple[str, str]:
    lowered = name.lower()
    for keyword, entry in _NAME_PALETTE:
        if keyword in lowered:
            return entry
    return DEFAULT_BLOCK


def build_block_table(
    legend: TileLegend,
    overrides: dict[str, str] | None = None,
    extra_chars: tuple[str, ...] | frozenset[str] = (),
) -> dict[str, str | tuple[str, str]]:
    """Char -> block entry for every legend char (plus any stray chars).

    ``overrides`` (typically backend-proposed names) win per char when they
    are non-empty strings; everything else falls back to the name palette.
    """
    overrides = overrides or {}
    table: dict[str, str | tuple[str, str]] = {}
    for name, ch in legend.entries.items():
        proposed = overrides.get(ch)
        if isinstance(proposed, str) and proposed.strip():
            table[ch] = proposed.strip()
        else:
            table[ch] = block_entry_for_name(name)
    for ch in extra_chars:
        table.setdefault(ch, DEFAULT_BLOCK)
    return table


@dataclass(frozen=True)
class BlockWorld:
    blocks: dict[tuple[int, int, int], str] = field(default_factory=dict)

    @property
    def palette(self) -> tuple[str, ...]:
        return tuple(sorted(set(self.blocks.values())))

    def bounds(self) -> tuple[tuple[int, int], tuple[int, int], tuple[int, int]]:
        if not self.blocks:
            raise EmptyInputError("block world is empty")
        xs = [x for x, _, _ in self.blocks]
        ys = [y for _, y, _ in self.blocks]
        zs = [z for _, _, z in self.blocks]
        return ((min(xs), max(xs)), (min(ys), max(ys)), (min(zs), max(zs)))


def tiles_to_blocks(
    grid: TileGrid,
    table: dict[str, str | tuple[str, str]],
    structures: tuple[StampedStructure, ...] | list[StampedStructure] = (),
    height_base: int = 0,
) -> BlockWorld:
    """Terrain layer plus structure stamps.

    Every cell emits exactly one ground block at ``height_base`` (so the
    ground count equals the grid area); surface blocks and structure voxels
    stack above without replacing it.
    """
    blocks: dict[tuple[int, int, int], str] = {}
    for r, row in enumerate(grid.rows):
        for c, ch in enumerate(row):
            entry = table.get(ch)
            if entry is None:
                raise MissingBlockMappingError(ch)
            if isinstance(entry, str):
                blocks[(c, height_base, r)] = entry
            else:
                ground, surface = entry
                blocks[(c, height_base, r)] = ground
                blocks[(c, height_base + 1, r)] = surface
    for st in structures:
        for v in st.voxels:
            blocks[(v.x, height_base + 1 + v.y, v.z)] = v.block
    return BlockWorld(blocks)


def export_block_json(world: BlockWorld) -> str:
    """One record per line, sorted by (x, z, y); byte-stable."""
    records = [
        {"block": name, "x": x, "y": y, "z": z}
        for (x, y, z), name in sorted(world.blocks.items(), key=lambda kv: (kv[0][0], kv[0][2], kv[0][1]))
    ]
    if not records:
        return "[]\n"
    body = ",\n".join("  " + json.dumps(rec, sort_keys=True) for rec in records)
    return "[\n" + body + "\n]\n"


def import_block_json(text: str) -> BlockWorld:
    records = json.loads(text)
    blocks = {(int(r["x"]), int(r["y"]), int(r["z"])): str(r["block"]) for r in records}
    return BlockWorld(blocks)


def _stable_color(key: str) -> tuple[int, int, int]:
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return tuple(40 + (b * 216) // 255 for b in digest[:3])  # keep away from pure black


_BACKGROUND = (16, 16, 16)


def _ppm(pixels: np.ndarray) -> bytes:
    h, w, _ = pixels.shape
    return b"P6\n%d %d\n255\n" % (w, h) + pixels.astype(np.uint8).tobytes()


def render_topdown(source: TileGrid | BlockWorld, cell_px: int = 8) -> bytes:
    """Flat top-down raster (binary PPM) of a grid or a block world."""
    if cell_px < 1:
        raise ValueError("cell_px must be >= 1")
    if isinstance(source, TileGrid):
        rows, cols = source.n_rows, source.n_cols
        if cols == 0:
            raise EmptyInputError("grid has no cells to render")
        pixels = np.zeros((rows, cols, 3), dtype=np.uint8)
        pixels[:, :] = _BACKGROUND
        for r, row in enumerate(source.rows):
            for c, ch in enumerate(row):
                pixels[r, c] = _stable_color(ch)
    elif isinstance(source, BlockWorld):
        if not source.blocks:
            raise EmptyInputError("block world has no blocks to render")
        (x0, x1), _, (z0, z1) = source.bounds()
        rows, cols = z1 - z0 + 1, x1 - x0 + 1
        pixels = np.zeros((rows, cols, 3), dtype=np.uint8)
        pixels[:, :] = _BACKGROUND
        top: dict[tuple[int, int], tuple[int, str]] = {}
        for (x, y, z), name in source.blocks.items():
            key = (z - z0, x - x0)
            if key not in top or y > top[key][0]:
                top[key] = (y, name)
        for (r, c), (_, name) in top.items():
            pixels[r, c] = _stable_color(name)
    else:
        raise TypeError(f"cannot render a {type(source).__name__}")
    return _ppm(np.kron(pixels, np.ones((cell_px, cell_px, 1), dtype=np.uint8)))


@dataclass(frozen=True)
class ValidityFlags:
    """Honest per-stage outcomes; a failed check flags, never aborts."""

    structural_ok: bool
    initial_paths_ok: bool
    post_scaling_ok: bool
    unreachable: tuple[int, ...] = ()

    def to_dict(self) -> dict:
        return {
            "structural_ok": self.structural_ok,
            "initial_paths_ok": self.initial_paths_ok,
            "post_scaling_ok": self.post_scaling_ok,
            "unreachable": list(self.unreachable),
        }


@dataclass(frozen=True)
class LevelBundle:
    """Everything one generated level needs, JSON round-trippable."""

    seed: int
    backend: str
    config: dict
    story: StorySpec
    legend: TileLegend
    walkable: tuple[str, ...]
    important: tuple[str, ...]
    start: tuple[int, int]
    grid_initial: TileGrid
    grid: TileGrid
    classification: TileClassification
    objectives: tuple[Objective, ...]
    plan: ScalingPlan
    placements: tuple[Placement, ...]
    structures: tuple[StampedStructure, ...]
    portals: tuple[Portal, ...]
    submaps: tuple[SubMap, ...]
    block_world: BlockWorld
    validity: ValidityFlags
    trace_file: str = "trace.jsonl"
    schema_version: int = SCHEMA_VERSION


def bundle_to_json(bundle: LevelBundle) -> str:
    doc = {
        "schema_version": bundle.schema_version,
        "seed": bundle.seed,
        "backend": bundle.backend,
        "config": bundle.config,
        "story": {
            "paragraphs": list(bundle.story.paragraphs),
            "n_objectives": bundle.story.n_objectives,
            "protagonist": bundle.story.protagonist,
            "antagonist": bundle.story.antagonist,
            "npcs": list(bundle.story.npcs),
            "environment": bundle.story.environment,
        },
        "legend": dict(bundle.legend.entries),
        "walkable": list(bundle.walkable),
        "important": list(bundle.important),
        "start": list(bundle.start),
        "grid_initial": list(bundle.grid_initial.rows),
        "grid": list(bundle.grid.rows),
        "classification": [list(r) for r in bundle.classification.labels],
        "objectives": [
            {
                "description": o.description,
                "kind": o.kind.value,
                "anchor": o.anchor,
                "position": list(o.position),
            }
            for o in bundle.objectives
        ],
        "plan": {"to_scale": list(bundle.plan.to_scale), "sizes": dict(bundle.plan.sizes)},
        "placements": [
            {"tile": p.tile, "top_left": list(p.top_left), "size": p.size, "score": p.score}
            for p in bundle.placements
        ],
        "structures": [
            {
                "placement": {
                    "tile": st.placement.tile,
                    "top_left": list(st.placement.top_left),
                    "size": st.placement.size,
                    "score": st.placement.score,
                },
                "voxels": [{"x": v.x, "y": v.y, "z": v.z, "block": v.block} for v in st.voxels],
                "open_cells": [list(p) for p in st.open_cells],
                "blocked_cells": [list(p) for p in st.blocked_cells],
            }
            for st in bundle.structures
        ],
        "portals": [
            {
                "main_map_position": list(p.main_map_position),
                "submap_id": p.submap_id,
                "return_position": list(p.return_position),
            }
            for p in bundle.portals
        ],
        "submaps": [
            {
                "id": s.id,
                "kind": s.kind.value,
                "rows": list(s.grid.rows),
                "entry": list(s.entry),
                "completion": s.completion,
            }
            for s in bundle.submaps
        ],
        "block_world": [
            {"block": name, "x": x, "y": y, "z": z}
            for (x, y, z), name in sorted(
                bundle.block_world.blocks.items(), key=lambda kv: (kv[0][0], kv[0][2], kv[0][1])
            )
        ],
        "validity": bundle.validity.to_dict(),
        "trace_file": bundle.trace_file,
    }
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def _pos(value) -> tuple[int, int]:
    return (int(value[0]), int(value[1]))


def bundle_from_json(text: str) -> LevelBundle:
    doc = json.loads(text)
    story = doc["story"]
    return LevelBundle(
        schema_version=int(doc["schema_version"]),
        seed=int(doc["seed"]),
        backend=doc["backend"],
        config=doc["config"],
        story=StorySpec(
            paragraphs=tuple(story["paragraphs"]),
            n_objectives=int(story["n_objectives"]),
            protagonist=story["protagonist"],
            antagonist=story["antagonist"],
            npcs=tuple(story["npcs"]),
            environment=story["environment"],
        ),
        legend=TileLegend(dict(doc["legend"])),
        walkable=tuple(doc["walkable"]),
        important=tuple(doc["important"]),
        start=_pos(doc["start"]),
        grid_initial=TileGrid(tuple(doc["grid_initial"])),
        grid=TileGrid(tuple(doc["grid"])),
        classification=TileClassification(tuple(tuple(r) for r in doc["classification"])),
        objectives=tuple(
            Objective(
                description=o["description"],
                kind=ObjectiveKind(o["kind"]),
                anchor=o["anchor"],
                position=_pos(o["position"]),
            )
            for o in doc["objectives"]
        ),
        plan=ScalingPlan(
            to_scale=tuple(doc["plan"]["to_scale"]),
            sizes={k: int(v) for k, v in doc["plan"]["sizes"].items()},
        ),
        placements=tuple(
            Placement(p["tile"], _pos(p["top_left"]), int(p["size"]), int(p["score"]))
            for p in doc["placements"]
        ),
        structures=tuple(
            StampedStructure(
                placement=Placement(
                    st["placement"]["tile"],
                    _pos(st["placement"]["top_left"]),
                    int(st["placement"]["size"]),
                    int(st["placement"]["score"]),
                ),
                voxels=tuple(
                    Block(int(v["x"]), int(v["y"]), int(v["z"]), str(v["block"]))
                    for v in st["voxels"]
                ),
                open_cells=tuple(_pos(p) for p in st["open_cells"]),
                blocked_cells=tuple(_pos(p) for p in st["blocked_cells"]),
            )
            for st in doc["structures"]
        ),
        portals=tuple(
            Portal(
                main_map_position=_pos(p["main_map_position"]),
                submap_id=p["submap_id"],
                return_position=_pos(p["return_position"]),
            )
            for p in doc["portals"]
        ),
        submaps=tuple(
            SubMap(
                id=s["id"],
                kind=ObjectiveKind(s["kind"]),
                grid=TileGrid(tuple(s["rows"])),
                entry=_pos(s["entry"]),
                completion=s["completion"],
            )
            for s in doc["submaps"]
        ),
        block_world=BlockWorld(
            {(int(r["x"]), int(r["y"]), int(r["z"])): str(r["block"]) for r in doc["block_world"]}
        ),
        validity=ValidityFlags(
            structural_ok=bool(doc["validity"]["structural_ok"]),
            initial_paths_ok=bool(doc["validity"]["initial_paths_ok"]),
            post_scaling_ok=bool(doc["validity"]["post_scaling_ok"]),
            unreachable=tuple(int(i) for i in doc["validity"]["unreachable"]),
        ),
        trace_file=doc["trace_file"],
    )


def save_bundle(bundle: LevelBundle, path) -> None:
    Path(path).write_text(bundle_to_json(bundle), encoding="utf-8")


def load_bundle(path) -> LevelBundle:
    return bundle_from_json(Path(path).read_text(encoding="utf-8"))
