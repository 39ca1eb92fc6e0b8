"""Tile-map model: grids, legends, wire-format parsers, padding, classification.

Two text formats cross the module boundary:

* Grid blocks: a map arrives fenced in triple backticks, one row per line,
  one printable character per cell.  Rows are taken verbatim except that
  trailing whitespace is stripped and blank lines are dropped, so a parsed
  grid may be ragged until padded.
* Legend dicts: a Python-style dict literal mapping tile names to single
  characters, e.g. ``{'Grass': 'g', 'Protagonist': '@'}``.  Both quote
  styles and trailing commas are accepted; structural violations stay hard
  errors.

Coordinates are (row, col), zero-based, origin at the top-left.
"""

from __future__ import annotations

import ast
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum, IntEnum

from .errors import (
    DuplicateCharError,
    EmptyGridError,
    InvalidTileCharError,
    MissingReservedError,
    MultiCharValueError,
    NoDictError,
    NoFenceError,
    OutOfBoundsError,
)

PROTAGONIST_CHAR = "@"
ANTAGONIST_CHAR = "#"
RESERVED_CHARS = (PROTAGONIST_CHAR, ANTAGONIST_CHAR)


class TileRole(IntEnum):
    """Cell classification labels used by scaling and validity checks."""

    WALKABLE = 0
    UNWALKABLE = 1
    OBJECTIVE = 2
    TO_SCALE = 3
    SCALED = 4


class ObjectiveKind(str, Enum):
    DEFEAT_ENEMY = "defeat_enemy"
    CHAT_WITH_NPC = "chat_with_npc"
    EXIT_MAZE = "exit_maze"
    SURVIVE_WAVES = "survive_waves"
    COLLECT_ITEMS = "collect_items"


@dataclass(frozen=True)
class TileGrid:
    """Immutable character grid.  Rows may be ragged until padded."""

    rows: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.rows:
            raise EmptyGridError("grid has no rows")

    @classmethod
    def from_lines(cls, lines: list[str] | tuple[str, ...]) -> TileGrid:
        return cls(tuple(lines))

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    @property
    def n_cols(self) -> int:
        return max(len(r) for r in self.rows)

    @property
    def is_rectangular(self) -> bool:
        return len({len(r) for r in self.rows}) == 1

    @property
    def area(self) -> int:
        return sum(len(r) for r in self.rows)

    def in_bounds(self, row: int, col: int) -> bool:
        return 0 <= row < len(self.rows) and 0 <= col < len(self.rows[row])

    def cell(self, row: int, col: int) -> str:
        if not self.in_bounds(row, col):
            raise OutOfBoundsError(f"({row}, {col}) outside {self.n_rows}x{self.n_cols} grid")
        return self.rows[row][col]

    def with_cell(self, row: int, col: int, char: str) -> TileGrid:
        """Functional single-cell update."""
        if len(char) != 1:
            raise ValueError(f"cell value must be one char, got {char!r}")
        if not self.in_bounds(row, col):
            raise OutOfBoundsError(f"({row}, {col}) outside {self.n_rows}x{self.n_cols} grid")
        rows = list(self.rows)
        rows[row] = rows[row][:col] + char + rows[row][col + 1 :]
        return TileGrid(tuple(rows))

    def to_mutable(self) -> list[list[str]]:
        return [list(r) for r in self.rows]

    @classmethod
    def from_mutable(cls, cells: list[list[str]]) -> TileGrid:
        return cls(tuple("".join(r) for r in cells))

    def find(self, char: str) -> tuple[int, int] | None:
        """Position of the first occurrence of ``char``, scanning row-major."""
        for r, row in enumerate(self.rows):
            c = row.find(char)
            if c >= 0:
                return (r, c)
        return None

    def chars(self):
        for row in self.rows:
            yield from row

    def as_text(self) -> str:
        return "\n".join(self.rows) + "\n"


@dataclass(frozen=True)
class TileLegend:
    """Injective mapping of tile names to single characters.

    The protagonist is always '@' and the antagonist always '#'; both
    entries must be present.  Treated as immutable after construction.
    """

    entries: dict[str, str]

    def __post_init__(self) -> None:
        seen: dict[str, str] = {}
        for name, char in self.entries.items():
            if not isinstance(char, str) or len(char) != 1:
                raise MultiCharValueError(name, char)
            if not char.isprintable() or char.isspace():
                raise InvalidTileCharError(f"entry {name!r} has unusable char {char!r}")
            if char in seen:
                raise DuplicateCharError(seen[char], name, char)
            seen[char] = name
        for reserved in RESERVED_CHARS:
            if reserved not in seen:
                raise MissingReservedError(reserved)

    @property
    def chars(self) -> frozenset[str]:
        return frozenset(self.entries.values())

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(self.entries)

    def char_for(self, name: str) -> str:
        return self.entries[name]

    def name_for(self, char: str) -> str:
        for name, c in self.entries.items():
            if c == char:
                return name
        raise KeyError(char)

    def __contains__(self, char: str) -> bool:
        return char in self.chars

    def with_entry(self, name: str, char: str) -> TileLegend:
        entries = dict(self.entries)
        entries[name] = char
        return TileLegend(entries)


def parse_grid(text: str) -> TileGrid:
    """Extract the first fenced grid block from backend output.

    Raises NoFenceError when no complete fenced block exists and
    EmptyGridError when the block holds no non-blank line.
    """
    lines = text.splitlines()
    fence_idx = [i for i, ln in enumerate(lines) if ln.lstrip().startswith("```")]
    if len(fence_idx) < 2:
        raise NoFenceError("no complete triple-backtick block found")
    start, end = fence_idx[0], fence_idx[1]
    rows = [ln.rstrip() for ln in lines[start + 1 : end] if ln.strip()]
    if not rows:
        raise EmptyGridError("fenced block contains no non-blank line")
    return TileGrid(tuple(rows))


def _extract_braced(text: str) -> str:
    """Return the first balanced {...} fragment of ``text``."""
    start = text.find("{")
    if start < 0:
        raise NoDictError("no '{' in text")
    depth = 0
    for i in range(start, len(text)):
        if text[i] == "{":
            depth += 1
        elif text[i] == "}":
            depth -= 1
            if depth == 0:
                return text[start : i + 1]
    raise NoDictError("unbalanced braces in text")


def parse_dict_literal(text: str) -> dict:
    """Parse the first dict literal in free-form text.

    Tolerates either quote style and trailing commas (both are valid
    Python literals); anything ast cannot read is a NoDictError.
    """
    fragment = _extract_braced(text)
    try:
        value = ast.literal_eval(fragment)
    except (ValueError, SyntaxError) as exc:
        raise NoDictError(f"unparseable dict literal: {exc}") from exc
    if not isinstance(value, dict):
        raise NoDictError(f"expected a dict, got {type(value).__name__}")
    return value


def parse_legend(text: str) -> TileLegend:
    """Parse a tile legend from backend output containing a dict literal."""
    raw = parse_dict_literal(text)
    entries: dict[str, str] = {}
    for name, char in raw.items():
        entries[str(name)] = char  # TileLegend validates char shape
    return TileLegend(entries)


def render_legend(legend: TileLegend) -> str:
    """Dict-literal form of a legend; parse_legend round-trips it."""
    return repr(legend.entries)


def tile_frequencies(grid: TileGrid) -> dict[str, int]:
    return dict(Counter(grid.chars()))


def most_common_walkable(grid: TileGrid, walkable: frozenset[str] | set[str]) -> str:
    """Padding fill char: most frequent walkable char, ties to lowest code point.

    Falls back to the most frequent char overall when the grid contains no
    walkable character at all.
    """
    freqs = tile_frequencies(grid)
    pool = {ch: n for ch, n in freqs.items() if ch in walkable} or freqs
    if not pool:
        raise EmptyGridError("cannot choose a fill char for an empty grid")
    return min(pool, key=lambda ch: (-pool[ch], ord(ch)))


def pad_to_rectangle(grid: TileGrid, fill: str) -> TileGrid:
    """Right-pad ragged rows with ``fill`` to the longest row's width."""
    if len(fill) != 1:
        raise ValueError(f"fill must be one char, got {fill!r}")
    width = grid.n_cols
    return TileGrid(tuple(row + fill * (width - len(row)) for row in grid.rows))


@dataclass(frozen=True)
class TileClassification:
    """Per-cell role labels, same shape as the grid it was built from."""

    labels: tuple[tuple[int, ...], ...]

    @property
    def n_rows(self) -> int:
        return len(self.labels)

    @property
    def n_cols(self) -> int:
        return max(len(r) for r in self.labels) if self.labels else 0

    def label(self, row: int, col: int) -> int:
        return self.labels[row][col]

    def to_mutable(self) -> list[list[int]]:
        return [list(r) for r in self.labels]

    @classmethod
    def from_mutable(cls, labels: list[list[int]]) -> TileClassification:
        return cls(tuple(tuple(r) for r in labels))

    def count(self, role: int) -> int:
        return sum(row.count(role) for row in self.labels)


@dataclass(frozen=True)
class Objective:
    """A story objective realized at a map position via an anchor tile."""

    description: str
    kind: ObjectiveKind
    anchor: str
    position: tuple[int, int]


@dataclass(frozen=True)
class StorySpec:
    """Parsed story plus the level-relevant facts pulled out of it."""

    paragraphs: tuple[str, ...]
    n_objectives: int = 8
    protagonist: str = ""
    antagonist: str = ""
    npcs: tuple[str, ...] = ()
    environment: str = ""

    @property
    def text(self) -> str:
        return "\n\n".join(self.paragraphs)


def classify_tiles(
    grid: TileGrid,
    walkable: frozenset[str] | set[str],
    objectives: list[Objective] | tuple[Objective, ...],
    to_scale: frozenset[str] | set[str] = frozenset(),
) -> TileClassification:
    """Label every cell with a TileRole.

    Precedence per cell: objective position -> OBJECTIVE, char in
    ``to_scale`` -> TO_SCALE, char in ``walkable`` -> WALKABLE, else
    UNWALKABLE.  Objective positions outside the grid raise OutOfBoundsError.
    """
    anchor_cells = set()
    for obj in objectives:
        if not grid.in_bounds(*obj.position):
            raise OutOfBoundsError(f"objective {obj.description!r} at {obj.position} is off-grid")
        anchor_cells.add(obj.position)

    labels: list[list[int]] = []
    for r, row in enumerate(grid.rows):
        out = []
        for c, ch in enumerate(row):
            if (r, c) in anchor_cells:
                out.append(int(TileRole.OBJECTIVE))
            elif ch in to_scale:
                out.append(int(TileRole.TO_SCALE))
            elif ch in walkable:
                out.append(int(TileRole.WALKABLE))
            else:
                out.append(int(TileRole.UNWALKABLE))
        labels.append(out)
    return TileClassification.from_mutable(labels)


def save_level_text(grid: TileGrid, legend: TileLegend, map_path, legend_path) -> None:
    """Write the two-file level format: map text plus legend sidecar."""
    from pathlib import Path

    Path(map_path).write_text(grid.as_text(), encoding="utf-8")
    Path(legend_path).write_text(render_legend(legend) + "\n", encoding="utf-8")


def load_level_text(map_path, legend_path) -> tuple[TileGrid, TileLegend]:
    from pathlib import Path

    text = Path(map_path).read_text(encoding="utf-8")
    rows = [ln.rstrip() for ln in text.splitlines() if ln.strip()]
    if not rows:
        raise EmptyGridError(f"{map_path} holds no map rows")
    legend = parse_legend(Path(legend_path).read_text(encoding="utf-8"))
    return TileGrid(tuple(rows)), legend
