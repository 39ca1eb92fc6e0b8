from __future__ import annotations

import pytest

from storyforge.errors import (
    DuplicateCharError,
    EmptyGridError,
    InvalidTileCharError,
    MissingReservedError,
    MultiCharValueError,
    NoFenceError,
    OutOfBoundsError,
)
from storyforge.grid import (
    Objective,
    ObjectiveKind,
    TileClassification,
    TileGrid,
    TileLegend,
    TileRole,
    classify_tiles,
    load_level_text,
    most_common_walkable,
    pad_to_rectangle,
    parse_grid,
    parse_legend,
    render_legend,
    save_level_text,
    tile_frequencies,
)


def _legend(extra: dict[str, str] | None = None) -> TileLegend:
    entries = {"Protagonist": "@", "Antagonist": "#", "Grass": ".", "Wall": "W"}
    entries.update(extra or {})
    return TileLegend(entries)


def test_grid_shape_properties():
    g = TileGrid(("ab", "cd", "ef"))
    assert g.n_rows == 3
    assert g.n_cols == 2
    assert g.is_rectangular
    assert g.area == 6
    assert g.cell(2, 1) == "f"


def test_ragged_grid_reports_max_width_and_not_rectangular():
    g = TileGrid(("abc", "a", "ab"))
    assert not g.is_rectangular
    assert g.n_cols == 3
    assert g.area == 6


def test_empty_grid_rejected():
    with pytest.raises(EmptyGridError):
        TileGrid(())
    # rows of zero width survive construction; area exposes the hole
    assert TileGrid(("", "")).area == 0


def test_cell_out_of_bounds():
    g = TileGrid(("ab",))
    with pytest.raises(OutOfBoundsError):
        g.cell(1, 0)
    with pytest.raises(OutOfBoundsError):
        g.cell(0, -3)


def test_with_cell_returns_new_grid():
    g = TileGrid(("ab", "cd"))
    h = g.with_cell(0, 1, "X")
    assert h.rows == ("aX", "cd")
    assert g.rows == ("ab", "cd")


def test_mutable_round_trip():
    g = TileGrid(("ab", "cd"))
    cells = g.to_mutable()
    cells[1][0] = "Z"
    assert TileGrid.from_mutable(cells).rows == ("ab", "Zd")


def test_find_first_in_row_major_order():
    g = TileGrid(("ax", "xa"))
    assert g.find("x") == (0, 1)
    assert g.find("q") is None


def test_as_text_round_trips_through_parse_grid():
    g = TileGrid(("ab", "cd"))
    assert g.as_text() == "ab\ncd\n"
    assert parse_grid(f"```\n{g.as_text()}\n```").rows == g.rows


def test_parse_grid_strips_fences_and_blank_lines():
    text = "```\n..W\n.W.\n```\n"
    assert parse_grid(text).rows == ("..W", ".W.")


def test_parse_grid_empty_payload():
    with pytest.raises(EmptyGridError):
        parse_grid("```\n```")
    with pytest.raises(NoFenceError):
        parse_grid("no code block here")


def test_legend_requires_reserved_chars():
    with pytest.raises(MissingReservedError):
        TileLegend({"Grass": ".", "Antagonist": "#"})
    with pytest.raises(MissingReservedError):
        TileLegend({"Grass": ".", "Protagonist": "@"})


def test_legend_rejects_duplicate_chars():
    with pytest.raises(DuplicateCharError):
        _legend({"Dirt": "."})


def test_legend_rejects_multichar_and_whitespace():
    with pytest.raises(MultiCharValueError):
        _legend({"Oak": "oo"})
    with pytest.raises(InvalidTileCharError):
        _legend({"Oak": " "})
    with pytest.raises(MultiCharValueError):
        _legend({"Oak": ""})


def test_legend_lookups():
    legend = _legend()
    assert legend.char_for("Wall") == "W"
    assert legend.name_for("W") == "Wall"
    assert "W" in legend
    assert "z" not in legend
    with pytest.raises(KeyError):
        legend.char_for("Lava")
    with pytest.raises(KeyError):
        legend.name_for("z")


def test_legend_with_entry_does_not_mutate_original():
    legend = _legend()
    bigger = legend.with_entry("Tree", "T")
    assert "T" in bigger
    assert "T" not in legend


def test_parse_legend_accepts_braced_payload():
    text = 'Here you go:\n{"Protagonist": "@", "Antagonist": "#", "Grass": "."}'
    legend = parse_legend(text)
    assert legend.char_for("Grass") == "."


def test_render_legend_round_trips():
    legend = _legend({"Tree": "T"})
    assert parse_legend(render_legend(legend)).entries == legend.entries


def test_tile_frequencies_and_most_common_walkable():
    g = TileGrid(("..W", ".TW"))
    assert tile_frequencies(g) == {".": 3, "W": 2, "T": 1}
    assert most_common_walkable(g, {".", "T"}) == "."
    # tie breaks toward the lexicographically smaller char
    tie = TileGrid(("ab", "ba"))
    assert most_common_walkable(tie, {"a", "b"}) == "a"


def test_most_common_walkable_falls_back_to_overall_mode():
    g = TileGrid(("WWx",))
    assert most_common_walkable(g, {"."}) == "W"


def test_pad_to_rectangle():
    g = TileGrid(("abc", "a", "ab"))
    padded = pad_to_rectangle(g, ".")
    assert padded.rows == ("abc", "a..", "ab.")
    assert padded.is_rectangular
    with pytest.raises(ValueError):
        pad_to_rectangle(g, "xy")


def test_classification_roles_and_precedence():
    g = TileGrid(("T.W", ".T#"))
    objectives = [
        Objective("boss", ObjectiveKind.DEFEAT_ENEMY, "#", (1, 2)),
        Objective("grove", ObjectiveKind.COLLECT_ITEMS, "T", (0, 0)),
    ]
    cls = classify_tiles(g, {"."}, objectives, to_scale={"T"})
    # objective beats to-scale at (0,0); to-scale beats walkable at (1,1)
    assert cls.label(0, 0) == int(TileRole.OBJECTIVE)
    assert cls.label(1, 1) == int(TileRole.TO_SCALE)
    assert cls.label(0, 1) == int(TileRole.WALKABLE)
    assert cls.label(0, 2) == int(TileRole.UNWALKABLE)
    assert cls.label(1, 2) == int(TileRole.OBJECTIVE)
    assert cls.count(int(TileRole.OBJECTIVE)) == 2


def test_classification_rejects_off_grid_objective():
    g = TileGrid(("..",))
    bad = [Objective("x", ObjectiveKind.CHAT_WITH_NPC, ".", (5, 0))]
    with pytest.raises(OutOfBoundsError):
        classify_tiles(g, {"."}, bad)


def test_classification_mutable_round_trip():
    cls = TileClassification(((0, 1), (2, 3)))
    assert TileClassification.from_mutable(cls.to_mutable()).labels == cls.labels


def test_save_and_load_level_text(tmp_path):
    g = TileGrid(("@.#", "..."))
    legend = _legend()
    map_path = tmp_path / "level.txt"
    legend_path = tmp_path / "legend.txt"
    save_level_text(g, legend, map_path, legend_path)
    g2, legend2 = load_level_text(map_path, legend_path)
    assert g2.rows == g.rows
    assert legend2.entries == legend.entries


def test_objective_kind_values():
    assert ObjectiveKind("defeat_enemy") is ObjectiveKind.DEFEAT_ENEMY
    assert {k.value for k in ObjectiveKind} == {
        "defeat_enemy",
        "chat_with_npc",
        "exit_maze",
        "survive_waves",
        "collect_items",
    }
