"""Story-to-level pipeline: narrative text in, validated level bundle out.

The stages run in a fixed order (story, characters, tiles, legend,
walkable, important, world, objectives, scaling, blocks) and every
backend exchange is appended to a trace.  A trace replays byte-for-byte
through ReplayBackend, so a recorded run doubles as a regression
fixture.  World generation retries inside a bounded budget; validation
failures that survive the budget are reported in the bundle's validity
flags rather than raised.
"""

from __future__ import annotations

import ast
import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

from . import prompts
from .backends import TextBackend, embed_digest, prompt_digest
from .errors import (
    EmptyObjectivesError,
    ParseFailureError,
    StoryforgeError,
    UnknownTileError,
)
from .export import (
    LevelBundle,
    ValidityFlags,
    build_block_table,
    tiles_to_blocks,
)
from .grid import (
    Objective,
    ObjectiveKind,
    StorySpec,
    TileClassification,
    TileGrid,
    TileLegend,
    TileRole,
    classify_tiles,
    most_common_walkable,
    pad_to_rectangle,
    parse_dict_literal,
    parse_grid,
)
from .pathfind import (
    DEFAULT_ITERATION_CAP,
    PathQuery,
    astar,
    bfs_nearest_valid,
    connectivity_check,
)
from .scaling import (
    EMPTY_PLAN,
    ScalingPlan,
    ScalingResult,
    StructureTemplate,
    add_fallback_templates,
    apply_scaling,
    stamp_structures,
)
from .submap import (
    DEFAULT_ITEMS,
    DEFAULT_SUBMAP_SIZE,
    DEFAULT_WAVES,
    build_submaps,
)

RESERVED_CHARS = ("@", "#")


# --- trace ---------------------------------------------------------------


class GenerationTrace:
    """Ordered record of every backend exchange in one run."""

    def __init__(self, records: list[dict] | None = None):
        self.records: list[dict] = list(records or [])

    def record(self, stage: str, prompt: str, response: str) -> None:
        self.records.append(
            {
                "index": len(self.records),
                "stage": stage,
                "kind": "complete",
                "prompt": prompt,
                "prompt_sha256": prompt_digest(prompt),
                "response": response,
            }
        )

    def record_embed(self, stage: str, text: str, vector: list[float]) -> None:
        self.records.append(
            {
                "index": len(self.records),
                "stage": stage,
                "kind": "embed",
                "prompt": text,
                "prompt_sha256": embed_digest(text),
                "response": json.dumps(vector),
            }
        )

    def to_jsonl(self, path: str | Path) -> None:
        lines = [json.dumps(rec, sort_keys=True) for rec in self.records]
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def from_jsonl(cls, path: str | Path) -> GenerationTrace:
        records = [
            json.loads(line)
            for line in Path(path).read_text(encoding="utf-8").splitlines()
            if line.strip()
        ]
        return cls(records)

    def fixture_records(self) -> list[dict]:
        """Digest-keyed replay records, first response per digest wins."""
        seen: set[str] = set()
        out = []
        for rec in self.records:
            if rec["prompt_sha256"] in seen:
                continue
            seen.add(rec["prompt_sha256"])
            out.append({"prompt_sha256": rec["prompt_sha256"], "response": rec["response"]})
        return out

    def save_fixture(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.fixture_records(), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )


class _Session:
    """Backend plus trace; all pipeline stages talk through this."""

    def __init__(self, backend: TextBackend, trace: GenerationTrace):
        self.backend = backend
        self.trace = trace

    def ask(self, stage: str, prompt: str) -> str:
        response = self.backend.complete(prompt)
        self.trace.record(stage, prompt, response)
        return response

    def embed(self, stage: str, text: str) -> list[float]:
        vector = self.backend.embed(text)
        self.trace.record_embed(stage, text, vector)
        return vector


# --- config --------------------------------------------------------------


@dataclass
class PipelineConfig:
    backend: TextBackend
    seed: int = 0
    n_paragraphs: int = 5
    n_objectives: int = 8
    max_refinement_rounds: int = 3
    parse_retries: int = 2
    astar_iteration_cap: int | None = DEFAULT_ITERATION_CAP
    scaling_enabled: bool = True
    submap_size: int = DEFAULT_SUBMAP_SIZE
    waves: int = DEFAULT_WAVES
    items: int = DEFAULT_ITEMS
    height_base: int = 0
    safe_scaling: bool = False
    templates: dict[str, list[StructureTemplate]] = field(default_factory=dict)
    max_blocks_in_prompt: int = 600

    def __post_init__(self) -> None:
        if self.max_refinement_rounds < 1:
            raise ValueError("max_refinement_rounds must be >= 1")
        if self.n_objectives < 1:
            raise ValueError("n_objectives must be >= 1")

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "backend": self.backend.name,
            "n_paragraphs": self.n_paragraphs,
            "n_objectives": self.n_objectives,
            "max_refinement_rounds": self.max_refinement_rounds,
            "parse_retries": self.parse_retries,
            "astar_iteration_cap": self.astar_iteration_cap,
            "scaling_enabled": self.scaling_enabled,
            "submap_size": self.submap_size,
            "waves": self.waves,
            "items": self.items,
            "height_base": self.height_base,
            "safe_scaling": self.safe_scaling,
            "prompt_version": prompts.PROMPT_VERSION,
        }


# --- small parsers -------------------------------------------------------


def parse_char_list(text: str) -> tuple[str, ...]:
    """Pull single tile characters out of a loosely formatted list reply.

    Accepts proper Python lists, unquoted bracket lists like [a, b], and
    bare comma-separated characters.  Raises ParseFailureError when no
    characters survive.
    """
    m = re.search(r"\[([^\[\]]*)\]", text)
    inner = m.group(1) if m else text.strip()
    chars: list[str] = []
    try:
        value = ast.literal_eval("[" + inner + "]")
        chars = [v for v in value if isinstance(v, str) and len(v) == 1]
    except (ValueError, SyntaxError):
        pass
    if not chars:
        chars = re.findall(r"['\"](.)['\"]", inner)
    if not chars:
        tokens = [t.strip().strip("'\"`") for t in inner.split(",")]
        chars = [t for t in tokens if len(t) == 1]
    deduped = list(dict.fromkeys(chars))
    if not deduped:
        raise ParseFailureError(f"no tile characters found in reply: {text[:80]!r}")
    return tuple(deduped)


_KIND_KEYWORDS: tuple[tuple[ObjectiveKind, tuple[str, ...]], ...] = (
    (ObjectiveKind.DEFEAT_ENEMY, ("defeat", "slay", "vanquish", "destroy")),
    (ObjectiveKind.EXIT_MAZE, ("exit", "labyrinth", "maze", "escape")),
    (ObjectiveKind.SURVIVE_WAVES, ("survive", "wave", "horde", "onslaught")),
    (
        ObjectiveKind.COLLECT_ITEMS,
        ("collect", "gather", "item", "supplies", "relic", "herb", "chest"),
    ),
    (ObjectiveKind.CHAT_WITH_NPC, ("chat", "talk", "speak", "converse", "meet")),
)


def classify_objective_kind(description: str) -> ObjectiveKind:
    """Keyword mapping from an objective sentence to its gameplay kind."""
    lowered = description.lower()
    for kind, words in _KIND_KEYWORDS:
        if any(w in lowered for w in words):
            return kind
    return ObjectiveKind.CHAT_WITH_NPC


def _ask_validated(session, stage, base_prompt, validate, retries):
    # feedback-carrying retry loop shared by the parse-critical stages
    prompt = base_prompt
    last_error: StoryforgeError | None = None
    for _ in range(retries + 1):
        response = session.ask(stage, prompt)
        try:
            return validate(response)
        except StoryforgeError as exc:
            last_error = exc
            prompt = base_prompt + prompts.render_prompt(
                prompts.RETRY_SUFFIX, feedback=str(exc)
            )
    raise last_error


# --- stages --------------------------------------------------------------


def generate_story(session: _Session, config: PipelineConfig) -> str:
    base = prompts.render_prompt(
        prompts.STORY,
        n_paragraphs=str(config.n_paragraphs),
        n_objectives=str(config.n_objectives),
    )

    def validate(response: str) -> str:
        paragraphs = [p for p in response.split("\n\n") if p.strip()]
        if len(paragraphs) < 2:
            raise ParseFailureError("story must have at least two paragraphs")
        if str(config.n_objectives) not in response:
            raise ParseFailureError(
                f"story must state that there are {config.n_objectives} objectives"
            )
        return response

    try:
        return _ask_validated(session, "story", base, validate, config.parse_retries)
    except StoryforgeError as exc:
        raise ParseFailureError(f"could not obtain a usable story: {exc}") from exc


@dataclass(frozen=True)
class WorldInputs:
    characters_text: str
    tile_names: tuple[str, ...]
    legend: TileLegend
    walkable: tuple[str, ...]
    important: tuple[str, ...]


def _parse_cast(characters_text: str) -> tuple[str, str, tuple[str, ...]]:
    protagonist, antagonist, npcs = "", "", []
    for line in characters_text.splitlines():
        m = re.match(r"\s*(Protagonist|Antagonist|NPC)\s*:\s*([^,.:;]+)", line)
        if not m:
            continue
        name = m.group(2).strip()
        if m.group(1) == "Protagonist" and not protagonist:
            protagonist = name
        elif m.group(1) == "Antagonist" and not antagonist:
            antagonist = name
        elif m.group(1) == "NPC":
            npcs.append(name)
    return protagonist, antagonist, tuple(npcs)


def extract_world_inputs(session: _Session, story: str, config: PipelineConfig) -> WorldInputs:
    """Characters, tile vocabulary, legend, and tile role lists."""
    characters = session.ask(
        "characters", prompts.render_prompt(prompts.CHARACTERS, story=story)
    )

    tiles_reply = session.ask("tiles", prompts.render_prompt(prompts.TILES, story=story))
    tile_names = tuple(
        dict.fromkeys(
            ln.lstrip("-* \t").strip()
            for ln in tiles_reply.splitlines()
            if ln.lstrip("-* \t").strip()
        )
    )
    if not tile_names:
        raise ParseFailureError("tile list reply contained no tile names")

    legend_base = prompts.render_prompt(
        prompts.LEGEND, story=story, tile_list="\n".join(tile_names)
    )

    def validate_legend(response: str) -> TileLegend:
        # TileLegend itself rejects duplicates and a missing '@' or '#'
        entries = {str(k): str(v) for k, v in parse_dict_literal(response).items()}
        return TileLegend(entries)

    legend = _ask_validated(
        session, "legend", legend_base, validate_legend, config.parse_retries
    )
    env_chars = set(legend.entries.values()) - set(RESERVED_CHARS)

    def char_list_validator(role: str):
        def validate(response: str) -> tuple[str, ...]:
            chars = tuple(ch for ch in parse_char_list(response) if ch not in RESERVED_CHARS)
            unknown = [ch for ch in chars if ch not in env_chars]
            if unknown:
                raise UnknownTileError(unknown[0], role)
            if not chars:
                raise ParseFailureError(f"no usable {role} tiles in reply")
            return chars

        return validate

    walkable = _ask_validated(
        session,
        "walkable",
        prompts.render_prompt(prompts.WALKABLE, tile_map_dict=repr(legend.entries)),
        char_list_validator("walkable"),
        config.parse_retries,
    )
    important = _ask_validated(
        session,
        "important",
        prompts.render_prompt(prompts.IMPORTANT, tile_map_dict=repr(legend.entries)),
        char_list_validator("important"),
        config.parse_retries,
    )
    return WorldInputs(characters, tile_names, legend, walkable, important)


def place_objectives(
    session: _Session,
    story: str,
    legend: TileLegend,
    grid: TileGrid,
    walkable: frozenset[str] | set[str],
    n_objectives: int,
    retries: int,
) -> tuple[TileGrid, tuple[Objective, ...]]:
    """Ask for objective anchors, repair them, and stamp them on the map.

    Repair moves a bad entry to the BFS-nearest cell that already shows
    the requested tile; failing that, to the nearest free walkable cell.
    """
    base = prompts.render_prompt(
        prompts.OBJECTIVES,
        story=story,
        tile_map_dict=repr(legend.entries),
        map_rows="\n".join(grid.rows),
    )
    env_chars = set(legend.entries.values()) - set(RESERVED_CHARS)

    def coerce(response: str) -> list[tuple[str, str, int, int]]:
        raw = parse_dict_literal(response)
        entries = []
        for desc, value in raw.items():
            if not isinstance(value, (list, tuple)) or len(value) != 3:
                raise ParseFailureError(
                    f"objective {desc!r} must map to [tile, row, col]"
                )
            ch, r, c = value
            if not isinstance(ch, str) or len(ch) != 1:
                raise ParseFailureError(f"objective {desc!r} has a bad tile {ch!r}")
            if not isinstance(r, int) or not isinstance(c, int):
                raise ParseFailureError(f"objective {desc!r} has a bad position")
            entries.append((str(desc), ch, r, c))
        if not entries:
            raise ParseFailureError("objective reply was an empty dictionary")
        return entries

    prompt = base
    entries: list[tuple[str, str, int, int]] | None = None
    for _ in range(retries + 1):
        response = session.ask("objectives", prompt)
        try:
            entries = coerce(response)
        except StoryforgeError as exc:
            prompt = base + prompts.render_prompt(prompts.RETRY_SUFFIX, feedback=str(exc))
            continue
        if len(entries) == n_objectives:
            break
        prompt = base + prompts.render_prompt(
            prompts.RETRY_SUFFIX,
            feedback=f"expected exactly {n_objectives} objectives, got {len(entries)}",
        )
    if entries is None:
        raise EmptyObjectivesError("no parseable objectives after retries")
    entries = entries[:n_objectives]

    kinds = [classify_objective_kind(desc) for desc, _, _, _ in entries]
    defeat_at = [i for i, k in enumerate(kinds) if k is ObjectiveKind.DEFEAT_ENEMY]
    if not defeat_at:
        kinds[0] = ObjectiveKind.DEFEAT_ENEMY
    else:
        for i in defeat_at[1:]:
            kinds[i] = ObjectiveKind.CHAT_WITH_NPC

    rows = [list(r) for r in grid.rows]
    used: set[tuple[int, int]] = set()
    objectives: list[Objective] = []
    for (desc, ch, r, c), kind in zip(entries, kinds):
        r = min(max(r, 0), grid.n_rows - 1)
        c = min(max(c, 0), grid.n_cols - 1)
        # defeat always anchors on the antagonist glyph, which the raw world
        # never contains; an invented tile carries no anchor constraint
        wanted = "#" if kind is ObjectiveKind.DEFEAT_ENEMY else (ch if ch in env_chars else None)
        spot = None
        if wanted is not None:
            spot = bfs_nearest_valid(
                grid, (r, c), lambda rr, cc: rows[rr][cc] == wanted and (rr, cc) not in used
            )
        if spot is None:  # no free matching tile: nearest unclaimed walkable cell
            spot = bfs_nearest_valid(
                grid, (r, c), lambda rr, cc: rows[rr][cc] in walkable and (rr, cc) not in used
            )
        if spot is None:
            spot = bfs_nearest_valid(grid, (r, c), lambda rr, cc: (rr, cc) not in used)
        if spot is None:
            raise EmptyObjectivesError("map too small for the objective count")
        r, c = spot
        used.add((r, c))
        anchor = wanted if wanted is not None else rows[r][c]
        rows[r][c] = anchor
        objectives.append(Objective(desc, kind, anchor, (r, c)))
    return TileGrid(tuple("".join(r) for r in rows)), tuple(objectives)


@dataclass(frozen=True)
class WorldAttempt:
    grid: TileGrid
    start: tuple[int, int]
    objectives: tuple[Objective, ...]
    unreachable: tuple[int, ...]
    critique: str


def generate_world(
    session: _Session, story: str, inputs: WorldInputs, config: PipelineConfig
) -> WorldAttempt:
    """Bounded generate-validate-refine loop over the world map.

    Each round costs one world prompt.  Earlier maps ride along as
    references on retries; the last attempt is returned even if still
    invalid, with its unreachable objectives listed.
    """
    legend = inputs.legend
    walkable_set = frozenset(inputs.walkable)
    base = prompts.render_prompt(
        prompts.WORLD,
        story=story,
        tile_map_dict=repr(legend.entries),
        important_tiles_list=repr(list(inputs.important)),
        walkable_tiles_list=repr(list(inputs.walkable)),
    )
    legal_chars = set(legend.entries.values())
    references: list[str] = []
    feedback: str | None = None
    last: WorldAttempt | None = None
    last_error = "the backend produced no parseable world"

    for _ in range(max(1, config.max_refinement_rounds)):
        prompt = base
        if feedback is not None:
            prompt += prompts.render_prompt(
                prompts.WORLD_RETRY_SUFFIX,
                feedback=feedback,
                references="\n".join(references) or "(none)",
            )
        response = session.ask("world", prompt)
        try:
            raw = parse_grid(response)
        except StoryforgeError as exc:
            feedback = last_error = str(exc)
            continue
        unknown = sorted(set("".join(raw.rows)) - legal_chars - set(RESERVED_CHARS))
        if unknown:
            feedback = last_error = f"map uses tiles missing from the legend: {unknown!r}"
            references.append("```\n" + "\n".join(raw.rows) + "\n```")
            continue
        fill = most_common_walkable(raw, walkable_set)
        padded = pad_to_rectangle(raw, fill)

        stamped, objectives = place_objectives(
            session, story, legend, padded, walkable_set,
            config.n_objectives, config.parse_retries,
        )
        objective_cells = {o.position for o in objectives}
        center = (stamped.n_rows // 2, stamped.n_cols // 2)
        start = bfs_nearest_valid(
            stamped,
            center,
            lambda r, c: stamped.rows[r][c] in walkable_set and (r, c) not in objective_cells,
        )
        if start is None:
            feedback = last_error = "the map has no walkable cell left for the player"
            references.append("```\n" + "\n".join(stamped.rows) + "\n```")
            continue
        rows = [list(r) for r in stamped.rows]
        rows[start[0]][start[1]] = "@"
        world = TileGrid(tuple("".join(r) for r in rows))

        unreachable = tuple(
            i
            for i, obj in enumerate(objectives)
            if not astar(
                PathQuery(
                    grid=world,
                    walkable=walkable_set,
                    start=start,
                    goal=obj.position,
                    max_iterations=config.astar_iteration_cap,
                    goal_exempt=True,
                )
            ).found
        )
        critique = session.ask(
            "critique",
            prompts.render_prompt(
                prompts.CRITIQUE,
                map_rows="\n".join(world.rows),
                tile_map_dict=repr(legend.entries),
                story=story,
            ),
        )
        last = WorldAttempt(world, start, objectives, unreachable, critique)
        if not unreachable:
            break
        names = ", ".join(repr(objectives[i].description) for i in unreachable)
        feedback = f"these objectives cannot be reached from the player start: {names}"
        references.append("```\n" + "\n".join(world.rows) + "\n```")

    if last is None:
        raise ParseFailureError(f"world generation failed every round: {last_error}")
    return last


def select_scaling(
    session: _Session,
    story: str,
    grid: TileGrid,
    legend: TileLegend,
    config: PipelineConfig,
) -> ScalingPlan:
    """Pick tiles to enlarge and their footprint sizes; failures mean no scaling."""
    reply = session.ask(
        "scale_select",
        prompts.render_prompt(
            prompts.SCALE_SELECT,
            story=story,
            tile_map="\n".join(grid.rows),
            des2not=repr(legend.entries),
        ),
    )
    try:
        chars = parse_char_list(reply)
    except ParseFailureError:
        return EMPTY_PLAN
    present = set("".join(grid.rows))
    env_chars = set(legend.entries.values()) - set(RESERVED_CHARS)
    chars = tuple(ch for ch in chars if ch in env_chars and ch in present)
    if not chars:
        return EMPTY_PLAN

    sizes_reply = session.ask(
        "scale_sizes",
        prompts.render_prompt(prompts.SCALE_SIZES, to_scale=repr(list(chars))),
    )
    try:
        raw_sizes = parse_dict_literal(sizes_reply)
    except StoryforgeError:
        raw_sizes = {}
    limit = min(grid.n_rows, grid.n_cols)
    sizes = {}
    for ch in chars:
        try:
            size = int(raw_sizes.get(ch, 2))
        except (TypeError, ValueError):
            size = 2
        sizes[ch] = max(2, min(size, limit))
    return ScalingPlan(to_scale=chars, sizes=sizes)


def request_block_overrides(
    session: _Session, legend: TileLegend, config: PipelineConfig
) -> dict[str, str]:
    """Backend-proposed block names; a bad reply just means fallbacks."""
    reply = session.ask(
        "blocks",
        prompts.render_prompt(prompts.BLOCKS, tile_map_dict=repr(legend.entries)),
    )
    try:
        raw = parse_dict_literal(reply)
    except StoryforgeError:
        return {}
    return {
        str(k): str(v)
        for k, v in raw.items()
        if isinstance(k, str) and len(str(k)) == 1 and isinstance(v, str) and v
    }


def _masked_for_footprints(grid: TileGrid, classification: TileClassification) -> TileGrid:
    # scaled footprints count as blocked even when the anchor char is walkable
    rows = [list(r) for r in grid.rows]
    for r, row in enumerate(classification.labels):
        for c, label in enumerate(row):
            if label == int(TileRole.SCALED):
                rows[r][c] = "\x00"
    return TileGrid(tuple("".join(r) for r in rows))


def _upgrade_start_label(
    classification: TileClassification, start: tuple[int, int]
) -> TileClassification:
    labels = classification.to_mutable()
    labels[start[0]][start[1]] = int(TileRole.OBJECTIVE)
    return TileClassification.from_mutable(labels)


# --- orchestrator --------------------------------------------------------


def run_pipeline(
    config: PipelineConfig, trace: GenerationTrace | None = None
) -> tuple[LevelBundle, GenerationTrace]:
    """Run every stage and assemble the level bundle plus its trace.

    Pass a trace to keep whatever was recorded when a stage raises;
    callers use that to save partial artifacts on failure.
    """
    if trace is None:
        trace = GenerationTrace()
    session = _Session(config.backend, trace)

    story = generate_story(session, config)
    inputs = extract_world_inputs(session, story, config)
    protagonist, antagonist, npcs = _parse_cast(inputs.characters_text)
    spec = StorySpec(
        paragraphs=tuple(p for p in story.split("\n\n") if p.strip()),
        n_objectives=config.n_objectives,
        protagonist=protagonist,
        antagonist=antagonist,
        npcs=npcs,
        environment=", ".join(inputs.tile_names[:5]),
    )

    attempt = generate_world(session, story, inputs, config)
    grid_initial = attempt.grid
    start = attempt.start
    objectives = attempt.objectives
    walkable_set = frozenset(inputs.walkable)

    if config.scaling_enabled:
        plan = select_scaling(session, story, grid_initial, inputs.legend, config)
    else:
        plan = EMPTY_PLAN
    classification = classify_tiles(
        grid_initial, walkable_set, objectives, to_scale=set(plan.to_scale)
    )
    classification = _upgrade_start_label(classification, start)

    validator = None
    if config.safe_scaling:
        targets = [o.position for o in objectives]

        def validator(candidate: TileGrid) -> bool:
            return connectivity_check(candidate, walkable_set, start, targets).valid

    scaled: ScalingResult = apply_scaling(grid_initial, classification, plan, validator)

    build = build_submaps(
        scaled.grid,
        inputs.legend,
        objectives,
        walkable_set,
        rng_seed=config.seed,
        size=config.submap_size,
        waves=config.waves,
        n_items=config.items,
    )
    final_grid = build.grid
    final_legend = build.legend
    final_walkable = build.walkable

    post = connectivity_check(
        _masked_for_footprints(final_grid, scaled.classification),
        final_walkable,
        start,
        [o.position for o in objectives],
    )

    overrides = request_block_overrides(session, final_legend, config)
    stray = tuple(sorted(set("".join(final_grid.rows)) - set(final_legend.entries.values())))
    table = build_block_table(final_legend, overrides, extra_chars=stray)
    templates = add_fallback_templates(config.templates, scaled.placements)
    structures = stamp_structures(scaled.placements, templates, rng_seed=f"stamp:{config.seed}")
    world_blocks = tiles_to_blocks(final_grid, table, structures, config.height_base)

    validity = ValidityFlags(
        structural_ok=True,
        initial_paths_ok=not attempt.unreachable,
        post_scaling_ok=post.valid,
        unreachable=tuple(i for i, ok in enumerate(post.reachable) if not ok),
    )
    bundle = LevelBundle(
        seed=config.seed,
        backend=config.backend.name,
        config=config.to_dict(),
        story=spec,
        legend=final_legend,
        walkable=tuple(sorted(final_walkable)),
        important=inputs.important,
        start=start,
        grid_initial=grid_initial,
        grid=final_grid,
        classification=scaled.classification,
        objectives=objectives,
        plan=plan,
        placements=scaled.placements,
        structures=structures,
        portals=build.portals,
        submaps=build.submaps,
        block_world=world_blocks,
        validity=validity,
    )
    return bundle, trace


# --- narrative coherence --------------------------------------------------


def cosine_similarity(u: list[float], v: list[float]) -> float:
    dot = sum(a * b for a, b in zip(u, v))
    nu = math.sqrt(sum(a * a for a in u))
    nv = math.sqrt(sum(b * b for b in v))
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return dot / (nu * nv)


@dataclass(frozen=True)
class CoherenceReport:
    reconstructed: str
    similarity: float

    def to_dict(self) -> dict:
        return {"reconstructed": self.reconstructed, "similarity": self.similarity}


def reconstructed_similarity(
    backend: TextBackend,
    bundle: LevelBundle,
    trace: GenerationTrace | None = None,
    max_blocks: int = 600,
) -> CoherenceReport:
    """Round-trip check: rebuild a story from blocks, compare embeddings.

    The level's blocks go back to the backend as JSON, the reply is
    embedded alongside the original story, and their cosine similarity
    is the coherence score.
    """
    session = _Session(backend, trace if trace is not None else GenerationTrace())
    records = [
        {"block": name, "x": x, "y": y, "z": z}
        for (x, y, z), name in sorted(
            bundle.block_world.blocks.items(), key=lambda kv: (kv[0][0], kv[0][2], kv[0][1])
        )
    ]
    block_json = json.dumps(records[:max_blocks], indent=1, sort_keys=True)
    reconstructed = session.ask(
        "reconstruct", prompts.render_prompt(prompts.RECONSTRUCT, block_json=block_json)
    )
    original = session.embed("embed_story", bundle.story.text)
    rebuilt = session.embed("embed_reconstructed", reconstructed)
    return CoherenceReport(reconstructed, cosine_similarity(original, rebuilt))
