"""Storyforge: turn short stories into validated tile and voxel game levels.

The pieces compose as a pipeline: a text backend writes a story and a
tile vocabulary, the world builder lays out a map, objectives are
anchored and path-checked, selected tiles grow into multi-cell
footprints, objective-specific sub-maps are attached through portals,
and the result exports to block worlds, images, and one replayable
bundle.  Every backend exchange is traced so runs can be replayed
byte-for-byte without network access.
"""

from .backends import (
    LiveBackend,
    ReplayBackend,
    StubBackend,
    TextBackend,
    hashed_bag_embedding,
)
from .errors import StoryforgeError
from .evo import EvoConfig, EvoResult, evolve, fitness, genome_to_grid, log_to_csv
from .export import (
    BlockWorld,
    LevelBundle,
    ValidityFlags,
    build_block_table,
    bundle_from_json,
    bundle_to_json,
    export_block_json,
    import_block_json,
    load_bundle,
    render_topdown,
    save_bundle,
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
    load_level_text,
    pad_to_rectangle,
    parse_grid,
    parse_legend,
    save_level_text,
    tile_frequencies,
)
from .metrics import (
    CorpusReport,
    MapEvaluation,
    aspao,
    composite_score,
    corpus_vutr,
    evaluate_map,
    ranking_weights,
    shannon_entropy,
    unwalkable_ratio,
)
from .pathfind import (
    ConnectivityResult,
    PathQuery,
    PathResult,
    PathStatus,
    astar,
    bfs_distances,
    bfs_nearest_valid,
    connectivity_check,
    target_distance,
)
from .pipeline import (
    CoherenceReport,
    GenerationTrace,
    PipelineConfig,
    cosine_similarity,
    reconstructed_similarity,
    run_pipeline,
)
from .scaling import (
    EMPTY_PLAN,
    Placement,
    ScalingPlan,
    ScalingResult,
    StructureTemplate,
    apply_scaling,
    fallback_template,
    stamp_structures,
)
from .submap import Portal, SubMap, build_submaps, generate_arena, generate_collect, generate_maze

__version__ = "0.1.0"

__all__ = [
    "BlockWorld",
    "CoherenceReport",
    "ConnectivityResult",
    "CorpusReport",
    "EMPTY_PLAN",
    "EvoConfig",
    "EvoResult",
    "GenerationTrace",
    "LevelBundle",
    "LiveBackend",
    "MapEvaluation",
    "Objective",
    "ObjectiveKind",
    "PathQuery",
    "PathResult",
    "PathStatus",
    "PipelineConfig",
    "Placement",
    "Portal",
    "ReplayBackend",
    "ScalingPlan",
    "ScalingResult",
    "StorySpec",
    "StoryforgeError",
    "StructureTemplate",
    "StubBackend",
    "SubMap",
    "TextBackend",
    "TileClassification",
    "TileGrid",
    "TileLegend",
    "TileRole",
    "ValidityFlags",
    "apply_scaling",
    "aspao",
    "astar",
    "bfs_distances",
    "bfs_nearest_valid",
    "build_block_table",
    "build_submaps",
    "bundle_from_json",
    "bundle_to_json",
    "classify_tiles",
    "composite_score",
    "connectivity_check",
    "corpus_vutr",
    "cosine_similarity",
    "evaluate_map",
    "evolve",
    "export_block_json",
    "fallback_template",
    "fitness",
    "generate_arena",
    "generate_collect",
    "generate_maze",
    "genome_to_grid",
    "hashed_bag_embedding",
    "import_block_json",
    "load_bundle",
    "load_level_text",
    "log_to_csv",
    "pad_to_rectangle",
    "parse_grid",
    "parse_legend",
    "ranking_weights",
    "reconstructed_similarity",
    "render_topdown",
    "run_pipeline",
    "save_bundle",
    "save_level_text",
    "shannon_entropy",
    "stamp_structures",
    "target_distance",
    "tile_frequencies",
    "tiles_to_blocks",
    "unwalkable_ratio",
    "__version__",
]
