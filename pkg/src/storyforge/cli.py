"""Command line interface.

Subcommands: generate, evaluate, scale, baseline, render, coherence.
Exit codes: 0 success, 1 operational failure (generation or validation
went wrong), 2 usage or configuration error (bad flags, missing files,
missing API key).
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from .backends import (
    API_KEY_VAR,
    LiveBackend,
    ReplayBackend,
    StubBackend,
    TextBackend,
)
from .errors import MissingApiKeyError, StoryforgeError
from .evo import EvoConfig, evolve, fitness, genome_to_grid, log_to_csv
from .export import (
    export_block_json,
    import_block_json,
    load_bundle,
    render_topdown,
    save_bundle,
)
from .grid import (
    Objective,
    ObjectiveKind,
    TileGrid,
    classify_tiles,
    load_level_text,
    save_level_text,
)
from .metrics import CorpusReport, evaluate_map
from .pipeline import (
    GenerationTrace,
    PipelineConfig,
    reconstructed_similarity,
    run_pipeline,
)
from .scaling import ScalingPlan, apply_scaling


class UsageError(Exception):
    """Bad invocation caught after argparse; maps to exit code 2."""


def make_backend(args: argparse.Namespace) -> TextBackend:
    if args.backend == "stub":
        return StubBackend(seed=args.seed)
    if args.backend == "replay":
        if not args.fixtures:
            raise UsageError("--backend replay requires --fixtures PATH")
        if not Path(args.fixtures).is_file():
            raise UsageError(f"fixture not found: {args.fixtures}")
        return ReplayBackend(args.fixtures)
    return LiveBackend()  # raises MissingApiKeyError without credentials


def _run_dir(args: argparse.Namespace) -> Path:
    if args.out:
        return Path(args.out)
    stamp = time.strftime("%Y%m%d-%H%M%S")
    return Path("runs") / f"{stamp}-seed{args.seed}"


def _add_backend_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--backend",
        choices=("stub", "replay", "live"),
        default="stub",
        help="text backend (default: stub)",
    )
    p.add_argument("--fixtures", help="replay fixture JSON or trace JSONL")


def cmd_generate(args: argparse.Namespace) -> int:
    backend = make_backend(args)
    config = PipelineConfig(
        backend=backend,
        seed=args.seed,
        n_paragraphs=args.paragraphs,
        n_objectives=args.objectives,
        max_refinement_rounds=args.rounds,
        scaling_enabled=not args.no_scaling,
        submap_size=args.submap_size,
        waves=args.waves,
        items=args.items,
        safe_scaling=args.safe_scaling,
    )
    run_dir = _run_dir(args)
    run_dir.mkdir(parents=True, exist_ok=True)
    trace = GenerationTrace()
    try:
        bundle, trace = run_pipeline(config, trace)
    except StoryforgeError as exc:
        # keep the partial conversation for postmortems, then fail honestly
        if trace.records:
            trace.to_jsonl(run_dir / "trace.jsonl.partial")
        (run_dir / "error.txt.partial").write_text(f"{exc}\n", encoding="utf-8")
        print(f"generation failed: {exc}", file=sys.stderr)
        print(f"partial artifacts in {run_dir}", file=sys.stderr)
        return 1

    save_bundle(bundle, run_dir / "bundle.json")
    trace.to_jsonl(run_dir / "trace.jsonl")
    save_level_text(bundle.grid, bundle.legend, run_dir / "level.txt", run_dir / "legend.txt")
    (run_dir / "blocks.json").write_text(
        export_block_json(bundle.block_world), encoding="utf-8"
    )
    (run_dir / "level.ppm").write_bytes(render_topdown(bundle.grid, cell_px=args.cell_px))
    for submap in bundle.submaps:
        (run_dir / f"{submap.id}.txt").write_text(submap.grid.as_text(), encoding="utf-8")

    v = bundle.validity
    print(f"run directory: {run_dir}")
    print(f"grid: {bundle.grid.n_rows}x{bundle.grid.n_cols}")
    print(f"objectives: {len(bundle.objectives)}  submaps: {len(bundle.submaps)}")
    print(f"scaled tiles: {len(bundle.placements)}  blocks: {len(bundle.block_world.blocks)}")
    print(
        "validity: "
        f"structural={v.structural_ok} initial_paths={v.initial_paths_ok} "
        f"post_scaling={v.post_scaling_ok}"
    )
    if not (v.structural_ok and v.initial_paths_ok and v.post_scaling_ok):
        print("level failed validation; see bundle validity flags", file=sys.stderr)
        return 1
    return 0


def _bundle_paths(inputs: list[str]) -> list[Path]:
    paths: list[Path] = []
    for raw in inputs:
        p = Path(raw)
        if p.is_dir():
            paths.extend(sorted(q for q in p.rglob("*.json") if q.name != "blocks.json"))
        elif p.is_file():
            paths.append(p)
        else:
            raise UsageError(f"no such bundle or directory: {raw}")
    return paths


def cmd_evaluate(args: argparse.Namespace) -> int:
    evaluations = []
    for p in _bundle_paths(args.bundles):
        try:
            bundle = load_bundle(p)
        except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
            raise UsageError(f"not a level bundle: {p} ({exc})") from exc
        evaluations.append(
            evaluate_map(
                map_id=p.stem if p.stem != "bundle" else p.parent.name,
                grid=bundle.grid,
                walkable=set(bundle.walkable),
                start=bundle.start,
                objectives=[o.position for o in bundle.objectives],
            )
        )
    report = CorpusReport(tuple(evaluations))
    print(report.to_table())
    if args.out:
        Path(args.out).write_text(
            json.dumps(report.to_json_dict(), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )
        print(f"report written to {args.out}")
    return 0


def _parse_tile_sizes(spec: str) -> dict[str, int]:
    sizes: dict[str, int] = {}
    for token in spec.split(","):
        token = token.strip()
        if not token:
            continue
        char, _, size = token.partition("=")
        if len(char) != 1 or not size.isdigit():
            raise UsageError(f"bad --tiles entry {token!r}; expected CHAR=SIZE")
        sizes[char] = int(size)
    if not sizes:
        raise UsageError("--tiles named no tiles")
    return sizes


def _parse_cell(text: str) -> tuple[int, int]:
    parts = text.split(",")
    if len(parts) != 2:
        raise UsageError(f"bad cell {text!r}; expected ROW,COL")
    try:
        return (int(parts[0]), int(parts[1]))
    except ValueError as exc:
        raise UsageError(f"bad cell {text!r}; expected integers") from exc


def cmd_scale(args: argparse.Namespace) -> int:
    grid, legend = load_level_text(args.map, args.legend)
    sizes = _parse_tile_sizes(args.tiles)
    walkable = set(args.walkable)
    objectives = tuple(
        Objective(f"objective {i}", ObjectiveKind.CHAT_WITH_NPC,
                  grid.rows[r][c], (r, c))
        for i, (r, c) in enumerate(_parse_cell(o) for o in args.objective or [])
    )
    classification = classify_tiles(grid, walkable, objectives, to_scale=set(sizes))
    plan = ScalingPlan(to_scale=tuple(sorted(sizes)), sizes=sizes)
    result = apply_scaling(grid, classification, plan)
    out_map = Path(args.out)
    out_map.parent.mkdir(parents=True, exist_ok=True)
    save_level_text(result.grid, legend, out_map, out_map.with_suffix(".legend.txt"))
    for p in result.placements:
        print(f"scaled {p.tile!r} x{p.size} at {p.top_left} (score {p.score})")
    print(f"{len(result.placements)} placements; scaled map written to {out_map}")
    return 0


def cmd_baseline(args: argparse.Namespace) -> int:
    config = EvoConfig(
        population_size=args.population,
        generations=args.generations,
        rng_seed=args.seed,
        n_objectives=args.objectives,
    )
    result = evolve(config)
    out_dir = _run_dir(args)
    out_dir.mkdir(parents=True, exist_ok=True)
    grid = genome_to_grid(result.best)
    (out_dir / "baseline_map.txt").write_text(grid.as_text(), encoding="utf-8")
    (out_dir / "fitness_log.csv").write_text(log_to_csv(result.log), encoding="utf-8")
    (out_dir / "baseline.ppm").write_bytes(render_topdown(grid))
    # metrics run on the raw cells so ASPAO agrees with the fitness log
    evaluation = evaluate_map(
        map_id=f"baseline-seed{args.seed}",
        grid=TileGrid(result.best.cells),
        walkable={"."},
        start=result.best.start,
        objectives=result.best.objectives,
    )
    (out_dir / "evaluation.json").write_text(
        json.dumps(evaluation.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    valid = result.best_fitness >= 0  # negative fitness marks unreachable objectives
    print(f"best fitness: {result.best_fitness:.2f} (all objectives reachable: {valid})")
    print(f"artifacts in {out_dir}")
    return 0 if valid else 1


def cmd_render(args: argparse.Namespace) -> int:
    path = Path(args.input)
    if not path.is_file():
        raise UsageError(f"no such input: {args.input}")
    if path.suffix == ".json":
        data = json.loads(path.read_text(encoding="utf-8"))
        if isinstance(data, list):
            source = import_block_json(path.read_text(encoding="utf-8"))
        else:
            bundle = load_bundle(path)
            source = bundle.block_world if args.what == "blocks" else bundle.grid
    else:
        rows = [ln.rstrip() for ln in path.read_text(encoding="utf-8").splitlines() if ln.strip()]
        source = TileGrid(tuple(rows))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_bytes(render_topdown(source, cell_px=args.cell_px))
    print(f"render written to {out}")
    return 0


def cmd_coherence(args: argparse.Namespace) -> int:
    path = Path(args.bundle)
    if not path.is_file():
        raise UsageError(f"no such bundle: {args.bundle}")
    bundle = load_bundle(path)
    backend = make_backend(args)
    report = reconstructed_similarity(backend, bundle)
    payload = json.dumps(report.to_dict(), indent=2, sort_keys=True)
    print(payload)
    if args.out:
        Path(args.out).write_text(payload + "\n", encoding="utf-8")
    return 0


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(
        prog="storyforge",
        description="Turn short stories into validated tile and voxel game levels.",
    )
    parser.add_argument("--config", help="JSON file of default flag values (flags win)")
    sub = parser.add_subparsers(dest="command", required=True)
    subparsers: dict[str, argparse.ArgumentParser] = {}

    p = sub.add_parser("generate", help="run the story-to-level pipeline")
    _add_backend_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output directory (default: runs/<stamp>-seed<seed>)")
    p.add_argument("--paragraphs", type=int, default=5)
    p.add_argument("--objectives", type=int, default=8)
    p.add_argument("--rounds", type=int, default=3, help="world refinement budget")
    p.add_argument("--submap-size", type=int, default=15)
    p.add_argument("--waves", type=int, default=3)
    p.add_argument("--items", type=int, default=5)
    p.add_argument("--cell-px", type=int, default=8)
    p.add_argument("--safe-scaling", action="store_true",
                   help="roll back scaling stamps that break objective paths")
    p.add_argument("--no-scaling", action="store_true", help="skip tile scaling entirely")
    p.set_defaults(func=cmd_generate)
    subparsers["generate"] = p

    p = sub.add_parser("evaluate", help="score generated levels")
    p.add_argument("bundles", nargs="+", help="bundle.json files or directories of them")
    p.add_argument("--seed", type=int, default=0, help="accepted for interface parity")
    p.add_argument("--out", help="write the JSON report here")
    p.set_defaults(func=cmd_evaluate)
    subparsers["evaluate"] = p

    p = sub.add_parser("scale", help="apply tile scaling to a level file")
    p.add_argument("--map", required=True, help="level map text file")
    p.add_argument("--legend", required=True, help="legend sidecar file")
    p.add_argument("--walkable", required=True, help="walkable chars, e.g. 'gpb'")
    p.add_argument("--tiles", required=True, help="scaling spec, e.g. 'T=2,h=3'")
    p.add_argument("--objective", action="append", help="protected cell ROW,COL")
    p.add_argument("--seed", type=int, default=0, help="accepted for interface parity")
    p.add_argument("--out", required=True, help="output map path")
    p.set_defaults(func=cmd_scale)
    subparsers["scale"] = p

    p = sub.add_parser("baseline", help="evolutionary level baseline")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--generations", "--gens", dest="generations", type=int, default=200)
    p.add_argument("--population", "--pop", dest="population", type=int, default=50)
    p.add_argument("--objectives", type=int, default=8)
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_baseline)
    subparsers["baseline"] = p

    p = sub.add_parser("render", help="raster a level or block file to PPM")
    p.add_argument("input", help="bundle.json, blocks.json, or level.txt")
    p.add_argument("--what", choices=("grid", "blocks"), default="grid",
                   help="which layer of a bundle to draw")
    p.add_argument("--cell-px", type=int, default=8)
    p.add_argument("--seed", type=int, default=0, help="accepted for interface parity")
    p.add_argument("--out", required=True, help="output .ppm path")
    p.set_defaults(func=cmd_render)
    subparsers["render"] = p

    p = sub.add_parser("coherence", help="story round-trip similarity for a bundle")
    p.add_argument("bundle", help="bundle.json path")
    _add_backend_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write the JSON report here")
    p.set_defaults(func=cmd_coherence)
    subparsers["coherence"] = p

    return parser, subparsers


def main(argv: list[str] | None = None) -> int:
    parser, subparsers = build_parser()
    args = parser.parse_args(argv)

    if args.config:
        # config supplies defaults; explicit flags keep their values
        try:
            overrides = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            print(f"cannot read --config {args.config}: {exc}", file=sys.stderr)
            return 2
        if not isinstance(overrides, dict):
            print(f"--config {args.config} must hold a JSON object", file=sys.stderr)
            return 2
        sub = subparsers[args.command]
        for key, value in overrides.items():
            dest = key.replace("-", "_")
            if hasattr(args, dest) and getattr(args, dest) == sub.get_default(dest):
                setattr(args, dest, value)

    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except MissingApiKeyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: missing file: {exc}", file=sys.stderr)
        return 2
    except StoryforgeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
