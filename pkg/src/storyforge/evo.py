"""Evolutionary baseline generator for objective-driven 15 x 15 maps.

The genome is a wall/ground grid plus a start cell and a set of objective
cells kept as explicit positions.  Fitness is the mean shortest-path step
count from the start to every objective when all are reachable; otherwise
the mean over the reachable ones minus a per-miss penalty larger than any
achievable path mean, so no invalid map can outrank a valid one.

Search is a plain generational GA: tournament selection, uniform
crossover over cells and positions, per-cell flip mutation, position
repair (in-bounds, distinct, cells carved to ground), and elitism, all
drawn from one seeded RNG stream so runs are reproducible bit-for-bit.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .grid import TileGrid, TileLegend
from .pathfind import bfs_distances, target_distance

GRID_SIZE = 15
GROUND_CHAR = "."
WALL_CHAR = "W"
OBJECTIVE_CHAR = "O"
FITNESS_WALKABLE = frozenset({GROUND_CHAR})
EVO_WALKABLE = frozenset({GROUND_CHAR, OBJECTIVE_CHAR})
EVO_LEGEND = TileLegend(
    {
        "Ground": GROUND_CHAR,
        "Wall": WALL_CHAR,
        "Objective": OBJECTIVE_CHAR,
        "Protagonist": "@",
        "Antagonist": "#",
    }
)

# Larger than any possible mean path length on the grid.
UNREACHABLE_PENALTY = GRID_SIZE * GRID_SIZE
INITIAL_WALL_RATE = 0.35


@dataclass(frozen=True)
class Genome:
    cells: tuple[str, ...]
    start: tuple[int, int]
    objectives: tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class EvoConfig:
    population_size: int = 50
    generations: int = 200
    mutation_rate: float = 0.02
    tournament_size: int = 3
    elitism_count: int = 2
    rng_seed: int = 0
    n_objectives: int = 8

    def __post_init__(self) -> None:
        if self.population_size < 2:
            raise ValueError("population_size must be >= 2")
        if self.generations < 0:
            raise ValueError("generations must be >= 0")
        if not 0.0 < self.mutation_rate < 1.0:
            raise ValueError("mutation_rate must lie strictly between 0 and 1")
        if self.tournament_size < 1:
            raise ValueError("tournament_size must be >= 1")
        if not 0 <= self.elitism_count < self.population_size:
            raise ValueError("elitism_count must be in [0, population_size)")
        if self.n_objectives < 1:
            raise ValueError("n_objectives must be >= 1")


@dataclass(frozen=True)
class GenerationStats:
    generation: int
    best: float
    mean: float


@dataclass(frozen=True)
class EvoResult:
    best: Genome
    best_fitness: float
    log: tuple[GenerationStats, ...]


def validate_genome(genome: Genome, n_objectives: int | None = None) -> None:
    """Raise ValueError on any violated genome invariant."""
    if len(genome.cells) != GRID_SIZE or any(len(r) != GRID_SIZE for r in genome.cells):
        raise ValueError(f"genome grid must be {GRID_SIZE}x{GRID_SIZE}")
    bad = set("".join(genome.cells)) - {GROUND_CHAR, WALL_CHAR}
    if bad:
        raise ValueError(f"genome cells outside alphabet: {sorted(bad)}")
    positions = [genome.start, *genome.objectives]
    for r, c in positions:
        if not (0 <= r < GRID_SIZE and 0 <= c < GRID_SIZE):
            raise ValueError(f"position {(r, c)} out of bounds")
    if len(set(positions)) != len(positions):
        raise ValueError("start and objective positions must be distinct")
    if n_objectives is not None and len(genome.objectives) != n_objectives:
        raise ValueError(f"expected {n_objectives} objectives, got {len(genome.objectives)}")


def fitness(genome: Genome) -> float:
    grid = TileGrid(genome.cells)
    distances = bfs_distances(grid, FITNESS_WALKABLE, genome.start)
    reachable: list[int] = []
    missing = 0
    for pos in genome.objectives:
        d = target_distance(distances, grid, pos)
        if d is None:
            missing += 1
        else:
            reachable.append(d)
    base = sum(reachable) / len(reachable) if reachable else 0.0
    if missing:
        return base - UNREACHABLE_PENALTY * missing
    return base


def _carve(cells: list[list[str]], positions: list[tuple[int, int]]) -> None:
    for r, c in positions:
        cells[r][c] = GROUND_CHAR


def _repair(
    rng: random.Random,
    cells: list[list[str]],
    start: tuple[int, int],
    objectives: list[tuple[int, int]],
) -> Genome:
    """Clamp positions in bounds, resample collisions, carve their cells."""
    def clamp(pos: tuple[int, int]) -> tuple[int, int]:
        return (min(max(pos[0], 0), GRID_SIZE - 1), min(max(pos[1], 0), GRID_SIZE - 1))

    start = clamp(start)
    used = {start}
    fixed: list[tuple[int, int]] = []
    for pos in objectives:
        pos = clamp(pos)
        while pos in used:
            pos = (rng.randrange(GRID_SIZE), rng.randrange(GRID_SIZE))
        used.add(pos)
        fixed.append(pos)
    _carve(cells, [start, *fixed])
    return Genome(tuple("".join(r) for r in cells), start, tuple(fixed))


def random_genome(rng: random.Random, n_objectives: int) -> Genome:
    cells = [
        [WALL_CHAR if rng.random() < INITIAL_WALL_RATE else GROUND_CHAR for _ in range(GRID_SIZE)]
        for _ in range(GRID_SIZE)
    ]
    start = (rng.randrange(GRID_SIZE), rng.randrange(GRID_SIZE))
    objectives = [(rng.randrange(GRID_SIZE), rng.randrange(GRID_SIZE)) for _ in range(n_objectives)]
    return _repair(rng, cells, start, objectives)


def _tournament(rng: random.Random, fits: list[float], k: int) -> int:
    best = rng.randrange(len(fits))
    for _ in range(k - 1):
        i = rng.randrange(len(fits))
        if fits[i] > fits[best]:
            best = i
    return best


def _crossover(rng: random.Random, a: Genome, b: Genome) -> tuple[list[list[str]], tuple[int, int], list[tuple[int, int]]]:
    cells = [
        [a.cells[r][c] if rng.random() < 0.5 else b.cells[r][c] for c in range(GRID_SIZE)]
        for r in range(GRID_SIZE)
    ]
    start = a.start if rng.random() < 0.5 else b.start
    objectives = [
        oa if rng.random() < 0.5 else ob for oa, ob in zip(a.objectives, b.objectives)
    ]
    return cells, start, objectives


def _mutate_cells(rng: random.Random, cells: list[list[str]], rate: float) -> None:
    for row in cells:
        for c in range(GRID_SIZE):
            if rng.random() < rate:
                row[c] = GROUND_CHAR if row[c] == WALL_CHAR else WALL_CHAR


def evolve(config: EvoConfig) -> EvoResult:
    """Run the GA; the best fitness in the log never decreases (elitism)."""
    rng = random.Random(config.rng_seed)
    population = [random_genome(rng, config.n_objectives) for _ in range(config.population_size)]
    fits = [fitness(g) for g in population]
    log = [GenerationStats(0, max(fits), sum(fits) / len(fits))]

    for gen in range(1, config.generations + 1):
        order = sorted(range(len(population)), key=lambda i: (-fits[i], i))
        elite_idx = order[: config.elitism_count]
        next_pop = [population[i] for i in elite_idx]
        next_fits = [fits[i] for i in elite_idx]
        while len(next_pop) < config.population_size:
            a = population[_tournament(rng, fits, config.tournament_size)]
            b = population[_tournament(rng, fits, config.tournament_size)]
            cells, start, objectives = _crossover(rng, a, b)
            _mutate_cells(rng, cells, config.mutation_rate)
            child = _repair(rng, cells, start, objectives)
            next_pop.append(child)
            next_fits.append(fitness(child))
        population, fits = next_pop, next_fits
        log.append(GenerationStats(gen, max(fits), sum(fits) / len(fits)))
        if log[-1].best < log[-2].best:
            raise RuntimeError("elitism violated: best fitness decreased")

    best_i = min(range(len(population)), key=lambda i: (-fits[i], i))
    return EvoResult(population[best_i], fits[best_i], tuple(log))


def genome_to_grid(genome: Genome) -> TileGrid:
    """Displayable map: genome cells with '@' and objective markers overlaid."""
    cells = [list(r) for r in genome.cells]
    for r, c in genome.objectives:
        cells[r][c] = OBJECTIVE_CHAR
    cells[genome.start[0]][genome.start[1]] = "@"
    return TileGrid(tuple("".join(r) for r in cells))


def log_to_csv(log: tuple[GenerationStats, ...] | list[GenerationStats]) -> str:
    lines = ["generation,best,mean"]
    lines += [f"{s.generation},{s.best},{s.mean}" for s in log]
    return "\n".join(lines) + "\n"
