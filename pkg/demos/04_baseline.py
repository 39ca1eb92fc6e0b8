"""An evolutionary baseline grows a level with no story at all.

Genomes are 15x15 wall layouts plus objective positions; fitness is
the mean shortest path from the start to the objectives, with a heavy
penalty for each unreachable one.  Selection therefore pushes walls
into maze-like detours while keeping everything reachable.

A short run for demonstration; the calibrated settings live in the
test suite (population 50, 200 generations).
"""

from __future__ import annotations

from storyforge.evo import EvoConfig, evolve, genome_to_grid

config = EvoConfig(population_size=30, generations=40, rng_seed=2)
result = evolve(config)

print("generation  best    mean")
for entry in result.log[:: max(1, len(result.log) // 10)]:
    print(f"{entry.generation:10d}  {entry.best:6.2f}  {entry.mean:7.2f}")

print()
print(f"final best fitness: {result.best_fitness:.2f}")
print(genome_to_grid(result.best).as_text())
