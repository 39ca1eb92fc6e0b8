"""The whole trip: a story becomes a validated, exportable level.

The offline stub backend stands in for a live language model, so this
runs anywhere and always produces the same level for the same seed.
Swap in ``LiveBackend()`` (plus STORYFORGE_API_KEY) for real text.
"""

from __future__ import annotations

from storyforge.backends import StubBackend
from storyforge.pipeline import GenerationTrace, PipelineConfig, run_pipeline

config = PipelineConfig(backend=StubBackend(seed=3), seed=3)
bundle, trace = run_pipeline(config, GenerationTrace())

print("story, first paragraph:")
print(bundle.story.paragraphs[0])
print()
print("legend:", bundle.legend.entries)
print()
print(bundle.grid.as_text())
print("objectives:")
for obj in bundle.objectives:
    print(f"  {obj.kind.value:15s} {obj.position}  {obj.description}")
print()
print(f"sub-maps: {[s.id for s in bundle.submaps]}")
print(f"scaled structures: {len(bundle.placements)}")
print(f"voxel blocks: {len(bundle.block_world.blocks)}")
v = bundle.validity
print(
    f"validity: structural={v.structural_ok} "
    f"paths={v.initial_paths_ok} post_scaling={v.post_scaling_ok}"
)
print(f"backend exchanges recorded: {len(trace.records)}")
