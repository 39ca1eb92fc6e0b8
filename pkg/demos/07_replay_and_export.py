"""Record a run once, then replay it forever.

Every backend exchange lands in a trace.  Saved as a fixture (responses
keyed by prompt digest), the trace lets ReplayBackend reproduce the run
without any model: same bundle, same blocks, byte for byte.  The block
JSON and the top-down render round out the export surface.
"""

from __future__ import annotations

import tempfile
from pathlib import Path

from storyforge.backends import ReplayBackend, StubBackend
from storyforge.export import export_block_json, render_topdown, save_bundle
from storyforge.pipeline import GenerationTrace, PipelineConfig, run_pipeline

workdir = Path(tempfile.mkdtemp(prefix="storyforge-demo-"))

# first run: the stub plays the model and the trace records everything
trace = GenerationTrace()
bundle, trace = run_pipeline(
    PipelineConfig(backend=StubBackend(seed=3), seed=3), trace
)
fixture = workdir / "run.json"
trace.save_fixture(fixture)
print(f"recorded {len(trace.fixture_records())} exchanges to {fixture}")

# second run: no stub, no model, just the fixture
replayed, _ = run_pipeline(
    PipelineConfig(backend=ReplayBackend(fixture), seed=3), GenerationTrace()
)

save_bundle(bundle, workdir / "original.json")
save_bundle(replayed, workdir / "replayed.json")
original = (workdir / "original.json").read_text(encoding="utf-8")
copy = (workdir / "replayed.json").read_text(encoding="utf-8")
# the backend name is provenance, not content; everything else must agree
assert copy == original.replace('"stub"', '"replay"')
print("replayed bundle matches the original byte for byte (modulo backend name)")

blocks = export_block_json(bundle.block_world)
(workdir / "blocks.json").write_text(blocks, encoding="utf-8")
print(f"block export: {len(blocks.splitlines())} lines, one voxel record each")

(workdir / "level.ppm").write_bytes(render_topdown(bundle.grid, cell_px=8))
print(f"renders and exports in {workdir}")
