"""Regenerate the replay fixture and its golden artifacts.

The fixture records every backend exchange from one stub run (story
seed 26, forest theme, passes all validity checks) plus the coherence
round trip on the same bundle, keyed by prompt digest.  The goldens
are the artifacts of replaying that fixture with pipeline seed 7; the
format-stability tests compare against them byte for byte.

Run from the repository root:

    python3 tools/make_fixtures.py
"""

from __future__ import annotations

import shutil
import sys
from pathlib import Path

from storyforge.backends import StubBackend
from storyforge.cli import main
from storyforge.pipeline import (
    GenerationTrace,
    PipelineConfig,
    reconstructed_similarity,
    run_pipeline,
)

STORY_SEED = 26
REPLAY_SEED = 7


def build(root: Path) -> None:
    fixtures = root / "fixtures"
    fixtures.mkdir(exist_ok=True)

    trace = GenerationTrace()
    config = PipelineConfig(backend=StubBackend(seed=STORY_SEED), seed=STORY_SEED)
    bundle, trace = run_pipeline(config, trace)
    # record the coherence exchanges too so `coherence --backend replay` works
    reconstructed_similarity(StubBackend(seed=STORY_SEED), bundle, trace)
    fixture_path = fixtures / "forest-01.json"
    trace.save_fixture(fixture_path)
    print(f"fixture: {fixture_path} ({len(trace.fixture_records())} records)")

    golden = fixtures / "golden" / "forest-01"
    if golden.exists():
        shutil.rmtree(golden)
    code = main(
        [
            "generate",
            "--backend",
            "replay",
            "--fixtures",
            str(fixture_path),
            "--seed",
            str(REPLAY_SEED),
            "--out",
            str(golden),
        ]
    )
    if code != 0:
        raise SystemExit(f"golden replay failed with exit code {code}")
    print(f"goldens: {', '.join(sorted(p.name for p in golden.iterdir()))}")


if __name__ == "__main__":
    build(Path(__file__).resolve().parent.parent)
    sys.exit(0)
