"""One sentence in, a complete production manifest out.

Runs all four stages against the seeded mock suite, prints the manifest
summary and the final edit list, then proves determinism by running the same
seed again.
"""

import tempfile
from pathlib import Path

from dramaforge.manifest import RunStore
from dramaforge.model import Logline
from dramaforge.pipeline import PipelineConfig, run_pipeline
from dramaforge.providers.mocks import mock_suite

LOGLINE = "After being abandoned at the wedding, she returned as an investor."

with tempfile.TemporaryDirectory() as runs:
    manifest = run_pipeline(
        Logline(LOGLINE), mock_suite(seed=0).registry, PipelineConfig(n_scenes=2), runs, seed=0
    )
    print(f"run {manifest.run_id}: {manifest.status.value}")
    for stage, record in manifest.stage_records.items():
        print(
            f"  {stage:<16} outputs={record.outputs_hash[:10]} "
            f"attempts={len(record.attempts)} provider_calls={len(record.provider_calls)}"
        )

    store = RunStore(runs, manifest.run_id)
    post = store.load_stage("post")
    print("\nedit list:")
    for entry in post["edit_list"]:
        if entry["type"] == "clip":
            print(f"  clip  scene {entry['scene_id']} #{entry['clip_index']}  {entry['duration_s']:.1f}s")
        else:
            extra = f'  "{entry.get("overlay_text")}"' if entry.get("overlay_text") else ""
            print(f"  ==== {entry['kind']}{extra}")
    for sid, rec in post["scene_audio"].items():
        print(f"  scene {sid} music: {rec['track_id']} from bucket {rec['primary_bucket']}")

    second = run_pipeline(
        Logline(LOGLINE), mock_suite(seed=0).registry, PipelineConfig(n_scenes=2),
        Path(runs) / "again", seed=0,
    )
    a = (Path(runs) / manifest.run_id / "manifest.json").read_bytes()
    b = (Path(runs) / "again" / second.run_id / "manifest.json").read_bytes()
    print(f"\nsame seed, byte-identical manifests: {a == b}")
