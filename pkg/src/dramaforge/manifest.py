"""Persisted run state: one manifest plus one canonical artifact per stage.

Layout under the runs root:

    runs/<run_id>/manifest.json
    runs/<run_id>/stages/<stage>.json

Stage artifacts are canonical JSON, so their hashes are stable and resume can
verify integrity before trusting a completed stage.
"""

from __future__ import annotations

from pathlib import Path
from .canonical import read_json, sha256_hex, write_json
from .errors import ManifestCorruptError
from .model import RunManifest

STAGES = ("story", "assets_prompts", "frames_videos", "post")


def run_id_for(logline: str, seed: int) -> str:
    return "run-" + sha256_hex(f"{seed}|{logline}")[:12]


class RunStore:
    def __init__(self, runs_root: str | Path, run_id: str):
        self.run_id = run_id
        self.root = Path(runs_root) / run_id
        self.stage_dir = self.root / "stages"

    @property
    def manifest_path(self) -> Path:
        return self.root / "manifest.json"

    def exists(self) -> bool:
        return self.manifest_path.exists()

    def save_manifest(self, manifest: RunManifest) -> None:
        self.root.mkdir(parents=True, exist_ok=True)
        write_json(self.manifest_path, manifest.to_dict())

    def load_manifest(self) -> RunManifest:
        if not self.exists():
            raise ManifestCorruptError(f"no manifest for run {self.run_id!r}")
        return RunManifest.from_dict(read_json(self.manifest_path))

    def stage_path(self, stage: str) -> Path:
        return self.stage_dir / f"{stage}.json"

    def save_stage(self, stage: str, payload: dict) -> str:
        self.stage_dir.mkdir(parents=True, exist_ok=True)
        return write_json(self.stage_path(stage), payload)

    def load_stage(self, stage: str) -> dict:
        return read_json(self.stage_path(stage))

    def verify_stage(self, stage: str, expected_hash: str) -> dict:
        """Load a stage artifact and check it against the recorded hash."""
        path = self.stage_path(stage)
        if not path.exists():
            raise ManifestCorruptError(f"stage artifact missing: {stage}")
        data = path.read_bytes()
        if sha256_hex(data) != expected_hash:
            raise ManifestCorruptError(f"stage artifact hash mismatch: {stage}")
        return read_json(path)
