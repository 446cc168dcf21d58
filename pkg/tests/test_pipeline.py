import hashlib
from pathlib import Path

import numpy as np
import pytest

from dramaforge.canonical import raster_from_wire
from dramaforge.errors import ManifestCorruptError, MissingArtifactError, StageFatalError
from dramaforge.manifest import STAGES, RunStore, run_id_for
from dramaforge.model import Logline, RunStatus
from dramaforge.pipeline import PipelineConfig, assemble, resume, run_pipeline
from dramaforge.providers.mocks import mock_suite

LOG = Logline("A fired engineer returns as the client.")


def manifest_bytes(runs_dir, run_id) -> bytes:
    return (Path(runs_dir) / run_id / "manifest.json").read_bytes()


@pytest.fixture(scope="module")
def complete_run(tmp_path_factory):
    runs = tmp_path_factory.mktemp("runs")
    suite = mock_suite(seed=0)
    manifest = run_pipeline(LOG, suite.registry, PipelineConfig(), runs, seed=0)
    return runs, manifest


def test_run_completes_all_stages(complete_run):
    _, manifest = complete_run
    assert manifest.status is RunStatus.COMPLETE
    assert list(manifest.stage_records) == list(STAGES)
    for record in manifest.stage_records.values():
        assert record.outputs_hash
        assert record.provider_calls


def test_same_seed_byte_identical(complete_run, tmp_path):
    runs, manifest = complete_run
    suite = mock_suite(seed=0)
    m2 = run_pipeline(LOG, suite.registry, PipelineConfig(), tmp_path, seed=0)
    assert manifest_bytes(runs, manifest.run_id) == manifest_bytes(tmp_path, m2.run_id)


def test_different_seed_differs(complete_run, tmp_path):
    runs, manifest = complete_run
    suite = mock_suite(seed=1)
    m2 = run_pipeline(LOG, suite.registry, PipelineConfig(), tmp_path, seed=1)
    assert m2.run_id != manifest.run_id
    assert manifest_bytes(tmp_path, m2.run_id) != manifest_bytes(runs, manifest.run_id)


@pytest.mark.parametrize("stage", STAGES[:-1])
def test_kill_and_resume_identical(complete_run, tmp_path, stage):
    runs, manifest = complete_run
    suite = mock_suite(seed=0)
    partial = run_pipeline(LOG, suite.registry, PipelineConfig(), tmp_path, seed=0, stop_after=stage)
    assert partial.status is RunStatus.RUNNING
    resumed = resume(manifest.run_id, mock_suite(seed=0).registry, PipelineConfig(), tmp_path)
    assert resumed.status is RunStatus.COMPLETE
    assert manifest_bytes(tmp_path, manifest.run_id) == manifest_bytes(runs, manifest.run_id)


def test_resume_complete_run_is_noop(complete_run):
    runs, manifest = complete_run
    before = manifest_bytes(runs, manifest.run_id)
    resumed = resume(manifest.run_id, mock_suite(seed=0).registry, PipelineConfig(), runs)
    assert resumed.status is RunStatus.COMPLETE
    assert manifest_bytes(runs, manifest.run_id) == before


def test_tampered_stage_detected(complete_run, tmp_path):
    suite = mock_suite(seed=0)
    manifest = run_pipeline(LOG, suite.registry, PipelineConfig(), tmp_path, seed=0, stop_after="story")
    stage_path = Path(tmp_path) / manifest.run_id / "stages" / "story.json"
    data = stage_path.read_bytes().replace(b"scene", b"zcene", 1)
    stage_path.write_bytes(data)
    with pytest.raises(ManifestCorruptError):
        resume(manifest.run_id, mock_suite(seed=0).registry, PipelineConfig(), tmp_path)


def test_always_failing_provider_is_stage_fatal(tmp_path):
    def broken(body):
        return {"routes": [{"kind": "nonsense", "query": "q", "k": 1}]}

    suite = mock_suite(seed=0, scripts={"writer": {"retrieval_plan": broken}})
    with pytest.raises(StageFatalError):
        run_pipeline(LOG, suite.registry, PipelineConfig(), tmp_path, seed=0)
    store = RunStore(tmp_path, run_id_for(LOG.text, 0))
    manifest = store.load_manifest()
    assert manifest.status is RunStatus.FAILED
    assert len(manifest.stage_records["story"].attempts) == 3


def test_retry_counts_never_exceed_budget(complete_run):
    _, manifest = complete_run
    for record in manifest.stage_records.values():
        per_item: dict[str, int] = {}
        for a in record.attempts:
            if a.verdict.startswith("video_audit:"):
                key = a.verdict.rsplit(":", 1)[0]
                per_item[key] = per_item.get(key, 0) + 1
        assert all(n <= 3 for n in per_item.values())


def test_clip_stage_order_sequential(complete_run):
    runs, manifest = complete_run
    store = RunStore(runs, manifest.run_id)
    frames = store.load_stage("frames_videos")
    for rec in frames["scenes"].values():
        indices = [c["clip_index"] for c in rec["clips"]]
        assert indices == sorted(indices)


def test_video_audits_recorded(complete_run):
    runs, manifest = complete_run
    store = RunStore(runs, manifest.run_id)
    frames = store.load_stage("frames_videos")
    for rec in frames["scenes"].values():
        for clip in rec["clips"]:
            assert clip["video_audit"]["passed"] is True
            assert clip["video_audit"]["character_presence_consistency"] == 10


def test_first_clip_routes_anchor_and_posterior_routes_recorded(complete_run):
    runs, manifest = complete_run
    store = RunStore(runs, manifest.run_id)
    frames = store.load_stage("frames_videos")
    for rec in frames["scenes"].values():
        routes = [c["routing"]["route"] for c in rec["clips"]]
        assert routes[0] == "anchor_init"
        assert all(r in ("reuse_tail", "path_3d", "fallback_reuse_tail") for r in routes[1:])


def test_scene_audio_and_mix_plan(complete_run):
    runs, manifest = complete_run
    store = RunStore(runs, manifest.run_id)
    post = store.load_stage("post")
    for sid, rec in post["scene_audio"].items():
        mixed = raster_from_wire(rec["mixed_audio"])
        assert len(mixed) == pytest.approx(rec["duration_s"] * 48000, abs=1)
        assert np.abs(mixed).max() <= 10 ** (-1 / 20) + 1e-9
        assert rec["mix_plan"]["duck_depth_db"] <= 0
        assert rec["primary_bucket"] != rec["backup_bucket"]


def test_edit_list_structure(complete_run):
    runs, manifest = complete_run
    store = RunStore(runs, manifest.run_id)
    post = store.load_stage("post")
    entries = post["edit_list"]
    n_scenes = len(store.load_stage("frames_videos")["scenes"])
    transitions = [e for e in entries if e["type"] == "transition"]
    assert len(transitions) == n_scenes - 1
    clips = [e for e in entries if e["type"] == "clip"]
    assert clips == sorted(clips, key=lambda e: (e["scene_id"], e["clip_index"]))
    for t in transitions:
        if t["kind"] == "direct_cut":
            assert "generation_prompt" not in t


def test_assemble_matches_saved_edit_list(complete_run):
    runs, manifest = complete_run
    store = RunStore(runs, manifest.run_id)
    assert assemble(store) == store.load_stage("post")["edit_list"]


def test_assemble_missing_artifact(complete_run, tmp_path):
    suite = mock_suite(seed=0)
    manifest = run_pipeline(LOG, suite.registry, PipelineConfig(), tmp_path, seed=0)
    store = RunStore(tmp_path, manifest.run_id)
    post = store.load_stage("post")
    del post["scene_audio"]["1"]
    from dramaforge.model import StoryCore
    from dramaforge.pipeline import build_edit_list

    story = store.load_stage("story")
    frames = store.load_stage("frames_videos")
    with pytest.raises(MissingArtifactError):
        build_edit_list(StoryCore.from_dict(story["core"]), frames, post)


def test_registration_scale_recovered(complete_run):
    runs, manifest = complete_run
    store = RunStore(runs, manifest.run_id)
    frames = store.load_stage("frames_videos")
    for rec in frames["scenes"].values():
        # the perception mocks divide depth by 2; registration must recover it
        assert rec["registration_scale"] == pytest.approx(2.0, abs=1e-6)  # float32 wire depth


def test_hermetic_no_network(tmp_path, monkeypatch):
    import socket

    def refuse(*args, **kwargs):
        raise AssertionError("network operation attempted during a mock run")

    monkeypatch.setattr(socket, "socket", refuse)
    monkeypatch.setattr(socket, "create_connection", refuse)
    suite = mock_suite(seed=2)
    manifest = run_pipeline(Logline("Hermetic run."), suite.registry, PipelineConfig(), tmp_path, seed=2)
    assert manifest.status is RunStatus.COMPLETE


def test_wav_and_edit_list_files_written(complete_run):
    runs, manifest = complete_run
    from scipy.io import wavfile

    root = Path(runs) / manifest.run_id
    assert (root / "edit_list.json").exists()
    post = RunStore(runs, manifest.run_id).load_stage("post")
    for sid, rec in post["scene_audio"].items():
        wav_path = root / rec["wav_ref"]
        assert wav_path.exists()
        sr, data = wavfile.read(wav_path)
        assert sr == 48000 and data.dtype == np.float32
        assert np.allclose(data, raster_from_wire(rec["mixed_audio"]), atol=1e-7)
