import dataclasses

import pytest

from dramaforge.canonical import canonical_dumps, hash_of
from dramaforge.model import (
    Attempt,
    ClipScript,
    Logline,
    ProgressionLine,
    PromptPair,
    RunManifest,
    RunStatus,
    StageRecord,
    StoryCore,
    unique_slug,
    validate_story_core,
)
from conftest import make_story_core


def test_well_formed_core_has_empty_report(story_core):
    assert validate_story_core(story_core).ok


def test_non_contiguous_scene_ids_flagged(story_core):
    scenes = tuple(
        dataclasses.replace(s, id=(3 if s.id == 2 else s.id)) for s in story_core.scenes[:2]
    )
    lines = {
        k: ProgressionLine(v.summary, v.per_scene[:2]) for k, v in story_core.progression_lines.items()
    }
    core = StoryCore(story_core.title, story_core.theme, story_core.genre, scenes, lines, story_core.assets)
    assert any("non-contiguous" in v for v in validate_story_core(core).violations)


def test_ledger_cardinality_flagged(story_core):
    lines = dict(story_core.progression_lines)
    ks = lines["knowledge_state"]
    lines["knowledge_state"] = ProgressionLine(ks.summary, ks.per_scene + ("extra",))
    core = StoryCore(
        story_core.title, story_core.theme, story_core.genre, story_core.scenes, lines, story_core.assets
    )
    assert any("ledger cardinality" in v for v in validate_story_core(core).violations)


def test_unknown_location_flagged(story_core):
    scenes = (dataclasses.replace(story_core.scenes[0], location_id="void"),) + story_core.scenes[1:]
    core = StoryCore(
        story_core.title, story_core.theme, story_core.genre, scenes,
        story_core.progression_lines, story_core.assets,
    )
    assert any("unknown location" in v for v in validate_story_core(core).violations)


def test_logline_validation():
    assert Logline("A hero rises.").validate().ok
    assert not Logline("").validate().ok
    assert not Logline("x" * 501).validate().ok


def test_story_core_roundtrip_bit_exact(story_core):
    decoded = StoryCore.from_dict(story_core.to_dict())
    assert decoded == story_core
    assert canonical_dumps(decoded.to_dict()) == canonical_dumps(story_core.to_dict())


def test_clip_roundtrip_and_invariants():
    clip = ClipScript.from_dict(
        {
            "scene_id": 1,
            "clip_index": 0,
            "narrative": "opening",
            "shot_type": "wide",
            "characters": ["lead"],
            "key_props": [],
            "dialogue": [["lead", "hello"]],
            "actions": ["stands"],
            "start_state": "a",
            "end_state": "b",
            "characters_at_start": ["lead"],
            "characters_at_end": ["lead", "rival"],
            "character_events": [{"character_id": "rival", "event": "enter"}],
        }
    )
    assert ClipScript.from_dict(clip.to_dict()) == clip
    assert clip.validate().ok
    bad = dataclasses.replace(clip, character_events=())
    assert not bad.validate().ok  # rival ends present without an entrance


def test_prompt_pair_temporal_stoplist():
    ok = PromptPair(1, 0, "wide shot, two people at a desk", "they argue and exit")
    assert ok.validate().ok
    bad = PromptPair(1, 0, "she suddenly begins to run", "motion")
    report = bad.validate()
    assert not report.ok and "temporal" in report.violations[0]


def test_manifest_roundtrip_and_hash_determinism():
    def build():
        m = RunManifest(run_id="r1", seed=42, logline=Logline("x"), status=RunStatus.RUNNING)
        return m.with_stage(
            "story",
            StageRecord(inputs_hash="a", outputs_hash="b", attempts=(Attempt("pass", 8.0),)),
        )

    a, b = build(), build()
    assert hash_of(a.to_dict()) == hash_of(b.to_dict())
    assert RunManifest.from_dict(a.to_dict()) == a


def test_unique_slug():
    assert unique_slug("Ms. Lin's Office!", set()) == "ms-lin-s-office"
    assert unique_slug("office", {"office"}) == "office-2"
    assert unique_slug("office", {"office", "office-2"}) == "office-3"


def test_mock_cores_scale(story_core):
    for n in (1, 2, 5):
        assert validate_story_core(make_story_core(n_scenes=n)).ok
