import numpy as np
import pytest

from dramaforge.canonical import raster_to_wire
from dramaforge.errors import ProviderSchemaError
from dramaforge.gates import (
    CANDIDATE_DIMS,
    CandidateScore,
    RepairConfig,
    VideoAudit,
    audit_video,
    color_correct,
    detect_tail_closeup,
    pick_winner,
    repair_first_frame,
    sample_frame_indices,
    select_first_frame,
)
from dramaforge.providers.mocks import mock_suite

from conftest import make_story_core
from dramaforge.clips import synthesize_clips


def cscore(values, explanations=True):
    scores = dict(zip(CANDIDATE_DIMS, values))
    return CandidateScore(
        scores=scores,
        total=sum(values),
        rejected=any(v < 3 for v in values),
        explanations={d: "reason" for d in CANDIDATE_DIMS},
    )


def test_reject_rule_overrides_total():
    perfect = cscore([5, 5, 5, 5, 5, 5])
    high_but_rejected = cscore([5, 5, 5, 5, 2, 5])
    assert high_but_rejected.total == 27
    assert high_but_rejected.rejected and not perfect.rejected
    assert pick_winner([perfect, high_but_rejected]) == 0


def test_tie_goes_to_lower_index():
    a = cscore([4, 4, 4, 4, 4, 4])
    b = cscore([4, 4, 4, 4, 4, 4])
    assert pick_winner([b, a]) == 0


def test_candidate_score_validator():
    good = cscore([5, 4, 3, 5, 4, 3])
    good.validate()
    with pytest.raises(ProviderSchemaError):
        CandidateScore(good.scores, total=99, rejected=False, explanations=good.explanations).validate()
    with pytest.raises(ProviderSchemaError):
        CandidateScore(good.scores, good.total, rejected=True, explanations=good.explanations).validate()
    with pytest.raises(ProviderSchemaError):
        CandidateScore(good.scores, good.total, False, {d: "" for d in CANDIDATE_DIMS}).validate()


def test_reject_rule_oracle(rng):
    mismatches = 0
    for _ in range(10_000):
        values = [int(v) for v in rng.integers(0, 6, size=6)]
        s = cscore(values)
        s.validate()
        if s.rejected != (min(values) < 3):
            mismatches += 1
    assert mismatches == 0


def test_select_first_frame_repair_path():
    calls = {"n": 0}

    def scripted(body):
        calls["n"] += 1
        repaired = body["candidate_key"].endswith("-repaired")
        lifted = repaired and body["candidate_key"].startswith("cand1")
        vals = [5, 5, 5, 5, 5, 5] if lifted else [5, 5, 2, 5, 5, 5]
        return {
            "scores": dict(zip(CANDIDATE_DIMS, vals)),
            "total_score": sum(vals),
            "rejected": any(v < 3 for v in vals),
            "score_explanations": {d: "x" for d in CANDIDATE_DIMS},
        }

    suite = mock_suite(seed=0, scripts={"vision_judge": {"candidate_select": scripted}})
    repaired = []
    winner, scores = select_first_frame(
        ["cand0", "cand1"],
        images_for=lambda i: {"images": f"payload{i}"},
        registry=suite.registry,
        repair=lambda i: repaired.append(i),
    )
    assert repaired == [0, 1]
    assert winner == 1
    assert not scores[1].rejected


def test_select_first_frame_best_total_fallback():
    def always_reject(body):
        vals = [4, 4, 2, 4, 4, 4] if "cand0" in body["candidate_key"] else [3, 3, 2, 3, 3, 3]
        return {
            "scores": dict(zip(CANDIDATE_DIMS, vals)),
            "total_score": sum(vals),
            "rejected": True,
            "score_explanations": {d: "x" for d in CANDIDATE_DIMS},
        }

    suite = mock_suite(seed=0, scripts={"vision_judge": {"candidate_select": always_reject}})
    winner, scores = select_first_frame(
        ["cand0", "cand1"], lambda i: {}, suite.registry, repair=None
    )
    assert winner == 0  # best total despite universal rejection


def test_tail_closeup_schema(registry):
    frame = raster_to_wire(np.zeros((8, 8, 3), np.uint8))
    report = detect_tail_closeup(frame, registry)
    assert report.is_local_closeup is False

    bad = {"tail_closeup": lambda b: {"is_local_closeup": True, "shot_scale": "close",
                                      "visible_environment": "", "confidence": 1.2}}
    suite = mock_suite(seed=0, scripts={"vision_judge": bad})
    with pytest.raises(ProviderSchemaError):
        detect_tail_closeup(frame, suite.registry)


def test_video_audit_rules():
    a = VideoAudit(6, 6, 6, 10, "")
    assert a.overall == pytest.approx(6.0) and a.passed
    b = VideoAudit(9, 9, 9, 0, "")
    assert not b.passed
    c = VideoAudit(5, 5, 4, 10, "")
    assert c.overall == pytest.approx(14 / 3) and not c.passed
    with pytest.raises(ProviderSchemaError):
        VideoAudit(5, 5, 5, 7, "").validate()


def test_video_verdict_oracle(rng):
    mismatches = 0
    for _ in range(10_000):
        trio = [int(v) for v in rng.integers(0, 11, size=3)]
        presence = int(rng.choice([0, 10]))
        audit = VideoAudit(*trio, presence, "")
        want = (sum(trio) / 3.0 >= 5.0) and presence == 10
        if audit.passed != want:
            mismatches += 1
    assert mismatches == 0


def test_winner_monotonicity(rng):
    for _ in range(300):
        values = [[int(v) for v in rng.integers(3, 6, size=6)] for _ in range(4)]
        scores = [cscore(v) for v in values]
        base = pick_winner(scores)
        i = int(rng.integers(0, 4))
        j = int(rng.integers(0, 6))
        bumped = [list(v) for v in values]
        bumped[i][j] = min(bumped[i][j] + 1, 5)
        new_scores = [cscore(v) for v in bumped]
        new_winner = pick_winner(new_scores)
        assert new_scores[new_winner].total >= new_scores[base].total


def test_audit_video_end_to_end(registry):
    core = make_story_core()
    clips = synthesize_clips(core.scene(1), core.assets, registry)
    frames = [raster_to_wire(np.zeros((8, 8, 3), np.uint8)) for _ in range(3)]
    audit, verdict = audit_video(frames, clips[0], registry)
    assert verdict and audit.character_presence_consistency == 10


def test_sample_frame_indices():
    assert sample_frame_indices(8, fps=4.0) == [0, 4, 7]
    assert sample_frame_indices(2, fps=30.0) == [0, 1]
    assert sample_frame_indices(1, fps=30.0) == [0]


def frame_with_char(seed=0):
    rng = np.random.default_rng(seed)
    frame = rng.integers(40, 200, size=(32, 32, 3)).astype(np.uint8)
    mask = np.zeros((32, 32), dtype=bool)
    mask[8:24, 12:20] = True
    return frame, mask


def test_repair_preserves_character_bytes(registry):
    frame, mask = frame_with_char()
    prev_tail = (frame.astype(np.int16) + 10).clip(0, 255).astype(np.uint8)
    result = repair_first_frame(frame, ["background blur"], mask, prev_tail, registry)
    assert np.array_equal(result.frame[mask], frame[mask])
    assert result.frame.dtype == np.uint8


def test_color_correct_identity_when_matching():
    frame, mask = frame_with_char()
    out, corr = color_correct(frame, frame, ~mask, RepairConfig())
    assert all(abs(g - 1.0) < 1e-3 for g in corr.gains)
    assert all(abs(b) < 1e-6 for b in corr.offsets)


def test_color_correct_gain_clamped():
    rng = np.random.default_rng(3)
    base = rng.uniform(60, 120, size=(32, 32, 3))
    bg = np.ones((32, 32), dtype=bool)
    cfg = RepairConfig(max_gain=1.5)
    # frame has double the reference contrast: wanted gain 0.5, clamped at 1/1.5
    frame = ((base - base.mean()) * 2.0 + base.mean()).clip(0, 255).astype(np.uint8)
    ref = base.clip(0, 255).astype(np.uint8)
    _, corr = color_correct(frame, ref, bg, cfg)
    assert all(g == pytest.approx(1 / 1.5, abs=1e-6) for g in corr.gains)
    # frame has half the reference contrast: wanted gain 2.0, clamped at 1.5
    frame2 = ((base - base.mean()) * 0.5 + base.mean()).clip(0, 255).astype(np.uint8)
    _, corr2 = color_correct(frame2, ref, bg, cfg)
    assert all(g == pytest.approx(1.5, abs=1e-2) for g in corr2.gains)
