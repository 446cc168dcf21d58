import numpy as np
import pytest

from dramaforge.canonical import canonical_dumps
from dramaforge.debate import (
    AggregatedReview,
    DisputeConfig,
    Issue,
    IssueTarget,
    JudgeReview,
    RUBRIC_DIMS,
    SEVERITY_LEVELS,
    aggregate,
    arbitrate,
    meets_pass_bar,
    revise,
    run_debate,
)
from dramaforge.errors import PatchTargetError, PreconditionError, ProviderSchemaError
from dramaforge.providers.mocks import mock_suite
from dramaforge.retrieval import AtomSet

from conftest import make_story_core
from oracles import brute_force_disputes, dispute_key_set


def review(judge_id, scores=None, strengths=(), issues=(), gate="pass"):
    rubric = {d: 8 for d in RUBRIC_DIMS}
    rubric.update(scores or {})
    return JudgeReview(
        judge_id=judge_id,
        keep_strengths=tuple(strengths),
        rubric=rubric,
        must_fix=tuple(issues),
        visual_gate=gate,
    )


def issue(issue_id, ref="1", direction="tighten the reveal", severity="medium", kind="scene"):
    return Issue(
        issue_id=issue_id,
        evidence="evidence text",
        fix_direction=direction,
        target=IssueTarget(kind, ref),
        severity=severity,
    )


CFG = DisputeConfig()


def test_identical_reviews_no_disputes():
    reviews = [review(f"j{i}", strengths=["Sharp opening"]) for i in range(3)]
    agg = aggregate(reviews, CFG)
    assert agg.disputes == ()
    assert agg.mean_rubric == {d: 8.0 for d in RUBRIC_DIMS}
    assert agg.strengths == ("Sharp opening",)


def test_score_gap_dispute():
    reviews = [
        review("a", {"logic_integrity": 9}),
        review("b", {"logic_integrity": 9}),
        review("c", {"logic_integrity": 5}),
    ]
    agg = aggregate(reviews, CFG)
    gaps = [d for d in agg.disputes if d.kind == "score_gap"]
    assert len(gaps) == 1 and gaps[0].payload["dimension"] == "logic_integrity"


def test_gate_fail_is_high_risk():
    reviews = [review("a"), review("b", gate="fail")]
    agg = aggregate(reviews, CFG)
    assert any(d.kind == "high_risk" for d in agg.disputes)


def test_aggregation_needs_two_reviews():
    with pytest.raises(PreconditionError):
        aggregate([review("a")], CFG)


def test_strength_dedup_by_normalized_text():
    reviews = [
        review("a", strengths=["The hook lands!", "clean pacing"]),
        review("b", strengths=["the hook lands", "Clean pacing."]),
    ]
    agg = aggregate(reviews, CFG)
    assert len(agg.strengths) == 2


def test_issue_dedup_by_target_and_direction():
    reviews = [
        review("a", issues=[issue("i2", direction="Tighten the reveal.")]),
        review("b", issues=[issue("i1", direction="tighten the reveal")]),
        review("c", issues=[issue("i3", ref="2", direction="other fix")]),
    ]
    agg = aggregate(reviews, CFG)
    assert [i.issue_id for i in agg.candidate_fixes] == ["i1", "i3"]


def test_permutation_invariance(rng):
    reviews = [
        review("a", {"clarity": 9}, strengths=["x"], issues=[issue("i1")]),
        review("b", {"clarity": 4}, strengths=["y"], issues=[issue("i2", severity="critical")]),
        review("c", {"open_grab": 6}, issues=[issue("i3", direction="different way")]),
    ]
    base = canonical_dumps(aggregate(reviews, CFG).to_dict())
    order = list(range(3))
    for _ in range(100):
        rng.shuffle(order)
        shuffled = [reviews[i] for i in order]
        assert canonical_dumps(aggregate(shuffled, CFG).to_dict()) == base


def random_review(rng, judge_id):
    scores = {d: int(rng.integers(0, 11)) for d in RUBRIC_DIMS}
    issues = []
    for k in range(int(rng.integers(0, 4))):
        issues.append(
            issue(
                f"{judge_id}-i{k}",
                ref=str(int(rng.integers(1, 4))),
                direction=str(rng.choice(["tighten", "expand", "cut"])),
                severity=str(rng.choice(SEVERITY_LEVELS)),
            )
        )
    gate = str(rng.choice(["pass", "borderline", "fail"], p=[0.7, 0.2, 0.1]))
    return review(judge_id, scores, issues=issues, gate=gate)


def test_dispute_oracle_randomized(rng):
    mismatches = 0
    for _ in range(1000):
        reviews = [random_review(rng, f"j{i}") for i in range(3)]
        agg = aggregate(reviews, CFG)
        got = dispute_key_set(agg.disputes)
        want = brute_force_disputes(reviews, CFG.score_gap, CFG.severity_levels, CFG.logic_floor)
        if got != want:
            mismatches += 1
    assert mismatches == 0


def test_arbitrate_fixture(registry, story_core):
    reviews = [
        review("a", {"logic_integrity": 9}, issues=[issue("i1")]),
        review("b", {"logic_integrity": 5}, issues=[issue("i2", direction="opposite way")]),
    ]
    agg = aggregate(reviews, CFG)
    assert len(agg.disputes) == 2  # score_gap + direction_conflict

    def ruling(body):
        return {
            "rulings": [
                {"dispute_index": 0, "fix": True, "minimal_change_note": "fix it"},
                {"dispute_index": 1, "fix": False, "minimal_change_note": "leave it"},
            ],
            "protected_strengths": ["keep the hook"],
        }

    suite = mock_suite(seed=0, scripts={"decider": {"decider_ruling": ruling}})
    out = arbitrate(agg.disputes, agg, story_core, suite.registry)
    assert len(out.rulings) == 2
    assert [r.fix for r in out.rulings] == [True, False]


def test_arbitrate_empty_disputes(registry, story_core):
    agg = aggregate([review("a"), review("b")], CFG)
    with pytest.raises(PreconditionError):
        arbitrate((), agg, story_core, registry)


def test_arbitrate_unknown_issue_id_retries(story_core):
    reviews = [review("a", {"clarity": 9}, issues=[issue("i1")]), review("b", {"clarity": 5})]
    agg = aggregate(reviews, CFG)

    def flaky(body):
        if body["_attempt"] == 0:
            return {
                "rulings": [
                    {"dispute_index": 0, "fix": True, "minimal_change_note": "n", "issue_id": "ghost"}
                ],
                "protected_strengths": [],
            }
        return {
            "rulings": [{"dispute_index": 0, "fix": True, "minimal_change_note": "n", "issue_id": "i1"}],
            "protected_strengths": [],
        }

    suite = mock_suite(seed=0, scripts={"decider": {"decider_ruling": flaky}})
    out = arbitrate(agg.disputes, agg, story_core, suite.registry)
    assert out.rulings[0].issue_id == "i1"


def test_revise_patch_locality(registry):
    core = make_story_core(n_scenes=4)
    new_core, entries = revise(core, [issue("i1", ref="2")], None, registry)
    for sid in (1, 3, 4):
        assert canonical_dumps(new_core.scene(sid).to_dict()) == canonical_dumps(core.scene(sid).to_dict())
    assert new_core.scene(2).outline != core.scene(2).outline
    assert entries == []


def test_revise_bad_target(registry):
    core = make_story_core(n_scenes=4)
    with pytest.raises(PatchTargetError):
        revise(core, [issue("i1", ref="9")], None, registry)


def test_revise_idea_bank_stamped():
    def patches_with_ideas(body):
        core = body["payload"]["core"]
        scene = dict(core["scenes"][0])
        scene["outline"] += " (revised)"
        return {
            "patches": [{"target": {"kind": "scene", "ref": "1"}, "replacement": scene}],
            "idea_bank": [{"idea_text": "the balcony reversal", "origin_issue_id": "i1"}],
        }

    suite = mock_suite(seed=0, scripts={"writer": {"revise_patches": patches_with_ideas}})
    core = make_story_core()
    _, entries = revise(core, [issue("i1", ref="1")], None, suite.registry, round_no=2)
    assert len(entries) == 1 and entries[0].removed_in_round == 2


def test_run_debate_immediate_pass(registry, story_core):
    final, trace = run_debate(story_core, AtomSet(), CFG, registry)
    assert trace.passed and len(trace.rounds) == 1
    assert canonical_dumps(final.to_dict()) == canonical_dumps(story_core.to_dict())


def test_run_debate_cap_on_persistent_failure(story_core):
    def low(body):
        return {
            "judge_id": "x",
            "keep_strengths": [],
            "rubric": {d: 5 for d in RUBRIC_DIMS},
            "must_fix": [],
            "visual_gate": "pass",
        }

    scripts = {role: {"judge_review": low} for role in ("text_judge_a", "text_judge_b", "text_judge_c")}
    suite = mock_suite(seed=0, scripts=scripts)
    final, trace = run_debate(story_core, AtomSet(), CFG, suite.registry)
    assert not trace.passed
    assert len(trace.rounds) == CFG.max_rounds


def test_run_debate_two_judges_with_warning(story_core, caplog):
    suite = mock_suite(seed=0)
    registry = suite.registry
    registry._bindings.pop("text_judge_c")
    with caplog.at_level("WARNING"):
        final, trace = run_debate(story_core, AtomSet(), CFG, registry)
    assert trace.passed
    assert len(trace.rounds[0].reviews) == 2
    assert any("unbound" in r.message for r in caplog.records)


def test_run_debate_revival(story_core):
    state = {"round": 0}

    def judge(body):
        rnd = body["payload"]["round"]
        ok = rnd >= 2
        return {
            "judge_id": "j",
            "keep_strengths": ["strong ending"],
            "rubric": {d: (8 if ok else 5) for d in RUBRIC_DIMS},
            "must_fix": []
            if ok
            else [
                {
                    "issue_id": "i1",
                    "evidence": "flat",
                    "fix_direction": "raise stakes",
                    "target": {"kind": "scene", "ref": "2"},
                    "severity": "high",
                }
            ],
            "visual_gate": "pass",
        }

    def patches_with_ideas(body):
        core = body["payload"]["core"]
        scene = dict(next(s for s in core["scenes"] if s["id"] == 2))
        scene["outline"] += " (revised)"
        return {
            "patches": [{"target": {"kind": "scene", "ref": "2"}, "replacement": scene}],
            "idea_bank": [
                {"idea_text": "the mirror confession", "origin_issue_id": "i1"},
                {"idea_text": "the double-cross toast", "origin_issue_id": "i1"},
            ],
        }

    scripts = {
        **{r: {"judge_review": judge} for r in ("text_judge_a", "text_judge_b", "text_judge_c")},
        "writer": {"revise_patches": patches_with_ideas},
        "decider": {"revival_select": lambda b: {"revive_indices": [0]}},
    }
    suite = mock_suite(seed=0, scripts=scripts)
    final, trace = run_debate(story_core, AtomSet(), DisputeConfig(revive_limit=1), suite.registry)
    assert trace.passed
    assert len(trace.idea_bank) == 2
    assert trace.revived == ["the mirror confession"]
    pre_revival_hash = trace.rounds[-1].core_hash
    # revival changed exactly one scene (the default revive patch touches scene 1)
    diffs = [
        sid
        for sid in (1, 2, 3)
        if canonical_dumps(final.scene(sid).to_dict())
        != canonical_dumps(make_story_core().scene(sid).to_dict())
    ]
    assert canonical_dumps(final.to_dict()) != pre_revival_hash
    assert 1 in diffs  # revived idea landed in scene 1's ending hook
    assert "revived" in final.scene(1).ending_hook


def test_termination_bound(story_core):
    # always-failing judges with disputes: rounds never exceed max_rounds
    def noisy(judge_id, score):
        def j(body):
            return {
                "judge_id": judge_id,
                "keep_strengths": [],
                "rubric": {d: score for d in RUBRIC_DIMS},
                "must_fix": [],
                "visual_gate": "pass",
            }

        return j

    scripts = {
        "text_judge_a": {"judge_review": noisy("a", 9)},
        "text_judge_b": {"judge_review": noisy("b", 5)},
        "text_judge_c": {"judge_review": noisy("c", 2)},
    }
    suite = mock_suite(seed=0, scripts=scripts)
    cfg = DisputeConfig(max_rounds=2)
    _, trace = run_debate(story_core, AtomSet(), cfg, suite.registry)
    assert len(trace.rounds) <= cfg.max_rounds
