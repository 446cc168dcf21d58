import numpy as np
import pytest

from dramaforge.errors import CopyViolationError, PreconditionError, ProviderSchemaError
from dramaforge.retrieval import (
    AtomizeConfig,
    BEAT_VIEWS,
    BeatUnit,
    EmbedderClient,
    LogicBank,
    LogicChunk,
    PatternBank,
    atomize_script,
    load_banks,
    plan_retrieval,
    rebuild_from_chunks,
    save_banks,
    slide_chunks,
    summarize_atoms,
)
from dramaforge.providers.mocks import mock_suite

from oracles import brute_force_logic_rank, brute_force_pattern_rank

FIXTURE_SCRIPT = "\n\n".join(
    f"Paragraph {i}. A confrontation escalates in the office. The door slams shut as evidence lands."
    for i in range(5)
)


def one_hot_bank(n=100, dim=100):
    beats = []
    for j in range(n):
        v = np.zeros(dim, dtype=np.float32)
        v[j] = 1.0
        beats.append(
            BeatUnit(
                beat_id=f"b{j:03d}",
                opening_action=f"open {j}",
                beat_summary=f"summary {j}",
                closing_hook_visual=f"hook {j}",
                conflict_function="setup",
                embeddings={view: v for view in BEAT_VIEWS},
            )
        )
    return PatternBank(beats)


def test_sliding_window_spans():
    text = "x" * 3000
    assert slide_chunks(text, 1000, 200) == [(0, 1000), (800, 1800), (1600, 2600), (2400, 3000)]


def test_sliding_window_exact_fit():
    assert slide_chunks("x" * 1000, 1000, 200) == [(0, 1000)]


def test_empty_script_precondition(registry):
    with pytest.raises(PreconditionError):
        atomize_script("  ", AtomizeConfig(), registry, "s1")


def test_atomize_fixture_script(registry):
    card, chunks = atomize_script(FIXTURE_SCRIPT, AtomizeConfig(chunk_len=200, overlap=50), registry, "s1")
    assert len(card.beats) == 5
    for beat in card.beats:
        assert set(beat.embeddings) == set(BEAT_VIEWS)
        assert not beat.validate()
    assert rebuild_from_chunks(chunks) == FIXTURE_SCRIPT


def test_chunk_tiling_roundtrip(registry, rng):
    for _ in range(5):
        n = int(rng.integers(50, 4000))
        text = "".join(chr(97 + int(c)) for c in rng.integers(0, 26, n))
        spans = slide_chunks(text, 300, 60)
        chunks = [
            LogicChunk(f"c{i}", "s", text[a:b], (a, b), np.zeros(4, dtype=np.float32))
            for i, (a, b) in enumerate(spans)
        ]
        assert rebuild_from_chunks(chunks) == text


def test_self_query_scores_one(registry):
    card, _ = atomize_script(FIXTURE_SCRIPT, AtomizeConfig(), registry, "s1")
    bank = PatternBank(card.beats)
    embed = EmbedderClient(registry)
    target = card.beats[2]
    results = bank.retrieve(target.beat_summary, k=1, embed=embed, weights={"beat_summary": 1.0})
    assert results[0][0].beat_id == target.beat_id
    assert abs(results[0][1] - 1.0) < 1e-6


def test_one_hot_bank_exact():
    bank = one_hot_bank()
    j = 37
    q = np.zeros(100)
    q[j] = 1.0
    results = bank.retrieve("ignored", k=100, embed=lambda _: q)
    assert results[0][0].beat_id == f"b{j:03d}"
    assert abs(results[0][1] - 1.0) < 1e-12
    assert all(abs(s) < 1e-12 for _, s in results[1:])


def test_k_larger_than_bank():
    bank = one_hot_bank(n=10, dim=10)
    out = bank.retrieve("q", k=50, embed=lambda _: np.ones(10))
    assert len(out) == 10


def test_weighted_rank_matches_brute_force(rng):
    dim = 32
    beats = []
    for j in range(200):
        beats.append(
            BeatUnit(
                beat_id=f"b{j:03d}",
                opening_action="a",
                beat_summary="s",
                closing_hook_visual="h",
                conflict_function="",
                embeddings={view: rng.standard_normal(dim).astype(np.float32) for view in BEAT_VIEWS},
            )
        )
    bank = PatternBank(beats)
    weights = {"beat_summary": 0.5, "opening_action": 0.25, "closing_hook_visual": 0.25}
    for _ in range(10):
        q = rng.standard_normal(dim)
        got = bank.retrieve("q", k=200, embed=lambda _: q, weights=weights)
        want = brute_force_pattern_rank(q, beats, weights, 200)
        assert [b.beat_id for b, _ in got] == [bid for bid, _ in want]
        for (_, gs), (_, ws) in zip(got, want):
            assert abs(gs - ws) <= 1e-9


def test_ranking_scale_invariance(rng):
    bank = one_hot_bank(n=20, dim=20)
    q = rng.standard_normal(20)
    base = [b.beat_id for b, _ in bank.retrieve("q", k=20, embed=lambda _: q)]
    for scale in (1e-6, 0.5, 7.0, 1e6):
        scaled = [b.beat_id for b, _ in bank.retrieve("q", k=20, embed=lambda _: q * scale)]
        assert scaled == base


def test_logic_retrieval_and_ties(registry, rng):
    embed = EmbedderClient(registry)
    _, chunks = atomize_script(FIXTURE_SCRIPT, AtomizeConfig(chunk_len=120, overlap=30), registry, "s1")
    bank = LogicBank(chunks)
    top = bank.retrieve(chunks[3].text, k=1, embed=embed)
    assert top[0][0].chunk_id == chunks[3].chunk_id

    v = rng.standard_normal(8).astype(np.float32)
    dupes = [LogicChunk(f"c{i}", "s", f"t{i}", (0, 1), v) for i in (2, 1)]
    out = LogicBank(dupes).retrieve("q", k=2, embed=lambda _: v.astype(np.float64))
    assert [c.chunk_id for c, _ in out] == ["c1", "c2"]  # tie broken lexicographically

    q = rng.standard_normal(256)
    got = bank.retrieve("q", k=3, embed=lambda _: q)
    want = brute_force_logic_rank(q, bank.chunks, 3)
    assert [c.chunk_id for c, _ in got] == [cid for cid, _ in want]


def test_plan_retrieval_routes(registry):
    plan = plan_retrieval("A courtroom drama about medical malpractice law.", registry)
    kinds = [r.kind for r in plan.routes]
    assert "fact" in kinds and "logic" in kinds and "pattern" in kinds

    plan2 = plan_retrieval("Two bakers fall in love.", registry)
    assert all(r.kind in ("fact", "logic", "pattern") for r in plan2.routes)


def test_plan_retrieval_bad_kind_retries():
    def bad_then_good(body):
        if body["_attempt"] == 0:
            return {"routes": [{"kind": "style", "query": "q", "k": 2}]}
        return {"routes": [{"kind": "logic", "query": "q", "k": 2}]}

    suite = mock_suite(seed=0, scripts={"writer": {"retrieval_plan": bad_then_good}})
    plan = plan_retrieval("seed", suite.registry)
    assert plan.routes[0].kind == "logic"

    suite2 = mock_suite(
        seed=0, scripts={"writer": {"retrieval_plan": lambda b: {"routes": [{"kind": "style", "query": "q", "k": 1}]}}}
    )
    with pytest.raises(ProviderSchemaError):
        plan_retrieval("seed", suite2.registry)


def test_summarize_atoms(registry):
    results = {
        "logic": [
            {"text": f"chunk text {i} about motivation", "source_ref": f"s1-c00{i}"} for i in range(3)
        ]
    }
    atoms = summarize_atoms(results, registry)
    assert len(atoms.logic_atoms) >= 1
    refs = {a.source_ref for a in atoms.logic_atoms}
    assert refs == {"s1-c000", "s1-c001", "s1-c002"}


def test_summarize_atoms_empty(registry):
    atoms = summarize_atoms({"logic": [], "fact": []}, registry)
    assert atoms.all_atoms() == []


def test_copy_violation():
    source = "z" * 500

    def copying(body):
        return {"logic_atoms": [{"text": "z" * 400, "source_ref": "c0"}]}

    suite = mock_suite(seed=0, scripts={"writer": {"summarize_atoms": copying}})
    with pytest.raises(CopyViolationError):
        summarize_atoms({"logic": [{"text": source, "source_ref": "c0"}]}, suite.registry, max_copy_chars=120)


def test_bank_persistence_roundtrip(tmp_path, registry):
    card, chunks = atomize_script(FIXTURE_SCRIPT, AtomizeConfig(chunk_len=150, overlap=30), registry, "s1")
    save_banks(tmp_path / "bank", [card], chunks)
    pattern, logic = load_banks(tmp_path / "bank")
    assert len(pattern) == len(card.beats)
    assert len(logic) == len(chunks)
    for orig, loaded in zip(PatternBank(card.beats).beats, pattern.beats):
        assert orig.beat_id == loaded.beat_id
        for view in BEAT_VIEWS:
            assert np.array_equal(orig.embeddings[view], loaded.embeddings[view])
    q = EmbedderClient(registry)("confrontation escalates")
    a = [c.chunk_id for c, _ in LogicBank(chunks).retrieve("q", 3, lambda _: q)]
    b = [c.chunk_id for c, _ in logic.retrieve("q", 3, lambda _: q)]
    assert a == b
