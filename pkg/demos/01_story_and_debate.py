"""From one sentence to a reviewed story core.

Walks the story stage by hand: seed expansion, the three retrieval routes
over the fixture banks, atom summarization, drafting, and the multi-judge
debate loop. Run with: python demos/01_story_and_debate.py
"""

import json

from dramaforge.debate import DisputeConfig, run_debate
from dramaforge.model import StoryCore, validate_story_core
from dramaforge.pipeline import StageContext, _build_banks
from dramaforge.model import Logline
from dramaforge.pipeline import PipelineConfig
from dramaforge.providers.mocks import mock_suite
from dramaforge.retrieval import EmbedderClient, plan_retrieval, summarize_atoms

LOGLINE = "The intern publicly humiliated by the director was sitting in the director's chair a year later."

suite = mock_suite(seed=11)
registry = suite.registry

seed_text = registry.call("writer", {"task": "seed_expand", "logline": LOGLINE})["seed_text"]
print("seed text:", seed_text[:120], "…\n")

plan = plan_retrieval(seed_text, registry)
print(f"retrieval plan: {len(plan.routes)} routes")
for route in plan.routes:
    print(f"  [{route.kind}] k={route.k}  {route.query[:70]}")

ctx = StageContext(registry=registry, config=PipelineConfig(), seed=11,
                   logline=Logline(LOGLINE), store=None)
pattern_bank, logic_bank = _build_banks(ctx)
embed = EmbedderClient(registry)
results = {"pattern": [], "logic": [], "fact": []}
for route in plan.routes:
    if route.kind == "pattern":
        for beat, score in pattern_bank.retrieve(route.query, route.k, embed):
            results["pattern"].append({"text": beat.beat_summary, "source_ref": beat.beat_id})
            print(f"  pattern hit {beat.beat_id} (cos {score:.3f})")
    elif route.kind == "logic":
        for chunk, score in logic_bank.retrieve(route.query, route.k, embed):
            results["logic"].append({"text": chunk.text, "source_ref": chunk.chunk_id})

atoms = summarize_atoms(results, registry)
print(f"\natoms: {len(atoms.pattern_atoms)} pattern, {len(atoms.logic_atoms)} logic\n")

draft = StoryCore.from_dict(
    registry.call("writer", {"task": "story_core", "logline": LOGLINE, "n_scenes": 3,
                             "atoms": [a.text for a in atoms.all_atoms()]})
)
print("draft valid:", validate_story_core(draft).ok)

final, trace = run_debate(draft, atoms, DisputeConfig(), registry)
for r in trace.rounds:
    means = {k: round(v, 1) for k, v in r.aggregated.mean_rubric.items()}
    print(f"round {r.round_no}: disputes={len(r.aggregated.disputes)} rubric={means}")
print("debate passed:", trace.passed)
print("\nfinal scene plan:")
for scene in final.scenes:
    print(f"  scene {scene.id} [{scene.time_label} @ {scene.location_id}] -> {scene.ending_hook}")
