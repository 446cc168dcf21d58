"""Scene-to-clip synthesis and the partitioned review loop.

Shows the improvement-count contract (1-3 -> 3, 4-6 -> 2, 7 -> 1, 8-10 -> 0)
and that a scene_end rewrite cannot touch anything but the last clip.
"""

from dramaforge.canonical import canonical_dumps
from dramaforge.clips import (
    partitioned_rewrite,
    required_improvements,
    review_scene_clips,
    synthesize_clips,
)
from dramaforge.providers.mocks import MockWriter, mock_suite
from dramaforge.model import StoryCore

print("score -> required improvement suggestions")
for score in range(1, 11):
    print(f"  {score:>2} -> {required_improvements(score)}")

core = StoryCore.from_dict(
    MockWriter(seed=2).handle({"task": "story_core", "logline": "A rooftop ambush backfires.", "n_scenes": 2})
)

def demanding_review(body):
    n = len(body["payload"]["clips"])
    return {
        "hook": {"score": 8, "reason": "strong", "improvements": []},
        "scene_end": {"score": 5, "reason": "hook too soft", "improvements": [
            "make the buzzing phone visible in frame", "name the sender on screen"]},
        "twist": {"score": 8, "reason": "fine", "improvements": []}
        if n >= 3 else {"score": 8, "reason": "short scene", "improvements": []},
    }

state = {"first": True}
def review_then_pass(body):
    if state["first"]:
        state["first"] = False
        return demanding_review(body)
    return MockWriter(seed=2).handle(body)

suite = mock_suite(seed=2, scripts={"writer": {"scene_review": review_then_pass}})
clips = synthesize_clips(core.scene(1), core.assets, suite.registry)
print(f"\nscene 1 synthesized into {len(clips)} clips")

review = review_scene_clips(clips, suite.registry)
print(f"scene_end scored {review.scene_end.score} with {len(review.scene_end.improvements)} fixes")

rewritten = partitioned_rewrite(clips, review, suite.registry)
for i, (old, new) in enumerate(zip(clips, rewritten)):
    changed = canonical_dumps(old.to_dict()) != canonical_dumps(new.to_dict())
    print(f"  clip {i}: {'REWRITTEN' if changed else 'byte-identical'}")
