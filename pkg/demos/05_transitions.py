"""Scene-boundary planning: the full 12-case rule table, then deltas derived
from an actual story."""

import itertools

from dramaforge.model import StoryCore
from dramaforge.providers.mocks import MockWriter, mock_suite
from dramaforge.transitions import SceneDelta, derive_delta, plan_transition

print("time        space       narrative  ->  transition")
for time_shift, space, moving in itertools.product(
    ("continuous", "advanced"), ("same", "local_move", "different"), (False, True)
):
    spec = plan_transition(SceneDelta(time_shift, space, moving, "two days", "courthouse"))
    overlay = f'  overlay="{spec.overlay_text}"' if spec.overlay_text else ""
    print(f"{time_shift:<11} {space:<11} {str(moving):<9} ->  {spec.kind}{overlay}")

suite = mock_suite(seed=5)
core = StoryCore.from_dict(
    MockWriter(seed=5).handle({"task": "story_core", "logline": "A witness changes her story.", "n_scenes": 4})
)
print("\nstory boundaries:")
for a, b in zip(core.scenes, core.scenes[1:]):
    delta = derive_delta(a, b, suite.registry)
    spec = plan_transition(delta)
    print(
        f"  scene {a.id} ({a.time_label} @ {a.location_id}) -> scene {b.id} "
        f"({b.time_label} @ {b.location_id}): {spec.kind}"
    )
