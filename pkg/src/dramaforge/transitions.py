"""Rule-based inter-scene transition planning.

The twelve (time, space, movement) combinations map deterministically to one
of four transition kinds.  Space dominates time: a location-establishing shot
already carries both the new place and the new time in its overlay.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .model import ScenePlan
from .providers.base import ProviderRegistry

TIME_SHIFTS = ("continuous", "advanced")
SPACE_SHIFTS = ("same", "local_move", "different")

DIRECT_CUT = "direct_cut"
TEMPORAL = "temporal"
LOCATION_ESTABLISHING = "location_establishing"
MOTION_BRIDGE = "motion_bridge"


@dataclass(frozen=True)
class SceneDelta:
    time_shift: str
    space_shift: str
    movement_is_narrative: bool
    elapsed_hint: str = ""
    location_hint: str = ""

    def __post_init__(self):
        if self.time_shift not in TIME_SHIFTS:
            raise ValueError(f"bad time_shift {self.time_shift!r}")
        if self.space_shift not in SPACE_SHIFTS:
            raise ValueError(f"bad space_shift {self.space_shift!r}")


@dataclass(frozen=True)
class TransitionSpec:
    kind: str
    overlay_text: Optional[str] = None
    generation_prompt: Optional[str] = None

    def validate(self) -> None:
        if self.kind in (TEMPORAL, LOCATION_ESTABLISHING) and not self.overlay_text:
            raise ValueError(f"{self.kind} transition requires overlay_text")
        if self.kind == DIRECT_CUT and (self.overlay_text or self.generation_prompt):
            raise ValueError("direct_cut carries no overlay or generation prompt")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "overlay_text": self.overlay_text,
            "generation_prompt": self.generation_prompt,
        }


def plan_transition(delta: SceneDelta) -> TransitionSpec:
    """Deterministic rule table over (time, space, movement)."""
    if delta.space_shift == "different":
        # establishing shot clarifies both the upcoming place and time
        overlay = ", ".join(x for x in (delta.location_hint, delta.elapsed_hint) if x) or "New location"
        spec = TransitionSpec(
            kind=LOCATION_ESTABLISHING,
            overlay_text=overlay,
            generation_prompt=(
                f"Exterior or entrance establishing shot of {delta.location_hint or 'the next location'}."
            ),
        )
    elif delta.space_shift == "local_move" and delta.movement_is_narrative:
        spec = TransitionSpec(
            kind=MOTION_BRIDGE,
            generation_prompt="The character moves through the connecting space toward the next scene.",
        )
    elif delta.time_shift == "advanced":
        overlay = f"{delta.elapsed_hint} later" if delta.elapsed_hint else "Later"
        spec = TransitionSpec(
            kind=TEMPORAL,
            overlay_text=overlay,
            generation_prompt="Time-lapse of the unchanged location showing time passing.",
        )
    else:
        spec = TransitionSpec(kind=DIRECT_CUT)
    spec.validate()
    return spec


def derive_delta(prev: ScenePlan, next_scene: ScenePlan, registry: ProviderRegistry) -> SceneDelta:
    """Classify the boundary between two adjacent scenes.

    Location-id equality decides same; otherwise the text classifier decides
    local move vs. a substantially different place.  Time advances when the
    labels differ or the classifier flags elapsed time.
    """

    def parse(resp: dict) -> dict:
        out = {
            "movement_is_narrative": bool(resp["movement_is_narrative"]),
            "time_advanced": bool(resp["time_advanced"]),
            "local_move": bool(resp.get("local_move", False)),
        }
        return out

    cls = registry.call(
        "writer",
        {
            "task": "movement_classify",
            "prev_boundary": f"{prev.time_label} at {prev.location_id}: {prev.ending_hook}",
            "next_boundary": f"{next_scene.time_label} at {next_scene.location_id}: {next_scene.opening_attractor}",
        },
        parse=parse,
    )
    if prev.location_id == next_scene.location_id:
        space = "same"
    elif cls["local_move"]:
        space = "local_move"
    else:
        space = "different"
    advanced = prev.time_label != next_scene.time_label or cls["time_advanced"]
    return SceneDelta(
        time_shift="advanced" if advanced else "continuous",
        space_shift=space,
        movement_is_narrative=cls["movement_is_narrative"],
        elapsed_hint=next_scene.time_label,
        location_hint=next_scene.location_id,
    )
