"""Benchmark harness: metric/scope instantiation, judge fan-out, aggregation.

Eight metrics over four scopes. Unit counts are closed-form in the drama
shape: one drama-scoped unit per metric, one scene-scoped unit per scene, one
clip-pair unit per adjacent clip pair within a scene, one scene-pair unit per
scene boundary.  Scores are 1-5 integers averaged across judges and units.
"""

from __future__ import annotations

import importlib.resources
import json
import logging
from dataclasses import dataclass

from .errors import IncompleteRunError, ProviderSchemaError
from .manifest import RunStore
from .model import RunStatus
from .providers.base import ProviderRegistry
from .providers.templates import EVAL_UNIT_PROMPT

log = logging.getLogger(__name__)

# metric name -> (scope, rubric)
METRICS: dict[str, tuple[str, str]] = {
    "opening_hook": (
        "drama",
        "Do the first ten seconds attract viewers, establish stakes, and create immediate curiosity?",
    ),
    "end_hook": (
        "scene",
        "Does the scene ending create sufficient motivation to keep watching?",
    ),
    "escalation_effect": (
        "scene",
        "Does the middle portion of the scene deliver conflict escalation, rising pressure, or a power reversal?",
    ),
    "narrative_coherence": (
        "drama",
        "Does the story logic stay clear, non-confusing, and internally consistent?",
    ),
    "character_spatial_continuity": (
        "clip_pair",
        "Across the adjacent clips, do character identity, screen position, body orientation, and spatial relationships stay continuous?",
    ),
    "environment_layout_continuity": (
        "clip_pair",
        "Across the adjacent clips, do background layout, room geometry, object placement, and camera direction stay consistent?",
    ),
    "bgm_emotion_alignment": (
        "scene",
        "Does the music's emotion align with the scene mood, tension, pacing, and dramatic intent?",
    ),
    "transition_naturalness": (
        "scene_pair",
        "Do the previous scene tail, the transition, and the next scene head connect naturally in action, camera, mood, and story logic?",
    ),
}

PAIR_SAMPLE_FRAMES = 3  # frames taken from each side of a clip boundary


@dataclass(frozen=True)
class EvalUnit:
    metric: str
    scope: str
    unit_key: str
    media_refs: tuple[str, ...]
    context: str = ""


def drama_shape(frames_payload: dict) -> list[tuple[int, int]]:
    """(scene_id, n_clips) pairs from a frames-stage artifact."""
    return sorted(
        (int(sid), len(rec["clips"])) for sid, rec in frames_payload["scenes"].items()
    )


def expected_unit_counts(shape: list[tuple[int, int]]) -> dict[str, int]:
    """Closed-form unit counts for a drama shape."""
    n_scenes = len(shape)
    pairs = sum(max(n - 1, 0) for _, n in shape)
    return {
        "opening_hook": 1,
        "narrative_coherence": 1,
        "end_hook": n_scenes,
        "escalation_effect": n_scenes,
        "bgm_emotion_alignment": n_scenes,
        "character_spatial_continuity": pairs,
        "environment_layout_continuity": pairs,
        "transition_naturalness": max(n_scenes - 1, 0),
    }


def _clip_ref(sid: int, clip_index: int, kind: str) -> str:
    return f"stages/frames_videos.json#scenes/{sid}/clips/{clip_index}/{kind}"


def build_units_from_shape(shape: list[tuple[int, int]]) -> list[EvalUnit]:
    units: list[EvalUnit] = []
    if not shape:
        return units
    first_sid = shape[0][0]
    for metric, (scope, _) in METRICS.items():
        if scope == "drama":
            refs = tuple(
                _clip_ref(sid, k, "video") for sid, n in shape for k in range(n)
            )
            units.append(EvalUnit(metric, scope, f"{metric}/drama", refs))
        elif scope == "scene":
            for sid, n in shape:
                refs = tuple(_clip_ref(sid, k, "video") for k in range(n))
                if metric == "bgm_emotion_alignment":
                    refs = refs + (f"stages/post.json#scene_audio/{sid}",)
                units.append(EvalUnit(metric, scope, f"{metric}/scene-{sid}", refs))
        elif scope == "clip_pair":
            for sid, n in shape:
                for k in range(n - 1):
                    refs = tuple(
                        f"{_clip_ref(sid, k, 'tail')}@{j}" for j in range(PAIR_SAMPLE_FRAMES)
                    ) + tuple(
                        f"{_clip_ref(sid, k + 1, 'head')}@{j}" for j in range(PAIR_SAMPLE_FRAMES)
                    )
                    units.append(
                        EvalUnit(metric, scope, f"{metric}/scene-{sid}-pair-{k}", refs)
                    )
        else:  # scene_pair
            for (sid, _), (next_sid, _) in zip(shape, shape[1:]):
                refs = (
                    _clip_ref(sid, 0, "scene_tail"),
                    f"stages/post.json#transitions/{sid}",
                    _clip_ref(next_sid, 0, "scene_head"),
                )
                units.append(EvalUnit(metric, "scene_pair", f"{metric}/boundary-{sid}", refs))
    return units


def build_units(store: RunStore) -> list[EvalUnit]:
    manifest = store.load_manifest()
    if manifest.status is not RunStatus.COMPLETE:
        raise IncompleteRunError(f"run {store.run_id} has status {manifest.status.value}")
    frames = store.load_stage("frames_videos")
    return build_units_from_shape(drama_shape(frames))


def judge_units(
    units: list[EvalUnit],
    registry: ProviderRegistry,
    judge_roles: tuple[str, ...] = ("vision_judge",),
) -> dict:
    """Fan every unit out to every judge; aggregate means per metric.

    Units whose judging fails schema validation are recorded and excluded.
    """
    if not judge_roles:
        raise ProviderSchemaError("no judge roles configured")
    per_unit: list[dict] = []
    excluded: list[str] = []
    for unit in units:
        scores = []
        for role in judge_roles:
            def parse(resp: dict) -> int:
                s = resp["score"]
                if not isinstance(s, int) or not 1 <= s <= 5:
                    raise ProviderSchemaError(f"score {s!r} outside 1..5")
                return s

            try:
                scores.append(
                    registry.call(
                        role,
                        {
                            "task": "eval_unit",
                            "prompt": EVAL_UNIT_PROMPT.format(
                                metric=unit.metric,
                                scope=unit.scope,
                                rubric=METRICS[unit.metric][1],
                                context=unit.context,
                            ),
                            "metric": unit.metric,
                            "unit_key": unit.unit_key,
                            "media_refs": list(unit.media_refs),
                        },
                        parse=parse,
                    )
                )
            except ProviderSchemaError:
                log.warning("judge %s failed on unit %s; excluded", role, unit.unit_key)
        if scores:
            per_unit.append(
                {
                    "metric": unit.metric,
                    "unit_key": unit.unit_key,
                    "judge_scores": scores,
                    "mean": sum(scores) / len(scores),
                }
            )
        else:
            excluded.append(unit.unit_key)
    summary = {}
    for metric in METRICS:
        means = [u["mean"] for u in per_unit if u["metric"] == metric]
        summary[metric] = sum(means) / len(means) if means else None
    return {"units": per_unit, "excluded": excluded, "summary": summary}


def load_bench_prompts() -> list[dict]:
    data = importlib.resources.files("dramaforge.data").joinpath("bench_prompts.json").read_text("utf-8")
    return json.loads(data)["prompts"]
