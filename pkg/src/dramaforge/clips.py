"""Scene-to-clip synthesis and the partitioned hook/scene_end/twist
review-and-rewrite loop.

The three review bands target disjoint clip partitions: hook may only change
the first clip, scene_end only the last, twist only the middle clips.  The
rewriter is never trusted: every pass is diffed against the allowed partition
and any out-of-partition edit is an error.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass

from .canonical import canonical_dumps
from .errors import (
    PartitionViolationError,
    PreconditionError,
    ProviderSchemaError,
    UnknownAssetError,
)
from .model import ClipScript, ScenePlan, StoryAssets, validate_scene_clips
from .providers.base import ProviderRegistry
from .providers.templates import CLIP_REWRITE_PROMPT, SCENE_REVIEW_PROMPT

log = logging.getLogger(__name__)

REVIEW_BANDS = ("hook", "scene_end", "twist")

MAX_REWRITE_ROUNDS = 3

# Warn-only stylistic lint on rewritten dialogue/narrative.
LINT_PATTERNS = {
    "ellipsis_in_dialogue": re.compile(r"\.\.\.|…"),
    "wet_body_description": re.compile(r"\b(soaked|dripping|drenched|wet (hair|body|clothes))\b", re.I),
}


def required_improvements(score: int) -> int:
    """Improvement-suggestion count demanded for a review score."""
    if not 1 <= score <= 10:
        raise ValueError(f"score {score} outside 1..10")
    if score <= 3:
        return 3
    if score <= 6:
        return 2
    if score == 7:
        return 1
    return 0


@dataclass(frozen=True)
class MetricReview:
    score: int
    reason: str
    improvements: tuple[str, ...]

    def validate(self, name: str) -> None:
        if not isinstance(self.score, int) or not 1 <= self.score <= 10:
            raise ProviderSchemaError(f"{name}.score={self.score!r} outside 1..10")
        want = required_improvements(self.score)
        if len(self.improvements) != want:
            raise ProviderSchemaError(
                f"{name}: score {self.score} demands exactly {want} improvements, "
                f"got {len(self.improvements)}"
            )


@dataclass(frozen=True)
class SceneReview:
    hook: MetricReview
    scene_end: MetricReview
    twist: MetricReview

    def band(self, name: str) -> MetricReview:
        return getattr(self, name)

    def validate(self, n_clips: int) -> None:
        for name in REVIEW_BANDS:
            self.band(name).validate(name)
        if n_clips < 3 and (self.twist.score != 8 or self.twist.improvements):
            raise ProviderSchemaError(
                "scenes with fewer than 3 clips must report twist score 8 with no improvements"
            )


def synthesize_clips(
    scene: ScenePlan, assets: StoryAssets, registry: ProviderRegistry
) -> list[ClipScript]:
    """Decompose one scene plan into temporally ordered clip scripts."""

    def parse(resp: dict) -> list[ClipScript]:
        clips = [ClipScript.from_dict(c) for c in resp["clips"]]
        if not clips:
            raise ProviderSchemaError("scene produced no clips")
        report = validate_scene_clips(clips)
        if not report.ok:
            raise ProviderSchemaError(f"clip invariants violated: {report.violations}")
        return clips

    clips = registry.call(
        "writer",
        {"task": "clip_synthesis", "scene": scene.to_dict(), "assets": assets.to_dict()},
        parse=parse,
    )
    known_chars = assets.character_ids()
    known_props = assets.prop_ids()
    for clip in clips:
        for cid in clip.characters:
            if cid not in known_chars:
                raise UnknownAssetError(f"clip {clip.clip_index} references unknown character {cid!r}")
        for pid in clip.key_props:
            if pid not in known_props:
                raise UnknownAssetError(f"clip {clip.clip_index} references unknown prop {pid!r}")
    return clips


def review_scene_clips(scene_clips: list[ClipScript], registry: ProviderRegistry) -> SceneReview:
    """Hook / scene_end / twist review with the exact improvement-count contract."""
    if not scene_clips:
        raise PreconditionError("cannot review an empty scene")

    def parse(resp: dict) -> SceneReview:
        review = SceneReview(
            **{
                name: MetricReview(
                    score=resp[name]["score"],
                    reason=str(resp[name]["reason"]),
                    improvements=tuple(str(x) for x in resp[name]["improvements"]),
                )
                for name in REVIEW_BANDS
            }
        )
        review.validate(n_clips=len(scene_clips))
        return review

    return registry.call(
        "writer",
        {
            "task": "scene_review",
            "prompt": SCENE_REVIEW_PROMPT,
            "payload": {"clips": [c.to_dict() for c in scene_clips]},
        },
        parse=parse,
    )


def allowed_partition(review: SceneReview, n_clips: int) -> set[int]:
    """Clip indices the rewriter may touch for this review."""
    allowed: set[int] = set()
    if review.hook.improvements:
        allowed.add(0)
    if review.scene_end.improvements:
        allowed.add(n_clips - 1)
    if review.twist.improvements:
        allowed.update(range(1, n_clips - 1))
    return allowed


def lint_clips(clips: list[ClipScript]) -> list[str]:
    warnings = []
    for clip in clips:
        for _, line in clip.dialogue:
            for name, pat in LINT_PATTERNS.items():
                if pat.search(line):
                    warnings.append(f"clip {clip.scene_id}.{clip.clip_index}: {name}")
    return warnings


def partitioned_rewrite(
    scene_clips: list[ClipScript],
    review: SceneReview,
    registry: ProviderRegistry,
    max_rounds: int = MAX_REWRITE_ROUNDS,
) -> list[ClipScript]:
    """Rewrite-review loop that can only ever touch the band's own clips.

    Terminates when every band reports zero improvements or after
    ``max_rounds`` rewrites.  Clip count is held fixed.
    """
    clips = list(scene_clips)
    for _ in range(max_rounds):
        allowed = allowed_partition(review, len(clips))
        if not allowed:
            break

        def parse(resp: dict) -> list[ClipScript]:
            new = [ClipScript.from_dict(c) for c in resp["clips"]]
            if len(new) != len(clips):
                raise ProviderSchemaError("rewrite changed the clip count")
            return new

        new_clips = registry.call(
            "writer",
            {
                "task": "clip_rewrite",
                "prompt": CLIP_REWRITE_PROMPT,
                "payload": {
                    "clips": [c.to_dict() for c in clips],
                    "review": {
                        name: {
                            "score": review.band(name).score,
                            "improvements": list(review.band(name).improvements),
                        }
                        for name in REVIEW_BANDS
                    },
                    "allowed_indices": sorted(allowed),
                },
            },
            parse=parse,
        )
        for i, (old, new) in enumerate(zip(clips, new_clips)):
            if i not in allowed and canonical_dumps(old.to_dict()) != canonical_dumps(new.to_dict()):
                raise PartitionViolationError(
                    f"rewrite touched clip {i}, outside allowed partition {sorted(allowed)}"
                )
        for w in lint_clips(new_clips):
            log.warning("style lint: %s", w)
        clips = new_clips
        review = review_scene_clips(clips, registry)
    return clips
