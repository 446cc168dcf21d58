"""Keyframe/video prompt pairs and the three pre-render text audits.

Everything here is text-level: problems caught by these audits are corrected
by rewriting prompts, states, or prop descriptions before any pixel exists.
The routing decision (reuse the previous tail frame vs. the 3D first-frame
path) is a pure function of three booleans.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .errors import AuditExhaustedError, ProviderSchemaError, UnknownAssetError
from .model import ClipScript, PromptPair, StoryAssets
from .providers.base import ProviderRegistry
from .providers.templates import (
    PROMPT_PAIR_PROMPT,
    PROP_AUDIT_PROMPT,
    SCENE_INFO_PROMPT,
    SPATIAL_AUDIT_PROMPT,
)

SPATIAL_ISSUE_TYPES = ("POSITION", "GAZE", "ENTRY_EXIT", "PROP", "CONTINUITY", "OVERCROWDING")

MAX_AUDIT_ATTEMPTS = 3

REUSE_TAIL = "reuse_tail"
PATH_3D = "path_3d"

# role that runs the text-level audits; any bound text judge works
AUDIT_ROLE = "text_judge_a"


def _check_range(name: str, value, lo: int, hi: int) -> int:
    if not isinstance(value, int) or not lo <= value <= hi:
        raise ProviderSchemaError(f"{name}={value!r} outside {lo}..{hi}")
    return value


@dataclass(frozen=True)
class SpatialIssue:
    type: str
    note: str


@dataclass(frozen=True)
class SpatialAudit:
    spatial_consistency: int
    physics_plausibility: int
    cross_clip_continuity: int
    overall: int
    issues: tuple[SpatialIssue, ...]
    passed: bool

    def validate(self) -> None:
        for name in ("spatial_consistency", "physics_plausibility", "cross_clip_continuity", "overall"):
            _check_range(name, getattr(self, name), 0, 10)
        for issue in self.issues:
            if issue.type not in SPATIAL_ISSUE_TYPES:
                raise ProviderSchemaError(f"unknown spatial issue type {issue.type!r}")
        if not self.passed and not self.issues:
            raise ProviderSchemaError("failed spatial audit must list at least one issue")


@dataclass(frozen=True)
class PropAudit:
    prop_source_continuity: int
    prop_motion_plausibility: int
    overall: int
    passed: bool

    def validate(self) -> None:
        for name in ("prop_source_continuity", "prop_motion_plausibility", "overall"):
            _check_range(name, getattr(self, name), 0, 10)


@dataclass(frozen=True)
class SceneInfoAudit:
    needs_extra_scene_information: bool
    has_large_character_or_camera_reposition: bool
    required_scene_anchors: tuple[str, ...]

    def validate(self) -> None:
        if self.needs_extra_scene_information and not self.required_scene_anchors:
            raise ProviderSchemaError("needs_extra_scene_information=true requires scene anchors")


def build_prompt_pair(
    clip: ClipScript, scene_assets: StoryAssets, registry: ProviderRegistry
) -> PromptPair:
    """Provider-written keyframe/video prompt pair for one clip."""
    known = scene_assets.character_ids()
    for cid in clip.characters:
        if cid not in known:
            raise UnknownAssetError(f"clip references unknown character {cid!r}")
    known_props = scene_assets.prop_ids()
    for pid in clip.key_props:
        if pid not in known_props:
            raise UnknownAssetError(f"clip references unknown prop {pid!r}")

    def parse(resp: dict) -> PromptPair:
        pair = PromptPair(
            scene_id=clip.scene_id,
            clip_index=clip.clip_index,
            keyframe_prompt=str(resp["keyframe_prompt"]),
            video_prompt=str(resp["video_prompt"]),
        )
        report = pair.validate()
        if not report.ok:
            raise ProviderSchemaError(f"bad prompt pair: {report.violations}")
        return pair

    return registry.call(
        "writer",
        {
            "task": "prompt_pair",
            "prompt": PROMPT_PAIR_PROMPT,
            "payload": {"clip": clip.to_dict(), "assets": scene_assets.to_dict()},
        },
        parse=parse,
    )


def _parse_spatial(resp: dict) -> SpatialAudit:
    audit = SpatialAudit(
        spatial_consistency=resp["spatial_consistency"],
        physics_plausibility=resp["physics_plausibility"],
        cross_clip_continuity=resp["cross_clip_continuity"],
        overall=resp["overall"],
        issues=tuple(SpatialIssue(type=str(i["type"]), note=str(i["note"])) for i in resp["issues"]),
        passed=bool(resp["pass"]),
    )
    audit.validate()
    return audit


def _parse_prop(resp: dict) -> PropAudit:
    audit = PropAudit(
        prop_source_continuity=resp["prop_source_continuity"],
        prop_motion_plausibility=resp["prop_motion_plausibility"],
        overall=resp["overall"],
        passed=bool(resp["pass"]),
    )
    audit.validate()
    return audit


@dataclass
class PromptAuditResult:
    spatial: SpatialAudit
    prop: PropAudit
    pair: PromptPair
    rewrites: int


def audit_prompts(
    pair: PromptPair,
    prev_clip: Optional[ClipScript],
    next_clip: Optional[ClipScript],
    registry: ProviderRegistry,
    audit_role: str = AUDIT_ROLE,
) -> PromptAuditResult:
    """Run spatial then prop audits, rewriting the pair on failures.

    Each audit kind gets at most ``MAX_AUDIT_ATTEMPTS`` tries; a rewrite
    triggered by one audit restarts only that audit.  Exhaustion raises
    ``AuditExhaustedError`` carrying the best-scoring attempt.
    """
    context = {
        "prev_clip": prev_clip.to_dict() if prev_clip else None,
        "next_clip": next_clip.to_dict() if next_clip else None,
    }
    rewrites = 0

    def run_audit(kind: str, prompt: str, parse, current: PromptPair):
        nonlocal rewrites
        best = None
        best_score = -1
        for attempt in range(MAX_AUDIT_ATTEMPTS):
            audit = registry.call(
                audit_role,
                {
                    "task": f"{kind}_audit",
                    "prompt": prompt,
                    "payload": {"pair": current.to_dict(), "attempt": attempt, **context},
                },
                parse=parse,
            )
            if audit.overall > best_score:
                best, best_score = (audit, current), audit.overall
            if audit.passed:
                return audit, current
            if attempt == MAX_AUDIT_ATTEMPTS - 1:
                break
            issues = [i.__dict__ for i in getattr(audit, "issues", ())]
            current = _rewrite_pair(current, kind, issues, registry)
            rewrites += 1
        raise AuditExhaustedError(
            f"{kind} audit failed after {MAX_AUDIT_ATTEMPTS} attempts", best_attempt=best
        )

    spatial, pair = run_audit("spatial", SPATIAL_AUDIT_PROMPT, _parse_spatial, pair)
    prop, pair = run_audit("prop", PROP_AUDIT_PROMPT, _parse_prop, pair)
    return PromptAuditResult(spatial=spatial, prop=prop, pair=pair, rewrites=rewrites)


def _rewrite_pair(
    pair: PromptPair, audit_kind: str, issues: list, registry: ProviderRegistry
) -> PromptPair:
    def parse(resp: dict) -> PromptPair:
        new = PromptPair(
            scene_id=pair.scene_id,
            clip_index=pair.clip_index,
            keyframe_prompt=str(resp["keyframe_prompt"]),
            video_prompt=str(resp["video_prompt"]),
        )
        report = new.validate()
        if not report.ok:
            raise ProviderSchemaError(f"bad rewritten pair: {report.violations}")
        return new

    return registry.call(
        "writer",
        {
            "task": "prompt_rewrite",
            "payload": {"pair": pair.to_dict(), "audit_kind": audit_kind, "issues": issues},
        },
        parse=parse,
    )


def scene_info_audit(
    next_clip: ClipScript, registry: ProviderRegistry, audit_role: str = AUDIT_ROLE
) -> SceneInfoAudit:
    """Does the next clip's first frame need more scene context than the tail?"""

    def parse(resp: dict) -> SceneInfoAudit:
        audit = SceneInfoAudit(
            needs_extra_scene_information=bool(resp["needs_extra_scene_information"]),
            has_large_character_or_camera_reposition=bool(
                resp["has_large_character_or_camera_reposition"]
            ),
            required_scene_anchors=tuple(str(a) for a in resp["required_scene_anchors"]),
        )
        audit.validate()
        return audit

    return registry.call(
        audit_role,
        {
            "task": "scene_info_audit",
            "prompt": SCENE_INFO_PROMPT,
            "payload": {"clip": next_clip.to_dict()},
        },
        parse=parse,
    )


def route_next_frame(scene_info: SceneInfoAudit, tail_closeup) -> str:
    """Tail reuse vs. 3D path: pure function of the three flags."""
    if (
        scene_info.needs_extra_scene_information
        or scene_info.has_large_character_or_camera_reposition
        or tail_closeup.is_local_closeup
    ):
        return PATH_3D
    return REUSE_TAIL
