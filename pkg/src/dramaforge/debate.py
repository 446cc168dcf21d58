"""Multi-judge story debate: review, deterministic aggregation, arbitration,
patch-based revision, and the idea-bank revival pass.

Aggregation is pure and order-free: permuting the input reviews yields a
byte-identical result.  Only the judge/decider/reviser calls touch providers.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field, replace
from typing import Optional

from .canonical import hash_of
from .errors import PatchTargetError, PreconditionError, ProviderSchemaError
from .model import (
    ProgressionLine,
    PROGRESSION_LINE_NAMES,
    ScenePlan,
    StoryCore,
    validate_story_core,
)
from .providers.base import ProviderRegistry
from .providers.templates import DECIDER_PROMPT, JUDGE_PROMPT, REVISER_PROMPT

log = logging.getLogger(__name__)

RUBRIC_DIMS = (
    "logic_integrity",
    "open_grab",
    "hook_continuity",
    "clarity",
    "reversal_pacing",
    "payoff_resolution",
)

SEVERITY_LEVELS = ("low", "medium", "high", "critical")

# Floors a draft must meet on mean rubric scores to leave the loop.  The three
# key dimensions carry the hard floor of 7; the remaining three use 6.
DEFAULT_PASS_FLOORS = {
    "logic_integrity": 7.0,
    "open_grab": 7.0,
    "clarity": 7.0,
    "hook_continuity": 6.0,
    "reversal_pacing": 6.0,
    "payoff_resolution": 6.0,
}

JUDGE_ROLES = ("text_judge_a", "text_judge_b", "text_judge_c")


@dataclass(frozen=True)
class DisputeConfig:
    score_gap: int = 3
    severity_levels: int = 2
    logic_floor: int = 4
    top_k_fixes: int = 5
    max_rounds: int = 3
    revive_limit: int = 2
    pass_floors: dict = field(default_factory=lambda: dict(DEFAULT_PASS_FLOORS))


@dataclass(frozen=True)
class IssueTarget:
    kind: str  # "scene" | "progression_line"
    ref: str  # scene id as str, or line name

    def resolves(self, core: StoryCore) -> bool:
        if self.kind == "scene":
            return self.ref.isdigit() and any(s.id == int(self.ref) for s in core.scenes)
        if self.kind == "progression_line":
            return self.ref in PROGRESSION_LINE_NAMES
        return False

    def to_dict(self) -> dict:
        return {"kind": self.kind, "ref": self.ref}

    @classmethod
    def from_dict(cls, d: dict) -> "IssueTarget":
        return cls(d["kind"], str(d["ref"]))


@dataclass(frozen=True)
class Issue:
    issue_id: str
    evidence: str
    fix_direction: str
    target: IssueTarget
    severity: str

    def to_dict(self) -> dict:
        return {
            "issue_id": self.issue_id,
            "evidence": self.evidence,
            "fix_direction": self.fix_direction,
            "target": self.target.to_dict(),
            "severity": self.severity,
        }


@dataclass(frozen=True)
class JudgeReview:
    judge_id: str
    keep_strengths: tuple[str, ...]
    rubric: dict[str, int]
    must_fix: tuple[Issue, ...]
    visual_gate: str  # pass | borderline | fail

    def validate(self) -> None:
        if set(self.rubric) != set(RUBRIC_DIMS):
            raise ProviderSchemaError(f"rubric must have exactly the dims {RUBRIC_DIMS}")
        for dim, score in self.rubric.items():
            if not isinstance(score, int) or not 0 <= score <= 10:
                raise ProviderSchemaError(f"rubric[{dim}]={score!r} outside 0..10 integers")
        if self.visual_gate not in ("pass", "borderline", "fail"):
            raise ProviderSchemaError(f"bad visual_gate {self.visual_gate!r}")
        for issue in self.must_fix:
            if issue.severity not in SEVERITY_LEVELS:
                raise ProviderSchemaError(f"bad severity {issue.severity!r}")


@dataclass(frozen=True)
class Dispute:
    kind: str  # score_gap | severity_conflict | direction_conflict | high_risk
    payload: dict

    def to_dict(self) -> dict:
        return {"kind": self.kind, "payload": self.payload}


@dataclass(frozen=True)
class AggregatedReview:
    strengths: tuple[str, ...]
    mean_rubric: dict[str, float]
    candidate_fixes: tuple[Issue, ...]
    disputes: tuple[Dispute, ...]

    def to_dict(self) -> dict:
        return {
            "strengths": list(self.strengths),
            "mean_rubric": self.mean_rubric,
            "candidate_fixes": [i.to_dict() for i in self.candidate_fixes],
            "disputes": [d.to_dict() for d in self.disputes],
        }


def normalize_text(text: str) -> str:
    return re.sub(r"\s+", " ", re.sub(r"[^\w\s]", "", text.lower())).strip()


def aggregate(reviews: list[JudgeReview], thresholds: DisputeConfig) -> AggregatedReview:
    """Merge judge reviews into one deterministic, order-free summary."""
    if len(reviews) < 2:
        raise PreconditionError("aggregation needs at least two judge reviews")
    by_judge = sorted(reviews, key=lambda r: r.judge_id)

    # strengths deduped by normalized text; lexicographically smallest original survives
    groups: dict[str, str] = {}
    for r in by_judge:
        for s in r.keep_strengths:
            key = normalize_text(s)
            if key and (key not in groups or s < groups[key]):
                groups[key] = s
    strengths = tuple(groups[k] for k in sorted(groups))

    mean_rubric = {
        dim: sum(r.rubric[dim] for r in by_judge) / len(by_judge) for dim in RUBRIC_DIMS
    }

    all_issues = [i for r in by_judge for i in r.must_fix]
    fix_groups: dict[tuple, Issue] = {}
    for issue in all_issues:
        key = (issue.target.kind, issue.target.ref, normalize_text(issue.fix_direction))
        if key not in fix_groups or issue.issue_id < fix_groups[key].issue_id:
            fix_groups[key] = issue
    sev_rank = {s: i for i, s in enumerate(SEVERITY_LEVELS)}
    candidate_fixes = tuple(
        sorted(fix_groups.values(), key=lambda i: (-sev_rank[i.severity], i.issue_id))
    )

    disputes: list[Dispute] = []
    for dim in RUBRIC_DIMS:
        scores = [r.rubric[dim] for r in by_judge]
        if max(scores) - min(scores) >= thresholds.score_gap:
            disputes.append(
                Dispute(
                    kind="score_gap",
                    payload={
                        "dimension": dim,
                        "scores": {r.judge_id: r.rubric[dim] for r in by_judge},
                    },
                )
            )
    by_target: dict[tuple, list[Issue]] = {}
    for issue in all_issues:
        by_target.setdefault((issue.target.kind, issue.target.ref), []).append(issue)
    for (kind, ref), issues in sorted(by_target.items()):
        sevs = [sev_rank[i.severity] for i in issues]
        if max(sevs) - min(sevs) >= thresholds.severity_levels:
            disputes.append(
                Dispute(
                    kind="severity_conflict",
                    payload={
                        "target": {"kind": kind, "ref": ref},
                        "severities": sorted(i.severity for i in issues),
                        "issue_ids": sorted(i.issue_id for i in issues),
                    },
                )
            )
        directions = {normalize_text(i.fix_direction) for i in issues}
        if len(directions) > 1:
            disputes.append(
                Dispute(
                    kind="direction_conflict",
                    payload={
                        "target": {"kind": kind, "ref": ref},
                        "directions": sorted(directions),
                        "issue_ids": sorted(i.issue_id for i in issues),
                    },
                )
            )
    gate_failures = sorted(r.judge_id for r in by_judge if r.visual_gate == "fail")
    low_logic = sorted(
        r.judge_id for r in by_judge if r.rubric["logic_integrity"] < thresholds.logic_floor
    )
    if gate_failures or low_logic:
        disputes.append(
            Dispute(
                kind="high_risk",
                payload={"gate_failures": gate_failures, "low_logic": low_logic},
            )
        )

    kind_rank = {"score_gap": 0, "severity_conflict": 1, "direction_conflict": 2, "high_risk": 3}
    disputes.sort(key=lambda d: (kind_rank[d.kind], hash_of(d.payload)))
    return AggregatedReview(
        strengths=strengths,
        mean_rubric=mean_rubric,
        candidate_fixes=candidate_fixes,
        disputes=tuple(disputes),
    )


# --- arbitration ---------------------------------------------------------------

@dataclass(frozen=True)
class DisputeRuling:
    dispute_index: int
    fix: bool
    minimal_change_note: str
    issue_id: Optional[str] = None


@dataclass(frozen=True)
class DeciderRuling:
    rulings: tuple[DisputeRuling, ...]
    protected_strengths: tuple[str, ...]


def arbitrate(
    disputes: tuple[Dispute, ...],
    aggregated: AggregatedReview,
    core: StoryCore,
    registry: ProviderRegistry,
) -> DeciderRuling:
    if not disputes:
        raise PreconditionError("arbitrate called with no disputes")
    known_issue_ids = {i.issue_id for i in aggregated.candidate_fixes}

    def parse(resp: dict) -> DeciderRuling:
        rulings = []
        entries = resp["rulings"]
        if len(entries) != len(disputes):
            raise ProviderSchemaError("ruling count != dispute count")
        seen = set()
        for e in entries:
            idx = int(e["dispute_index"])
            if idx < 0 or idx >= len(disputes) or idx in seen:
                raise ProviderSchemaError(f"bad dispute_index {idx}")
            seen.add(idx)
            issue_id = e.get("issue_id")
            if issue_id is not None and issue_id not in known_issue_ids:
                raise ProviderSchemaError(f"ruling references unknown issue {issue_id!r}")
            rulings.append(
                DisputeRuling(
                    dispute_index=idx,
                    fix=bool(e["fix"]),
                    minimal_change_note=str(e["minimal_change_note"]),
                    issue_id=issue_id,
                )
            )
        rulings.sort(key=lambda r: r.dispute_index)
        return DeciderRuling(
            rulings=tuple(rulings),
            protected_strengths=tuple(str(s) for s in resp.get("protected_strengths", [])),
        )

    return registry.call(
        "decider",
        {
            "task": "decider_ruling",
            "prompt": DECIDER_PROMPT,
            "payload": {
                "disputes": [d.to_dict() for d in disputes],
                "aggregated": aggregated.to_dict(),
                "story_title": core.title,
            },
        },
        parse=parse,
    )


# --- revision --------------------------------------------------------------------

@dataclass(frozen=True)
class Patch:
    target: IssueTarget
    replacement_scene: Optional[ScenePlan] = None
    replacement_line: Optional[ProgressionLine] = None


@dataclass(frozen=True)
class IdeaBankEntry:
    idea_text: str
    removed_in_round: int
    origin_issue_id: str

    def to_dict(self) -> dict:
        return {
            "idea_text": self.idea_text,
            "removed_in_round": self.removed_in_round,
            "origin_issue_id": self.origin_issue_id,
        }


def apply_patches(core: StoryCore, patches: list[Patch]) -> StoryCore:
    """Replace only the targeted scenes/lines; everything else is reused as-is."""
    scenes = list(core.scenes)
    lines = dict(core.progression_lines)
    for patch in patches:
        if not patch.target.resolves(core):
            raise PatchTargetError(f"patch targets unknown {patch.target.kind} {patch.target.ref!r}")
        if patch.target.kind == "scene":
            sid = int(patch.target.ref)
            if patch.replacement_scene is None or patch.replacement_scene.id != sid:
                raise PatchTargetError(f"scene patch for {sid} lacks a matching replacement")
            scenes = [patch.replacement_scene if s.id == sid else s for s in scenes]
        else:
            if patch.replacement_line is None:
                raise PatchTargetError(f"line patch for {patch.target.ref!r} lacks a replacement")
            lines[patch.target.ref] = patch.replacement_line
    return StoryCore(
        title=core.title,
        theme=core.theme,
        genre=core.genre,
        scenes=tuple(scenes),
        progression_lines=lines,
        assets=core.assets,
    )


def _parse_patch(p: dict) -> Patch:
    target = IssueTarget.from_dict(p["target"])
    if target.kind == "scene":
        return Patch(target=target, replacement_scene=ScenePlan.from_dict(p["replacement"]))
    return Patch(target=target, replacement_line=ProgressionLine.from_dict(p["replacement"]))


def revise(
    core: StoryCore,
    top_fixes: list[Issue],
    ruling: Optional[DeciderRuling],
    registry: ProviderRegistry,
    round_no: int = 1,
) -> tuple[StoryCore, list[IdeaBankEntry]]:
    """Patch-based local revision: replaces only targeted scenes/lines."""

    def parse(resp: dict) -> tuple[list[Patch], list[dict]]:
        patches = [_parse_patch(p) for p in resp["patches"]]
        return patches, list(resp.get("idea_bank", []))

    patches, removed = registry.call(
        "writer",
        {
            "task": "revise_patches",
            "prompt": REVISER_PROMPT,
            "payload": {
                "core": core.to_dict(),
                "fixes": [i.to_dict() for i in top_fixes],
                "ruling": None
                if ruling is None
                else {
                    "rulings": [
                        {
                            "dispute_index": r.dispute_index,
                            "fix": r.fix,
                            "minimal_change_note": r.minimal_change_note,
                        }
                        for r in ruling.rulings
                    ],
                    "protected_strengths": list(ruling.protected_strengths),
                },
            },
        },
        parse=parse,
    )
    new_core = apply_patches(core, patches)
    report = validate_story_core(new_core)
    if not report.ok:
        raise ProviderSchemaError(f"revised core invalid: {report.violations}")
    entries = [
        IdeaBankEntry(
            idea_text=str(e["idea_text"]),
            removed_in_round=round_no,
            origin_issue_id=str(e.get("origin_issue_id", "")),
        )
        for e in removed
    ]
    return new_core, entries


# --- the loop ---------------------------------------------------------------------

@dataclass
class RoundRecord:
    round_no: int
    reviews: list[JudgeReview]
    aggregated: AggregatedReview
    ruling: Optional[DeciderRuling]
    patched_targets: list[str]
    core_hash: str


@dataclass
class DebateTrace:
    rounds: list[RoundRecord] = field(default_factory=list)
    idea_bank: list[IdeaBankEntry] = field(default_factory=list)
    revived: list[str] = field(default_factory=list)
    passed: bool = False

    def to_dict(self) -> dict:
        return {
            "rounds": [
                {
                    "round_no": r.round_no,
                    "mean_rubric": r.aggregated.mean_rubric,
                    "n_disputes": len(r.aggregated.disputes),
                    "patched_targets": r.patched_targets,
                    "core_hash": r.core_hash,
                }
                for r in self.rounds
            ],
            "idea_bank": [e.to_dict() for e in self.idea_bank],
            "revived": self.revived,
            "passed": self.passed,
        }


def _parse_judge(judge_id: str):
    def parse(resp: dict) -> JudgeReview:
        issues = tuple(
            Issue(
                issue_id=str(i["issue_id"]),
                evidence=str(i["evidence"]),
                fix_direction=str(i["fix_direction"]),
                target=IssueTarget.from_dict(i["target"]),
                severity=str(i["severity"]),
            )
            for i in resp.get("must_fix", [])
        )
        review = JudgeReview(
            judge_id=judge_id,
            keep_strengths=tuple(str(s) for s in resp.get("keep_strengths", [])),
            rubric={k: v for k, v in resp["rubric"].items()},
            must_fix=issues,
            visual_gate=str(resp["visual_gate"]),
        )
        review.validate()
        return review

    return parse


def meets_pass_bar(reviews: list[JudgeReview], aggregated: AggregatedReview, floors: dict) -> bool:
    if any(r.visual_gate == "fail" for r in reviews):
        return False
    return all(aggregated.mean_rubric[dim] >= floors[dim] for dim in RUBRIC_DIMS)


def run_debate(
    draft: StoryCore,
    atoms,
    config: DisputeConfig,
    registry: ProviderRegistry,
) -> tuple[StoryCore, DebateTrace]:
    """Review/revise loop with a final idea-revival pass.

    Halts within ``config.max_rounds`` rounds plus at most one revival revise.
    """
    report = validate_story_core(draft)
    if not report.ok:
        raise PreconditionError(f"draft core invalid: {report.violations}")
    core = draft
    trace = DebateTrace()
    atoms_payload = [a.to_dict() if hasattr(a, "to_dict") else {"text": a.text, "source_ref": a.source_ref} for a in (atoms.all_atoms() if atoms else [])]

    for round_no in range(1, config.max_rounds + 1):
        reviews: list[JudgeReview] = []
        for role in JUDGE_ROLES:
            if role not in registry.bound_roles():
                log.warning("judge role %s unbound; degrading to %d-judge aggregation",
                            role, len(JUDGE_ROLES) - 1)
                continue
            try:
                reviews.append(
                    registry.call(
                        role,
                        {
                            "task": "judge_review",
                            "prompt": JUDGE_PROMPT,
                            "payload": {
                                "round": round_no,
                                "core": core.to_dict(),
                                "atoms": atoms_payload,
                            },
                        },
                        parse=_parse_judge(role),
                    )
                )
            except ProviderSchemaError:
                log.warning("judge %s failed schema validation terminally; excluded", role)
        aggregated = aggregate(reviews, config)

        if meets_pass_bar(reviews, aggregated, config.pass_floors):
            trace.rounds.append(
                RoundRecord(round_no, reviews, aggregated, None, [], hash_of(core.to_dict()))
            )
            trace.passed = True
            break

        ruling = None
        fixes = list(aggregated.candidate_fixes[: config.top_k_fixes])
        if aggregated.disputes:
            ruling = arbitrate(aggregated.disputes, aggregated, core, registry)
            rejected = {
                r.issue_id for r in ruling.rulings if not r.fix and r.issue_id is not None
            }
            fixes = [f for f in fixes if f.issue_id not in rejected]
        core, new_entries = revise(core, fixes, ruling, registry, round_no=round_no)
        trace.idea_bank.extend(new_entries)
        trace.rounds.append(
            RoundRecord(
                round_no,
                reviews,
                aggregated,
                ruling,
                [f"{f.target.kind}:{f.target.ref}" for f in fixes],
                hash_of(core.to_dict()),
            )
        )

    if trace.idea_bank:
        core = _revival_pass(core, trace, config, registry)
    return core, trace


def _revival_pass(
    core: StoryCore, trace: DebateTrace, config: DisputeConfig, registry: ProviderRegistry
) -> StoryCore:
    """Ask the decider which banked ideas to restore, then one revise pass."""

    def parse_select(resp: dict) -> list[int]:
        picks = [int(i) for i in resp["revive_indices"]]
        if len(picks) > config.revive_limit:
            raise ProviderSchemaError(f"more than {config.revive_limit} revival picks")
        if any(i < 0 or i >= len(trace.idea_bank) for i in picks):
            raise ProviderSchemaError("revival pick out of range")
        return picks

    picks = registry.call(
        "decider",
        {
            "task": "revival_select",
            "payload": {
                "idea_bank": [e.to_dict() for e in trace.idea_bank],
                "limit": config.revive_limit,
                "core": core.to_dict(),
            },
        },
        parse=parse_select,
    )
    if not picks:
        return core

    def parse(resp: dict):
        return [_parse_patch(p) for p in resp["patches"]]

    patches = registry.call(
        "writer",
        {
            "task": "revive_ideas",
            "payload": {
                "core": core.to_dict(),
                "ideas": [trace.idea_bank[i].to_dict() for i in picks],
            },
        },
        parse=parse,
    )
    revived_core = apply_patches(core, patches)
    report = validate_story_core(revived_core)
    if not report.ok:
        raise ProviderSchemaError(f"revived core invalid: {report.violations}")
    trace.revived = [trace.idea_bank[i].idea_text for i in picks]
    return revived_core
