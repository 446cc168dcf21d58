"""Core domain types: the validated data model every stage reads and writes.

All types are immutable value objects; stages construct new versions instead
of mutating.  Canonical on-disk form is key-sorted UTF-8 JSON produced by
:mod:`dramaforge.canonical`, so ``decode(encode(x)) == x`` bit-exactly and
stage hashes are stable across platforms.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional

from .canonical import FORMAT_VERSION

MAX_LOGLINE_CHARS = 500

PROGRESSION_LINE_NAMES = (
    "external_pressure",
    "protagonist_response",
    "resolution_mechanism",
    "emotional_progression",
    "knowledge_state",
)

# Words that describe temporal development and therefore may not appear in a
# static keyframe prompt.  Configurable at the call site.
DEFAULT_TEMPORAL_STOPLIST = (
    "then",
    "begins",
    "starts",
    "suddenly",
    "afterwards",
    "afterward",
    "meanwhile",
    "gradually",
    "eventually",
    "subsequently",
    "later",
)


class ShotType(str, Enum):
    WIDE = "wide"
    MEDIUM = "medium"
    CLOSE = "close"
    EXTREME_CLOSE = "extreme-close"


class CharacterEventKind(str, Enum):
    ENTER = "enter"
    EXIT = "exit"


class RunStatus(str, Enum):
    RUNNING = "running"
    COMPLETE = "complete"
    FAILED = "failed"


def slugify(name: str) -> str:
    slug = re.sub(r"[^a-z0-9]+", "-", name.lower()).strip("-")
    return slug or "x"


def unique_slug(name: str, taken: Iterable[str]) -> str:
    """Short lowercase slug from a name, with a disambiguating counter."""
    taken = set(taken)
    base = slugify(name)
    if base not in taken:
        return base
    i = 2
    while f"{base}-{i}" in taken:
        i += 1
    return f"{base}-{i}"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


@dataclass(frozen=True)
class Logline:
    text: str
    language: str = "en"

    def validate(self) -> ValidationReport:
        v = []
        if not self.text.strip():
            v.append("logline text is empty")
        if len(self.text) > MAX_LOGLINE_CHARS:
            v.append(f"logline longer than {MAX_LOGLINE_CHARS} characters")
        if not self.language:
            v.append("language tag is empty")
        return ValidationReport(tuple(v))

    def to_dict(self) -> dict:
        return {"text": self.text, "language": self.language}

    @classmethod
    def from_dict(cls, d: dict) -> "Logline":
        return cls(text=d["text"], language=d["language"])


@dataclass(frozen=True)
class CharacterAsset:
    id: str
    identity_desc: str
    wardrobe_desc: str
    seed_portrait_ref: str = ""

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "identity_desc": self.identity_desc,
            "wardrobe_desc": self.wardrobe_desc,
            "seed_portrait_ref": self.seed_portrait_ref,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CharacterAsset":
        return cls(d["id"], d["identity_desc"], d["wardrobe_desc"], d["seed_portrait_ref"])


@dataclass(frozen=True)
class LocationAsset:
    id: str
    spatial_desc: str
    visual_attrs: str = ""

    def to_dict(self) -> dict:
        return {"id": self.id, "spatial_desc": self.spatial_desc, "visual_attrs": self.visual_attrs}

    @classmethod
    def from_dict(cls, d: dict) -> "LocationAsset":
        return cls(d["id"], d["spatial_desc"], d["visual_attrs"])


@dataclass(frozen=True)
class PropAsset:
    id: str
    functional_desc: str
    symbolic_desc: str = ""

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "functional_desc": self.functional_desc,
            "symbolic_desc": self.symbolic_desc,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PropAsset":
        return cls(d["id"], d["functional_desc"], d["symbolic_desc"])


@dataclass(frozen=True)
class StoryAssets:
    characters: tuple[CharacterAsset, ...] = ()
    locations: tuple[LocationAsset, ...] = ()
    props: tuple[PropAsset, ...] = ()

    def character_ids(self) -> set[str]:
        return {c.id for c in self.characters}

    def location_ids(self) -> set[str]:
        return {l.id for l in self.locations}

    def prop_ids(self) -> set[str]:
        return {p.id for p in self.props}

    def validate(self) -> ValidationReport:
        v = []
        for kind, ids in (
            ("character", [c.id for c in self.characters]),
            ("location", [l.id for l in self.locations]),
            ("prop", [p.id for p in self.props]),
        ):
            if len(ids) != len(set(ids)):
                v.append(f"duplicate {kind} ids")
        return ValidationReport(tuple(v))

    def to_dict(self) -> dict:
        return {
            "characters": [c.to_dict() for c in self.characters],
            "locations": [l.to_dict() for l in self.locations],
            "props": [p.to_dict() for p in self.props],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "StoryAssets":
        return cls(
            characters=tuple(CharacterAsset.from_dict(x) for x in d["characters"]),
            locations=tuple(LocationAsset.from_dict(x) for x in d["locations"]),
            props=tuple(PropAsset.from_dict(x) for x in d["props"]),
        )


@dataclass(frozen=True)
class KnowledgeUpdate:
    audience_knows: str
    characters_know: str
    hidden: str
    new_evidence: str

    def to_dict(self) -> dict:
        return {
            "audience_knows": self.audience_knows,
            "characters_know": self.characters_know,
            "hidden": self.hidden,
            "new_evidence": self.new_evidence,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "KnowledgeUpdate":
        return cls(d["audience_knows"], d["characters_know"], d["hidden"], d["new_evidence"])


@dataclass(frozen=True)
class ScenePlan:
    id: int
    title: str
    time_label: str
    location_id: str
    outline: str
    opening_attractor: str
    key_steps: tuple[str, ...]
    scene_goal: str
    escalation_beats: tuple[str, ...]
    ending_hook: str
    knowledge_update: KnowledgeUpdate

    _NARRATIVE_FIELDS = (
        "title",
        "time_label",
        "location_id",
        "outline",
        "opening_attractor",
        "scene_goal",
        "ending_hook",
    )

    def narrative_violations(self) -> list[str]:
        out = []
        for name in self._NARRATIVE_FIELDS:
            if not getattr(self, name).strip():
                out.append(f"scene {self.id}: empty {name}")
        return out

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "title": self.title,
            "spatiotemporal_boundary": {
                "time_label": self.time_label,
                "location_id": self.location_id,
            },
            "outline": self.outline,
            "opening_attractor": self.opening_attractor,
            "key_steps": list(self.key_steps),
            "scene_goal": self.scene_goal,
            "escalation_beats": list(self.escalation_beats),
            "ending_hook": self.ending_hook,
            "knowledge_update": self.knowledge_update.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScenePlan":
        b = d["spatiotemporal_boundary"]
        return cls(
            id=d["id"],
            title=d["title"],
            time_label=b["time_label"],
            location_id=b["location_id"],
            outline=d["outline"],
            opening_attractor=d["opening_attractor"],
            key_steps=tuple(d["key_steps"]),
            scene_goal=d["scene_goal"],
            escalation_beats=tuple(d["escalation_beats"]),
            ending_hook=d["ending_hook"],
            knowledge_update=KnowledgeUpdate.from_dict(d["knowledge_update"]),
        )


@dataclass(frozen=True)
class ProgressionLine:
    summary: str
    per_scene: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {"summary": self.summary, "per_scene": list(self.per_scene)}

    @classmethod
    def from_dict(cls, d: dict) -> "ProgressionLine":
        return cls(d["summary"], tuple(d["per_scene"]))


@dataclass(frozen=True)
class StoryCore:
    title: str
    theme: str
    genre: str
    scenes: tuple[ScenePlan, ...]
    progression_lines: dict[str, ProgressionLine]
    assets: StoryAssets

    def scene(self, scene_id: int) -> ScenePlan:
        for s in self.scenes:
            if s.id == scene_id:
                return s
        raise KeyError(scene_id)

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "title": self.title,
            "theme": self.theme,
            "genre": self.genre,
            "scenes": [s.to_dict() for s in self.scenes],
            "progression_lines": {k: v.to_dict() for k, v in self.progression_lines.items()},
            "assets": self.assets.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "StoryCore":
        return cls(
            title=d["title"],
            theme=d["theme"],
            genre=d["genre"],
            scenes=tuple(ScenePlan.from_dict(s) for s in d["scenes"]),
            progression_lines={
                k: ProgressionLine.from_dict(v) for k, v in sorted(d["progression_lines"].items())
            },
            assets=StoryAssets.from_dict(d["assets"]),
        )


def validate_story_core(core: StoryCore) -> ValidationReport:
    """Collect every invariant violation; empty report iff the core is valid."""
    v: list[str] = []
    if not core.scenes:
        v.append("story has no scenes")
    ids = [s.id for s in core.scenes]
    if len(ids) != len(set(ids)):
        v.append("duplicate scene ids")
    elif ids and ids != list(range(1, len(ids) + 1)):
        v.append("non-contiguous scene ids")
    for s in core.scenes:
        v.extend(s.narrative_violations())
        if s.location_id and s.location_id not in core.assets.location_ids():
            v.append(f"scene {s.id}: unknown location '{s.location_id}'")
    missing = [n for n in PROGRESSION_LINE_NAMES if n not in core.progression_lines]
    extra = [n for n in core.progression_lines if n not in PROGRESSION_LINE_NAMES]
    if missing:
        v.append(f"missing progression lines: {', '.join(missing)}")
    if extra:
        v.append(f"unknown progression lines: {', '.join(extra)}")
    ledger = core.progression_lines.get("knowledge_state")
    if ledger is not None and len(ledger.per_scene) != len(core.scenes):
        v.append("ledger cardinality: knowledge-state entries != scene count")
    v.extend(core.assets.validate().violations)
    return ValidationReport(tuple(v))


@dataclass(frozen=True)
class CharacterEvent:
    character_id: str
    event: CharacterEventKind

    def to_dict(self) -> dict:
        return {"character_id": self.character_id, "event": self.event.value}

    @classmethod
    def from_dict(cls, d: dict) -> "CharacterEvent":
        return cls(d["character_id"], CharacterEventKind(d["event"]))


@dataclass(frozen=True)
class ClipScript:
    scene_id: int
    clip_index: int
    narrative: str
    shot_type: ShotType
    characters: tuple[str, ...]
    key_props: tuple[str, ...]
    dialogue: tuple[tuple[str, str], ...]  # (speaker, line)
    actions: tuple[str, ...]
    start_state: str
    end_state: str
    characters_at_start: frozenset[str]
    characters_at_end: frozenset[str]
    character_events: tuple[CharacterEvent, ...] = ()

    def validate(self) -> ValidationReport:
        v = []
        if not self.narrative.strip():
            v.append(f"clip {self.scene_id}.{self.clip_index}: empty narrative")
        entered = {
            e.character_id for e in self.character_events if e.event is CharacterEventKind.ENTER
        }
        reachable = set(self.characters_at_start) | entered
        if not set(self.characters_at_end) <= reachable:
            v.append(
                f"clip {self.scene_id}.{self.clip_index}: characters_at_end not reachable "
                "from characters_at_start plus scripted entrances"
            )
        return ValidationReport(tuple(v))

    def to_dict(self) -> dict:
        return {
            "scene_id": self.scene_id,
            "clip_index": self.clip_index,
            "narrative": self.narrative,
            "shot_type": self.shot_type.value,
            "characters": list(self.characters),
            "key_props": list(self.key_props),
            "dialogue": [[s, l] for s, l in self.dialogue],
            "actions": list(self.actions),
            "start_state": self.start_state,
            "end_state": self.end_state,
            "characters_at_start": sorted(self.characters_at_start),
            "characters_at_end": sorted(self.characters_at_end),
            "character_events": [e.to_dict() for e in self.character_events],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ClipScript":
        return cls(
            scene_id=d["scene_id"],
            clip_index=d["clip_index"],
            narrative=d["narrative"],
            shot_type=ShotType(d["shot_type"]),
            characters=tuple(d["characters"]),
            key_props=tuple(d["key_props"]),
            dialogue=tuple((s, l) for s, l in d["dialogue"]),
            actions=tuple(d["actions"]),
            start_state=d["start_state"],
            end_state=d["end_state"],
            characters_at_start=frozenset(d["characters_at_start"]),
            characters_at_end=frozenset(d["characters_at_end"]),
            character_events=tuple(CharacterEvent.from_dict(e) for e in d["character_events"]),
        )


def validate_scene_clips(clips: list[ClipScript]) -> ValidationReport:
    v: list[str] = []
    if clips:
        idx = [c.clip_index for c in clips]
        if idx != list(range(len(clips))):
            v.append("clip_index not contiguous within scene")
        scene_ids = {c.scene_id for c in clips}
        if len(scene_ids) > 1:
            v.append("clips span multiple scenes")
    for c in clips:
        v.extend(c.validate().violations)
    return ValidationReport(tuple(v))


@dataclass(frozen=True)
class PromptPair:
    scene_id: int
    clip_index: int
    keyframe_prompt: str
    video_prompt: str

    def validate(self, stoplist: tuple[str, ...] = DEFAULT_TEMPORAL_STOPLIST) -> ValidationReport:
        v = []
        if not self.keyframe_prompt.strip():
            v.append("empty keyframe_prompt")
        if not self.video_prompt.strip():
            v.append("empty video_prompt")
        hits = temporal_stoplist_hits(self.keyframe_prompt, stoplist)
        if hits:
            v.append(f"keyframe_prompt contains temporal words: {', '.join(sorted(hits))}")
        return ValidationReport(tuple(v))

    def to_dict(self) -> dict:
        return {
            "scene_id": self.scene_id,
            "clip_index": self.clip_index,
            "keyframe_prompt": self.keyframe_prompt,
            "video_prompt": self.video_prompt,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PromptPair":
        return cls(d["scene_id"], d["clip_index"], d["keyframe_prompt"], d["video_prompt"])


def temporal_stoplist_hits(text: str, stoplist: tuple[str, ...] = DEFAULT_TEMPORAL_STOPLIST) -> set[str]:
    words = set(re.findall(r"[a-z']+", text.lower()))
    return words & set(stoplist)


# --- run manifest ------------------------------------------------------------

@dataclass(frozen=True)
class Attempt:
    verdict: str
    score: Optional[float] = None

    def to_dict(self) -> dict:
        return {"verdict": self.verdict, "score": self.score}

    @classmethod
    def from_dict(cls, d: dict) -> "Attempt":
        return cls(d["verdict"], d["score"])


@dataclass(frozen=True)
class ProviderCall:
    role: str
    request_hash: str
    response_hash: str

    def to_dict(self) -> dict:
        return {
            "role": self.role,
            "request_hash": self.request_hash,
            "response_hash": self.response_hash,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ProviderCall":
        return cls(d["role"], d["request_hash"], d["response_hash"])


@dataclass(frozen=True)
class StageRecord:
    inputs_hash: str
    outputs_hash: str
    attempts: tuple[Attempt, ...] = ()
    provider_calls: tuple[ProviderCall, ...] = ()

    def to_dict(self) -> dict:
        return {
            "inputs_hash": self.inputs_hash,
            "outputs_hash": self.outputs_hash,
            "attempts": [a.to_dict() for a in self.attempts],
            "provider_calls": [c.to_dict() for c in self.provider_calls],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "StageRecord":
        return cls(
            inputs_hash=d["inputs_hash"],
            outputs_hash=d["outputs_hash"],
            attempts=tuple(Attempt.from_dict(a) for a in d["attempts"]),
            provider_calls=tuple(ProviderCall.from_dict(c) for c in d["provider_calls"]),
        )


@dataclass(frozen=True)
class RunManifest:
    run_id: str
    seed: int
    logline: Logline
    status: RunStatus = RunStatus.RUNNING
    stage_records: dict[str, StageRecord] = field(default_factory=dict)

    def with_stage(self, stage: str, record: StageRecord) -> "RunManifest":
        records = dict(self.stage_records)
        records[stage] = record
        return RunManifest(self.run_id, self.seed, self.logline, self.status, records)

    def with_status(self, status: RunStatus) -> "RunManifest":
        return RunManifest(self.run_id, self.seed, self.logline, status, dict(self.stage_records))

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "run_id": self.run_id,
            "seed": self.seed,
            "logline": self.logline.to_dict(),
            "status": self.status.value,
            "stage_records": {k: r.to_dict() for k, r in self.stage_records.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunManifest":
        return cls(
            run_id=d["run_id"],
            seed=d["seed"],
            logline=Logline.from_dict(d["logline"]),
            status=RunStatus(d["status"]),
            stage_records={
                k: StageRecord.from_dict(r) for k, r in sorted(d["stage_records"].items())
            },
        )
