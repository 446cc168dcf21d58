"""Bucket-organized music library: taxonomy, rule-based bucket assignment,
scene-level bucket selection, and segment scoring.

The library persists as two documented JSON files: ``tracks.json`` (records
of BgmTrack) and ``taxonomy.json`` (exactly sixteen buckets).  A synthetic
60-track fixture library ships for tests; its audio is synthesized
deterministically from the track id, so no media files are stored.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..canonical import FORMAT_VERSION, read_json, write_json
from ..errors import NoCandidateError, PreconditionError, ProviderSchemaError
from ..providers.base import ProviderRegistry
from ..providers.templates import BUCKET_SELECT_PROMPT, SEGMENT_SCORE_PROMPT

# The sixteen functional buckets. (id, name, description)
BUCKET_TAXONOMY = [
    ("dialogue_bed", "Dialogue bed", "unobtrusive support under conversation"),
    ("suspense", "Suspense", "held-breath tension, unresolved danger"),
    ("conflict_escalation", "Conflict escalation", "rising confrontation energy"),
    ("climax_hook", "Climax hooks", "peak-moment stingers and drops"),
    ("emotional_support", "Emotional support", "warm swell under feeling beats"),
    ("calm_healing", "Calm healing", "slow recovery and relief"),
    ("romantic_warmth", "Romantic warmth", "intimate, tender connection"),
    ("melancholy_loss", "Melancholy loss", "grief, regret, parting"),
    ("mystery_probe", "Mystery probe", "investigative curiosity, clue-following"),
    ("action_drive", "Action drive", "chase and hustle momentum"),
    ("comedic_levity", "Comedic levity", "light playful relief"),
    ("triumphant_payoff", "Triumphant payoff", "victory and vindication"),
    ("ambient_daily", "Ambient daily", "neutral everyday backdrop"),
    ("dread_undertow", "Dread undertow", "low horror unease"),
    ("nostalgic_memory", "Nostalgic memory", "wistful flashback tone"),
    ("ceremonial_power", "Ceremonial power", "formal authority and spectacle"),
]

BUCKET_IDS = tuple(b[0] for b in BUCKET_TAXONOMY)


@dataclass(frozen=True)
class BucketTaxonomy:
    buckets: tuple[tuple[str, str, str], ...]

    def __post_init__(self):
        ids = [b[0] for b in self.buckets]
        if len(self.buckets) != 16 or len(set(ids)) != 16:
            raise ValueError("taxonomy must contain exactly 16 unique buckets")

    @classmethod
    def default(cls) -> "BucketTaxonomy":
        return cls(tuple(BUCKET_TAXONOMY))

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(b[0] for b in self.buckets)


@dataclass(frozen=True)
class BgmTrack:
    track_id: str
    genre: str
    vartag: str
    instrument: str
    speed: str
    duration: float  # seconds
    bucket_ids: tuple[str, ...] = ()

    def __post_init__(self):
        if self.duration <= 0:
            raise ValueError("track duration must be positive")
        for b in self.bucket_ids:
            if b not in BUCKET_IDS:
                raise ValueError(f"unknown bucket {b!r}")

    def to_dict(self) -> dict:
        return {
            "track_id": self.track_id,
            "metadata": {
                "genre": self.genre,
                "vartag": self.vartag,
                "instrument": self.instrument,
                "speed": self.speed,
            },
            "duration": self.duration,
            "bucket_ids": list(self.bucket_ids),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BgmTrack":
        m = d["metadata"]
        return cls(
            track_id=d["track_id"],
            genre=m["genre"],
            vartag=m["vartag"],
            instrument=m["instrument"],
            speed=m["speed"],
            duration=d["duration"],
            bucket_ids=tuple(d["bucket_ids"]),
        )


# metadata keyword -> buckets rule table; later rules add, never replace
_ASSIGN_RULES = [
    ("vartag", "tense", ("suspense",)),
    ("vartag", "dark", ("dread_undertow",)),
    ("vartag", "sad", ("melancholy_loss",)),
    ("vartag", "romantic", ("romantic_warmth",)),
    ("vartag", "epic", ("ceremonial_power", "climax_hook")),
    ("vartag", "nostalgic", ("nostalgic_memory",)),
    ("vartag", "uplifting", ("triumphant_payoff",)),
    ("vartag", "warm", ("emotional_support",)),
    ("genre", "ambient", ("ambient_daily",)),
    ("genre", "comedy", ("comedic_levity",)),
    ("genre", "investigative", ("mystery_probe",)),
    ("genre", "action", ("action_drive",)),
    ("speed", "fast", ()),  # fast alone says nothing; combinations below
]

_COMBO_RULES = [
    ({"speed": "fast", "vartag": "tense"}, ("conflict_escalation",)),
    ({"speed": "fast", "genre": "action"}, ("action_drive",)),
    ({"speed": "slow", "genre": "ambient"}, ("calm_healing",)),
    ({"speed": "slow", "vartag": "warm"}, ("calm_healing",)),
]


def assign_buckets(metadata: dict[str, str]) -> tuple[str, ...]:
    """Deterministic keyword-table bucket assignment; dialogue bed fallback."""
    found: list[str] = []
    for field, keyword, buckets in _ASSIGN_RULES:
        if metadata.get(field, "").lower() == keyword:
            for b in buckets:
                if b not in found:
                    found.append(b)
    for conditions, buckets in _COMBO_RULES:
        if all(metadata.get(f, "").lower() == v for f, v in conditions.items()):
            for b in buckets:
                if b not in found:
                    found.append(b)
    if not found:
        found = ["dialogue_bed"]
    return tuple(found)


def save_library(lib_dir: str | Path, tracks: list[BgmTrack], taxonomy: BucketTaxonomy) -> None:
    lib_dir = Path(lib_dir)
    lib_dir.mkdir(parents=True, exist_ok=True)
    write_json(
        lib_dir / "tracks.json",
        {"format_version": FORMAT_VERSION, "tracks": [t.to_dict() for t in tracks]},
    )
    write_json(
        lib_dir / "taxonomy.json",
        {
            "format_version": FORMAT_VERSION,
            "buckets": [{"bucket_id": b[0], "name": b[1], "description": b[2]} for b in taxonomy.buckets],
        },
    )


def load_library(lib_dir: str | Path) -> tuple[list[BgmTrack], BucketTaxonomy]:
    lib_dir = Path(lib_dir)
    tracks = [BgmTrack.from_dict(d) for d in read_json(lib_dir / "tracks.json")["tracks"]]
    raw = read_json(lib_dir / "taxonomy.json")["buckets"]
    taxonomy = BucketTaxonomy(tuple((b["bucket_id"], b["name"], b["description"]) for b in raw))
    return tracks, taxonomy


_FIXTURE_GENRES = ("ambient", "action", "comedy", "investigative", "orchestral", "electronic")
_FIXTURE_VARTAGS = ("tense", "dark", "sad", "romantic", "epic", "nostalgic", "uplifting", "warm")
_FIXTURE_INSTRUMENTS = ("piano", "strings", "synth", "percussion", "guitar")
_FIXTURE_SPEEDS = ("slow", "medium", "fast")


def build_fixture_library(seed: int = 0, n_tracks: int = 60) -> list[BgmTrack]:
    """Synthetic library with metadata spread across the rule table."""
    rng = np.random.Generator(np.random.PCG64(seed))
    tracks = []
    for i in range(n_tracks):
        meta = {
            "genre": _FIXTURE_GENRES[int(rng.integers(len(_FIXTURE_GENRES)))],
            "vartag": _FIXTURE_VARTAGS[int(rng.integers(len(_FIXTURE_VARTAGS)))],
            "instrument": _FIXTURE_INSTRUMENTS[int(rng.integers(len(_FIXTURE_INSTRUMENTS)))],
            "speed": _FIXTURE_SPEEDS[int(rng.integers(len(_FIXTURE_SPEEDS)))],
        }
        tracks.append(
            BgmTrack(
                track_id=f"trk{i:03d}",
                genre=meta["genre"],
                vartag=meta["vartag"],
                instrument=meta["instrument"],
                speed=meta["speed"],
                duration=round(float(rng.uniform(45.0, 180.0)), 1),
                bucket_ids=assign_buckets(meta),
            )
        )
    return tracks


def synth_track_audio(track_id: str, duration: float, sample_rate: int = 48000) -> np.ndarray:
    """Deterministic audio for a fixture track: two detuned partials plus a
    slow amplitude envelope, seeded by the track id."""
    h = int.from_bytes(hashlib.sha256(track_id.encode()).digest()[:4], "little")
    base = 110.0 * (1.0 + (h % 24) / 12.0)
    t = np.arange(int(duration * sample_rate)) / sample_rate
    env = 0.6 + 0.4 * np.sin(2 * np.pi * 0.1 * t + h % 7)
    wave = 0.12 * env * (np.sin(2 * np.pi * base * t) + 0.5 * np.sin(2 * np.pi * base * 1.5 * t))
    return wave.astype(np.float32)


def select_bucket(
    scene_overview: str,
    clip_descriptions: list[str],
    clip_moods: list[str],
    taxonomy: BucketTaxonomy,
    registry: ProviderRegistry,
) -> tuple[str, str]:
    """Provider-chosen primary and backup buckets, both valid and distinct."""

    def parse(resp: dict) -> tuple[str, str]:
        primary, backup = str(resp["primary"]), str(resp["backup"])
        if primary not in taxonomy.ids or backup not in taxonomy.ids:
            raise ProviderSchemaError(f"unknown bucket in {primary!r}/{backup!r}")
        if primary == backup:
            raise ProviderSchemaError("primary and backup buckets must differ")
        return primary, backup

    return registry.call(
        "writer",
        {
            "task": "bucket_select",
            "prompt": BUCKET_SELECT_PROMPT,
            "payload": {
                "scene_overview": scene_overview,
                "clip_descriptions": clip_descriptions,
                "clip_moods": clip_moods,
                "buckets": [
                    {"bucket_id": b[0], "name": b[1], "description": b[2]} for b in taxonomy.buckets
                ],
            },
        },
        parse=parse,
    )


@dataclass(frozen=True)
class SegmentScore:
    emotion_fit: int
    narrative_fit: int
    rhythm_fit: int
    transition_fit: int
    window: tuple[float, float]

    @property
    def total(self) -> int:
        return self.emotion_fit + self.narrative_fit + self.rhythm_fit + self.transition_fit


def candidates_for_buckets(
    tracks: list[BgmTrack], primary: str, backup: str
) -> list[BgmTrack]:
    """Primary-bucket tracks; the backup bucket only when primary is empty."""
    primary_tracks = [t for t in tracks if primary in t.bucket_ids]
    if primary_tracks:
        return sorted(primary_tracks, key=lambda t: t.track_id)
    return sorted((t for t in tracks if backup in t.bucket_ids), key=lambda t: t.track_id)


def score_segments(
    scene_duration: float,
    candidates: list[BgmTrack],
    registry: ProviderRegistry,
    pad: float = 0.5,
) -> tuple[BgmTrack, SegmentScore]:
    """Audio-judge scoring of one scene-length window per candidate track."""
    if scene_duration <= 0:
        raise PreconditionError("scene duration must be positive")
    candidates = sorted(
        (t for t in candidates if t.duration + pad >= scene_duration), key=lambda t: t.track_id
    )
    if not candidates:
        raise NoCandidateError("no candidate track is long enough for the scene")

    best: tuple[BgmTrack, SegmentScore] | None = None
    for track in candidates:
        def parse(resp: dict, track=track) -> SegmentScore:
            w0, w1 = float(resp["window"][0]), float(resp["window"][1])
            if w0 < 0 or w1 > track.duration + 1e-9:
                raise ProviderSchemaError("window outside track duration")
            if abs((w1 - w0) - scene_duration) > pad + 1e-9:
                raise ProviderSchemaError("window length != scene duration within pad")
            score = SegmentScore(
                emotion_fit=_score(resp["emotion_fit"]),
                narrative_fit=_score(resp["narrative_fit"]),
                rhythm_fit=_score(resp["rhythm_fit"]),
                transition_fit=_score(resp["transition_fit"]),
                window=(w0, w1),
            )
            return score

        score = registry.call(
            "audio_judge",
            {
                "task": "segment_score",
                "prompt": SEGMENT_SCORE_PROMPT,
                "track_id": track.track_id,
                "track_duration": track.duration,
                "scene_duration": scene_duration,
            },
            parse=parse,
        )
        if best is None or score.total > best[1].total:
            best = (track, score)
    return best


def _score(v) -> int:
    if not isinstance(v, int) or not 0 <= v <= 10:
        raise ProviderSchemaError(f"fit score {v!r} outside 0..10")
    return v
