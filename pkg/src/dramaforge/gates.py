"""Image- and video-level reviewer gates.

Candidate selection follows the three-image protocol (previous tail frame,
geometry-only render, candidate frame): every candidate is scored
independently, any metric below 3 rejects it outright, and the winner is the
highest total among survivors with ties to the lower index.  Video audits
pass only when the metric mean clears 5 and the binary character-presence
check is perfect.  Repair never trusts the image provider with the character:
the original character pixels are composited back byte-exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import PreconditionError, ProviderSchemaError
from .model import ClipScript
from .providers.base import ProviderRegistry
from .providers.templates import CANDIDATE_SELECT_PROMPT, TAIL_CLOSEUP_PROMPT, VIDEO_AUDIT_PROMPT

CANDIDATE_DIMS = (
    "temporal_continuity",
    "layout_consistency",
    "background_quality",
    "person_scene_interaction",
    "character_integrity",
    "color_continuity",
)

REJECT_FLOOR = 3  # any metric below this rejects the candidate
VIDEO_PASS_MEAN = 5.0
AUDIT_SAMPLE_FPS = 1.0


@dataclass(frozen=True)
class CandidateScore:
    scores: dict[str, int]
    total: int
    rejected: bool
    explanations: dict[str, str]

    def validate(self) -> None:
        if set(self.scores) != set(CANDIDATE_DIMS):
            raise ProviderSchemaError(f"candidate scores must cover exactly {CANDIDATE_DIMS}")
        for dim, s in self.scores.items():
            if not isinstance(s, int) or not 0 <= s <= 5:
                raise ProviderSchemaError(f"{dim}={s!r} outside 0..5 integers")
        if self.total != sum(self.scores.values()):
            raise ProviderSchemaError("total_score != sum of metric scores")
        if self.rejected != any(s < REJECT_FLOOR for s in self.scores.values()):
            raise ProviderSchemaError("rejected flag contradicts the below-3 rule")
        for dim in CANDIDATE_DIMS:
            if not str(self.explanations.get(dim, "")).strip():
                raise ProviderSchemaError(f"empty explanation for {dim}")


@dataclass(frozen=True)
class TailCloseupReport:
    is_local_closeup: bool
    shot_scale: str
    visible_environment: str
    confidence: float

    def validate(self) -> None:
        if not 0.0 <= self.confidence <= 1.0:
            raise ProviderSchemaError(f"confidence {self.confidence} outside 0..1")


@dataclass(frozen=True)
class VideoAudit:
    physics_integrity: int
    temporal_continuity: int
    reaction_plausibility: int
    character_presence_consistency: int
    analysis: str

    def validate(self) -> None:
        for name in ("physics_integrity", "temporal_continuity", "reaction_plausibility"):
            v = getattr(self, name)
            if not isinstance(v, int) or not 0 <= v <= 10:
                raise ProviderSchemaError(f"{name}={v!r} outside 0..10")
        if self.character_presence_consistency not in (0, 10):
            raise ProviderSchemaError("character presence must be exactly 0 or 10")

    @property
    def overall(self) -> float:
        return (self.physics_integrity + self.temporal_continuity + self.reaction_plausibility) / 3.0

    @property
    def passed(self) -> bool:
        return self.overall >= VIDEO_PASS_MEAN and self.character_presence_consistency == 10


def _parse_candidate(resp: dict) -> CandidateScore:
    score = CandidateScore(
        scores={k: v for k, v in resp["scores"].items()},
        total=resp["total_score"],
        rejected=bool(resp["rejected"]),
        explanations={k: str(v) for k, v in resp["score_explanations"].items()},
    )
    score.validate()
    return score


def score_candidate(
    registry: ProviderRegistry, candidate_key: str, images: dict
) -> CandidateScore:
    return registry.call(
        "vision_judge",
        {
            "task": "candidate_select",
            "prompt": CANDIDATE_SELECT_PROMPT,
            "candidate_key": candidate_key,
            **images,
        },
        parse=_parse_candidate,
    )


def pick_winner(scores: list[CandidateScore]) -> Optional[int]:
    """Highest total among non-rejected; ties go to the lower index."""
    best: Optional[int] = None
    for i, s in enumerate(scores):
        if s.rejected:
            continue
        if best is None or s.total > scores[best].total:
            best = i
    return best


def select_first_frame(
    candidate_keys: list[str],
    images_for: Callable[[int], dict],
    registry: ProviderRegistry,
    repair: Optional[Callable[[int], None]] = None,
) -> tuple[int, list[CandidateScore]]:
    """Score 1..8 candidates and pick the winner.

    If every candidate is rejected, run the repair hook once per candidate and
    rescore; if still all rejected, fall back to the best total anyway.
    """
    if not 1 <= len(candidate_keys) <= 8:
        raise PreconditionError("select_first_frame expects 1..8 candidates")
    scores = [
        score_candidate(registry, key, images_for(i)) for i, key in enumerate(candidate_keys)
    ]
    winner = pick_winner(scores)
    if winner is not None:
        return winner, scores
    if repair is not None:
        for i in range(len(candidate_keys)):
            repair(i)
        scores = [
            score_candidate(registry, f"{key}-repaired", images_for(i))
            for i, key in enumerate(candidate_keys)
        ]
        winner = pick_winner(scores)
        if winner is not None:
            return winner, scores
    # best-available fallback: highest total regardless of rejection
    totals = [s.total for s in scores]
    return int(np.argmax(totals)), scores


def detect_tail_closeup(tail_image_wire: dict, registry: ProviderRegistry) -> TailCloseupReport:
    def parse(resp: dict) -> TailCloseupReport:
        report = TailCloseupReport(
            is_local_closeup=bool(resp["is_local_closeup"]),
            shot_scale=str(resp["shot_scale"]),
            visible_environment=str(resp["visible_environment"]),
            confidence=float(resp["confidence"]),
        )
        report.validate()
        return report

    return registry.call(
        "vision_judge",
        {"task": "tail_closeup", "prompt": TAIL_CLOSEUP_PROMPT, "frame": tail_image_wire},
        parse=parse,
    )


def sample_frame_indices(n_frames: int, fps: float, sample_fps: float = AUDIT_SAMPLE_FPS) -> list[int]:
    """Indices at the audit sampling rate; always at least first and last."""
    if n_frames < 2:
        return list(range(n_frames))
    step = max(int(round(fps / sample_fps)), 1)
    idx = sorted(set(range(0, n_frames, step)) | {n_frames - 1})
    return idx


def audit_video(
    sampled_frames: list, clip: ClipScript, registry: ProviderRegistry
) -> tuple[VideoAudit, bool]:
    """One reviewer pass over sampled frames; verdict per the pass rule."""
    if len(sampled_frames) < 2:
        raise PreconditionError("video audit needs at least 2 sampled frames")

    def parse(resp: dict) -> VideoAudit:
        audit = VideoAudit(
            physics_integrity=resp["physics_integrity"],
            temporal_continuity=resp["temporal_continuity"],
            reaction_plausibility=resp["reaction_plausibility"],
            character_presence_consistency=resp["character_presence_consistency"],
            analysis=str(resp.get("analysis", "")),
        )
        audit.validate()
        return audit

    audit = registry.call(
        "vision_judge",
        {
            "task": "video_audit",
            "prompt": VIDEO_AUDIT_PROMPT,
            "frames": sampled_frames,
            "script": {
                "characters_at_start": sorted(clip.characters_at_start),
                "characters_at_end": sorted(clip.characters_at_end),
                "character_events": [e.to_dict() for e in clip.character_events],
            },
        },
        parse=parse,
    )
    return audit, audit.passed


# --- first-frame repair -------------------------------------------------------

@dataclass(frozen=True)
class ColorCorrection:
    gains: tuple[float, float, float]
    offsets: tuple[float, float, float]


@dataclass(frozen=True)
class RepairConfig:
    max_gain: float = 1.5
    max_offset: float = 16.0  # 8-bit units


@dataclass(frozen=True)
class RepairResult:
    frame: np.ndarray
    correction: ColorCorrection


def color_correct(
    frame: np.ndarray,
    reference: np.ndarray,
    bg_mask: np.ndarray,
    config: RepairConfig,
) -> tuple[np.ndarray, ColorCorrection]:
    """Affine per-channel match of frame background stats toward reference.

    gain is clamped into [1/max_gain, max_gain] and the offset into
    +-max_offset so the correction stays conservative.
    """
    out = frame.astype(np.float64).copy()
    gains, offsets = [], []
    for c in range(3):
        f = frame[..., c].astype(np.float64)[bg_mask]
        r = reference[..., c].astype(np.float64)[bg_mask]
        sf, sr = float(f.std()), float(r.std())
        if sf > 1e-6:
            a = sr / sf
        else:
            mf = float(f.mean())
            a = (float(r.mean()) / mf) if mf > 1e-6 else 1.0
        a = float(np.clip(a, 1.0 / config.max_gain, config.max_gain))
        b = float(np.clip(r.mean() - a * f.mean(), -config.max_offset, config.max_offset))
        out[..., c] = a * frame[..., c].astype(np.float64) + b
        gains.append(a)
        offsets.append(b)
    return np.clip(out, 0, 255).astype(np.uint8), ColorCorrection(tuple(gains), tuple(offsets))


def repair_first_frame(
    frame: np.ndarray,
    issues: list[str],
    char_mask: np.ndarray,
    prev_tail: np.ndarray,
    registry: ProviderRegistry,
    config: RepairConfig | None = None,
) -> RepairResult:
    """Provider-inpainted background + conservative color correction.

    The character region is preserved byte-exactly by compositing the
    original pixels back over whatever the provider returns.
    """
    from .canonical import raster_from_wire, raster_to_wire

    cfg = config or RepairConfig()
    char_mask = char_mask.astype(bool)
    resp = registry.call(
        "image_gen",
        {
            "task": "repair",
            "frame": raster_to_wire(frame),
            "preserve_mask": raster_to_wire(char_mask.astype(np.uint8)),
            "issues": list(issues),
        },
    )
    repaired = raster_from_wire(resp["image"])
    bg_mask = ~char_mask
    corrected, correction = color_correct(repaired, prev_tail, bg_mask, cfg)
    corrected[char_mask] = frame[char_mask]
    return RepairResult(frame=corrected, correction=correction)
