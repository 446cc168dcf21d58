"""Dialogue-aware music mixing.

Gain staging in dB: a density-dependent base gain, a loudness-gap calibration
term, and a speech-keyed duck envelope with linear attack/release ramps.
Scene audio is never touched; only the music is gained.  A final peak check
scales the mix down only when it would exceed the ceiling, so a zero-music
mix is a sample-exact passthrough.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import PreconditionError
from .loudness import measure_lufs


@dataclass(frozen=True)
class MixConfig:
    base_db: float = -12.0
    density_slope: float = 6.0  # dB of extra attenuation at full speech density
    target_gap_lu: float = 14.0  # how far under the scene the music should sit
    duck_db: float = -9.0
    attack_ms: float = 50.0
    release_ms: float = 500.0
    pad_s: float = 0.5
    limiter_ceiling_db: float = -1.0
    speech_frame_ms: float = 30.0
    speech_threshold_db: float = -35.0


@dataclass(frozen=True)
class MixPlan:
    base_gain_db: float
    lufs_offset_db: float
    duck_depth_db: float
    speech_intervals: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if self.duck_depth_db > 0:
            raise ValueError("duck depth must be <= 0 dB")
        last = -1.0
        for a, b in self.speech_intervals:
            if a < last or b <= a:
                raise ValueError("speech intervals must be sorted and non-overlapping")
            last = b


def normalize_intervals(intervals) -> tuple[tuple[float, float], ...]:
    """Sort and merge overlapping/adjacent intervals."""
    spans = sorted((float(a), float(b)) for a, b in intervals if b > a)
    merged: list[list[float]] = []
    for a, b in spans:
        if merged and a <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], b)
        else:
            merged.append([a, b])
    return tuple((a, b) for a, b in merged)


def detect_speech_intervals(
    audio: np.ndarray, sample_rate: int, config: MixConfig | None = None
) -> tuple[tuple[float, float], ...]:
    """Energy-based fallback when dialogue timing is not in the manifest:
    frame RMS over a fixed dB threshold, merged into intervals."""
    cfg = config or MixConfig()
    audio = np.asarray(audio, dtype=np.float64)
    if audio.ndim > 1:
        audio = audio.mean(axis=1)
    frame = max(int(sample_rate * cfg.speech_frame_ms / 1000.0), 1)
    n_frames = len(audio) // frame
    if n_frames == 0:
        return ()
    x = audio[: n_frames * frame].reshape(n_frames, frame)
    rms = np.sqrt((x * x).mean(axis=1))
    with np.errstate(divide="ignore"):
        db = 20.0 * np.log10(rms)
    active = db > cfg.speech_threshold_db
    intervals = []
    start = None
    for i, flag in enumerate(active):
        if flag and start is None:
            start = i
        elif not flag and start is not None:
            intervals.append((start * frame / sample_rate, i * frame / sample_rate))
            start = None
    if start is not None:
        intervals.append((start * frame / sample_rate, n_frames * frame / sample_rate))
    return normalize_intervals(intervals)


def build_mix_plan(
    scene_audio: np.ndarray,
    bgm_audio: np.ndarray,
    speech_intervals,
    sample_rate: int,
    config: MixConfig | None = None,
) -> MixPlan:
    """Gain staging from speech density and the loudness gap."""
    cfg = config or MixConfig()
    scene_s = len(scene_audio) / sample_rate
    if scene_s <= 0:
        raise PreconditionError("empty scene audio")
    intervals = normalize_intervals(speech_intervals)
    speech_s = sum(b - a for a, b in intervals)
    density = min(speech_s / scene_s, 1.0)
    base_gain = cfg.base_db - cfg.density_slope * density

    scene_lufs = measure_lufs(scene_audio, sample_rate)
    bgm_lufs = measure_lufs(bgm_audio, sample_rate)
    if np.isinf(scene_lufs) or np.isinf(bgm_lufs):
        lufs_offset = 0.0  # silent input: nothing to calibrate against
    else:
        lufs_offset = (scene_lufs - bgm_lufs) - cfg.target_gap_lu
    return MixPlan(
        base_gain_db=base_gain,
        lufs_offset_db=lufs_offset,
        duck_depth_db=cfg.duck_db,
        speech_intervals=intervals,
    )


def duck_envelope(
    n_samples: int, sample_rate: int, plan: MixPlan, config: MixConfig | None = None
) -> np.ndarray:
    """Per-sample duck gain in dB: 0 outside speech, duck_depth inside, with
    linear attack/release ramps. Continuous with bounded slope."""
    cfg = config or MixConfig()
    env = np.zeros(n_samples)
    attack = max(int(sample_rate * cfg.attack_ms / 1000.0), 1)
    release = max(int(sample_rate * cfg.release_ms / 1000.0), 1)
    depth = plan.duck_depth_db
    for a_s, b_s in plan.speech_intervals:
        a = int(round(a_s * sample_rate))
        b = int(round(b_s * sample_rate))
        if a >= n_samples:
            continue
        ramp_in_end = min(a + attack, n_samples)
        env[a:ramp_in_end] = np.minimum(
            env[a:ramp_in_end], depth * (np.arange(ramp_in_end - a) + 1) / attack
        )
        env[ramp_in_end : min(b, n_samples)] = depth
        r_end = min(b + release, n_samples)
        if b < n_samples:
            ramp = depth * (1.0 - (np.arange(r_end - b) + 1) / release)
            env[b:r_end] = np.minimum(env[b:r_end], ramp)
    return env


def render_mix(
    scene_audio: np.ndarray,
    bgm_audio: np.ndarray,
    plan: MixPlan,
    sample_rate: int,
    config: MixConfig | None = None,
) -> np.ndarray:
    """scene + gain_curve * music, with a peak-ceiling safety scale.

    Sample rates must already match (resampling is an upstream contract).
    The music is tiled or truncated to the scene length.
    """
    cfg = config or MixConfig()
    scene = np.asarray(scene_audio, dtype=np.float64)
    bgm = np.asarray(bgm_audio, dtype=np.float64)
    n = len(scene)
    if len(bgm) < n:
        reps = int(np.ceil(n / max(len(bgm), 1))) if len(bgm) else 1
        bgm = np.tile(bgm, reps)[:n] if len(bgm) else np.zeros(n)
    else:
        bgm = bgm[:n]

    gain_db = plan.base_gain_db + plan.lufs_offset_db + duck_envelope(n, sample_rate, plan, cfg)
    out = scene + (10.0 ** (gain_db / 20.0)) * bgm

    ceiling = 10.0 ** (cfg.limiter_ceiling_db / 20.0)
    peak = float(np.abs(out).max()) if n else 0.0
    if peak > ceiling:
        out = out * (ceiling / peak)
    return out
