import numpy as np
import pytest

from dramaforge.audio.loudness import measure_lufs
from dramaforge.audio.mixing import (
    MixConfig,
    MixPlan,
    build_mix_plan,
    detect_speech_intervals,
    duck_envelope,
    normalize_intervals,
    render_mix,
)

SR = 48000


def tone(freq, seconds, amp=0.1):
    t = np.arange(int(SR * seconds)) / SR
    return amp * np.sin(2 * np.pi * freq * t)


def test_density_zero_gives_base_gain():
    plan = build_mix_plan(tone(300, 3), tone(220, 3), [], SR)
    assert plan.base_gain_db == MixConfig().base_db


def test_density_scales_base_gain():
    cfg = MixConfig()
    plan = build_mix_plan(tone(300, 4), tone(220, 4), [(0.0, 2.0)], SR, cfg)
    assert plan.base_gain_db == pytest.approx(cfg.base_db - cfg.density_slope * 0.5)


def test_lufs_offset_arithmetic():
    # plant scene at -20 LUFS and music at -10 LUFS: offset = (-20 - -10) - 14 = -24
    scene = tone(300, 5)
    bgm = tone(220, 5)
    scene *= 10 ** ((-20.0 - measure_lufs(scene, SR)) / 20)
    bgm *= 10 ** ((-10.0 - measure_lufs(bgm, SR)) / 20)
    plan = build_mix_plan(scene, bgm, [], SR)
    assert plan.lufs_offset_db == pytest.approx(-24.0, abs=0.05)


def test_zero_bgm_is_sample_exact_passthrough():
    scene = tone(437, 3, amp=0.3)
    plan = build_mix_plan(scene, tone(220, 3), [(0.5, 1.0)], SR)
    out = render_mix(scene, np.zeros_like(scene), plan, SR)
    assert np.array_equal(out, scene)


def test_mix_linearity_without_ducking():
    scene = tone(437, 2, amp=0.2)
    bgm = tone(181, 2, amp=0.2)
    plan = MixPlan(base_gain_db=-6.0, lufs_offset_db=-2.0, duck_depth_db=-9.0, speech_intervals=())
    out = render_mix(scene, bgm, plan, SR)
    want = scene + 10 ** (-8.0 / 20.0) * bgm
    assert np.array_equal(out, want)


def test_duck_depth_steady_state():
    cfg = MixConfig()
    seconds = 12.0
    scene = np.zeros(int(SR * seconds))
    bgm = tone(220, seconds, amp=0.05)
    plan = MixPlan(
        base_gain_db=0.0, lufs_offset_db=0.0, duck_depth_db=cfg.duck_db,
        speech_intervals=((4.0, 8.0),),
    )
    out = render_mix(scene, bgm, plan, SR, cfg)

    def rms(x):
        return np.sqrt(np.mean(x * x))

    inside = out[int(5.0 * SR) : int(7.0 * SR)]  # steady state, past the attack
    outside = out[int(1.0 * SR) : int(3.0 * SR)]
    realized = 20 * np.log10(rms(inside) / rms(outside))
    assert realized == pytest.approx(cfg.duck_db, abs=0.5)


def test_no_speech_duck_identity():
    n = SR * 2
    env = duck_envelope(n, SR, MixPlan(0.0, 0.0, -9.0, ()))
    assert np.array_equal(env, np.zeros(n))


def test_duck_envelope_continuity_and_slope():
    cfg = MixConfig(attack_ms=50, release_ms=500)
    plan = MixPlan(0.0, 0.0, -9.0, ((1.0, 2.0),))
    env = duck_envelope(SR * 3, SR, plan, cfg)
    step = np.abs(np.diff(env))
    max_slope_per_sample = 9.0 / (cfg.attack_ms / 1000.0 * SR)
    assert step.max() <= max_slope_per_sample + 1e-9
    assert env.min() == -9.0 and env.max() == 0.0


def test_limiter_clamps_peak():
    scene = tone(300, 2, amp=0.9)
    bgm = tone(290, 2, amp=0.9)
    plan = MixPlan(base_gain_db=0.0, lufs_offset_db=0.0, duck_depth_db=-9.0, speech_intervals=())
    out = render_mix(scene, bgm, plan, SR)
    assert np.abs(out).max() <= 10 ** (-1.0 / 20.0) + 1e-12


def test_normalize_intervals():
    assert normalize_intervals([(2, 3), (0.5, 1.5), (1.0, 2.5)]) == ((0.5, 3.0),)
    assert normalize_intervals([(1, 1)]) == ()


def test_energy_detector_finds_speech_band():
    scene = np.concatenate([np.zeros(SR), tone(300, 1.0, amp=0.2), np.zeros(SR)])
    intervals = detect_speech_intervals(scene, SR)
    assert len(intervals) == 1
    a, b = intervals[0]
    assert a == pytest.approx(1.0, abs=0.05) and b == pytest.approx(2.0, abs=0.05)


def test_plan_invariants():
    with pytest.raises(ValueError):
        MixPlan(0.0, 0.0, duck_depth_db=1.0, speech_intervals=())
    with pytest.raises(ValueError):
        MixPlan(0.0, 0.0, -9.0, ((2.0, 1.0),))
