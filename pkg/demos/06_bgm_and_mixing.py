"""Dialogue-aware music mixing with measured loudness.

Builds the synthetic track library, selects buckets and the best segment for
a tense scene, then shows the gain staging: density-based base gain, loudness
gap calibration, and speech-keyed ducking.
"""

import numpy as np

from dramaforge.audio import (
    BucketTaxonomy,
    build_fixture_library,
    build_mix_plan,
    candidates_for_buckets,
    measure_lufs,
    render_mix,
    score_segments,
    select_bucket,
    synth_track_audio,
)
from dramaforge.providers.mocks import mock_suite

SR = 48000
suite = mock_suite(seed=6)

tracks = build_fixture_library(seed=7, n_tracks=60)
print(f"library: {len(tracks)} tracks across 16 buckets")
by_bucket = {}
for t in tracks:
    for b in t.bucket_ids:
        by_bucket[b] = by_bucket.get(b, 0) + 1
print("  bucket fill:", dict(sorted(by_bucket.items())))

primary, backup = select_bucket(
    "A public accusation escalates into open confrontation over the contract.",
    ["the accusation lands", "the counter-evidence appears"],
    ["tense", "tense"],
    BucketTaxonomy.default(),
    suite.registry,
)
print(f"\nselected buckets: primary={primary} backup={backup}")

candidates = candidates_for_buckets(tracks, primary, backup)
scene_seconds = 9.0
track, seg = score_segments(scene_seconds, candidates, suite.registry)
print(f"best segment: {track.track_id} window={seg.window} total fit={seg.total}/40")

# scene audio: quiet tone with two louder speech bursts
t = np.arange(int(SR * scene_seconds)) / SR
scene = 0.02 * np.sin(2 * np.pi * 180 * t)
for a, b in ((1.0, 3.0), (5.0, 7.0)):
    scene[int(a * SR):int(b * SR)] += 0.2 * np.sin(2 * np.pi * 300 * t[: int((b - a) * SR)])
speech = [(1.0, 3.0), (5.0, 7.0)]

music = synth_track_audio(track.track_id, track.duration, SR)
segment = music[int(seg.window[0] * SR): int(seg.window[1] * SR)]
print(f"\nscene loudness: {measure_lufs(scene, SR):.1f} LUFS, music: {measure_lufs(segment, SR):.1f} LUFS")

plan = build_mix_plan(scene, segment, speech, SR)
print(f"mix plan: base={plan.base_gain_db:.1f} dB, loudness offset={plan.lufs_offset_db:.1f} dB, duck={plan.duck_depth_db:.0f} dB")

mixed = render_mix(scene, segment, plan, SR)
rms = lambda x: float(np.sqrt(np.mean(x * x)))
bed_only = mixed - scene
print(f"music bed RMS outside speech: {rms(bed_only[int(3.5*SR):int(4.5*SR)]):.5f}")
print(f"music bed RMS inside speech:  {rms(bed_only[int(1.5*SR):int(2.5*SR)]):.5f}  (ducked)")
print(f"mixed peak: {np.abs(mixed).max():.3f} (ceiling 0.891 = -1 dBFS)")
