from .library import (
    BUCKET_TAXONOMY,
    BgmTrack,
    BucketTaxonomy,
    assign_buckets,
    build_fixture_library,
    candidates_for_buckets,
    load_library,
    save_library,
    score_segments,
    select_bucket,
    synth_track_audio,
    SegmentScore,
)
from .loudness import measure_lufs
from .mixing import MixConfig, MixPlan, build_mix_plan, detect_speech_intervals, render_mix

__all__ = [
    "BUCKET_TAXONOMY",
    "BgmTrack",
    "BucketTaxonomy",
    "assign_buckets",
    "build_fixture_library",
    "candidates_for_buckets",
    "load_library",
    "save_library",
    "score_segments",
    "select_bucket",
    "synth_track_audio",
    "SegmentScore",
    "measure_lufs",
    "MixConfig",
    "MixPlan",
    "build_mix_plan",
    "detect_speech_intervals",
    "render_mix",
]
