"""Stage DAG execution: story -> assets/prompts -> frames/videos -> post.

Every stage writes one canonical artifact and one manifest record (input and
output hashes, per-item attempts, provider calls).  Re-running with the same
seed and mocks reproduces identical bytes; resume verifies completed stages
by hash and recomputes only what is missing.  Clip processing within a scene
is strictly sequential because each next first frame depends on the previous
tail.
"""

from __future__ import annotations

import dataclasses
import importlib.resources
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.io import wavfile

from .audio.library import (
    BucketTaxonomy,
    build_fixture_library,
    candidates_for_buckets,
    load_library,
    score_segments,
    select_bucket,
    synth_track_audio,
)
from .audio.mixing import MixConfig, build_mix_plan, detect_speech_intervals, render_mix
from .canonical import hash_of, raster_from_wire, raster_to_wire, write_json
from .clips import partitioned_rewrite, review_scene_clips, synthesize_clips
from .debate import DisputeConfig, run_debate
from .errors import (
    AuditExhaustedError,
    MissingArtifactError,
    NoCandidateError,
    PlacementFailure,
    PreconditionError,
    ProviderError,
    StageFatalError,
)
from .gates import (
    audit_video,
    detect_tail_closeup,
    repair_first_frame,
    sample_frame_indices,
    select_first_frame,
)
from .geometry import (
    BoxRoomWorld,
    DepthMap,
    EllipsoidBody,
    FilterConfig,
    Intrinsics,
    Pose,
    RefineConfig,
    ShellConfig,
    ViewParams,
    anchor_trajectory,
    geometric_filter,
    place_character,
    project_panorama,
    refine_pose,
    register_first_frame,
    sample_candidates,
)
from .geometry.sampling import multi_character_target
from .manifest import STAGES, RunStore, run_id_for
from .model import (
    Attempt,
    ClipScript,
    Logline,
    ProviderCall,
    PromptPair,
    RunManifest,
    RunStatus,
    StageRecord,
    StoryCore,
)
from .prompts import PATH_3D, REUSE_TAIL, SceneInfoAudit, audit_prompts, build_prompt_pair, route_next_frame, scene_info_audit
from .providers.base import ProviderRegistry
from .retrieval import AtomizeConfig, LogicBank, PatternBank, EmbedderClient, atomize_script, load_banks, plan_retrieval, summarize_atoms
from .transitions import derive_delta, plan_transition

log = logging.getLogger(__name__)


@dataclass
class PipelineConfig:
    n_scenes: int = 2
    pano_height: int = 64
    anchor_yaws_deg: tuple[float, ...] = (0.0, 90.0, 180.0, 270.0)
    anchor_hfov_deg: float = 70.0
    frame_size: int = 48
    video_frames: int = 6
    video_fps: float = 2.0
    audio_sr: int = 48000
    max_attempts: int = 3
    bank_dir: Optional[str] = None
    corpus_dir: Optional[str] = None
    bgm_dir: Optional[str] = None
    bgm_seed: int = 7
    atomize: AtomizeConfig = field(default_factory=AtomizeConfig)
    debate: DisputeConfig = field(default_factory=DisputeConfig)
    shell: ShellConfig = field(default_factory=ShellConfig)
    geo_filter: FilterConfig = field(default_factory=FilterConfig)
    refine: RefineConfig = field(default_factory=lambda: RefineConfig(levels=2, sweeps_per_level=1))
    mix: MixConfig = field(default_factory=MixConfig)

    def fingerprint(self) -> dict:
        """Deterministic config digest folded into stage input hashes."""
        def plain(x):
            if dataclasses.is_dataclass(x):
                return {f.name: plain(getattr(x, f.name)) for f in dataclasses.fields(x)}
            if isinstance(x, (tuple, list)):
                return [plain(v) for v in x]
            if isinstance(x, dict):
                return {k: plain(v) for k, v in x.items()}
            return x

        return plain(self)

    def frame_intrinsics(self) -> Intrinsics:
        size = self.frame_size
        fx = size / (2.0 * np.tan(np.deg2rad(self.anchor_hfov_deg) / 2.0))
        return Intrinsics(fx=fx, fy=fx, cx=(size - 1) / 2.0, cy=(size - 1) / 2.0, width=size, height=size)


@dataclass
class StageContext:
    registry: ProviderRegistry
    config: PipelineConfig
    seed: int
    logline: Logline
    store: RunStore
    attempts: list = field(default_factory=list)
    calls: list = field(default_factory=list)

    def record_attempt(self, verdict: str, score: Optional[float] = None) -> None:
        self.attempts.append(Attempt(verdict=verdict, score=score))


def _fixture_corpus() -> dict[str, str]:
    data = importlib.resources.files("dramaforge.data").joinpath("fixture_corpus.json").read_text("utf-8")
    return json.loads(data)["scripts"]


def _build_banks(ctx: StageContext) -> tuple[PatternBank, LogicBank]:
    cfg = ctx.config
    if cfg.bank_dir:
        return load_banks(cfg.bank_dir)
    if cfg.corpus_dir:
        scripts = {
            p.stem: p.read_text("utf-8") for p in sorted(Path(cfg.corpus_dir).glob("*.txt"))
        }
    else:
        scripts = _fixture_corpus()
    cards, chunks = [], []
    for script_id, text in sorted(scripts.items()):
        card, cks = atomize_script(text, cfg.atomize, ctx.registry, script_id)
        cards.append(card)
        chunks.extend(cks)
    return PatternBank([b for c in cards for b in c.beats]), LogicBank(chunks)


# --- stage A: story -------------------------------------------------------------

def stage_story(ctx: StageContext) -> dict:
    registry, cfg = ctx.registry, ctx.config
    seed_text = registry.call(
        "writer", {"task": "seed_expand", "logline": ctx.logline.text}
    )["seed_text"]
    plan = plan_retrieval(seed_text, registry)
    pattern_bank, logic_bank = _build_banks(ctx)
    embed = EmbedderClient(registry)

    route_results: dict[str, list[dict]] = {"fact": [], "logic": [], "pattern": []}
    for route in plan.routes:
        if route.kind == "fact":
            resp = registry.call("web_search", {"task": "search", "query": route.query})
            route_results["fact"].extend(
                {"text": r["text"], "source_ref": r["source_ref"]} for r in resp["results"][: route.k]
            )
        elif route.kind == "logic":
            for chunk, _ in logic_bank.retrieve(route.query, route.k, embed):
                route_results["logic"].append({"text": chunk.text, "source_ref": chunk.chunk_id})
        else:
            for beat, _ in pattern_bank.retrieve(route.query, route.k, embed):
                route_results["pattern"].append(
                    {"text": beat.beat_summary, "source_ref": beat.beat_id}
                )
    atoms = summarize_atoms(route_results, registry, cfg.atomize.max_copy_chars)

    draft = StoryCore.from_dict(
        registry.call(
            "writer",
            {
                "task": "story_core",
                "logline": ctx.logline.text,
                "seed_text": seed_text,
                "n_scenes": cfg.n_scenes,
                "atoms": [a.text for a in atoms.all_atoms()],
            },
        )
    )
    core, trace = run_debate(draft, atoms, cfg.debate, registry)
    for r in trace.rounds:
        mean = sum(r.aggregated.mean_rubric.values()) / len(r.aggregated.mean_rubric)
        ctx.record_attempt("debate_pass" if trace.passed and r is trace.rounds[-1] else "debate_round", mean)

    scene_clips: dict[str, list[dict]] = {}
    scene_reviews: dict[str, dict] = {}
    for scene in core.scenes:
        clips = synthesize_clips(scene, core.assets, registry)
        review = review_scene_clips(clips, registry)
        clips = partitioned_rewrite(clips, review, registry, max_rounds=cfg.max_attempts)
        final_review = review_scene_clips(clips, registry)
        ctx.record_attempt("scene_review", float(final_review.hook.score))
        scene_clips[str(scene.id)] = [c.to_dict() for c in clips]
        scene_reviews[str(scene.id)] = {
            band: {"score": final_review.band(band).score}
            for band in ("hook", "scene_end", "twist")
        }
    return {
        "core": core.to_dict(),
        "clips": scene_clips,
        "atoms": {
            kind: [{"text": a.text, "source_ref": a.source_ref} for a in getattr(atoms, f"{kind}_atoms")]
            for kind in ("fact", "logic", "pattern")
        },
        "scene_reviews": scene_reviews,
        "debate": trace.to_dict(),
    }


# --- stage B: assets and prompt pairs ----------------------------------------------

def stage_assets_prompts(ctx: StageContext, story: dict) -> dict:
    registry, cfg = ctx.registry, ctx.config
    core = StoryCore.from_dict(story["core"])
    panoramas, worlds, portraits = {}, {}, {}
    for scene in core.scenes:
        key = f"scene-{scene.id}-{scene.location_id}"
        worlds[str(scene.id)] = registry.call(
            "world_model", {"task": "build_world", "scene_key": key}
        )["world"]
        panoramas[str(scene.id)] = registry.call(
            "image_gen", {"task": "panorama", "scene_key": key, "height": cfg.pano_height}
        )["image"]
    for char in core.assets.characters:
        portraits[char.id] = registry.call(
            "image_gen", {"task": "portrait", "character_id": char.id}
        )["image"]

    pairs, audits, infos = {}, {}, {}
    for scene in core.scenes:
        sid = str(scene.id)
        clip_objs = [ClipScript.from_dict(c) for c in story["clips"][sid]]
        pairs[sid], audits[sid], infos[sid] = [], [], []
        for i, clip in enumerate(clip_objs):
            pair = build_prompt_pair(clip, core.assets, registry)
            prev_clip = clip_objs[i - 1] if i > 0 else None
            next_clip = clip_objs[i + 1] if i + 1 < len(clip_objs) else None
            try:
                result = audit_prompts(pair, prev_clip, next_clip, registry)
                pair = result.pair
                audits[sid].append(
                    {
                        "spatial_overall": result.spatial.overall,
                        "prop_overall": result.prop.overall,
                        "rewrites": result.rewrites,
                        "flagged": False,
                    }
                )
                ctx.record_attempt("prompt_audit_pass", float(result.spatial.overall))
            except AuditExhaustedError as err:
                best_audit, best_pair = err.best_attempt
                pair = best_pair
                audits[sid].append(
                    {
                        "spatial_overall": getattr(best_audit, "overall", 0),
                        "prop_overall": 0,
                        "rewrites": cfg.max_attempts - 1,
                        "flagged": True,
                    }
                )
                ctx.record_attempt("prompt_audit_flagged", float(getattr(best_audit, "overall", 0)))
            info = scene_info_audit(clip, registry)
            pairs[sid].append(pair.to_dict())
            infos[sid].append(
                {
                    "needs_extra_scene_information": info.needs_extra_scene_information,
                    "has_large_character_or_camera_reposition": info.has_large_character_or_camera_reposition,
                    "required_scene_anchors": list(info.required_scene_anchors),
                }
            )
    return {
        "panoramas": panoramas,
        "worlds": worlds,
        "portraits": portraits,
        "prompt_pairs": pairs,
        "prompt_audits": audits,
        "scene_info": infos,
    }


# --- stage C: keyframe-to-video with 3D grounding ------------------------------------

def _camera_context(scene_key: str, char_id: str, pose: Pose, intr: Intrinsics, index: int, count: int) -> dict:
    return {
        "scene_key": scene_key,
        "character_id": char_id,
        "index": index,
        "count": count,
        "camera_pose": pose.to_dict(),
        "camera_intrinsics": intr.to_dict(),
    }


def _segment_mask(ctx: StageContext, context: dict) -> np.ndarray:
    resp = ctx.registry.call("segmentation_model", {"task": "segment", "context": context})
    return raster_from_wire(resp["mask"]).astype(bool)


def _place_bodies(
    ctx: StageContext, scene_key: str, char_ids: list[str], pose: Pose, intr: Intrinsics
) -> list[EllipsoidBody]:
    bodies = []
    count = len(char_ids)
    for index, char_id in enumerate(sorted(char_ids)):
        context = _camera_context(scene_key, char_id, pose, intr, index, count)
        mesh = ctx.registry.call("human_model", {"task": "human_mesh", "context": context})
        mask = _segment_mask(ctx, context)
        template = EllipsoidBody(
            center=[0.0, 0.0, 0.0],
            radii=np.array(mesh["radii"]),
            yaw=float(mesh["yaw"]),
            scale=float(mesh["scale"]),
        )
        try:
            placement = place_character(pose, intr, template, np.array(mesh["keypoints_2d"]), mask)
            bodies.append(placement.body)
        except (PlacementFailure, PreconditionError) as err:
            log.warning("placement failed for %s: %s", char_id, err)
    return bodies


def _first_frame_via_3d(
    ctx: StageContext,
    scene_key: str,
    clip: ClipScript,
    info: SceneInfoAudit,
    world: BoxRoomWorld,
    tail_frame: np.ndarray,
    tail_pose: Pose,
    intr: Intrinsics,
) -> tuple[np.ndarray, Pose, dict]:
    registry, cfg = ctx.registry, ctx.config
    bodies = _place_bodies(ctx, scene_key, list(clip.characters), tail_pose, intr)
    if bodies:
        target = multi_character_target([b.center for b in bodies])
    else:
        target = world.center
    candidates = sample_candidates(target, tail_pose.translation, intr, cfg.shell)
    try:
        survivors = geometric_filter(candidates, world, bodies, cfg.geo_filter)
    except NoCandidateError:
        log.warning("geometric filter rejected all candidates; reusing tail frame")
        return tail_frame, tail_pose, {"route": "fallback_reuse_tail"}

    semantic_pass = []
    for i, cand in enumerate(survivors):
        resp = registry.call(
            "vision_judge",
            {
                "task": "semantic_filter",
                "candidate_key": f"{scene_key}-c{clip.clip_index}-cand{i}",
                "anchors": list(info.required_scene_anchors),
            },
        )
        if bool(resp.get("anchors_visible", True)):
            semantic_pass.append(cand)
    if semantic_pass:
        survivors = semantic_pass

    char_id = sorted(clip.characters)[0] if clip.characters else "lead"
    renders, frames = [], []
    for i, cand in enumerate(survivors):
        color, _ = world.render(cand.pose, cand.intrinsics)
        render8 = (np.clip(color, 0, 1) * 255).astype(np.uint8)
        context = _camera_context(scene_key, char_id, cand.pose, cand.intrinsics, 0, max(len(clip.characters), 1))
        sil = _segment_mask(ctx, context)
        frame = raster_from_wire(
            registry.call(
                "image_gen",
                {
                    "task": "first_frame",
                    "background": raster_to_wire(render8),
                    "silhouette": raster_to_wire(sil.astype(np.uint8)),
                    "character_id": char_id,
                },
            )["image"]
        )
        renders.append(render8)
        frames.append(frame)

    tail_wire = raster_to_wire(tail_frame)

    def images_for(i: int) -> dict:
        return {
            "prev_tail": tail_wire,
            "render": raster_to_wire(renders[i]),
            "candidate": raster_to_wire(frames[i]),
        }

    def repair_hook(i: int) -> None:
        context = _camera_context(
            scene_key, char_id, survivors[i].pose, survivors[i].intrinsics, 0, max(len(clip.characters), 1)
        )
        mask = _segment_mask(ctx, context)
        result = repair_first_frame(frames[i], ["rejected candidate"], mask, tail_frame, registry)
        frames[i] = result.frame

    keys = [f"{scene_key}-c{clip.clip_index}-cand{i}" for i in range(len(survivors))]
    winner, scores = select_first_frame(keys, images_for, registry, repair=repair_hook)
    ctx.record_attempt("first_frame_select", float(scores[winner].total))

    frame = frames[winner]
    check = registry.call(
        "vision_judge", {"task": "frame_check", "frame": raster_to_wire(frame)}
    )
    issues = [str(x) for x in check.get("issues", [])]
    if issues:
        context = _camera_context(
            scene_key, char_id, survivors[winner].pose, survivors[winner].intrinsics, 0,
            max(len(clip.characters), 1),
        )
        mask = _segment_mask(ctx, context)
        frame = repair_first_frame(frame, issues, mask, tail_frame, registry).frame
    meta = {
        "route": PATH_3D,
        "n_candidates": len(candidates),
        "n_survivors": len(survivors),
        "winner_total": scores[winner].total,
        "repaired": bool(issues),
    }
    return frame, survivors[winner].pose, meta


def _generate_video(
    ctx: StageContext, clip: ClipScript, pair: PromptPair, first_frame: np.ndarray, clip_key: str
) -> tuple[dict, list[Attempt]]:
    """Video generation with the audit retry loop; keeps the best attempt."""
    registry, cfg = ctx.registry, ctx.config
    prompt = pair.video_prompt
    best = None
    attempts: list[Attempt] = []
    for attempt in range(cfg.max_attempts):
        resp = registry.call(
            "video_gen",
            {
                "task": "clip_video",
                "first_frame": raster_to_wire(first_frame),
                "prompt": prompt,
                "n_frames": cfg.video_frames,
                "clip_key": f"{clip_key}-try{attempt}",
                "dialogue": [list(d) for d in clip.dialogue],
            },
        )
        idx = sample_frame_indices(len(resp["frames"]), float(resp["fps"]))
        audit, ok = audit_video([resp["frames"][i] for i in idx], clip, registry)
        attempts.append(
            Attempt(verdict=f"video_audit:{clip_key}:{'pass' if ok else 'fail'}", score=audit.overall)
        )
        if best is None or audit.overall > best[0]:
            best = (audit.overall, resp, audit)
        if ok:
            best = (audit.overall, resp, audit)
            break
        prompt = registry.call(
            "writer",
            {
                "task": "prompt_rewrite",
                "payload": {
                    "pair": pair.to_dict(),
                    "audit_kind": "video",
                    "issues": [audit.analysis],
                },
            },
        )["video_prompt"]
    _, resp, audit = best
    return {
        "video": resp,
        "audit": {
            "physics_integrity": audit.physics_integrity,
            "temporal_continuity": audit.temporal_continuity,
            "reaction_plausibility": audit.reaction_plausibility,
            "character_presence_consistency": audit.character_presence_consistency,
            "overall": audit.overall,
            "passed": audit.passed,
        },
    }, attempts


def stage_frames_videos(ctx: StageContext, story: dict, assets: dict) -> dict:
    registry, cfg = ctx.registry, ctx.config
    core = StoryCore.from_dict(story["core"])
    intr = cfg.frame_intrinsics()
    out_scenes: dict[str, dict] = {}

    for scene in core.scenes:
        sid = str(scene.id)
        scene_key = f"scene-{scene.id}-{scene.location_id}"
        world = BoxRoomWorld.from_dict(assets["worlds"][sid])
        pano = raster_from_wire(assets["panoramas"][sid])
        clip_objs = [ClipScript.from_dict(c) for c in story["clips"][sid]]
        pairs = [PromptPair.from_dict(p) for p in assets["prompt_pairs"][sid]]
        infos = [
            SceneInfoAudit(
                needs_extra_scene_information=i["needs_extra_scene_information"],
                has_large_character_or_camera_reposition=i["has_large_character_or_camera_reposition"],
                required_scene_anchors=tuple(i["required_scene_anchors"]),
            )
            for i in assets["scene_info"][sid]
        ]

        # --- scene anchor initialization: pick (background, first-frame) pair
        views = [
            ViewParams(np.deg2rad(yaw), 0.0, np.deg2rad(cfg.anchor_hfov_deg), cfg.frame_size, cfg.frame_size)
            for yaw in cfg.anchor_yaws_deg
        ]
        backgrounds = [project_panorama(pano, v) for v in views]
        lead = sorted(clip_objs[0].characters)[0] if clip_objs[0].characters else "lead"
        anchor_frames, anchor_masks = [], []
        for img, pose, view_intr in backgrounds:
            bg8 = np.clip(img, 0, 255).astype(np.uint8)
            anchor_pose = Pose(pose.rotation, world.center)  # panorama shot from room center
            context = _camera_context(scene_key, lead, anchor_pose, view_intr, 0, 1)
            sil = _segment_mask(ctx, context)
            frame = raster_from_wire(
                registry.call(
                    "image_gen",
                    {
                        "task": "first_frame",
                        "background": raster_to_wire(bg8),
                        "silhouette": raster_to_wire(sil.astype(np.uint8)),
                        "character_id": lead,
                    },
                )["image"]
            )
            anchor_frames.append(frame)
            anchor_masks.append(sil)
        pick = registry.call(
            "vision_judge",
            {"task": "anchor_select", "scene_key": scene_key, "n_candidates": len(anchor_frames)},
        )["winner_index"] % len(anchor_frames)
        bg_img, bg_rot_pose, bg_intr = backgrounds[pick]
        bg_pose = Pose(bg_rot_pose.rotation, world.center)
        first_frame = anchor_frames[pick]
        char_mask = anchor_masks[pick]

        # --- register the chosen first frame into the world
        geo = registry.call(
            "geometry_model",
            {
                "task": "relative_pose",
                "first_frame": raster_to_wire(first_frame),
                "reference": raster_to_wire(np.clip(bg_img, 0, 255).astype(np.uint8)),
                "mask": raster_to_wire(char_mask.astype(np.uint8)),
                "context": {
                    "world": world.to_dict(),
                    "reference_pose": bg_pose.to_dict(),
                    "reference_intrinsics": bg_intr.to_dict(),
                },
            },
        )
        delta = Pose(np.array(geo["rotation"]).reshape(3, 3), np.array(geo["translation"]))
        est_depth = DepthMap(
            raster_from_wire(geo["reference_depth"]).astype(np.float64),
            raster_from_wire(geo["reference_valid"]).astype(bool),
        )
        first_pose, intr_reg, scale = register_first_frame(
            first_frame, bg_pose, bg_intr, char_mask, delta, est_depth, world,
            refine=True, refine_config=cfg.refine,
        )

        clips_out = []
        tail_frame, tail_pose = None, None
        for k, clip in enumerate(clip_objs):
            clip_key = f"{scene_key}-clip{k}"
            if k == 0:
                frame, pose_k = first_frame, first_pose
                meta = {"route": "anchor_init"}
            else:
                closeup = detect_tail_closeup(raster_to_wire(tail_frame), registry)
                route = route_next_frame(infos[k], closeup)
                if route == REUSE_TAIL:
                    frame, pose_k, meta = tail_frame, tail_pose, {"route": REUSE_TAIL}
                else:
                    frame, pose_k, meta = _first_frame_via_3d(
                        ctx, scene_key, clip, infos[k], world, tail_frame, tail_pose, intr
                    )
            video_rec, attempts = _generate_video(ctx, clip, pairs[k], frame, clip_key)
            ctx.attempts.extend(attempts)

            traj = registry.call(
                "trajectory_model", {"task": "trajectory", "n_frames": cfg.video_frames, "clip_key": clip_key}
            )
            deltas = [Pose(np.array(d["rotation"]).reshape(3, 3), np.array(d["translation"])) for d in traj["deltas"]]
            frame_poses = anchor_trajectory(deltas, pose_k, scale)
            raw_tail_pose = frame_poses[-1]
            new_tail = raster_from_wire(video_rec["video"]["frames"][-1])
            tail_context = _camera_context(
                scene_key,
                sorted(clip.characters)[0] if clip.characters else "lead",
                raw_tail_pose, intr, 0, max(len(clip.characters), 1),
            )
            tail_mask = _segment_mask(ctx, tail_context)
            refined_tail_pose, _ = refine_pose(
                raw_tail_pose, intr, new_tail, world, ~tail_mask, config=cfg.refine
            )
            tail_frame, tail_pose = new_tail, refined_tail_pose

            clips_out.append(
                {
                    "clip_index": clip.clip_index,
                    "first_frame": raster_to_wire(frame),
                    "first_pose": pose_k.to_dict(),
                    "tail_frame": raster_to_wire(tail_frame),
                    "tail_pose": tail_pose.to_dict(),
                    "frame_poses": [p.to_dict() for p in frame_poses],
                    "routing": meta,
                    "video": video_rec["video"],
                    "video_audit": video_rec["audit"],
                    "duration_s": cfg.video_frames / cfg.video_fps,
                }
            )
        out_scenes[sid] = {
            "scene_key": scene_key,
            "anchor_index": pick,
            "registration_scale": scale,
            "first_pose": first_pose.to_dict(),
            "clips": clips_out,
        }
    return {"scenes": out_scenes}


# --- stage D: transitions, music, assembly ---------------------------------------------

def stage_post(ctx: StageContext, story: dict, frames: dict) -> dict:
    registry, cfg = ctx.registry, ctx.config
    core = StoryCore.from_dict(story["core"])

    transitions = []
    for i in range(len(core.scenes) - 1):
        delta = derive_delta(core.scenes[i], core.scenes[i + 1], registry)
        spec = plan_transition(delta)
        transitions.append(
            {
                "after_scene": core.scenes[i].id,
                "delta": {
                    "time_shift": delta.time_shift,
                    "space_shift": delta.space_shift,
                    "movement_is_narrative": delta.movement_is_narrative,
                },
                **spec.to_dict(),
            }
        )

    if cfg.bgm_dir:
        tracks, taxonomy = load_library(cfg.bgm_dir)
    else:
        tracks, taxonomy = build_fixture_library(cfg.bgm_seed), BucketTaxonomy.default()

    scenes_audio = {}
    for scene in core.scenes:
        sid = str(scene.id)
        clip_records = frames["scenes"][sid]["clips"]
        clip_objs = [ClipScript.from_dict(c) for c in story["clips"][sid]]
        audio_parts, speech, offset = [], [], 0.0
        for rec in clip_records:
            audio = raster_from_wire(rec["video"]["audio"]).astype(np.float64)
            sr = int(rec["video"]["sample_rate"])
            audio_parts.append(audio)
            for a, b in rec["video"].get("speech_intervals", []):
                speech.append((offset + a, offset + b))
            offset += len(audio) / sr
        scene_audio = np.concatenate(audio_parts) if audio_parts else np.zeros(1)
        scene_s = len(scene_audio) / cfg.audio_sr
        if not speech:
            # no dialogue timing in the manifest: energy-based fallback
            speech = list(detect_speech_intervals(scene_audio, cfg.audio_sr, cfg.mix))

        primary, backup = select_bucket(
            scene.outline,
            [c.narrative for c in clip_objs],
            [c.shot_type.value for c in clip_objs],
            taxonomy,
            registry,
        )
        candidates = candidates_for_buckets(tracks, primary, backup)
        track, seg = score_segments(scene_s, candidates, registry, pad=cfg.mix.pad_s)
        ctx.record_attempt("bgm_segment", float(seg.total))
        full = synth_track_audio(track.track_id, track.duration, cfg.audio_sr)
        w0, w1 = seg.window
        segment = full[int(w0 * cfg.audio_sr) : int(w1 * cfg.audio_sr)]
        plan = build_mix_plan(scene_audio, segment, speech, cfg.audio_sr, cfg.mix)
        mixed = render_mix(scene_audio, segment, plan, cfg.audio_sr, cfg.mix)
        wav_ref = None
        if ctx.store is not None:
            audio_dir = ctx.store.root / "audio"
            audio_dir.mkdir(parents=True, exist_ok=True)
            wav_ref = f"audio/scene-{sid}.wav"
            wavfile.write(ctx.store.root / wav_ref, cfg.audio_sr, mixed.astype(np.float32))
        scenes_audio[sid] = {
            "primary_bucket": primary,
            "backup_bucket": backup,
            "track_id": track.track_id,
            "segment_window": [w0, w1],
            "segment_total": seg.total,
            "mix_plan": {
                "base_gain_db": plan.base_gain_db,
                "lufs_offset_db": plan.lufs_offset_db,
                "duck_depth_db": plan.duck_depth_db,
                "speech_intervals": [list(x) for x in plan.speech_intervals],
            },
            "mixed_audio": raster_to_wire(mixed.astype(np.float32)),
            "wav_ref": wav_ref,
            "duration_s": scene_s,
        }

    payload = {"transitions": transitions, "scene_audio": scenes_audio}
    payload["edit_list"] = build_edit_list(core, frames, payload)
    if ctx.store is not None:
        write_json(ctx.store.root / "edit_list.json", payload["edit_list"])
    return payload


def build_edit_list(core: StoryCore, frames: dict, post: dict) -> list[dict]:
    """Ordered assembly plan: clips in index order, one transition entry per
    scene boundary (a direct cut inserts no media), scene audio attached."""
    entries: list[dict] = []
    transitions = {t["after_scene"]: t for t in post["transitions"]}
    for i, scene in enumerate(core.scenes):
        sid = str(scene.id)
        scene_rec = frames["scenes"].get(sid)
        audio_rec = post["scene_audio"].get(sid)
        if scene_rec is None or audio_rec is None:
            raise MissingArtifactError(f"missing clips or mixed audio for scene {sid}")
        for rec in sorted(scene_rec["clips"], key=lambda r: r["clip_index"]):
            entries.append(
                {
                    "type": "clip",
                    "scene_id": scene.id,
                    "clip_index": rec["clip_index"],
                    "duration_s": rec["duration_s"],
                    "video_ref": f"stages/frames_videos.json#scenes/{sid}/clips/{rec['clip_index']}",
                    "audio_ref": audio_rec.get("wav_ref") or f"stages/post.json#scene_audio/{sid}",
                }
            )
        if i < len(core.scenes) - 1:
            t = transitions.get(scene.id)
            if t is None:
                raise MissingArtifactError(f"missing transition after scene {scene.id}")
            entry = {"type": "transition", "kind": t["kind"], "after_scene": scene.id}
            if t["kind"] != "direct_cut":
                entry["overlay_text"] = t.get("overlay_text")
                entry["generation_prompt"] = t.get("generation_prompt")
            entries.append(entry)
    return entries


def assemble(store: RunStore) -> list[dict]:
    """Re-derive the edit list from persisted artifacts (validates presence)."""
    story = store.load_stage("story")
    frames = store.load_stage("frames_videos")
    post = store.load_stage("post")
    return build_edit_list(StoryCore.from_dict(story["core"]), frames, post)


# --- the driver ------------------------------------------------------------------------

_STAGE_FNS = {
    "story": lambda ctx, arts: stage_story(ctx),
    "assets_prompts": lambda ctx, arts: stage_assets_prompts(ctx, arts["story"]),
    "frames_videos": lambda ctx, arts: stage_frames_videos(ctx, arts["story"], arts["assets_prompts"]),
    "post": lambda ctx, arts: stage_post(ctx, arts["story"], arts["frames_videos"]),
}


def run_pipeline(
    logline: Logline,
    registry: ProviderRegistry,
    config: PipelineConfig,
    runs_root: str | Path,
    seed: int = 0,
    run_id: Optional[str] = None,
    stop_after: Optional[str] = None,
) -> RunManifest:
    """Execute (or continue) all four stages; persists after every stage."""
    report = logline.validate()
    if not report.ok:
        raise PreconditionError(f"bad logline: {report.violations}")
    run_id = run_id or run_id_for(logline.text, seed)
    store = RunStore(runs_root, run_id)
    if store.exists():
        manifest = store.load_manifest()
        if manifest.status is RunStatus.COMPLETE:
            return manifest
    else:
        manifest = RunManifest(run_id=run_id, seed=seed, logline=logline)
        store.save_manifest(manifest)

    artifacts: dict[str, dict] = {}
    prev_hash = ""
    config_fp = config.fingerprint()
    for stage in STAGES:
        record = manifest.stage_records.get(stage)
        if record is not None and record.outputs_hash:
            artifacts[stage] = store.verify_stage(stage, record.outputs_hash)
            prev_hash = record.outputs_hash
            continue
        ctx = StageContext(
            registry=registry, config=config, seed=seed, logline=logline, store=store
        )
        registry.recorder = lambda role, rq, rs: ctx.calls.append(ProviderCall(role, rq, rs))
        inputs_hash = hash_of(
            {"stage": stage, "logline": logline.to_dict(), "seed": seed, "config": config_fp, "prev": prev_hash}
        )
        try:
            payload = _STAGE_FNS[stage](ctx, artifacts)
        except ProviderError as err:
            registry.recorder = None
            failed = manifest.with_stage(
                stage,
                StageRecord(
                    inputs_hash=inputs_hash,
                    outputs_hash="",
                    attempts=tuple(
                        Attempt(verdict="provider_error") for _ in range(config.max_attempts)
                    ),
                    provider_calls=tuple(ctx.calls),
                ),
            ).with_status(RunStatus.FAILED)
            store.save_manifest(failed)
            raise StageFatalError(stage, str(err)) from err
        registry.recorder = None
        outputs_hash = store.save_stage(stage, payload)
        artifacts[stage] = payload
        manifest = manifest.with_stage(
            stage,
            StageRecord(
                inputs_hash=inputs_hash,
                outputs_hash=outputs_hash,
                attempts=tuple(ctx.attempts),
                provider_calls=tuple(ctx.calls),
            ),
        )
        prev_hash = outputs_hash
        if stage == STAGES[-1]:
            manifest = manifest.with_status(RunStatus.COMPLETE)
        store.save_manifest(manifest)
        if stop_after == stage:
            break
    return manifest


def resume(
    run_id: str,
    registry: ProviderRegistry,
    config: PipelineConfig,
    runs_root: str | Path,
) -> RunManifest:
    """Continue an interrupted run; completed stages are hash-verified and skipped."""
    store = RunStore(runs_root, run_id)
    manifest = store.load_manifest()
    if manifest.status is RunStatus.COMPLETE:
        return manifest
    for stage, record in manifest.stage_records.items():
        if record.outputs_hash:
            store.verify_stage(stage, record.outputs_hash)
    return run_pipeline(
        manifest.logline,
        registry,
        config,
        runs_root,
        seed=manifest.seed,
        run_id=run_id,
    )
