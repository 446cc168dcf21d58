"""Seeded deterministic mocks for every provider role.

The suite is hermetic: identical seeds and scripts reproduce identical bytes,
and a full pipeline run performs zero network operations.  ``scripts`` lets a
test override any task with a callable ``body -> response``; everything else
falls back to schema-complete template behavior.

A shared ``WorldState`` plants one analytic box room per scene and one
ellipsoid body per character, so the perception-role mocks (geometry,
trajectory, human mesh, segmentation) answer consistently with what the
world-model mock renders.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass

import numpy as np

from ..canonical import hash_of, raster_from_wire, raster_to_wire
from ..geometry.boxroom import BoxRoomWorld
from ..geometry.placement import EllipsoidBody
from ..geometry.pose import Intrinsics, Pose
from .base import Provider, ProviderRegistry

_FACT_TRIGGERS = ("law", "legal", "court", "medical", "hospital", "history", "dynasty", "forensic")


def _digest(*keys) -> int:
    material = "|".join(str(k) for k in keys)
    return int.from_bytes(hashlib.sha256(material.encode("utf-8")).digest()[:8], "little")


def _rng(seed: int, *keys) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(_digest(seed, *keys)))


def _pick(seed: int, options, *keys):
    return options[_digest(seed, *keys) % len(options)]


@dataclass
class WorldState:
    """Planted ground truth shared by the perception mocks."""

    seed: int
    depth_scale: float = 2.0  # monocular estimates come back divided by this

    def world_for(self, scene_key: str) -> BoxRoomWorld:
        rng = _rng(self.seed, "world", scene_key)
        return BoxRoomWorld(
            size=(float(rng.uniform(7.0, 9.0)), 3.0, float(rng.uniform(9.0, 11.0))),
            open_top=True,
            seed=int(_digest(self.seed, "tex", scene_key) % 1000),
        )

    def body_for(self, scene_key: str, character_id: str, index: int = 0, count: int = 1) -> EllipsoidBody:
        world = self.world_for(scene_key)
        angle = 2 * np.pi * index / max(count, 1) + (_digest(self.seed, scene_key, character_id) % 100) / 100.0
        center = world.center + np.array([np.sin(angle) * 1.0, 0.0, np.cos(angle) * 1.0])
        center[1] = 0.85
        return EllipsoidBody(
            center=center,
            radii=np.array([0.28, 0.85, 0.22]),
            yaw=float(angle + np.pi),  # face roughly toward room center
        )


class MockEmbedder(Provider):
    """Hash-projection embedder: unit gaussian vector seeded by the text."""

    def __init__(self, seed: int, dim: int = 256):
        self.seed = seed
        self.dim = dim

    def handle(self, body: dict) -> dict:
        rng = _rng(self.seed, "embed", body["text"])
        v = rng.standard_normal(self.dim)
        v /= np.linalg.norm(v)
        return {"vector": [float(x) for x in v]}


class MockWebSearch(Provider):
    def __init__(self, seed: int):
        self.seed = seed

    def handle(self, body: dict) -> dict:
        query = body.get("query", "")
        rng = _rng(self.seed, "search", query)
        n = int(rng.integers(2, 4))
        results = [
            {
                "text": f"Background reference {i + 1} relevant to '{query[:40]}' with procedural detail.",
                "source_ref": f"https://reference.example/{_digest(self.seed, query, i) % 99999}",
            }
            for i in range(n)
        ]
        return {"results": results}


def _sentences(text: str) -> list[str]:
    parts = [s.strip() for s in re.split(r"(?<=[.!?])\s+", text) if s.strip()]
    return parts or [text.strip()]


class MockWriter(Provider):
    """Template-filling text model honoring every schema the engine parses."""

    def __init__(self, seed: int, scripts: dict | None = None):
        self.seed = seed
        self.scripts = scripts or {}

    def handle(self, body: dict) -> dict:
        task = body["task"]
        if task in self.scripts:
            return self.scripts[task](body)
        return getattr(self, f"_{task}")(body)

    # -- story stage ---------------------------------------------------------

    def _seed_expand(self, body: dict) -> dict:
        logline = body["logline"]
        return {
            "seed_text": (
                f"Premise: {logline} The protagonist faces immediate public pressure, "
                "a hidden advantage, and an adversary who escalates each scene. "
                "Key conflict cues: humiliation, leverage, reversal."
            )
        }

    def _retrieval_plan(self, body: dict) -> dict:
        seed_text = body["seed_text"]
        routes = [
            {"kind": "pattern", "query": f"opening and reversal pacing for: {seed_text[:80]}", "k": 3},
            {"kind": "logic", "query": f"motivation and consequence chains for: {seed_text[:80]}", "k": 3},
        ]
        if any(t in seed_text.lower() for t in _FACT_TRIGGERS):
            routes.append({"kind": "fact", "query": f"factual constraints: {seed_text[:60]}", "k": 2})
        return {"routes": routes}

    def _atomize_beats(self, body: dict) -> dict:
        script = body["script"]
        paragraphs = [p.strip() for p in script.split("\n\n") if p.strip()]
        if not paragraphs:
            paragraphs = [script.strip()]
        beats = []
        functions = ("setup", "escalation", "reversal", "payoff")
        for i, p in enumerate(paragraphs[:12]):
            sents = _sentences(p)
            beats.append(
                {
                    "opening_action": sents[0][:160],
                    "beat_summary": p[:240],
                    "closing_hook_visual": sents[-1][:160],
                    "conflict_function": functions[i % len(functions)],
                }
            )
        title = paragraphs[0].splitlines()[0][:60]
        return {
            "metadata": {"title": title, "genre": "drama", "logline": _sentences(paragraphs[0])[0][:120]},
            "plot_summary": script[:300],
            "beats": beats,
        }

    def _summarize_atoms(self, body: dict) -> dict:
        out = {}
        for kind in ("fact", "logic", "pattern"):
            atoms = []
            for r in body["results"].get(kind, []):
                digest = str(r["text"])[:48]
                atoms.append(
                    {
                        "text": f"{kind} prior: {digest}… distilled into a transferable cue.",
                        "source_ref": str(r["source_ref"]),
                    }
                )
            out[f"{kind}_atoms"] = atoms
        return out

    def _story_core(self, body: dict) -> dict:
        logline = body["logline"]
        n_scenes = int(body.get("n_scenes", 3))
        words = [w.strip(".,!?").title() for w in logline.split()[:4]]
        title = " ".join(words) or "Untitled"
        characters = [
            {"id": "lead", "identity_desc": "determined protagonist in their 30s",
             "wardrobe_desc": "charcoal suit, worn satchel", "seed_portrait_ref": "portrait-lead"},
            {"id": "rival", "identity_desc": "polished antagonist with quiet menace",
             "wardrobe_desc": "tailored navy suit", "seed_portrait_ref": "portrait-rival"},
        ]
        locations = [
            {"id": "office", "spatial_desc": "open-plan office with glass partition", "visual_attrs": "cool daylight"},
            {"id": "corridor", "spatial_desc": "long corridor with elevator bank", "visual_attrs": "warm practicals"},
            {"id": "courtroom", "spatial_desc": "wood-paneled courtroom", "visual_attrs": "high windows"},
        ]
        props = [
            {"id": "contract", "functional_desc": "signed agreement", "symbolic_desc": "the trap"},
            {"id": "phone", "functional_desc": "holds the recording", "symbolic_desc": "hidden leverage"},
        ]
        scene_locs = ["office", "office", "courtroom", "corridor", "office"]
        scene_times = ["day 1, morning", "day 1, night", "day 3", "day 3, later", "day 4"]
        scenes = []
        for i in range(1, n_scenes + 1):
            scenes.append(
                {
                    "id": i,
                    "title": f"Scene {i}: pressure turns",
                    "spatiotemporal_boundary": {
                        "time_label": scene_times[(i - 1) % len(scene_times)],
                        "location_id": scene_locs[(i - 1) % len(scene_locs)],
                    },
                    "outline": f"Beat {i} of '{title}': the stakes sharpen and an ally wavers.",
                    "opening_attractor": "A public accusation lands mid-sentence.",
                    "key_steps": [
                        "accusation is made in front of witnesses",
                        "protagonist produces an unexpected counter",
                    ],
                    "scene_goal": "force the rival to overcommit",
                    "escalation_beats": ["stakes double", "an exit is blocked"],
                    "ending_hook": f"A phone buzzes with proof that changes scene {i + 1}.",
                    "knowledge_update": {
                        "audience_knows": f"the recording exists (scene {i})",
                        "characters_know": "rival believes the lead is cornered",
                        "hidden": "the ally's betrayal",
                        "new_evidence": "timestamped recording",
                    },
                }
            )
        lines = {
            "external_pressure": {"summary": "institutional pressure compounds",
                                  "per_scene": [f"pressure beat {i}" for i in range(1, n_scenes + 1)]},
            "protagonist_response": {"summary": "from reactive to commanding",
                                     "per_scene": [f"response beat {i}" for i in range(1, n_scenes + 1)]},
            "resolution_mechanism": {"summary": "the recording chain of custody",
                                     "per_scene": [f"mechanism beat {i}" for i in range(1, n_scenes + 1)]},
            "emotional_progression": {"summary": "humiliation to resolve",
                                      "per_scene": [f"emotion beat {i}" for i in range(1, n_scenes + 1)]},
            "knowledge_state": {"summary": "audience leads the characters",
                                "per_scene": [f"knowledge after scene {i}" for i in range(1, n_scenes + 1)]},
        }
        return {
            "format_version": 1,
            "title": title,
            "theme": "cost of dignity",
            "genre": "workplace drama",
            "scenes": scenes,
            "progression_lines": lines,
            "assets": {"characters": characters, "locations": locations, "props": props},
        }

    def _revise_patches(self, body: dict) -> dict:
        core = body["payload"]["core"]
        fixes = body["payload"]["fixes"]
        patches = []
        seen = set()
        for fix in fixes:
            target = fix["target"]
            key = (target["kind"], target["ref"])
            if key in seen:
                continue
            seen.add(key)
            if target["kind"] == "scene":
                scene = next(
                    (s for s in core["scenes"] if s["id"] == int(target["ref"])),
                    dict(core["scenes"][0], id=int(target["ref"])),
                )
                new_scene = dict(scene)
                new_scene["outline"] = scene["outline"] + " (revised)"
                new_scene["opening_attractor"] = scene["opening_attractor"] + " (sharper)"
                new_scene["scene_goal"] = scene["scene_goal"] + " (clarified)"
                new_scene["ending_hook"] = scene["ending_hook"] + " (stronger)"
                patches.append({"target": target, "replacement": new_scene})
            else:
                line = core["progression_lines"][target["ref"]]
                patches.append(
                    {"target": target,
                     "replacement": {"summary": line["summary"] + " (revised)", "per_scene": line["per_scene"]}}
                )
        return {"patches": patches, "idea_bank": []}

    def _revive_ideas(self, body: dict) -> dict:
        core = body["payload"]["core"]
        ideas = body["payload"]["ideas"]
        scene = dict(core["scenes"][0])
        scene["ending_hook"] = scene["ending_hook"] + f" (revived: {ideas[0]['idea_text'][:40]})"
        return {"patches": [{"target": {"kind": "scene", "ref": str(scene["id"])}, "replacement": scene}]}

    # -- clip stage -----------------------------------------------------------

    def _clip_synthesis(self, body: dict) -> dict:
        scene = body["scene"]
        assets = body["assets"]
        char_ids = [c["id"] for c in assets["characters"]][:2]
        prop_ids = [p["id"] for p in assets["props"]][:1]
        n_clips = 3 + (scene["id"] % 2)
        shots = ["wide", "medium", "close", "medium"]
        clips = []
        for idx in range(n_clips):
            present = char_ids if idx else char_ids[:1]
            events = []
            if idx == 1 and len(char_ids) > 1:
                events = [{"character_id": char_ids[1], "event": "enter"}]
                start = char_ids[:1]
            else:
                start = present
            clips.append(
                {
                    "scene_id": scene["id"],
                    "clip_index": idx,
                    "narrative": f"{scene['title']} — clip {idx}: {scene['key_steps'][idx % len(scene['key_steps'])] if scene['key_steps'] else scene['outline']}",
                    "shot_type": shots[idx % len(shots)],
                    "characters": present,
                    "key_props": prop_ids,
                    "dialogue": [[char_ids[0], f"Line {idx}: you should not have signed."]],
                    "actions": [f"action beat {idx}"],
                    "start_state": f"clip {idx} start: positions held from previous beat",
                    "end_state": f"clip {idx} end: tension raised, prop state advanced",
                    "characters_at_start": start,
                    "characters_at_end": present,
                    "character_events": events,
                }
            )
        return {"clips": clips}

    def _scene_review(self, body: dict) -> dict:
        n = len(body["payload"]["clips"])
        hook = {"score": 8, "reason": "opening lands fast", "improvements": []}
        end = {"score": 8, "reason": "clear pull forward", "improvements": []}
        if n < 3:
            twist = {"score": 8, "reason": "scene too short to judge twists", "improvements": []}
        else:
            twist = {"score": 8, "reason": "middle turns hold", "improvements": []}
        return {"hook": hook, "scene_end": end, "twist": twist}

    def _clip_rewrite(self, body: dict) -> dict:
        clips = [dict(c) for c in body["payload"]["clips"]]
        for i in body["payload"]["allowed_indices"]:
            clips[i] = dict(clips[i])
            clips[i]["narrative"] = clips[i]["narrative"] + " (tightened)"
        return {"clips": clips}

    # -- prompt stage -----------------------------------------------------------

    def _prompt_pair(self, body: dict) -> dict:
        clip = body["payload"]["clip"]
        chars = ", ".join(clip["characters"])
        props = ", ".join(clip["key_props"]) or "no key props"
        return {
            "keyframe_prompt": (
                f"{clip['shot_type']} shot. {chars} positioned per: {clip['start_state']}. "
                f"Props in frame: {props}. Camera at eye level, static composition."
            ),
            "video_prompt": (
                f"From this frame: {'; '.join(clip['actions'])}. Dialogue plays out. "
                f"The clip closes on: {clip['end_state']}."
            ),
        }

    def _prompt_rewrite(self, body: dict) -> dict:
        pair = body["payload"]["pair"]
        return {
            "keyframe_prompt": pair["keyframe_prompt"] + " Spatial layout corrected.",
            "video_prompt": pair["video_prompt"] + " Continuity corrected.",
        }

    # -- post stage ---------------------------------------------------------------

    def _movement_classify(self, body: dict) -> dict:
        text = (body["prev_boundary"] + " " + body["next_boundary"]).lower()
        narrative_move = any(w in text for w in ("corridor", "walk", "elevator", "hallway"))
        return {
            "movement_is_narrative": narrative_move,
            "time_advanced": False,
            "local_move": narrative_move,
            "rationale": "boundary text classification",
        }

    def _bucket_select(self, body: dict) -> dict:
        overview = body["payload"]["scene_overview"].lower()
        if any(w in overview for w in ("confront", "accus", "clash", "pressure")):
            primary = "conflict_escalation"
        elif any(w in overview for w in ("quiet", "calm", "heal")):
            primary = "calm_healing"
        else:
            primary = "dialogue_bed"
        backup = "suspense" if primary != "suspense" else "dialogue_bed"
        return {"primary": primary, "backup": backup}


class MockJudge(Provider):
    """Story judge + text-audit endpoint; per-judge seed, scriptable scores."""

    def __init__(self, seed: int, judge_id: str, scripts: dict | None = None):
        self.seed = seed
        self.judge_id = judge_id
        self.scripts = scripts or {}

    def handle(self, body: dict) -> dict:
        task = body["task"]
        if task in self.scripts:
            return self.scripts[task](body)
        return getattr(self, f"_{task}")(body)

    def _judge_review(self, body: dict) -> dict:
        dims = ("logic_integrity", "open_grab", "hook_continuity", "clarity",
                "reversal_pacing", "payoff_resolution")
        return {
            "judge_id": self.judge_id,
            "keep_strengths": ["the opening accusation lands immediately"],
            "rubric": {d: 8 for d in dims},
            "must_fix": [],
            "visual_gate": "pass",
        }

    def _spatial_audit(self, body: dict) -> dict:
        return {
            "spatial_consistency": 8,
            "physics_plausibility": 8,
            "cross_clip_continuity": 8,
            "overall": 8,
            "issues": [],
            "pass": True,
        }

    def _prop_audit(self, body: dict) -> dict:
        return {
            "prop_source_continuity": 8,
            "prop_motion_plausibility": 8,
            "overall": 8,
            "pass": True,
        }

    def _scene_info_audit(self, body: dict) -> dict:
        return {
            "needs_extra_scene_information": False,
            "has_large_character_or_camera_reposition": False,
            "required_scene_anchors": [],
        }


class MockDecider(Provider):
    def __init__(self, seed: int, scripts: dict | None = None):
        self.seed = seed
        self.scripts = scripts or {}

    def handle(self, body: dict) -> dict:
        task = body["task"]
        if task in self.scripts:
            return self.scripts[task](body)
        if task == "decider_ruling":
            disputes = body["payload"]["disputes"]
            return {
                "rulings": [
                    {"dispute_index": i, "fix": True,
                     "minimal_change_note": "apply the smallest edit resolving the dispute"}
                    for i in range(len(disputes))
                ],
                "protected_strengths": [],
            }
        if task == "revival_select":
            return {"revive_indices": []}
        raise KeyError(task)


class MockImageGen(Provider):
    """Deterministic rasters; composites keep background pixels bit-exact."""

    def __init__(self, seed: int, state: WorldState):
        self.seed = seed
        self.state = state

    def handle(self, body: dict) -> dict:
        task = body["task"]
        if task == "panorama":
            world = self.state.world_for(body["scene_key"])
            return {"image": raster_to_wire(world.render_panorama(height=int(body.get("height", 64))))}
        if task == "portrait":
            rng = _rng(self.seed, "portrait", body["character_id"])
            img = (rng.uniform(0, 255, size=(32, 24, 3))).astype(np.uint8)
            return {"image": raster_to_wire(img)}
        if task == "first_frame":
            background = raster_from_wire(body["background"])
            img = background.astype(np.float64)
            sil = body.get("silhouette")
            if sil is not None:
                mask = raster_from_wire(sil).astype(bool)
                rng = _rng(self.seed, "char", body.get("character_id", "lead"))
                tint = rng.uniform(40, 215, size=3)
                img[mask] = tint
            return {"image": raster_to_wire(np.clip(img, 0, 255).astype(np.uint8))}
        if task == "repair":
            frame = raster_from_wire(body["frame"]).astype(np.float64)
            rng = _rng(self.seed, "repair", hash_of(body.get("issues", [])))
            repaired = np.clip(frame * 0.98 + rng.uniform(0, 4), 0, 255)
            return {"image": raster_to_wire(repaired.astype(np.uint8))}
        raise KeyError(task)


class MockVideoGen(Provider):
    """N-frame gradient clip with the frame index embedded in the top-left
    pixel block, plus a constant-tone mono audio track and dialogue timing."""

    def __init__(self, seed: int, n_frames: int = 8, fps: float = 4.0, sample_rate: int = 48000):
        self.seed = seed
        self.n_frames = n_frames
        self.fps = fps
        self.sample_rate = sample_rate

    def handle(self, body: dict) -> dict:
        first = raster_from_wire(body["first_frame"]).astype(np.float64)
        n = int(body.get("n_frames", self.n_frames))
        frames = []
        for k in range(n):
            f = np.clip(first * (1.0 - 0.01 * k) + 1.5 * k, 0, 255).astype(np.uint8)
            f[0:2, 0:2] = k % 256
            frames.append(raster_to_wire(f))
        duration = n / self.fps
        t = np.arange(int(duration * self.sample_rate)) / self.sample_rate
        freq = 220.0 + (_digest(self.seed, body.get("clip_key", "")) % 440)
        audio = 0.1 * np.sin(2 * np.pi * freq * t).astype(np.float32)
        n_lines = len(body.get("dialogue", []))
        speech = []
        cursor = 0.3
        for _ in range(n_lines):
            end = min(cursor + 1.0, duration)
            if end - cursor > 0.2:
                speech.append([round(cursor, 3), round(end, 3)])
            cursor = end + 0.4
        return {
            "frames": frames,
            "fps": self.fps,
            "audio": raster_to_wire(audio),
            "sample_rate": self.sample_rate,
            "speech_intervals": speech,
        }


class MockWorldModel(Provider):
    """Answers world-build requests with analytic box-room parameters and
    render queries by ray casting that room."""

    def __init__(self, seed: int, state: WorldState):
        self.seed = seed
        self.state = state

    def handle(self, body: dict) -> dict:
        task = body["task"]
        if task == "build_world":
            return {"world": self.state.world_for(body["scene_key"]).to_dict()}
        if task == "render":
            world = BoxRoomWorld.from_dict(body["world"])
            pose = Pose.from_dict(body["pose"])
            intr = Intrinsics.from_dict(body["intrinsics"])
            color, depth = world.render(pose, intr)
            return {
                "color": raster_to_wire((color * 255).astype(np.uint8)),
                "depth": raster_to_wire(depth.values.astype(np.float32)),
                "valid": raster_to_wire(depth.valid.astype(np.uint8)),
            }
        raise KeyError(task)


class MockGeometryModel(Provider):
    """Relative-pose estimator: scripted delta (default identity) and a
    monocular depth map equal to the planted world depth divided by the
    suite's depth scale."""

    def __init__(self, seed: int, state: WorldState, scripts: dict | None = None):
        self.seed = seed
        self.state = state
        self.scripts = scripts or {}

    def handle(self, body: dict) -> dict:
        if "relative_pose" in self.scripts:
            return self.scripts["relative_pose"](body)
        ctx = body["context"]
        world = BoxRoomWorld.from_dict(ctx["world"])
        pose = Pose.from_dict(ctx["reference_pose"])
        intr = Intrinsics.from_dict(ctx["reference_intrinsics"])
        _, depth = world.render(pose, intr)
        est = depth.values / self.state.depth_scale
        return {
            "rotation": [float(x) for x in np.eye(3).reshape(-1)],
            "translation": [0.0, 0.0, 0.0],
            "reference_depth": raster_to_wire(est.astype(np.float32)),
            "reference_valid": raster_to_wire(depth.valid.astype(np.uint8)),
        }


class MockTrajectoryModel(Provider):
    """Frame-0-relative camera deltas: a slow forward dolly, scale-ambiguous
    by the suite's depth scale (the engine must re-calibrate)."""

    def __init__(self, seed: int, state: WorldState, step: float = 0.02):
        self.seed = seed
        self.state = state
        self.step = step

    def handle(self, body: dict) -> dict:
        n = int(body["n_frames"])
        deltas = []
        for t in range(n):
            z = self.step * t / self.state.depth_scale
            deltas.append(
                {"rotation": [float(x) for x in np.eye(3).reshape(-1)], "translation": [0.0, 0.0, z]}
            )
        return {"deltas": deltas}


class MockHumanModel(Provider):
    """Body mesh + keypoints for the planted character, projected through the
    camera named in the request context."""

    def __init__(self, seed: int, state: WorldState):
        self.seed = seed
        self.state = state

    def handle(self, body: dict) -> dict:
        ctx = body["context"]
        planted = self.state.body_for(
            ctx["scene_key"], ctx["character_id"], ctx.get("index", 0), ctx.get("count", 1)
        )
        pose = Pose.from_dict(ctx["camera_pose"])
        intr = Intrinsics.from_dict(ctx["camera_intrinsics"])
        cam = pose.inverse()
        kp_world = planted.keypoints_world()
        kp_cam = kp_world @ cam.rotation.T + cam.translation
        kp2d = intr.project(kp_cam)
        return {
            "radii": [float(x) for x in planted.radii],
            "yaw": planted.yaw,
            "scale": planted.scale,
            "keypoints_body": [[float(v) for v in p] for p in planted.keypoints_body()],
            "keypoints_2d": [[float(v) for v in p] for p in kp2d],
        }


class MockSegmentation(Provider):
    """Person mask = silhouette of the planted body from the request camera."""

    def __init__(self, seed: int, state: WorldState):
        self.seed = seed
        self.state = state

    def handle(self, body: dict) -> dict:
        ctx = body["context"]
        planted = self.state.body_for(
            ctx["scene_key"], ctx["character_id"], ctx.get("index", 0), ctx.get("count", 1)
        )
        pose = Pose.from_dict(ctx["camera_pose"])
        intr = Intrinsics.from_dict(ctx["camera_intrinsics"])
        mask, _ = planted.silhouette(pose, intr)
        return {"mask": raster_to_wire(mask.astype(np.uint8))}


class MockVisionJudge(Provider):
    def __init__(self, seed: int, scripts: dict | None = None):
        self.seed = seed
        self.scripts = scripts or {}

    def handle(self, body: dict) -> dict:
        task = body["task"]
        if task in self.scripts:
            return self.scripts[task](body)
        if task == "anchor_select":
            return {"winner_index": _digest(self.seed, body.get("scene_key", "")) % max(int(body["n_candidates"]), 1)}
        if task == "candidate_select":
            dims = ("temporal_continuity", "layout_consistency", "background_quality",
                    "person_scene_interaction", "character_integrity", "color_continuity")
            rng = _rng(self.seed, "cand", body.get("candidate_key", ""))
            scores = {d: int(rng.integers(4, 6)) for d in dims}
            return {
                "scores": scores,
                "total_score": sum(scores.values()),
                "rejected": any(v < 3 for v in scores.values()),
                "score_explanations": {d: f"{d} holds against the references" for d in dims},
            }
        if task == "tail_closeup":
            return {
                "is_local_closeup": False,
                "shot_scale": "medium",
                "visible_environment": "room interior with furniture context",
                "confidence": 0.9,
            }
        if task == "video_audit":
            return {
                "physics_integrity": 8,
                "temporal_continuity": 8,
                "reaction_plausibility": 7,
                "character_presence_consistency": 10,
                "analysis": "entrances and exits follow the script",
            }
        if task == "semantic_filter":
            return {"anchors_visible": True, "notes": "required anchors in frame"}
        if task == "frame_check":
            return {"issues": []}
        if task == "eval_unit":
            rng = _rng(self.seed, "eval", body["metric"], body.get("unit_key", ""))
            return {"score": int(rng.integers(3, 6)), "analysis": "consistent with the rubric"}
        raise KeyError(task)


class MockAudioJudge(Provider):
    def __init__(self, seed: int, scripts: dict | None = None):
        self.seed = seed
        self.scripts = scripts or {}

    def handle(self, body: dict) -> dict:
        task = body["task"]
        if task in self.scripts:
            return self.scripts[task](body)
        if task == "segment_score":
            scene_dur = float(body["scene_duration"])
            track_dur = float(body["track_duration"])
            rng = _rng(self.seed, "seg", body["track_id"])
            start_max = max(track_dur - scene_dur, 0.0)
            start = round(float(rng.uniform(0, start_max)), 2) if start_max > 0 else 0.0
            window = [start, round(min(start + scene_dur, track_dur), 2)]
            return {
                "window": window,
                "emotion_fit": int(rng.integers(5, 10)),
                "narrative_fit": int(rng.integers(5, 10)),
                "rhythm_fit": int(rng.integers(5, 10)),
                "transition_fit": int(rng.integers(5, 10)),
            }
        raise KeyError(task)


@dataclass
class MockSuite:
    registry: ProviderRegistry
    state: WorldState
    seed: int


def mock_suite(seed: int = 0, scripts: dict | None = None, embed_dim: int = 256) -> MockSuite:
    """Bind seeded mocks for every role.

    ``scripts`` maps role name to a ``{task: callable(body) -> response}``
    dict; unscripted tasks keep template behavior.
    """
    scripts = scripts or {}
    state = WorldState(seed=seed)
    registry = ProviderRegistry()
    registry.bind("writer", MockWriter(seed, scripts.get("writer")))
    registry.bind("embedder", MockEmbedder(seed, dim=embed_dim))
    registry.bind("web_search", MockWebSearch(seed))
    for role in ("text_judge_a", "text_judge_b", "text_judge_c"):
        registry.bind(role, MockJudge(_digest(seed, role), role, scripts.get(role)))
    registry.bind("decider", MockDecider(seed, scripts.get("decider")))
    registry.bind("image_gen", MockImageGen(seed, state))
    registry.bind("video_gen", MockVideoGen(seed))
    registry.bind("world_model", MockWorldModel(seed, state))
    registry.bind("geometry_model", MockGeometryModel(seed, state, scripts.get("geometry_model")))
    registry.bind("trajectory_model", MockTrajectoryModel(seed, state))
    registry.bind("human_model", MockHumanModel(seed, state))
    registry.bind("segmentation_model", MockSegmentation(seed, state))
    registry.bind("vision_judge", MockVisionJudge(seed, scripts.get("vision_judge")))
    registry.bind("audio_judge", MockAudioJudge(seed, scripts.get("audio_judge")))
    return MockSuite(registry=registry, state=state, seed=seed)
