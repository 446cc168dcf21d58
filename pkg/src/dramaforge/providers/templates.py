"""Prompt templates rendered into provider requests.

Real chat adapters send these as the system message; mocks ignore them but
the strings still enter the request envelope so fixtures capture the full
contract.  Every template demands strict JSON with the exact schema the
parser on our side enforces.
"""

JUDGE_PROMPT = """\
You are one of three independent reviewers of a short-drama story plan.
Score the draft on six dimensions, each an integer 0-10:
logic_integrity, open_grab, hook_continuity, clarity, reversal_pacing, payoff_resolution.
List the strengths that must be kept, and the issues that must be fixed.
For each issue give: issue_id, evidence, fix_direction, target
({"kind": "scene"|"progression_line", "ref": id-or-name}), and severity
(low|medium|high|critical).
Also report visual_gate in {pass, borderline, fail}: can the key turning
points be staged and filmed as written?
Return strict JSON only:
{"keep_strengths": [...], "rubric": {...}, "must_fix": [...], "visual_gate": "pass"}
"""

DECIDER_PROMPT = """\
You are the final decider over disputed review items for a short-drama plan.
For each dispute decide whether to fix it, following a minimal-change
principle: prefer the smallest edit that resolves the problem, and name the
strengths that must not be touched.
Return strict JSON only:
{"rulings": [{"dispute_index": 0, "fix": true, "minimal_change_note": "..."}],
 "protected_strengths": [...]}
"""

REVISER_PROMPT = """\
You are revising a short-drama story plan. Do not regenerate the whole draft.
Output structured patches that replace only the targeted scene plans or
progression lines. A revised scene must rewrite its outline together with the
dependent fields: opening_attractor, key_steps, scene_goal, escalation_beats,
ending_hook, and knowledge_update. If a strong idea, hook, or reversal is
removed or softened, record it under idea_bank.
Return strict JSON only:
{"patches": [{"target": {...}, "replacement": {...}}],
 "idea_bank": [{"idea_text": "...", "origin_issue_id": "..."}]}
"""

SCENE_REVIEW_PROMPT = """\
You are a reviewer of short-drama scene scripts built for AI video production.
You receive all clips of one scene as structured JSON. Score three metrics:
1) hook: only the opening attraction of the first clip.
2) scene_end: only the ending hook of the last clip.
3) twist: only the reversal density of the middle clips (exclude first and last).
Boundary rules: never use the last clip as evidence for hook; never use the
first clip as evidence for scene_end; never use the first or last clip as the
main evidence for twist. If the scene has fewer than 3 clips, set twist.score
to 8 and twist.improvements to [].
Improvement-count rule: score 1-3 -> exactly 3 suggestions; 4-6 -> exactly 2;
7 -> exactly 1; 8-10 -> exactly 0.
Review only; do not rewrite. Suggestions must be actionable and specific.
Avoid text-dependent visual solutions, wet-body or water-stain descriptions,
and ellipses in dialogue. All strings single-line.
Return strict JSON only:
{"hook": {"score": 1, "reason": "...", "improvements": [...]},
 "scene_end": {...}, "twist": {...}}
"""

CLIP_REWRITE_PROMPT = """\
You are rewriting clips of a short-drama scene in response to review feedback.
You may change only the clips inside the allowed partition named in the
payload; every other clip must be returned byte-identical. Keep the clip
count fixed and keep every clip schema-complete.
Return strict JSON only: {"clips": [...]}
"""

PROMPT_PAIR_PROMPT = """\
Write the paired prompts for one clip.
keyframe_prompt describes the static first frame only: character composition,
spatial relations, key prop placement, and camera viewpoint. No temporal
language, no motion verbs.
video_prompt describes the temporal development from that frame: actions,
interactions, prop changes, and the local narrative progression to the end
state.
Return strict JSON only: {"keyframe_prompt": "...", "video_prompt": "..."}
"""

SPATIAL_AUDIT_PROMPT = """\
Audit this clip's prompts for spatial executability before any rendering.
Score 0-10: spatial_consistency, physics_plausibility, cross_clip_continuity,
overall. List issues with type in
{POSITION, GAZE, ENTRY_EXIT, PROP, CONTINUITY, OVERCROWDING} and a note.
pass=false requires at least one issue.
Return strict JSON only:
{"spatial_consistency": 0, "physics_plausibility": 0,
 "cross_clip_continuity": 0, "overall": 0, "issues": [...], "pass": true}
"""

PROP_AUDIT_PROMPT = """\
Audit key-prop continuity across the adjacent clips: do props have valid
sources, plausible motion, ownership changes, and end states?
Score 0-10: prop_source_continuity, prop_motion_plausibility, overall.
Return strict JSON only:
{"prop_source_continuity": 0, "prop_motion_plausibility": 0, "overall": 0,
 "pass": true}
"""

SCENE_INFO_PROMPT = """\
From the next clip's text only, decide whether its first frame needs scene
information beyond the previous tail frame.
Return strict JSON only:
{"needs_extra_scene_information": false,
 "has_large_character_or_camera_reposition": false,
 "required_scene_anchors": [...]}
"""

CANDIDATE_SELECT_PROMPT = """\
You are selecting the best first frame for the next video clip.
You receive three images: (1) the previous tail frame, (2) the candidate's
geometry-only environment render — use it only for coarse layout and large
object relations, never for color, texture, blur, or camera-direction
comparison — and (3) the candidate frame to evaluate.
Score six criteria 0-5, integers: temporal_continuity, layout_consistency,
background_quality, person_scene_interaction, character_integrity,
color_continuity. Judge color continuity only against image 1.
Any score below 3 rejects the candidate even if the total is high. Be strict.
Give a concrete explanation per criterion; never leave one empty.
Return strict JSON only:
{"scores": {...}, "total_score": 0, "rejected": true, "score_explanations": {...}}
"""

TAIL_CLOSEUP_PROMPT = """\
Decide whether this tail frame is too local or context-poor to serve directly
as the next clip's first frame.
Return strict JSON only:
{"is_local_closeup": false, "shot_scale": "wide", "visible_environment": "...",
 "confidence": 0.0}
"""

VIDEO_AUDIT_PROMPT = """\
Score the generated clip on four dimensions.
physics_integrity 0-10: floating objects, gravity violations, penetration,
abnormal bodies, duplicate entities.
temporal_continuity 0-10: flicker, teleports, state jumps, objects reverting
after a handover.
reaction_plausibility 0-10: do expressions and actions match the stimulus and
narrative situation?
character_presence_consistency, strictly 0 or 10: compare characters visible
at the start against characters_at_start, at the end against
characters_at_end, and verify scripted entrances/exits occur in order; any
inconsistency scores 0.
Return strict JSON only:
{"physics_integrity": 0, "temporal_continuity": 0, "reaction_plausibility": 0,
 "character_presence_consistency": 0, "analysis": "..."}
"""

BUCKET_SELECT_PROMPT = """\
Select the most suitable primary and backup music buckets for this scene from
the given taxonomy, using the scene overview, clip descriptions, and clip
moods. The two buckets must differ.
Return strict JSON only: {"primary": "...", "backup": "..."}
"""

SEGMENT_SCORE_PROMPT = """\
Given the scene's original audio and one candidate track, predict the best
scene-length segment window and score it 0-10 on emotion_fit, narrative_fit,
rhythm_fit, transition_fit.
Return strict JSON only:
{"window": [start_s, end_s], "emotion_fit": 0, "narrative_fit": 0,
 "rhythm_fit": 0, "transition_fit": 0}
"""

EVAL_UNIT_PROMPT = """\
You are a rigorous short-drama video benchmark judge.
Metric: {metric}
Scope: {scope}
Rubric: {rubric}
Use a 1-5 integer score:
1 = weak / mostly ineffective
2 = partially effective but with clear issues
3 = mostly effective with minor issues
4 = excellent and clearly satisfies the metric
5 = exceptional; reserve for outstanding cases with strong evidence, almost
no visible weakness, and especially strong impact
Reference context:
{context}
Return strict JSON only: {{"score": 1, "analysis": "brief evidence-based explanation"}}
"""
