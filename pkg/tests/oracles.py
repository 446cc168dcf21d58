"""Independent brute-force oracles used by unit and acceptance tests.

Everything here is deliberately loop-based and simple-minded: these
implementations check the production code paths, so they never import from
them beyond plain data types.
"""

from __future__ import annotations

import math

import numpy as np

from dramaforge.debate import RUBRIC_DIMS, SEVERITY_LEVELS


def cosine(a, b) -> float:
    a = [float(x) for x in a]
    b = [float(x) for x in b]
    na = math.sqrt(sum(x * x for x in a))
    nb = math.sqrt(sum(x * x for x in b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return sum(x * y for x, y in zip(a, b)) / (na * nb)


def brute_force_pattern_rank(query_vec, beats, weights, k):
    """(beat_id, score) list via plain loops; ties broken by beat_id."""
    scored = []
    for beat in beats:
        s = 0.0
        for view, w in weights.items():
            s += w * cosine(query_vec, beat.embeddings[view])
        scored.append((beat.beat_id, s))
    scored.sort(key=lambda t: (-t[1], t[0]))
    return scored[:k]


def brute_force_logic_rank(query_vec, chunks, k):
    scored = [(c.chunk_id, cosine(query_vec, c.embedding)) for c in chunks]
    scored.sort(key=lambda t: (-t[1], t[0]))
    return scored[:k]


def brute_force_disputes(reviews, score_gap, severity_levels, logic_floor):
    """Dispute kinds/payload keys re-derived from the stated rules."""
    sev_rank = {s: i for i, s in enumerate(SEVERITY_LEVELS)}
    found = set()
    for dim in RUBRIC_DIMS:
        scores = [r.rubric[dim] for r in reviews]
        if max(scores) - min(scores) >= score_gap:
            found.add(("score_gap", dim))
    targets = {}
    for r in reviews:
        for issue in r.must_fix:
            targets.setdefault((issue.target.kind, issue.target.ref), []).append(issue)
    for key, issues in targets.items():
        sevs = [sev_rank[i.severity] for i in issues]
        if max(sevs) - min(sevs) >= severity_levels:
            found.add(("severity_conflict", key))
        import re

        def norm(t):
            return re.sub(r"\s+", " ", re.sub(r"[^\w\s]", "", t.lower())).strip()

        if len({norm(i.fix_direction) for i in issues}) > 1:
            found.add(("direction_conflict", key))
    if any(r.visual_gate == "fail" for r in reviews) or any(
        r.rubric["logic_integrity"] < logic_floor for r in reviews
    ):
        found.add(("high_risk",))
    return found


def dispute_key_set(disputes):
    """Map production disputes into the oracle's key space."""
    keys = set()
    for d in disputes:
        if d.kind == "score_gap":
            keys.add(("score_gap", d.payload["dimension"]))
        elif d.kind in ("severity_conflict", "direction_conflict"):
            keys.add((d.kind, (d.payload["target"]["kind"], d.payload["target"]["ref"])))
        elif d.kind == "high_risk":
            keys.add(("high_risk",))
    return keys


# --- box room ray casting, scalar edition -------------------------------------

def scalar_ray_exit(origin, direction, lo, hi):
    """Exit distance of a ray from inside an axis-aligned box, plus exit axis
    and sign. Pure python floats."""
    best_t, best_axis, best_sign = math.inf, -1, 0
    for axis in range(3):
        d = direction[axis]
        if d > 0:
            t = (hi[axis] - origin[axis]) / d
            sign = 1
        elif d < 0:
            t = (lo[axis] - origin[axis]) / d
            sign = -1
        else:
            continue
        if t < best_t:
            best_t, best_axis, best_sign = t, axis, sign
    return best_t, best_axis, best_sign


def oracle_camera_stats(world, pose, intr):
    """clearance / bg_valid_fraction by casting every pixel ray in a loop."""
    lo, hi = world.bounds
    lo = [float(x) for x in lo]
    hi = [float(x) for x in hi]
    o = [float(x) for x in pose.translation]
    r = pose.rotation
    clearance = math.inf
    valid_count = 0
    total = intr.width * intr.height
    for v in range(intr.height):
        for u in range(intr.width):
            dx = (u - intr.cx) / intr.fx
            dy = (v - intr.cy) / intr.fy
            dz = 1.0
            n = math.sqrt(dx * dx + dy * dy + dz * dz)
            dc = (dx / n, dy / n, dz / n)
            dw = (
                r[0, 0] * dc[0] + r[0, 1] * dc[1] + r[0, 2] * dc[2],
                r[1, 0] * dc[0] + r[1, 1] * dc[1] + r[1, 2] * dc[2],
                r[2, 0] * dc[0] + r[2, 1] * dc[1] + r[2, 2] * dc[2],
            )
            t, axis, sign = scalar_ray_exit(o, dw, lo, hi)
            hit_open_top = world.open_top and axis == 1 and sign == 1
            if math.isfinite(t) and not hit_open_top:
                valid_count += 1
                clearance = min(clearance, t)
    bg_fraction = valid_count / total
    return (clearance if valid_count else 0.0), bg_fraction


def oracle_face_visibility(camera_pos, body, intr, pose, occluders=()):
    samples = body.face_samples()
    normals = body.surface_normal(samples)
    cam = pose.inverse()
    visible = 0
    for i in range(len(samples)):
        p = samples[i]
        to_cam = np.asarray(camera_pos) - p
        dist = math.sqrt(float(to_cam @ to_cam))
        to_cam_n = to_cam / dist
        if float(normals[i] @ to_cam_n) <= 0.0:
            continue
        pc = cam.rotation @ p + cam.translation
        if pc[2] <= 1e-6:
            continue
        u = pc[0] / pc[2] * intr.fx + intr.cx
        v = pc[1] / pc[2] * intr.fy + intr.cy
        if not (0 <= u <= intr.width - 1 and 0 <= v <= intr.height - 1):
            continue
        blocked = False
        for other in occluders:
            if other is body:
                continue
            t = other.ray_hits(np.asarray(camera_pos), -to_cam_n[None, :])
            if np.isfinite(t[0]) and t[0] < dist - 1e-9:
                blocked = True
                break
        if not blocked:
            visible += 1
    return visible / len(samples)


def oracle_filter_decision(world, cand, bodies, cfg):
    """Accept/reject decision for one candidate, re-derived from the rules."""
    clearance, bg = oracle_camera_stats(world, cand.pose, cand.intrinsics)
    if bodies:
        face = min(
            oracle_face_visibility(cand.pose.translation, b, cand.intrinsics, cand.pose, bodies)
            for b in bodies
        )
    else:
        face = 1.0
    return clearance >= cfg.min_clearance and face >= cfg.min_face_vis and bg >= cfg.min_bg_fraction
