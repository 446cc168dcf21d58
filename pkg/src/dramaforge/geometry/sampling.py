"""Next-shot camera sampling on a local spherical shell, plus the geometric
filter that rejects infeasible candidates.

Candidates orbit the target point (a single character, or the centroid of all
involved characters) at azimuth offsets relative to the previous camera
bearing, absolute elevations, and radii proportional to the previous
camera-target distance.  The filter rejects cameras that sit too close to
scene surfaces, see too little of the face, or lack valid background, then
keeps the top-K by weighted score.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import NoCandidateError
from .placement import EllipsoidBody
from .pose import Intrinsics, Pose, look_at

# azimuth offsets (degrees) span over-shoulder through full reverse
DEFAULT_AZIMUTHS_DEG = (0.0, 20.0, -20.0, 40.0, -40.0, 70.0, -70.0, 110.0, -110.0, 150.0, -150.0, 180.0)
DEFAULT_RADIUS_MULTS = (0.7, 1.0, 1.5)
DEFAULT_ELEVATIONS_DEG = (-10.0, 0.0, 15.0)


@dataclass(frozen=True)
class ShellConfig:
    azimuths_deg: tuple[float, ...] = DEFAULT_AZIMUTHS_DEG
    radius_mults: tuple[float, ...] = DEFAULT_RADIUS_MULTS
    elevations_deg: tuple[float, ...] = DEFAULT_ELEVATIONS_DEG


@dataclass(eq=False)
class CameraCandidate:
    pose: Pose
    intrinsics: Intrinsics
    shell_params: dict
    scores: dict = field(default_factory=dict)


def multi_character_target(positions: list[np.ndarray]) -> np.ndarray:
    """Camera target for multi-character clips: the centroid of all involved."""
    if not positions:
        raise ValueError("no character positions")
    return np.mean(np.stack([np.asarray(p, dtype=np.float64) for p in positions]), axis=0)


def sample_candidates(
    target_point: np.ndarray,
    prev_camera_pos: np.ndarray,
    intrinsics: Intrinsics,
    config: ShellConfig | None = None,
) -> list[CameraCandidate]:
    """Full azimuth x radius x elevation grid, deterministic order.

    Azimuth 0 with radius multiplier 1 and elevation 0 reproduces the
    previous horizontal bearing at the previous distance.  Every candidate
    looks at the target with world-up framing.
    """
    cfg = config or ShellConfig()
    target = np.asarray(target_point, dtype=np.float64)
    if not np.all(np.isfinite(target)):
        raise ValueError("target point must be finite")
    offset = np.asarray(prev_camera_pos, dtype=np.float64) - target
    dist = float(np.linalg.norm(offset))
    if dist < 1e-9:
        raise ValueError("previous camera coincides with target")
    bearing = np.arctan2(offset[0], offset[2])  # horizontal bearing of prev camera

    out = []
    for az_deg in cfg.azimuths_deg:
        for rm in cfg.radius_mults:
            for el_deg in cfg.elevations_deg:
                az = bearing + np.deg2rad(az_deg)
                el = np.deg2rad(el_deg)
                radius = rm * dist
                pos = target + radius * np.array(
                    [np.cos(el) * np.sin(az), np.sin(el), np.cos(el) * np.cos(az)]
                )
                pose = look_at(pos, target)
                out.append(
                    CameraCandidate(
                        pose=pose,
                        intrinsics=intrinsics,
                        shell_params={
                            "azimuth": float(np.deg2rad(az_deg)),
                            "elevation": el,
                            "radius_mult": float(rm),
                        },
                    )
                )
    return out


@dataclass(frozen=True)
class FilterConfig:
    min_clearance: float = 0.3  # scene units
    min_face_vis: float = 0.3
    min_bg_fraction: float = 0.6
    top_k: int = 8
    clearance_cap: float = 1.0  # clearance saturates here in the ranking score


def face_visibility(
    camera_pos: np.ndarray, body: EllipsoidBody, intrinsics: Intrinsics, pose: Pose,
    occluders: list[EllipsoidBody] = (),
) -> float:
    """Fraction of face-patch samples that face the camera, project inside the
    image, and are not blocked by another body."""
    samples = body.face_samples()
    normals = body.surface_normal(samples)
    to_cam = camera_pos[None, :] - samples
    dist = np.linalg.norm(to_cam, axis=1, keepdims=True)
    to_cam_n = to_cam / dist
    facing = np.sum(normals * to_cam_n, axis=1) > 0.0

    cam = pose.inverse()
    pts_cam = samples @ cam.rotation.T + cam.translation
    in_front = pts_cam[:, 2] > 1e-6
    proj = np.zeros((len(samples), 2))
    proj[in_front] = intrinsics.project(pts_cam[in_front])
    inside = (
        in_front
        & (proj[:, 0] >= 0)
        & (proj[:, 0] <= intrinsics.width - 1)
        & (proj[:, 1] >= 0)
        & (proj[:, 1] <= intrinsics.height - 1)
    )

    unoccluded = np.ones(len(samples), dtype=bool)
    for other in occluders:
        if other is body:
            continue
        t = other.ray_hits(camera_pos, -to_cam_n)
        blocked = np.isfinite(t) & (t < dist[:, 0] - 1e-9)
        unoccluded &= ~blocked
    visible = facing & inside & unoccluded
    return float(visible.mean())


def geometric_filter(
    candidates: list[CameraCandidate],
    world,
    placements: list[EllipsoidBody],
    config: FilterConfig | None = None,
) -> list[CameraCandidate]:
    """Score and threshold every candidate; return the ranked top-K survivors.

    clearance = min rendered (euclidean) depth; face visibility = worst
    per-body face fraction; bg_valid_fraction = rendered-depth hit ratio.
    """
    cfg = config or FilterConfig()
    survivors = []
    for idx, cand in enumerate(candidates):
        _, depth = world.render(cand.pose, cand.intrinsics)
        bg_fraction = depth.valid_fraction
        clearance = float(depth.values[depth.valid].min()) if depth.valid.any() else 0.0
        if placements:
            face_vis = min(
                face_visibility(cand.pose.translation, body, cand.intrinsics, cand.pose, placements)
                for body in placements
            )
        else:
            face_vis = 1.0
        cand.scores = {
            "clearance": clearance,
            "face_visibility": face_vis,
            "bg_valid_fraction": bg_fraction,
        }
        if clearance < cfg.min_clearance:
            continue
        if face_vis < cfg.min_face_vis:
            continue
        if bg_fraction < cfg.min_bg_fraction:
            continue
        rank_score = min(clearance / cfg.clearance_cap, 1.0) + face_vis + bg_fraction
        survivors.append((rank_score, idx, cand))
    if not survivors:
        raise NoCandidateError("geometric filter rejected every camera candidate")
    survivors.sort(key=lambda t: (-t[0], t[1]))
    return [cand for _, _, cand in survivors[: cfg.top_k]]
