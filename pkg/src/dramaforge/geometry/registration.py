"""Registration of generated frames into the shared 3D world.

First-frame registration composes a provider-estimated relative transform
onto the known background pose, resolves the monocular scale ambiguity with a
median depth ratio, and refines pose plus focal length against the world
render on the background region only.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from ..errors import DegenerateDepthError, NoImprovementWarning
from .depth import DepthMap
from .pose import Intrinsics, Pose, rot_x, rot_y, rot_z


def align_scale(
    d_est: DepthMap, d_world: DepthMap, mask: np.ndarray | None = None, min_valid: int = 20
) -> float:
    """Scale s such that s * d_est best matches d_world: median of ratios.

    The median makes the estimate exact whenever more than half of the valid
    pixels share the true ratio, which is what the planted-scale tests rely
    on.
    """
    joint = d_est.valid & d_world.valid
    if mask is not None:
        joint &= mask.astype(bool)
    joint &= d_est.values > 0
    if int(joint.sum()) < min_valid:
        raise DegenerateDepthError(
            f"only {int(joint.sum())} jointly valid depth pixels (need {min_valid})"
        )
    ratios = d_world.values[joint] / d_est.values[joint]
    s = float(np.median(ratios))
    if not np.isfinite(s) or s <= 0:
        raise DegenerateDepthError(f"degenerate scale estimate {s}")
    return s


def register_first_frame(
    first_frame: np.ndarray,
    background_pose: Pose,
    background_intrinsics: Intrinsics,
    char_mask: np.ndarray,
    relative_pose: Pose,
    est_background_depth: DepthMap,
    world,
    refine: bool = True,
    refine_config: "RefineConfig | None" = None,
) -> tuple[Pose, Intrinsics, float]:
    """Anchor a generated first frame to the world.

    ``relative_pose`` and ``est_background_depth`` come from the geometry
    provider evaluated on character-masked inputs.  The relative translation
    is scale-ambiguous; it is calibrated against the world-rendered depth of
    the background view before composition.  Returns the refined camera and
    the metric scale, which downstream trajectory anchoring reuses.
    """
    bg_mask = ~char_mask.astype(bool)
    _, world_depth = world.render(background_pose, background_intrinsics)
    overlap = est_background_depth.valid & world_depth.valid & bg_mask
    if overlap.mean() < 0.05:
        raise DegenerateDepthError("less than 5% valid overlapping depth after masking")
    s = align_scale(est_background_depth, world_depth, mask=bg_mask)
    pose = background_pose.compose(relative_pose.scaled_translation(s))
    intr = background_intrinsics
    if refine:
        pose, intr = refine_pose(
            pose,
            intr,
            target_image=first_frame,
            world=world,
            bg_mask=bg_mask,
            config=refine_config,
        )
    return pose, intr, s


def anchor_trajectory(relative_poses: list[Pose], first_frame_pose: Pose, scale: float) -> list[Pose]:
    """World poses for each video frame from frame-0-relative deltas.

    Delta translations are scale-calibrated before composition, so the first
    delta (identity) maps frame 0 exactly onto the registered first frame.
    """
    return [first_frame_pose.compose(d.scaled_translation(scale)) for d in relative_poses]


# --- photometric/geometric pose refinement -----------------------------------

@dataclass(frozen=True)
class RefineConfig:
    rot_radius: float = np.deg2rad(2.0)
    trans_radius: float = 0.1
    focal_radius: float = 0.05  # fraction of focal length
    levels: int = 3
    sweeps_per_level: int = 2
    w_color: float = 1.0
    w_edge: float = 0.5
    w_depth: float = 1.0
    edge_threshold: float = 0.1
    min_gain: float = 1e-9


def _to_gray(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img, dtype=np.float64)
    if img.ndim == 3:
        img = img.mean(axis=2)
    if img.max() > 1.5:  # 8-bit input
        img = img / 255.0
    return img


def _edge_map(gray: np.ndarray, threshold: float) -> np.ndarray:
    gx = ndimage.sobel(gray, axis=1, mode="nearest")
    gy = ndimage.sobel(gray, axis=0, mode="nearest")
    mag = np.hypot(gx, gy)
    return mag > threshold


def _chamfer(edges_a: np.ndarray, edges_b: np.ndarray) -> float:
    """Symmetric mean chamfer distance between edge maps, in pixels."""
    if not edges_a.any() or not edges_b.any():
        # one side featureless: zero when both are, else a fixed penalty
        return 0.0 if edges_a.any() == edges_b.any() else float(max(edges_a.shape))
    dt_b = ndimage.distance_transform_edt(~edges_b)
    dt_a = ndimage.distance_transform_edt(~edges_a)
    return float((dt_b[edges_a].mean() + dt_a[edges_b].mean()) / 2.0)


def _objective(
    pose: Pose,
    intr: Intrinsics,
    target_gray: np.ndarray,
    target_edges: np.ndarray,
    target_depth: DepthMap | None,
    world,
    bg_mask: np.ndarray,
    cfg: RefineConfig,
) -> float:
    color, depth = world.render(pose, intr)
    gray = color.mean(axis=2)
    mask = bg_mask & depth.valid
    if not mask.any():
        return float("inf")
    e = cfg.w_color * float(np.abs(gray[mask] - target_gray[mask]).mean())
    render_edges = _edge_map(gray, cfg.edge_threshold) & bg_mask
    diag = float(np.hypot(*target_gray.shape))
    e += cfg.w_edge * _chamfer(render_edges, target_edges) / diag
    if target_depth is not None:
        dmask = mask & target_depth.valid
        if dmask.any():
            scale = max(float(target_depth.values[dmask].mean()), 1e-9)
            e += cfg.w_depth * float(
                np.abs(depth.values[dmask] - target_depth.values[dmask]).mean() / scale
            )
    return e


def refine_pose(
    initial_pose: Pose,
    initial_intrinsics: Intrinsics,
    target_image: np.ndarray,
    world,
    bg_mask: np.ndarray,
    target_depth: DepthMap | None = None,
    config: RefineConfig | None = None,
) -> tuple[Pose, Intrinsics]:
    """Derivative-free local refinement of a 7-DoF camera (pose + focal).

    Coordinate descent over camera-local rotation increments, translation,
    and focal scale; three coarse-to-fine levels with halving radii.  The
    returned objective never exceeds the initial one; if nothing improves,
    a ``NoImprovementWarning`` is emitted and the initial camera returned.
    """
    cfg = config or RefineConfig()
    bg_mask = bg_mask.astype(bool)
    target_gray = _to_gray(target_image)
    target_edges = _edge_map(target_gray, cfg.edge_threshold) & bg_mask
    if not bg_mask.any() or (float(target_gray[bg_mask].std()) < 1e-6 and not target_edges.any()):
        # featureless target cannot constrain the camera
        warnings.warn("pose refinement found no improvement", NoImprovementWarning)
        return initial_pose, initial_intrinsics

    def camera_for(p: np.ndarray) -> tuple[Pose, Intrinsics]:
        rx, ry, rz, tx, ty, tz, fs = p
        rot = initial_pose.rotation @ rot_y(ry) @ rot_x(rx) @ rot_z(rz)
        trans = initial_pose.translation + np.array([tx, ty, tz])
        return Pose(rot, trans), initial_intrinsics.with_focal_scale(1.0 + fs)

    def evaluate(p: np.ndarray) -> float:
        pose, intr = camera_for(p)
        return _objective(pose, intr, target_gray, target_edges, target_depth, world, bg_mask, cfg)

    params = np.zeros(7)
    e_init = evaluate(params)
    best = e_init
    radii = np.array(
        [cfg.rot_radius] * 3 + [cfg.trans_radius] * 3 + [cfg.focal_radius], dtype=np.float64
    )
    limits = radii.copy()
    for level in range(cfg.levels):
        r = radii / (2.0**level)
        for _ in range(cfg.sweeps_per_level):
            for axis in range(7):
                center = params[axis]
                candidates = np.unique(
                    np.clip(
                        np.array([center - r[axis], center - r[axis] / 2, center,
                                  center + r[axis] / 2, center + r[axis]]),
                        -limits[axis],
                        limits[axis],
                    )
                )
                for value in candidates:
                    if value == center:
                        continue
                    trial = params.copy()
                    trial[axis] = value
                    e = evaluate(trial)
                    if e < best:
                        best = e
                        params = trial
    if best >= e_init - cfg.min_gain and np.allclose(params, 0.0):
        if e_init > cfg.min_gain:
            warnings.warn("pose refinement found no improvement", NoImprovementWarning)
        return initial_pose, initial_intrinsics
    return camera_for(params)
