"""Character placement: registering a reconstructed body into the world.

The provider hands back a body mesh (here an analytic ellipsoid), its body-
frame keypoints, the matching 2D keypoints, and a person mask.  Placement
initializes a similarity transform from the keypoint correspondence and then
slides the body along the camera ray to the depth whose rendered silhouette
best matches the mask, holding keypoint reprojection within tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import PlacementFailure, PreconditionError
from .pose import Intrinsics, Pose, rot_y


@dataclass(frozen=True)
class EllipsoidBody:
    """Upright ellipsoid body: position, per-axis radii, facing yaw, scale."""

    center: np.ndarray  # world, 3
    radii: np.ndarray  # body-frame semi-axes (rx, ry, rz), rz = facing depth
    yaw: float = 0.0  # facing direction about world up; 0 faces +Z
    scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=np.float64).reshape(3))
        object.__setattr__(self, "radii", np.asarray(self.radii, dtype=np.float64).reshape(3))
        if self.scale <= 0:
            raise ValueError("scale must be positive")

    @property
    def rotation(self) -> np.ndarray:
        return rot_y(self.yaw)

    def world_radii(self) -> np.ndarray:
        return self.radii * self.scale

    def at(self, center: np.ndarray) -> "EllipsoidBody":
        return EllipsoidBody(center, self.radii, self.yaw, self.scale)

    # canonical body-frame keypoints (unit body, scaled by radii)
    _KEYPOINT_OFFSETS = {
        "head_top": (0.0, 1.0, 0.0),
        "chin": (0.0, 0.72, 0.55),
        "left_shoulder": (-0.85, 0.45, 0.0),
        "right_shoulder": (0.85, 0.45, 0.0),
        "left_hip": (-0.6, -0.35, 0.0),
        "right_hip": (0.6, -0.35, 0.0),
        "left_foot": (-0.3, -1.0, 0.0),
        "right_foot": (0.3, -1.0, 0.0),
    }

    def keypoints_body(self) -> np.ndarray:
        off = np.array(list(self._KEYPOINT_OFFSETS.values()))
        return off * self.world_radii()[None, :]

    def keypoints_world(self) -> np.ndarray:
        return self.keypoints_body() @ self.rotation.T + self.center

    def ray_hits(self, origin: np.ndarray, dirs: np.ndarray) -> np.ndarray:
        """First-hit distance per unit ray; NaN where the ray misses."""
        r = self.world_radii()
        rot = self.rotation
        o = (np.asarray(origin) - self.center) @ rot / r
        d = (dirs.reshape(-1, 3) @ rot) / r
        a = np.sum(d * d, axis=1)
        b = 2.0 * d @ o
        c = float(o @ o) - 1.0
        disc = b * b - 4 * a * c
        t = np.full(len(d), np.nan)
        ok = disc >= 0
        if np.any(ok):
            sq = np.sqrt(disc[ok])
            t0 = (-b[ok] - sq) / (2 * a[ok])
            t1 = (-b[ok] + sq) / (2 * a[ok])
            tt = np.where(t0 > 1e-9, t0, t1)
            t[ok] = np.where(tt > 1e-9, tt, np.nan)
        return t.reshape(dirs.shape[:-1])

    def silhouette(self, pose: Pose, intr: Intrinsics) -> tuple[np.ndarray, np.ndarray]:
        """Boolean mask plus hit depth for a camera view of this body."""
        dirs_cam = intr.pixel_rays()
        dirs_world = dirs_cam @ pose.rotation.T
        t = self.ray_hits(pose.translation, dirs_world)
        mask = np.isfinite(t)
        return mask, np.where(mask, t, 0.0)

    def surface_normal(self, pts: np.ndarray) -> np.ndarray:
        """Outward unit normals at world surface points."""
        r = self.world_radii()
        local = (pts.reshape(-1, 3) - self.center) @ self.rotation
        n_local = local / (r * r)
        n_world = n_local @ self.rotation.T
        n_world /= np.linalg.norm(n_world, axis=1, keepdims=True)
        return n_world.reshape(pts.shape)

    def face_samples(self, n_rings: int = 4, per_ring: int = 8) -> np.ndarray:
        """World-space sample points on the face patch (front of the head)."""
        pts = []
        for i in range(n_rings):
            tilt = 0.15 + 0.12 * i
            for j in range(per_ring):
                phi = 2 * np.pi * j / per_ring
                d = np.array(
                    [0.35 * np.cos(phi) * np.sin(tilt), 0.55 + 0.3 * np.sin(phi) * np.sin(tilt), 1.0]
                )
                d /= np.linalg.norm(d)
                # scale direction to the ellipsoid surface
                r = self.world_radii()
                k = 1.0 / np.sqrt(np.sum((d / r) ** 2))
                pts.append(self.rotation @ (d * k) + self.center)
        return np.array(pts)


@dataclass(frozen=True)
class HumanPlacement:
    body: EllipsoidBody
    keypoints_2d: np.ndarray
    keypoints_3d: np.ndarray  # world
    silhouette_iou: float
    reprojection_error: float

    def __post_init__(self):
        if self.body.scale <= 0:
            raise ValueError("placement scale must be positive")


@dataclass(frozen=True)
class PlacementConfig:
    kp_tol: float = 8.0  # pixels, mean reprojection error allowed
    min_iou: float = 0.3
    depth_span: float = 0.5  # +- fraction of the initial depth searched
    coarse_steps: int = 21
    levels: int = 3


def _iou(a: np.ndarray, b: np.ndarray) -> float:
    union = np.logical_or(a, b).sum()
    if union == 0:
        return 0.0
    return float(np.logical_and(a, b).sum() / union)


def _reprojection_error(
    body: EllipsoidBody, pose: Pose, intr: Intrinsics, keypoints_2d: np.ndarray
) -> float:
    cam = pose.inverse()
    pts_cam = body.keypoints_world() @ cam.rotation.T + cam.translation
    if np.any(pts_cam[:, 2] <= 1e-6):
        return float("inf")
    proj = intr.project(pts_cam)
    return float(np.linalg.norm(proj - keypoints_2d, axis=1).mean())


def place_character(
    camera_pose: Pose,
    intrinsics: Intrinsics,
    body: EllipsoidBody,
    keypoints_2d: np.ndarray,
    mask: np.ndarray,
    config: PlacementConfig | None = None,
) -> HumanPlacement:
    """Depth-refined similarity placement of a body along the camera ray.

    Requires at least 6 keypoints and a person mask.  The body slides along
    the ray through the 2D keypoint centroid; the chosen depth maximizes
    silhouette IoU under the keypoint-reprojection tolerance.
    """
    cfg = config or PlacementConfig()
    keypoints_2d = np.asarray(keypoints_2d, dtype=np.float64)
    if len(keypoints_2d) < 6:
        raise PreconditionError("need at least 6 keypoints for placement")
    mask = mask.astype(bool)

    # ray through the keypoint centroid
    centroid = keypoints_2d.mean(axis=0)
    dir_cam = np.array(
        [(centroid[0] - intrinsics.cx) / intrinsics.fx, (centroid[1] - intrinsics.cy) / intrinsics.fy, 1.0]
    )
    dir_cam /= np.linalg.norm(dir_cam)
    ray = camera_pose.rotation @ dir_cam

    # initial depth from the projected body height
    kp_body = body.keypoints_body()
    height_3d = float(kp_body[:, 1].max() - kp_body[:, 1].min())
    height_2d = float(keypoints_2d[:, 1].max() - keypoints_2d[:, 1].min())
    if height_2d <= 0:
        raise PreconditionError("degenerate 2D keypoints")
    depth0 = intrinsics.fy * height_3d / height_2d

    def body_at(depth: float) -> EllipsoidBody:
        return body.at(camera_pose.translation + ray * depth)

    def score(depth: float) -> tuple[float, float]:
        b = body_at(depth)
        sil, _ = b.silhouette(camera_pose, intrinsics)
        return _iou(sil, mask), _reprojection_error(b, camera_pose, intrinsics, keypoints_2d)

    lo, hi = depth0 * (1 - cfg.depth_span), depth0 * (1 + cfg.depth_span)
    best_depth, best_iou, best_err = None, -1.0, float("inf")
    for level in range(cfg.levels):
        depths = np.linspace(lo, hi, cfg.coarse_steps)
        for depth in depths:
            if depth <= 0:
                continue
            iou, err = score(float(depth))
            if err <= cfg.kp_tol and iou > best_iou:
                best_depth, best_iou, best_err = float(depth), iou, err
        if best_depth is None:
            break
        span = (hi - lo) / cfg.coarse_steps
        lo, hi = best_depth - span, best_depth + span
    if best_depth is None or best_iou < cfg.min_iou:
        raise PlacementFailure(
            f"best silhouette IoU {max(best_iou, 0.0):.3f} below minimum {cfg.min_iou}"
        )
    placed = body_at(best_depth)
    return HumanPlacement(
        body=placed,
        keypoints_2d=keypoints_2d,
        keypoints_3d=placed.keypoints_world(),
        silhouette_iou=best_iou,
        reprojection_error=best_err,
    )
