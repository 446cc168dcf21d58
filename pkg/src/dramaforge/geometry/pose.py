"""SE(3) poses and pinhole intrinsics.

Conventions (documented once, used everywhere):

* World frame is right-handed with +Y up.
* Poses are camera-to-world: ``x_world = R @ x_cam + t``.
* Camera frame follows the usual imaging convention: +X right, +Y down,
  +Z forward, so a pixel ray is ``((u-cx)/fx, (v-cy)/fy, 1)``.
* Rotations serialize row-major.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ORTHONORMAL_TOL = 1e-9


def rot_x(a: float) -> np.ndarray:
    c, s = np.cos(a), np.sin(a)
    return np.array([[1, 0, 0], [0, c, -s], [0, s, c]], dtype=np.float64)


def rot_y(a: float) -> np.ndarray:
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, 0, s], [0, 1, 0], [-s, 0, c]], dtype=np.float64)


def rot_z(a: float) -> np.ndarray:
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]], dtype=np.float64)


@dataclass(frozen=True)
class Pose:
    rotation: np.ndarray  # 3x3 orthonormal, det +1
    translation: np.ndarray  # 3-vector, scene units

    def __post_init__(self):
        object.__setattr__(self, "rotation", np.asarray(self.rotation, dtype=np.float64).reshape(3, 3))
        object.__setattr__(self, "translation", np.asarray(self.translation, dtype=np.float64).reshape(3))

    @staticmethod
    def identity() -> "Pose":
        return Pose(np.eye(3), np.zeros(3))

    def is_valid(self, tol: float = 1e-9) -> bool:
        r = self.rotation
        return (
            np.allclose(r.T @ r, np.eye(3), atol=tol)
            and abs(float(np.linalg.det(r)) - 1.0) <= tol
        )

    def compose(self, other: "Pose") -> "Pose":
        """self · other (apply ``other`` in self's frame)."""
        return Pose(
            self.rotation @ other.rotation,
            self.rotation @ other.translation + self.translation,
        )

    def __matmul__(self, other: "Pose") -> "Pose":
        return self.compose(other)

    def inverse(self) -> "Pose":
        rt = self.rotation.T
        return Pose(rt, -rt @ self.translation)

    def transform_points(self, pts: np.ndarray) -> np.ndarray:
        """Camera-frame points (N,3) into world frame."""
        return pts @ self.rotation.T + self.translation

    def scaled_translation(self, s: float) -> "Pose":
        """Same rotation with the translation scaled by ``s`` (metric fix-up
        for scale-ambiguous relative poses, applied before composition)."""
        return Pose(self.rotation, self.translation * s)

    def rotation_angle_to(self, other: "Pose") -> float:
        """Geodesic angle between the two rotations, radians."""
        rel = self.rotation.T @ other.rotation
        c = (np.trace(rel) - 1.0) / 2.0
        return float(np.arccos(np.clip(c, -1.0, 1.0)))

    def to_dict(self) -> dict:
        return {
            "rotation": [float(x) for x in self.rotation.reshape(-1)],
            "translation": [float(x) for x in self.translation],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Pose":
        return cls(np.array(d["rotation"]).reshape(3, 3), np.array(d["translation"]))


@dataclass(frozen=True)
class Intrinsics:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValueError("principal point outside image")

    def pixel_rays(self) -> np.ndarray:
        """Unit ray directions in the camera frame, shape (H, W, 3)."""
        u = np.arange(self.width, dtype=np.float64)
        v = np.arange(self.height, dtype=np.float64)
        uu, vv = np.meshgrid(u, v)
        d = np.stack([(uu - self.cx) / self.fx, (vv - self.cy) / self.fy, np.ones_like(uu)], axis=-1)
        return d / np.linalg.norm(d, axis=-1, keepdims=True)

    def project(self, pts_cam: np.ndarray) -> np.ndarray:
        """Camera-frame points (N,3) to pixel coordinates (N,2); z must be > 0."""
        z = pts_cam[:, 2]
        return np.stack([pts_cam[:, 0] / z * self.fx + self.cx, pts_cam[:, 1] / z * self.fy + self.cy], axis=1)

    def with_focal_scale(self, scale: float) -> "Intrinsics":
        return Intrinsics(self.fx * scale, self.fy * scale, self.cx, self.cy, self.width, self.height)

    def to_dict(self) -> dict:
        return {
            "fx": self.fx,
            "fy": self.fy,
            "cx": self.cx,
            "cy": self.cy,
            "width": self.width,
            "height": self.height,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Intrinsics":
        return cls(d["fx"], d["fy"], d["cx"], d["cy"], d["width"], d["height"])


def look_at(eye: np.ndarray, target: np.ndarray, up=(0.0, 1.0, 0.0)) -> Pose:
    """Camera-to-world pose looking from ``eye`` at ``target``, image upright.

    Degenerates (forward parallel to up) fall back to the world z axis as the
    reference so the result is always a proper rotation.
    """
    eye = np.asarray(eye, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    up = np.asarray(up, dtype=np.float64)
    forward = target - eye
    n = np.linalg.norm(forward)
    if n == 0:
        raise ValueError("eye and target coincide")
    forward = forward / n
    right = np.cross(forward, up)
    rn = np.linalg.norm(right)
    if rn < 1e-12:
        right = np.cross(forward, np.array([0.0, 0.0, 1.0]))
        rn = np.linalg.norm(right)
    right = right / rn
    down = np.cross(forward, right)
    r = np.stack([right, down, forward], axis=1)
    return Pose(r, eye)


def yaw_pitch_pose(yaw: float, pitch: float, position=(0.0, 0.0, 0.0)) -> Pose:
    """Pure-rotation pose whose forward axis points along (yaw, pitch).

    yaw is the angle about world up (0 = +Z), pitch positive above the
    horizon; the image stays upright.
    """
    cp = np.cos(pitch)
    forward = np.array([cp * np.sin(yaw), np.sin(pitch), cp * np.cos(yaw)])
    pos = np.asarray(position, dtype=np.float64)
    return look_at(pos, pos + forward)


def random_pose(rng: np.random.Generator, translation_scale: float = 5.0) -> Pose:
    """Uniform random rotation (quaternion method) + gaussian translation."""
    q = rng.standard_normal(4)
    q /= np.linalg.norm(q)
    w, x, y, z = q
    r = np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )
    return Pose(r, rng.standard_normal(3) * translation_scale)
