"""Equirectangular panorama to perspective projection.

Mapping conventions: a panorama is width = 2 * height; pixel (i, j) has its
center at longitude ``(j + 0.5) / W * 2pi - pi`` and latitude
``pi/2 - (i + 0.5) / H * pi``.  Longitude is measured about world up with 0 at
+Z (``lon = atan2(x, z)``); latitude is positive above the horizon.  Sampling
is bilinear with horizontal wrap and vertical clamp.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .pose import Intrinsics, Pose, yaw_pitch_pose


@dataclass(frozen=True)
class ViewParams:
    yaw: float  # radians about world up, 0 = +Z
    pitch: float  # radians, positive above horizon
    hfov: float  # radians in (0, pi)
    out_width: int
    out_height: int

    def __post_init__(self):
        if not 0 < self.hfov < np.pi:
            raise ValueError("hfov must lie in (0, pi)")


def dirs_to_lonlat(dirs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    lon = np.arctan2(dirs[..., 0], dirs[..., 2])
    lat = np.arcsin(np.clip(dirs[..., 1], -1.0, 1.0))
    return lon, lat


def lonlat_to_dirs(lon: np.ndarray, lat: np.ndarray) -> np.ndarray:
    cl = np.cos(lat)
    return np.stack([cl * np.sin(lon), np.sin(lat), cl * np.cos(lon)], axis=-1)


def sample_equirect(pano: np.ndarray, dirs: np.ndarray) -> np.ndarray:
    """Bilinear lookup of unit directions in an equirectangular image."""
    h, w = pano.shape[:2]
    lon, lat = dirs_to_lonlat(dirs)
    x = (lon + np.pi) / (2 * np.pi) * w - 0.5
    y = (np.pi / 2 - lat) / np.pi * h - 0.5
    x0 = np.floor(x).astype(np.int64)
    y0 = np.floor(y).astype(np.int64)
    fx = x - x0
    fy = y - y0
    x0w = np.mod(x0, w)
    x1w = np.mod(x0 + 1, w)
    y0c = np.clip(y0, 0, h - 1)
    y1c = np.clip(y0 + 1, 0, h - 1)
    p = pano.astype(np.float64)
    if p.ndim == 2:
        p = p[..., None]
    fx = fx[..., None]
    fy = fy[..., None]
    out = (
        p[y0c, x0w] * (1 - fx) * (1 - fy)
        + p[y0c, x1w] * fx * (1 - fy)
        + p[y1c, x0w] * (1 - fx) * fy
        + p[y1c, x1w] * fx * fy
    )
    return out[..., 0] if pano.ndim == 2 else out


def view_intrinsics(v: ViewParams) -> Intrinsics:
    fx = v.out_width / (2.0 * np.tan(v.hfov / 2.0))
    return Intrinsics(
        fx=fx,
        fy=fx,
        cx=(v.out_width - 1) / 2.0,
        cy=(v.out_height - 1) / 2.0,
        width=v.out_width,
        height=v.out_height,
    )


def project_panorama(pano: np.ndarray, v: ViewParams) -> tuple[np.ndarray, Pose, Intrinsics]:
    """Cut a pinhole view out of a panorama.

    Returns the sampled image, the pure-rotation camera pose at the panorama
    center, and the intrinsics implied by the field of view.
    """
    if pano.shape[1] != 2 * pano.shape[0]:
        raise ValueError("equirectangular panorama must have width == 2 * height")
    intr = view_intrinsics(v)
    pose = yaw_pitch_pose(v.yaw, v.pitch)
    dirs_cam = intr.pixel_rays()
    dirs_world = dirs_cam @ pose.rotation.T
    img = sample_equirect(pano, dirs_world)
    if img.ndim == 3:
        img = np.clip(img, 0, 255)
    return img, pose, intr


def render_equirect(color_fn, height: int) -> np.ndarray:
    """Build an equirectangular image by evaluating ``color_fn(dirs)`` on the
    pixel-center direction grid. Used for synthetic panoramas."""
    width = 2 * height
    jj = (np.arange(width) + 0.5) / width * 2 * np.pi - np.pi
    ii = np.pi / 2 - (np.arange(height) + 0.5) / height * np.pi
    lon, lat = np.meshgrid(jj, ii)
    dirs = lonlat_to_dirs(lon, lat)
    return color_fn(dirs)
