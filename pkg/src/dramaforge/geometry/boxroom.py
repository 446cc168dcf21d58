"""Analytic textured box room: the mock world model.

The room interior is ``[-sx/2, sx/2] x [0, sy] x [-sz/2, sz/2]``.  The top is
open: rays leaving through the ceiling plane miss the scene, which gives the
background-validity checks something real to measure.  Rendering is exact ray
casting, so every geometric claim in the pipeline can be verified against
closed-form expectations.

Depth is Euclidean ray length, not z-depth; clearance checks want the
physical distance to the surface that fills a pixel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .depth import DepthMap
from .pose import Intrinsics, Pose
from .panorama import lonlat_to_dirs

_FACE_AXIS = {"x-": 0, "x+": 0, "y-": 1, "y+": 1, "z-": 2, "z+": 2}

# per-face base colors, chosen distinct so edge/color residuals carry signal
_FACE_COLOR = {
    "x-": (0.85, 0.35, 0.30),
    "x+": (0.30, 0.60, 0.85),
    "y-": (0.55, 0.50, 0.45),
    "y+": (0.95, 0.95, 0.98),
    "z-": (0.40, 0.75, 0.45),
    "z+": (0.80, 0.70, 0.35),
}


@dataclass(frozen=True)
class BoxRoomWorld:
    size: tuple[float, float, float] = (8.0, 3.0, 10.0)
    open_top: bool = True
    checker_period: float = 0.5
    seed: int = 0

    @property
    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        sx, sy, sz = self.size
        lo = np.array([-sx / 2, 0.0, -sz / 2])
        hi = np.array([sx / 2, sy, sz / 2])
        return lo, hi

    @property
    def center(self) -> np.ndarray:
        return np.array([0.0, self.size[1] / 2.0, 0.0])

    def contains(self, p: np.ndarray) -> bool:
        lo, hi = self.bounds
        return bool(np.all(p >= lo - 1e-12) and np.all(p <= hi + 1e-12))

    def cast(self, origin: np.ndarray, dirs: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Cast unit rays from an interior origin.

        Returns (t, hit_points, valid). t is the exit distance along each ray;
        rays leaving through an open top are invalid.
        """
        lo, hi = self.bounds
        d = dirs.reshape(-1, 3)
        o = np.asarray(origin, dtype=np.float64)
        with np.errstate(divide="ignore", invalid="ignore"):
            t_lo = (lo - o) / d
            t_hi = (hi - o) / d
        t_exit_axis = np.where(d > 0, t_hi, np.where(d < 0, t_lo, np.inf))
        t_exit_axis = np.where(np.isnan(t_exit_axis), np.inf, t_exit_axis)
        axis = np.argmin(t_exit_axis, axis=1)
        t = t_exit_axis[np.arange(len(d)), axis]
        pts = o + d * t[:, None]
        hit_top = (axis == 1) & (d[:, 1] > 0)
        valid = np.isfinite(t)
        if self.open_top:
            valid &= ~hit_top
        shape = dirs.shape[:-1]
        return t.reshape(shape), pts.reshape(*shape, 3), valid.reshape(shape)

    def _face_of(self, pts: np.ndarray) -> np.ndarray:
        """Face id (index into sorted face names) for surface points."""
        lo, hi = self.bounds
        p = pts.reshape(-1, 3)
        dist = np.stack(
            [
                np.abs(p[:, 0] - lo[0]),
                np.abs(p[:, 0] - hi[0]),
                np.abs(p[:, 1] - lo[1]),
                np.abs(p[:, 1] - hi[1]),
                np.abs(p[:, 2] - lo[2]),
                np.abs(p[:, 2] - hi[2]),
            ],
            axis=1,
        )
        return np.argmin(dist, axis=1)  # order: x-, x+, y-, y+, z-, z+

    def surface_color(self, pts: np.ndarray) -> np.ndarray:
        """Procedural checker texture in [0, 1]^3 at surface points."""
        names = ("x-", "x+", "y-", "y+", "z-", "z+")
        p = pts.reshape(-1, 3)
        face = self._face_of(p)
        colors = np.empty((len(p), 3))
        for fi, name in enumerate(names):
            sel = face == fi
            if not np.any(sel):
                continue
            axis = _FACE_AXIS[name]
            uv_axes = [a for a in range(3) if a != axis]
            u = p[sel][:, uv_axes[0]]
            v = p[sel][:, uv_axes[1]]
            checker = (np.floor(u / self.checker_period) + np.floor(v / self.checker_period)) % 2
            shade = 0.55 + 0.45 * checker
            # low-frequency gradient so flat regions still carry a color cue
            grad = 0.85 + 0.15 * np.sin(u * 0.7 + v * 0.4 + self.seed)
            base = np.array(_FACE_COLOR[name])
            colors[sel] = base[None, :] * (shade * grad)[:, None]
        return np.clip(colors, 0.0, 1.0).reshape(*pts.shape[:-1], 3)

    def render(self, pose: Pose, intr: Intrinsics) -> tuple[np.ndarray, DepthMap]:
        """Color (float in [0,1], HxWx3) and depth for a camera inside the room."""
        dirs_cam = intr.pixel_rays()
        dirs_world = dirs_cam @ pose.rotation.T
        t, pts, valid = self.cast(pose.translation, dirs_world)
        color = np.zeros((intr.height, intr.width, 3))
        if np.any(valid):
            color[valid] = self.surface_color(pts[valid])
        depth = np.where(valid, t, 0.0)
        return color, DepthMap(values=depth, valid=valid)

    def render_panorama(self, height: int, origin: np.ndarray | None = None) -> np.ndarray:
        """Equirectangular 8-bit render from an interior point (default center)."""
        origin = self.center if origin is None else origin
        width = 2 * height
        jj = (np.arange(width) + 0.5) / width * 2 * np.pi - np.pi
        ii = np.pi / 2 - (np.arange(height) + 0.5) / height * np.pi
        lon, lat = np.meshgrid(jj, ii)
        dirs = lonlat_to_dirs(lon, lat)
        _, pts, valid = self.cast(origin, dirs)
        img = np.zeros((height, width, 3))
        if np.any(valid):
            img[valid] = self.surface_color(pts[valid])
        return (img * 255.0).astype(np.uint8)

    def to_dict(self) -> dict:
        return {
            "kind": "box_room",
            "size": [float(s) for s in self.size],
            "open_top": self.open_top,
            "checker_period": self.checker_period,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BoxRoomWorld":
        return cls(
            size=tuple(d["size"]),
            open_top=bool(d["open_top"]),
            checker_period=float(d["checker_period"]),
            seed=int(d["seed"]),
        )
