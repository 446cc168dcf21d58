"""Shared test vectors for the perception-role wire protocol.

Both the in-process mocks and any out-of-process stub service must produce
field-identical responses for these requests; the parity suite diffs them.
Bodies are plain JSON with rasters in the documented base64 container.
"""

from __future__ import annotations

import numpy as np

from ..canonical import raster_to_wire
from ..geometry.pose import Intrinsics, Pose, look_at
from .mocks import WorldState

# endpoint name -> (provider role, task)
ENDPOINT_ROLES = {
    "pose_estimate": ("geometry_model", "relative_pose"),
    "trajectory": ("trajectory_model", "trajectory"),
    "human_mesh": ("human_model", "human_mesh"),
    "segment": ("segmentation_model", "segment"),
}


def _camera_context(state: WorldState, scene_key: str, char_id: str, eye, target, size=24) -> dict:
    world = state.world_for(scene_key)
    pose = look_at(np.asarray(eye, dtype=float), np.asarray(target, dtype=float))
    fx = size / (2.0 * np.tan(np.deg2rad(70.0) / 2.0))
    intr = Intrinsics(fx=fx, fy=fx, cx=(size - 1) / 2, cy=(size - 1) / 2, width=size, height=size)
    return {
        "scene_key": scene_key,
        "character_id": char_id,
        "index": 0,
        "count": 1,
        "camera_pose": pose.to_dict(),
        "camera_intrinsics": intr.to_dict(),
        "_world_center": [float(x) for x in world.center],
    }


def build_test_vectors(seed: int = 0) -> list[dict]:
    """Deterministic request bodies covering all four perception endpoints."""
    state = WorldState(seed=seed)
    rng = np.random.Generator(np.random.PCG64(seed + 1))
    img = rng.integers(0, 255, size=(24, 24, 3)).astype(np.uint8)
    mask = np.zeros((24, 24), dtype=np.uint8)
    mask[8:16, 10:14] = 1

    vectors: list[dict] = []
    for scene_key in ("scene-1-office", "scene-2-courtroom"):
        world = state.world_for(scene_key)
        pose = Pose(np.eye(3), world.center)
        fx = 24 / (2.0 * np.tan(np.deg2rad(70.0) / 2.0))
        intr = Intrinsics(fx=fx, fy=fx, cx=11.5, cy=11.5, width=24, height=24)
        vectors.append(
            {
                "endpoint": "pose_estimate",
                "body": {
                    "first_frame": raster_to_wire(img),
                    "reference": raster_to_wire(img),
                    "mask": raster_to_wire(mask),
                    "context": {
                        "world": world.to_dict(),
                        "reference_pose": pose.to_dict(),
                        "reference_intrinsics": intr.to_dict(),
                    },
                },
            }
        )
    for n_frames in (1, 5, 8):
        vectors.append(
            {"endpoint": "trajectory", "body": {"n_frames": n_frames, "clip_key": f"vec-traj-{n_frames}"}}
        )
    for scene_key, char in (("scene-1-office", "lead"), ("scene-1-office", "rival"), ("scene-2-courtroom", "lead")):
        ctx = _camera_context(state, scene_key, char, eye=[0.0, 1.2, -2.0], target=[0.3, 0.9, 1.0])
        ctx.pop("_world_center")
        vectors.append({"endpoint": "human_mesh", "body": {"context": dict(ctx)}})
        vectors.append({"endpoint": "segment", "body": {"context": dict(ctx)}})
    return vectors
