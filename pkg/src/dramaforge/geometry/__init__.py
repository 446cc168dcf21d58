from .pose import Intrinsics, Pose, look_at, rot_x, rot_y, rot_z, random_pose
from .panorama import ViewParams, project_panorama, sample_equirect
from .boxroom import BoxRoomWorld
from .depth import DepthMap
from .registration import align_scale, anchor_trajectory, refine_pose, register_first_frame, RefineConfig
from .placement import EllipsoidBody, HumanPlacement, place_character, PlacementConfig
from .sampling import CameraCandidate, ShellConfig, FilterConfig, sample_candidates, geometric_filter

__all__ = [
    "Intrinsics",
    "Pose",
    "look_at",
    "rot_x",
    "rot_y",
    "rot_z",
    "random_pose",
    "ViewParams",
    "project_panorama",
    "sample_equirect",
    "BoxRoomWorld",
    "DepthMap",
    "align_scale",
    "anchor_trajectory",
    "refine_pose",
    "register_first_frame",
    "RefineConfig",
    "EllipsoidBody",
    "HumanPlacement",
    "place_character",
    "PlacementConfig",
    "CameraCandidate",
    "ShellConfig",
    "FilterConfig",
    "sample_candidates",
    "geometric_filter",
]
