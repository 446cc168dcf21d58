import numpy as np
import pytest

from dramaforge.errors import DegenerateDepthError, NoImprovementWarning
from dramaforge.geometry import (
    BoxRoomWorld,
    DepthMap,
    Intrinsics,
    Pose,
    RefineConfig,
    align_scale,
    anchor_trajectory,
    refine_pose,
    register_first_frame,
)
from dramaforge.geometry.pose import rot_y
from dramaforge.geometry.registration import _objective, _edge_map, _to_gray


def const_depth(value, shape=(16, 16), valid=None):
    vals = np.full(shape, value, dtype=np.float64)
    valid = np.ones(shape, dtype=bool) if valid is None else valid
    return DepthMap(vals, valid)


def test_align_scale_constant_ratio():
    d_world = const_depth(4.0)
    assert align_scale(const_depth(8.0), d_world) == 0.5
    assert align_scale(const_depth(4.0), d_world) == 1.0


def test_align_scale_median_robust(rng):
    # plant exact ratios on power-of-two estimates; corrupt 10% with outliers
    for s in (0.5, 1.0, 3.0):
        est = rng.choice([0.5, 1.0, 2.0, 4.0], size=(20, 20))
        world = est * s
        n = est.size
        idx = rng.choice(n, size=n // 10, replace=False)
        flat = world.reshape(-1)
        flat[idx] = rng.uniform(50, 100, size=len(idx))
        got = align_scale(DepthMap(est, np.ones_like(est, bool)), DepthMap(flat.reshape(est.shape), np.ones_like(est, bool)))
        assert got == s


def test_align_scale_equivariance(rng):
    est = DepthMap(rng.uniform(1, 5, (12, 12)), np.ones((12, 12), bool))
    world_vals = rng.uniform(1, 5, (12, 12))
    base = align_scale(est, DepthMap(world_vals, np.ones((12, 12), bool)))
    for lam in (0.25, 2.0, 10.0):
        scaled = align_scale(est, DepthMap(world_vals * lam, np.ones((12, 12), bool)))
        assert scaled == pytest.approx(lam * base, rel=1e-12)


def test_align_scale_degenerate():
    tiny = np.zeros((16, 16), dtype=bool)
    tiny[0, :3] = True
    with pytest.raises(DegenerateDepthError):
        align_scale(const_depth(1.0, valid=tiny), const_depth(1.0))


def room_camera(size=(8.0, 3.0, 6.0)):
    world = BoxRoomWorld(size=size, open_top=True)
    pose = Pose(np.eye(3), world.center)  # looking +z at the far wall
    intr = Intrinsics(fx=40.0, fy=40.0, cx=15.5, cy=15.5, width=32, height=32)
    return world, pose, intr


def test_register_identity_delta_reproduces_background_pose():
    world, bg_pose, intr = room_camera()
    color, depth = world.render(bg_pose, intr)
    est = DepthMap(depth.values / 2.0, depth.valid)
    char_mask = np.zeros((32, 32), dtype=bool)
    char_mask[12:20, 12:20] = True
    # identity composition, no refinement
    pose, out_intr, scale = register_first_frame(
        color, bg_pose, intr, char_mask, Pose.identity(), est, world, refine=False
    )
    assert scale == 2.0
    assert np.array_equal(pose.rotation, bg_pose.rotation)
    assert np.array_equal(pose.translation, bg_pose.translation)
    # refinement against the exact float render keeps the pose (objective already 0)
    pose2, intr2, _ = register_first_frame(
        color, bg_pose, intr, char_mask, Pose.identity(), est, world, refine=True
    )
    assert np.allclose(pose2.rotation, bg_pose.rotation, atol=1e-12)
    assert np.allclose(pose2.translation, bg_pose.translation, atol=1e-12)
    assert intr2 == intr


def test_register_yaw_delta_composes():
    world, bg_pose, intr = room_camera()
    _, depth = world.render(bg_pose, intr)
    est = DepthMap(depth.values / 2.0, depth.valid)
    delta = Pose(rot_y(np.deg2rad(10.0)), [0.0, 0.0, 0.0])
    pose, _, _ = register_first_frame(
        np.zeros((32, 32, 3), np.uint8), bg_pose, intr,
        np.zeros((32, 32), bool), delta, est, world, refine=False,
    )
    assert bg_pose.rotation_angle_to(pose) == pytest.approx(np.deg2rad(10.0), abs=1e-9)


def test_register_scales_delta_translation():
    world, bg_pose, intr = room_camera()
    _, depth = world.render(bg_pose, intr)
    est = DepthMap(depth.values / 2.0, depth.valid)  # planted scale 2
    delta = Pose(np.eye(3), [0.5, 0.0, 0.0])
    pose, _, _ = register_first_frame(
        np.zeros((32, 32, 3), np.uint8), bg_pose, intr,
        np.zeros((32, 32), bool), delta, est, world, refine=False,
    )
    # delta translation is scaled by 2 then rotated into the background frame
    want = bg_pose.translation + bg_pose.rotation @ np.array([1.0, 0.0, 0.0])
    assert np.allclose(pose.translation, want, atol=1e-12)


def test_register_fully_masked_frame():
    world, bg_pose, intr = room_camera()
    _, depth = world.render(bg_pose, intr)
    est = DepthMap(depth.values / 2.0, depth.valid)
    full_mask = np.ones((32, 32), dtype=bool)
    with pytest.raises(DegenerateDepthError):
        register_first_frame(
            np.zeros((32, 32, 3), np.uint8), bg_pose, intr, full_mask,
            Pose.identity(), est, world,
        )


def test_anchor_trajectory_identity():
    first = Pose(rot_y(0.3), [1.0, 0.5, 2.0])
    deltas = [Pose.identity() for _ in range(5)]
    poses = anchor_trajectory(deltas, first, scale=3.0)
    assert len(poses) == 5
    for p in poses:
        assert np.allclose(p.rotation, first.rotation) and np.allclose(p.translation, first.translation)


def test_anchor_trajectory_scales_translation():
    first = Pose(rot_y(np.pi / 2), [0.0, 0.0, 0.0])
    deltas = [Pose.identity(), Pose(np.eye(3), [1.0, 0.0, 0.0])]
    poses = anchor_trajectory(deltas, first, scale=2.0)
    want = first.rotation @ np.array([2.0, 0.0, 0.0])
    assert np.allclose(poses[1].translation, want, atol=1e-12)
    assert np.allclose(poses[0].translation, first.translation)


def test_anchor_single_frame():
    first = Pose(rot_y(0.1), [0.0, 1.0, 0.0])
    poses = anchor_trajectory([Pose.identity()], first, scale=5.0)
    assert len(poses) == 1
    assert np.allclose(poses[0].translation, first.translation)


def refine_setup():
    world = BoxRoomWorld(size=(8.0, 3.0, 10.0), open_top=False)
    pose = Pose(np.eye(3), world.center + np.array([0.3, 0.1, -1.0]))
    intr = Intrinsics(fx=56.0, fy=56.0, cx=23.5, cy=23.5, width=48, height=48)
    return world, pose, intr


def test_refine_exact_initial_returns_initial(recwarn):
    world, pose, intr = refine_setup()
    color, depth = world.render(pose, intr)
    bg = np.ones((48, 48), dtype=bool)
    out_pose, out_intr = refine_pose(pose, intr, color, world, bg, target_depth=depth)
    assert out_pose is pose and out_intr is intr
    assert not any(isinstance(w.message, NoImprovementWarning) for w in recwarn.list)


def test_refine_recovers_planted_yaw():
    world, pose, intr = refine_setup()
    planted = Pose(pose.rotation @ rot_y(np.deg2rad(1.0)), pose.translation)
    color, depth = world.render(planted, intr)
    bg = np.ones((48, 48), dtype=bool)
    out_pose, _ = refine_pose(pose, intr, color, world, bg, target_depth=depth)
    err = out_pose.rotation_angle_to(planted)
    assert np.rad2deg(err) <= 0.25


def test_refine_all_black_target_warns():
    world, pose, intr = refine_setup()
    black = np.zeros((48, 48, 3))
    bg = np.ones((48, 48), dtype=bool)
    with pytest.warns(NoImprovementWarning):
        out_pose, _ = refine_pose(pose, intr, black, world, bg)
    assert out_pose is pose


def test_refine_monotone_objective(rng):
    world, pose, intr = refine_setup()
    cfg = RefineConfig()
    for _ in range(3):
        planted = Pose(
            pose.rotation @ rot_y(rng.uniform(-0.02, 0.02)), pose.translation + rng.uniform(-0.05, 0.05, 3)
        )
        color, depth = world.render(planted, intr)
        bg = np.ones((48, 48), dtype=bool)
        gray = _to_gray(color)
        edges = _edge_map(gray, cfg.edge_threshold) & bg
        e_init = _objective(pose, intr, gray, edges, depth, world, bg, cfg)
        out_pose, out_intr = refine_pose(pose, intr, color, world, bg, target_depth=depth, config=cfg)
        e_final = _objective(out_pose, out_intr, gray, edges, depth, world, bg, cfg)
        assert e_final <= e_init + 1e-12
