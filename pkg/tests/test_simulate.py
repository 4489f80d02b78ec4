"""Scan synthesis: ray casting, pair generation, and planted benchmarks."""

import numpy as np
import pytest

from svcreg import (
    CorrespondenceSet,
    EmptyScan,
    InsufficientOverlap,
    Scene,
    SvcConfig,
    box,
    build,
    correspondence_inlier_count,
    dense_forward_blockers,
    identity,
    in_range,
    inverse,
    make_correspondences,
    make_decision_benchmark,
    make_pair,
    overlap_fraction,
    pillar_room_pair,
    raycast,
    rect,
    room_pair,
    rotation_error,
    sensor_pose,
    svc_check,
    transform_points,
    translation_error,
    planted_occlusion_negatives,
)
from oracles import ray_box_hit


def grid_directions(az_steps, el_steps, az_range, el_range):
    """Cell-center scan directions, matching the caster's layout."""
    az_lo, az_hi = az_range
    el_lo, el_hi = el_range
    az = az_lo + (np.arange(az_steps) + 0.5) * (az_hi - az_lo) / az_steps
    el = el_lo + (np.arange(el_steps) + 0.5) * (el_hi - el_lo) / el_steps
    azg, elg = np.meshgrid(az, el, indexing="ij")
    azg, elg = azg.ravel(), elg.ravel()
    return np.stack(
        [np.cos(elg) * np.cos(azg), np.cos(elg) * np.sin(azg), np.sin(elg)], axis=1
    )


def test_scene_rejects_degenerate_facets():
    flat = np.array([[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]]])
    with pytest.raises(ValueError):
        Scene(flat)


def test_rect_and_box_facet_counts():
    assert rect((0, 0, 0), (1, 0, 0), (0, 1, 0)).shape == (2, 3, 3)
    assert box((0, 0, 0), (1, 1, 1)).shape == (12, 3, 3)


def test_raycast_wall_plane_hits():
    """Every ray into a facing wall lands on its plane."""
    scene = Scene(rect((2.0, -4.0, -4.0), (0.0, 8.0, 0.0), (0.0, 0.0, 8.0)))
    fov = np.radians(30.0)
    cloud = raycast(
        scene,
        sensor_pose(0, 0, 0, 0),
        16,
        16,
        10.0,
        az_range=(-fov, fov),
        el_range=(-fov, fov),
    )
    assert len(cloud.points) == 256
    np.testing.assert_allclose(cloud.points[:, 0], 2.0, atol=1e-9)
    np.testing.assert_array_equal(cloud.viewpoint, np.zeros(3))


def test_raycast_box_shadow_matches_analytic_oracle():
    """Each ray keeps the box hit when the slab test says it should."""
    lo, hi = np.array([1.5, -0.5, -0.5]), np.array([2.5, 0.5, 0.5])
    scene = Scene(
        np.vstack([rect((4.0, -4.0, -4.0), (0.0, 8.0, 0.0), (0.0, 0.0, 8.0)), box(lo, hi)])
    )
    fov = np.radians(35.0)
    dirs = grid_directions(16, 16, (-fov, fov), (-fov, fov))
    cloud = raycast(
        scene,
        sensor_pose(0, 0, 0, 0),
        16,
        16,
        10.0,
        az_range=(-fov, fov),
        el_range=(-fov, fov),
    )
    expected = []
    for d in dirs:
        t_box = ray_box_hit(np.zeros(3), d, lo, hi)
        t_wall = 4.0 / d[0]
        expected.append(d * (t_box if t_box is not None else t_wall))
    np.testing.assert_allclose(cloud.points, np.array(expected), atol=1e-9)


def test_raycast_empty_scene_raises():
    with pytest.raises(EmptyScan):
        raycast(Scene(np.empty((0, 3, 3))), sensor_pose(0, 0, 0, 0), 8, 8, 5.0)


def test_raycast_all_rays_missing_raises():
    scene = Scene(rect((-2.0, -1.0, -1.0), (0.0, 2.0, 0.0), (0.0, 0.0, 2.0)))
    fov = np.radians(20.0)
    with pytest.raises(EmptyScan):
        raycast(
            scene,
            sensor_pose(0, 0, 0, 0),
            8,
            8,
            10.0,
            az_range=(-fov, fov),
            el_range=(-fov, fov),
        )


def test_raycast_rejects_coarse_grids():
    scene = Scene(rect((2.0, -1.0, -1.0), (0.0, 2.0, 0.0), (0.0, 0.0, 2.0)))
    with pytest.raises(ValueError):
        raycast(scene, sensor_pose(0, 0, 0, 0), 7, 16, 5.0)


def test_raycast_range_limit_drops_far_hits():
    scene = Scene(rect((6.0, -4.0, -4.0), (0.0, 8.0, 0.0), (0.0, 0.0, 8.0)))
    fov = np.radians(10.0)
    with pytest.raises(EmptyScan):
        raycast(
            scene,
            sensor_pose(0, 0, 0, 0),
            8,
            8,
            5.0,
            az_range=(-fov, fov),
            el_range=(-fov, fov),
        )


def test_raycast_jitter_is_deterministic():
    scene = Scene(rect((2.0, -4.0, -4.0), (0.0, 8.0, 0.0), (0.0, 0.0, 8.0)))
    fov = np.radians(30.0)
    kwargs = dict(az_range=(-fov, fov), el_range=(-fov, fov), jitter=0.9)
    a = raycast(scene, sensor_pose(0, 0, 0, 0), 12, 12, 10.0, jitter_seed=5, **kwargs)
    b = raycast(scene, sensor_pose(0, 0, 0, 0), 12, 12, 10.0, jitter_seed=5, **kwargs)
    c = raycast(scene, sensor_pose(0, 0, 0, 0), 12, 12, 10.0, jitter_seed=6, **kwargs)
    np.testing.assert_array_equal(a.points, b.points)
    assert not np.array_equal(a.points, c.points)


def self_blocking_pairs(cloud, cfg):
    """Count point pairs where one stands in front of another's sight line."""
    pts = cloud.points - np.asarray(cloud.viewpoint)
    ranges = np.linalg.norm(pts, axis=1)
    dirs = pts / ranges[:, None]
    dots = dirs @ dirs.T
    np.fill_diagonal(dots, -1.0)
    in_cone = dots > cfg.t_threshold
    closer = ranges[:, None] - ranges[None, :] > cfg.tau
    return int(np.count_nonzero(in_cone & closer))


def test_scans_are_occlusion_consistent(shared_room_pair):
    """No scan point hides behind another within one matching cone."""
    cfg = SvcConfig()
    assert self_blocking_pairs(shared_room_pair.src, cfg) == 0
    assert self_blocking_pairs(shared_room_pair.dst, cfg) == 0


def test_overlap_fraction_extremes(rng):
    pts = rng.normal(size=(50, 3))
    from svcreg import PointCloud

    cloud = PointCloud(pts)
    assert overlap_fraction(cloud, cloud, identity(), 0.1) == 1.0
    far = PointCloud(pts + 100.0)
    assert overlap_fraction(cloud, far, identity(), 0.1) == 0.0


def test_make_pair_same_pose_full_overlap():
    scene = Scene(
        np.vstack(
            [
                rect((3.0, -5.0, -2.0), (0.0, 10.0, 0.0), (0.0, 0.0, 4.0)),
                box((1.0, -1.5, -1.0), (2.0, -0.5, 0.5)),
            ]
        )
    )
    pose = sensor_pose(0.0, 0.0, 0.0, 0.1)
    fov = np.radians(30.0)
    pair = make_pair(
        scene, pose, pose, 16, 12.0, az_range=(-fov, fov), el_range=(-fov, fov)
    )
    np.testing.assert_allclose(pair.gt.rotation, np.eye(3), atol=1e-15)
    np.testing.assert_allclose(pair.gt.translation, 0.0, atol=1e-12)
    assert pair.overlap == 1.0


def test_make_pair_disjoint_views():
    """Sensors facing opposite distant walls share nothing."""
    scene = Scene(
        np.vstack(
            [
                rect((6.0, -6.0, -3.0), (0.0, 12.0, 0.0), (0.0, 0.0, 6.0)),
                rect((-6.0, -6.0, -3.0), (0.0, 12.0, 0.0), (0.0, 0.0, 6.0)),
            ]
        )
    )
    fov = np.radians(25.0)
    pair = make_pair(
        scene,
        sensor_pose(0, 0, 0, 0.0),
        sensor_pose(0, 0, 0, np.pi),
        16,
        12.0,
        az_range=(-fov, fov),
        el_range=(-fov, fov),
    )
    assert pair.overlap <= 0.01


def test_make_pair_records_relative_pose():
    scene = Scene(rect((5.0, -6.0, -3.0), (0.0, 12.0, 0.0), (0.0, 0.0, 6.0)))
    pose_a = sensor_pose(0.5, -0.25, 0.0, 0.2)
    pose_b = sensor_pose(-0.5, 0.75, 0.1, -0.1)
    fov = np.radians(25.0)
    pair = make_pair(
        scene, pose_a, pose_b, 16, 12.0, az_range=(-fov, fov), el_range=(-fov, fov)
    )
    mapped = transform_points(pair.gt, pair.src.points)
    world = pair.src.points @ pose_a.rotation.T + pose_a.translation
    expect = (world - pose_b.translation) @ pose_b.rotation
    np.testing.assert_allclose(mapped, expect, atol=1e-9)


def test_room_pair_is_deterministic():
    a = room_pair(4)
    b = room_pair(4)
    np.testing.assert_array_equal(a.src.points, b.src.points)
    np.testing.assert_array_equal(a.dst.points, b.dst.points)
    np.testing.assert_array_equal(a.gt.as_matrix(), b.gt.as_matrix())
    assert a.overlap == b.overlap


def test_room_pair_ground_truth_aligns_scans(shared_room_pair):
    pair = shared_room_pair
    assert 0.2 < pair.overlap <= 1.0
    res = np.linalg.norm(
        transform_points(pair.gt, pair.src.points)[:, None, :]
        - pair.dst.points[None, :, :],
        axis=2,
    ).min(axis=1)
    assert np.median(res) < 0.1


def test_pillar_pair_lands_in_low_overlap_band(low_overlap_pair):
    assert 0.10 <= low_overlap_pair.overlap <= 0.30


def test_pillar_pair_is_deterministic():
    a = pillar_room_pair(3)
    b = pillar_room_pair(3)
    np.testing.assert_array_equal(a.src.points, b.src.points)
    assert a.overlap == b.overlap


def test_correspondences_zero_noise_inliers(shared_room_pair):
    pair = shared_room_pair
    corr = make_correspondences(pair, 200, outlier_rate=0.0, noise_sigma=0.0, seed=1)
    mapped = transform_points(pair.gt, pair.src.points[corr.pairs[:, 0]])
    gaps = np.linalg.norm(mapped - pair.dst.points[corr.pairs[:, 1]], axis=1)
    assert gaps.max() < 0.1


def test_correspondences_inlier_arithmetic(shared_room_pair):
    """Rate 0.95 over 1000 draws plants exactly fifty true matches."""
    pair = shared_room_pair
    corr = make_correspondences(pair, 1000, outlier_rate=0.95, noise_sigma=0.0, seed=2)
    assert len(corr.pairs) == 1000
    ic = correspondence_inlier_count(
        corr, pair.src, pair.dst, pair.gt, 0.1
    )
    assert ic >= 50
    assert ic <= 80


def test_correspondences_pure_outliers_score_chance(shared_room_pair):
    pair = shared_room_pair
    corr = make_correspondences(pair, 1000, outlier_rate=1.0, noise_sigma=0.0, seed=3)
    ic = correspondence_inlier_count(corr, pair.src, pair.dst, pair.gt, 0.1)
    assert ic < 100


def test_correspondences_deterministic(shared_room_pair):
    a = make_correspondences(shared_room_pair, 300, 0.9, 0.01, seed=7)
    b = make_correspondences(shared_room_pair, 300, 0.9, 0.01, seed=7)
    np.testing.assert_array_equal(a.pairs, b.pairs)


def test_correspondences_demand_enough_overlap(low_overlap_pair):
    with pytest.raises(InsufficientOverlap):
        make_correspondences(
            low_overlap_pair, 100_000, outlier_rate=0.0, noise_sigma=0.0, seed=0
        )


def test_decision_benchmark_label_semantics(corner_room_pair):
    cfg = SvcConfig()
    rows = make_decision_benchmark([corner_room_pair], 4, cfg, seed=5)
    assert len(rows) == 5
    positives = [r for r in rows if r[2]]
    negatives = [r for r in rows if not r[2]]
    assert len(positives) == 1
    assert len(negatives) == 4
    pair, t, _ = positives[0]
    assert rotation_error(t, pair.gt) < 15.0
    assert translation_error(t, pair.gt) < 0.30
    idx = build(pair.dst.points)
    for pair, t, _ in negatives:
        wrong_rot = rotation_error(t, pair.gt) >= 15.0
        wrong_shift = translation_error(t, pair.gt) >= 0.30
        assert wrong_rot or wrong_shift
        assert in_range(pair.src, idx, t, cfg) is True


def test_decision_benchmark_positives_only(corner_room_pair):
    rows = make_decision_benchmark([corner_room_pair], 0, SvcConfig(), seed=5)
    assert len(rows) == 1
    assert rows[0][2] is True


def test_decision_benchmark_deterministic(corner_room_pair):
    a = make_decision_benchmark([corner_room_pair], 2, SvcConfig(), seed=9)
    b = make_decision_benchmark([corner_room_pair], 2, SvcConfig(), seed=9)
    for (_, ta, la), (_, tb, lb) in zip(a, b):
        np.testing.assert_array_equal(ta.as_matrix(), tb.as_matrix())
        assert la == lb


def test_planted_negatives_verified_blocking(corner_room_pair):
    """Planted wrong poses carry certified occluders and fail the check."""
    pair = corner_room_pair
    cfg = SvcConfig()
    negatives = planted_occlusion_negatives(pair, cfg, count=2, seed=3)
    idx = build(pair.dst.points)
    from svcreg._util import stable_ceil

    floor = 2 * stable_ceil(cfg.eta2 * len(pair.dst.points))
    for t in negatives:
        assert dense_forward_blockers(pair.src, pair.dst, t, cfg) >= floor
        passed, bc = svc_check(pair.src, pair.dst, t, idx, cfg)
        assert passed is False
        assert in_range(pair.src, idx, t, cfg) is True
