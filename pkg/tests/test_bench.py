"""Benchmark harness: per-pair records, aggregates, and emitters."""

import json

import numpy as np
import pytest

from svcreg import (
    BenchCase,
    CorrespondenceSet,
    INDOOR_THRESHOLDS,
    OUTDOOR_THRESHOLDS,
    PointCloud,
    SvcConfig,
    correspondence_inlier_count,
    identity,
    make_correspondences,
    make_decision_benchmark,
    rotation_error,
    run_benchmark,
    run_decision,
    run_registration,
    translation_error,
)
from svcreg.hypothesis import HypothesisBatch
from instances import planted_pair


def planted_batch():
    """Both hypotheses of the planted instance, scored and bundled."""
    src, dst, corr, good, wrong = planted_pair()
    cfg = SvcConfig()
    transforms = [wrong, good]
    scores = np.array(
        [correspondence_inlier_count(corr, src, dst, t, cfg.tau) for t in transforms],
        dtype=np.int64,
    )
    batch = HypothesisBatch(transforms, scores, [(0, 1, 2), (3, 4, 5)])
    return src, dst, corr, good, batch


def planted_case():
    src, dst, corr, good, batch = planted_batch()
    return BenchCase(src, dst, corr, gt=good, tag="planted"), batch


def test_thresholds_presets():
    assert INDOOR_THRESHOLDS == (15.0, 0.30)
    assert OUTDOOR_THRESHOLDS == (5.0, 0.60)


def test_registration_succeeds_both_modes_on_inliers(shared_room_pair):
    pair = shared_room_pair
    corr = make_correspondences(pair, 150, outlier_rate=0.0, noise_sigma=0.0, seed=2)
    for mode in ("no-svc", "svc"):
        best, rec = run_registration(
            pair.src, pair.dst, corr, SvcConfig(k=40), mode, seed=1, gt=pair.gt
        )
        assert rec.success is True
        assert rec.re_deg == rotation_error(best, pair.gt)
        assert rec.te_m == translation_error(best, pair.gt)


def test_registration_planted_split_between_modes():
    """The inlier-count leader fails, so only the verified walk recovers."""
    src, dst, corr, good, batch = planted_batch()
    cfg = SvcConfig()
    best_ns, rec_ns = run_registration(
        src, dst, corr, cfg, "no-svc", gt=good, hypotheses=batch
    )
    best_svc, rec_svc = run_registration(
        src, dst, corr, cfg, "svc", gt=good, hypotheses=batch
    )
    assert rec_ns.success is False
    assert rec_ns.rank == 0
    assert rec_svc.success is True
    assert rec_svc.rank == 1
    assert rec_svc.svc_iterations == 2
    np.testing.assert_allclose(best_svc.translation, good.translation)


def test_registration_surfaces_generation_errors(rng):
    pts = rng.normal(size=(10, 3))
    cloud = PointCloud(pts)
    corr = CorrespondenceSet(np.array([[0, 0], [1, 1]]))
    best, rec = run_registration(
        cloud, cloud, corr, SvcConfig(), "svc", gt=identity()
    )
    assert best is None
    assert rec.success is False
    assert "TooFewCorrespondences" in rec.error


def test_registration_rejects_unknown_mode(rng):
    cloud = PointCloud(rng.normal(size=(4, 3)))
    corr = CorrespondenceSet(np.array([[0, 0]]))
    with pytest.raises(ValueError):
        run_registration(cloud, cloud, corr, SvcConfig(), "turbo")


def three_case_fixture(rng):
    """One clean pair, one planted split, one hopeless pair."""
    case_planted, _ = planted_case()
    src, dst, _, good, wrong = planted_pair()
    pure = CorrespondenceSet(np.stack([np.arange(40), np.arange(40)], axis=1))
    clean = BenchCase(src, dst, pure, gt=good, tag="clean")
    crossed = CorrespondenceSet(
        np.stack([np.arange(40), np.arange(40) + 60], axis=1)
    )
    hopeless = BenchCase(src, dst, crossed, gt=good, tag="hopeless")
    return [clean, case_planted, hopeless]


def test_benchmark_aggregates_match_hand_computation(rng):
    """Recall and error averages recompute exactly from the records."""
    cases = three_case_fixture(rng)
    report = run_benchmark(
        cases, SvcConfig(k=30), modes=("no-svc", "svc"), seed=5, timing=False
    )
    for mode in ("no-svc", "svc"):
        rows = [r for r in report.records if r.mode == mode]
        agg = report.aggregates[(mode, "")]
        wins = [r for r in rows if r.success]
        assert agg["pairs"] == len(rows) == 3
        assert agg["successes"] == len(wins)
        assert agg["rr"] == len(wins) / 3
        if wins:
            assert agg["mean_re_deg"] == pytest.approx(
                np.mean([r.re_deg for r in wins]), abs=0.0
            )
            assert agg["mean_te_m"] == pytest.approx(
                np.mean([r.te_m for r in wins]), abs=0.0
            )
    for r in report.records:
        if r.success is not None and r.re_deg is not None:
            assert r.success == (
                r.re_deg < report.thresholds[0] and r.te_m < report.thresholds[1]
            )


def test_benchmark_tags_bucket_aggregates(rng):
    cases = three_case_fixture(rng)
    report = run_benchmark(cases, SvcConfig(k=30), modes=("svc",), seed=5, timing=False)
    assert ("svc", "clean") in report.aggregates
    assert ("svc", "planted") in report.aggregates
    assert report.aggregates[("svc", "clean")]["pairs"] == 1


def test_benchmark_is_reproducible(rng):
    cases = three_case_fixture(rng)
    cfg = SvcConfig(k=30)
    a = run_benchmark(cases, cfg, seed=9, timing=False)
    b = run_benchmark(cases, cfg, seed=9, timing=False)
    assert a.to_json() == b.to_json()
    assert a.to_csv() == b.to_csv()


def test_benchmark_threads_do_not_change_results(rng):
    cases = three_case_fixture(rng)
    cfg = SvcConfig(k=30)
    serial = run_benchmark(cases, cfg, seed=9, timing=False)
    pooled = run_benchmark(cases, cfg, seed=9, threads=3, timing=False)
    assert serial.to_json() == pooled.to_json()


def test_benchmark_generation_failure_marks_both_modes(rng):
    cloud = PointCloud(rng.normal(size=(10, 3)))
    corr = CorrespondenceSet(np.array([[0, 0], [1, 1]]))
    broken = BenchCase(cloud, cloud, corr, gt=identity())
    report = run_benchmark([broken], SvcConfig(), modes=("no-svc", "svc"), timing=False)
    assert len(report.records) == 2
    for r in report.records:
        assert r.success is False
        assert r.rank == -1
        assert "TooFewCorrespondences" in r.error


def test_json_and_csv_emit_identical_aggregates(rng):
    cases = three_case_fixture(rng)
    report = run_benchmark(cases, SvcConfig(k=30), seed=5, timing=False)
    payload = json.loads(report.to_json())
    json_rows = {
        (row["mode"], row["tag"]): row for row in payload["aggregates"]
    }
    csv_rows = {}
    for line in report.to_csv().splitlines():
        if not line.startswith("# aggregate"):
            continue
        fields = dict(part.split("=", 1) for part in line.split()[2:])
        key = (fields.pop("mode"), fields.pop("tag", ""))
        csv_rows[key] = fields
    assert set(csv_rows) == set(json_rows)
    for key, fields in csv_rows.items():
        for name, raw in fields.items():
            want = json_rows[key][name]
            got = None if raw == "none" else float(raw)
            if want is None:
                assert got is None
            else:
                assert got == float(want)


def test_csv_has_paired_mode_rows(rng):
    cases = three_case_fixture(rng)
    report = run_benchmark(cases, SvcConfig(k=30), modes=("svc", "no-svc"), seed=5)
    lines = [l for l in report.to_csv().splitlines() if not l.startswith("#")]
    header, *rows = lines
    assert header.split(",")[:3] == ["index", "mode", "tag"]
    by_index = {}
    for row in rows:
        idx, mode = row.split(",")[:2]
        by_index.setdefault(idx, set()).add(mode)
    assert all(modes == {"svc", "no-svc"} for modes in by_index.values())


def test_decision_all_positive_noiseless(corner_room_pair):
    cfg = SvcConfig()
    rows = make_decision_benchmark([corner_room_pair], 0, cfg, seed=1)
    report = run_decision(rows, cfg)
    svc = report.methods["svc"]
    assert svc["precision"] == 1.0
    assert svc["recall"] == 1.0


def test_decision_accept_all_baseline_arithmetic(corner_room_pair, shared_room_pair):
    """A 50/50 benchmark pins the baseline at P=0.5, R=1, F1=2/3."""
    cfg = SvcConfig()
    rows = make_decision_benchmark(
        [corner_room_pair, shared_room_pair], 1, cfg, seed=2
    )
    assert len(rows) == 4
    report = run_decision(rows, cfg)
    base = report.methods["accept-all"]
    assert base["precision"] == 0.5
    assert base["recall"] == 1.0
    assert base["f1"] == pytest.approx(2.0 / 3.0, abs=1e-12)
    assert base["tp"] + base["fp"] + base["tn"] + base["fn"] == 4


def test_decision_counts_are_consistent(corner_room_pair):
    cfg = SvcConfig()
    rows = make_decision_benchmark([corner_room_pair], 3, cfg, seed=4)
    report = run_decision(rows, cfg)
    for stats in report.methods.values():
        assert stats["tp"] + stats["fn"] == sum(1 for r in report.records if r.label)
        assert stats["fp"] + stats["tn"] == sum(
            1 for r in report.records if not r.label
        )
        if stats["f1"] is not None:
            assert stats["f1"] == pytest.approx(
                2
                * stats["precision"]
                * stats["recall"]
                / (stats["precision"] + stats["recall"]),
                abs=1e-12,
            )


def test_decision_empty_benchmark_rejected():
    with pytest.raises(ValueError):
        run_decision([], SvcConfig())
