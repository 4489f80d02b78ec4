"""Point cloud registration with sight-line verification.

Rigid transform hypotheses are ranked by correspondence inlier count and
vetted by a bidirectional occlusion test: a candidate is rejected when the
transformed source cloud would block sight lines that the target sensor
demonstrably had. The package bundles the geometric core, a spatial index,
a hypothesis pipeline, a triangle-soup scan simulator, file formats, a
benchmark harness, and a command line tool.
"""

from .bench import (
    BENCH_CONFIG,
    BenchCase,
    DecisionRecord,
    DecisionReport,
    INDOOR_THRESHOLDS,
    OUTDOOR_THRESHOLDS,
    PairRecord,
    RegistrationReport,
    benchmark_cases,
    run_benchmark,
    run_decision,
    run_registration,
)
from .errors import (
    AllPointsDegenerate,
    DegenerateInput,
    EmptyHypotheses,
    EmptyInput,
    EmptyScan,
    IndexOutOfBounds,
    InsufficientOverlap,
    InvalidRotation,
    NegativeSamplingFailed,
    NoValidHypothesis,
    NotUnitNorm,
    ParseError,
    SvcError,
    TooFewCorrespondences,
    UnsupportedFormat,
)
from .geometry import (
    PointCloud,
    RigidTransform,
    apply,
    axis_angle_rotation,
    compose,
    fit_rigid,
    identity,
    inverse,
    random_rotation,
    rotation_error,
    rotation_x,
    rotation_y,
    rotation_z,
    transform_points,
    translation_error,
)
from .hypothesis import HypothesisBatch, compatibility_weights, generate
from .io import (
    load_cloud,
    load_config,
    load_correspondences,
    load_pose,
    merged_config,
    save_cloud,
    save_pose,
)
from .metrics import (
    CorrespondenceSet,
    SvcConfig,
    correspondence_inlier_count,
    in_range,
    inlier_count,
    mae,
    mse,
    nn_residuals,
)
from .simulate import (
    Scene,
    ScanPair,
    box,
    corridor_pair,
    pillar_room_pair,
    dense_forward_blockers,
    make_correspondences,
    make_decision_benchmark,
    make_pair,
    overlap_fraction,
    planted_occlusion_negatives,
    raycast,
    rect,
    room_pair,
    sensor_pose,
)
from .spatial import NNIndex, build
from .svc import (
    EvaluationResult,
    SphereProjection,
    SvcVerdict,
    blocked_count,
    evaluate_hypotheses,
    non_overlap,
    project_sphere,
    svc_check,
    svc_double_check,
)

__version__ = "0.1.0"

__all__ = [
    "AllPointsDegenerate",
    "BENCH_CONFIG",
    "BenchCase",
    "CorrespondenceSet",
    "DecisionRecord",
    "DecisionReport",
    "DegenerateInput",
    "EmptyHypotheses",
    "EmptyInput",
    "EmptyScan",
    "EvaluationResult",
    "HypothesisBatch",
    "INDOOR_THRESHOLDS",
    "IndexOutOfBounds",
    "InsufficientOverlap",
    "InvalidRotation",
    "NNIndex",
    "NegativeSamplingFailed",
    "NoValidHypothesis",
    "NotUnitNorm",
    "OUTDOOR_THRESHOLDS",
    "PairRecord",
    "ParseError",
    "PointCloud",
    "RegistrationReport",
    "RigidTransform",
    "ScanPair",
    "Scene",
    "SphereProjection",
    "SvcConfig",
    "SvcError",
    "SvcVerdict",
    "TooFewCorrespondences",
    "UnsupportedFormat",
    "apply",
    "axis_angle_rotation",
    "benchmark_cases",
    "blocked_count",
    "box",
    "compatibility_weights",
    "compose",
    "correspondence_inlier_count",
    "corridor_pair",
    "dense_forward_blockers",
    "evaluate_hypotheses",
    "fit_rigid",
    "generate",
    "identity",
    "in_range",
    "inlier_count",
    "inverse",
    "load_cloud",
    "load_config",
    "load_correspondences",
    "load_pose",
    "mae",
    "make_correspondences",
    "make_decision_benchmark",
    "make_pair",
    "merged_config",
    "mse",
    "nn_residuals",
    "non_overlap",
    "overlap_fraction",
    "pillar_room_pair",
    "planted_occlusion_negatives",
    "project_sphere",
    "random_rotation",
    "raycast",
    "rect",
    "room_pair",
    "rotation_error",
    "rotation_x",
    "rotation_y",
    "rotation_z",
    "run_benchmark",
    "run_decision",
    "run_registration",
    "save_cloud",
    "save_pose",
    "sensor_pose",
    "svc_check",
    "svc_double_check",
    "transform_points",
    "translation_error",
]
