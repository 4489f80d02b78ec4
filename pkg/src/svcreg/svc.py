"""Line-of-sight verification of rigid registration hypotheses.

The test is rejection-only. In a static scene, correctly transformed source
points can never sit between the target sensor and the surface points it
measured; whenever transformed points do block lines of sight, the
transform must be wrong. Each hypothesis is checked in both directions
(source into the target frame and target into the source frame under the
inverse) and rejected if either direction shows more blocked sight lines
than a small budget proportional to the checked cloud's size.

A hypothesis that passes is not certified correct. The check is a filter:
candidates are tried in descending correspondence-inlier order and the
first survivor is returned, falling back to the top-scoring candidate when
every one is rejected.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._util import stable_ceil
from .errors import AllPointsDegenerate, EmptyHypotheses
from .geometry import PointCloud, RigidTransform, apply, inverse
from .metrics import CorrespondenceSet, SvcConfig, correspondence_inlier_count
from .spatial import NNIndex, build


@dataclass(frozen=True, eq=False)
class SphereProjection:
    """Points projected onto the unit sphere around a sensor origin.

    ``directions`` are unit vectors, ``ranges`` the original distances, and
    ``source_indices`` map each row back to the projected cloud.
    """

    directions: np.ndarray
    source_indices: np.ndarray
    ranges: np.ndarray

    def __post_init__(self):
        d = np.ascontiguousarray(np.asarray(self.directions, dtype=np.float64))
        i = np.ascontiguousarray(np.asarray(self.source_indices, dtype=np.int64))
        r = np.ascontiguousarray(np.asarray(self.ranges, dtype=np.float64))
        if d.ndim != 2 or d.shape[1] != 3 or i.shape != (d.shape[0],) or r.shape != (d.shape[0],):
            raise ValueError("directions, source_indices and ranges must align")
        for a in (d, i, r):
            a.flags.writeable = False
        object.__setattr__(self, "directions", d)
        object.__setattr__(self, "source_indices", i)
        object.__setattr__(self, "ranges", r)

    def __len__(self) -> int:
        return self.directions.shape[0]


@dataclass(frozen=True)
class SvcVerdict:
    """Outcome of a bidirectional line-of-sight check.

    Budgets are the integer thresholds ceil(eta2 * N) for each direction,
    kept for reporting; ``accepted`` holds exactly when both blocked counts
    are strictly below their budgets.
    """

    accepted: bool
    forward_blocked: int
    backward_blocked: int
    forward_budget: int
    backward_budget: int


def non_overlap(
    src: PointCloud, t: RigidTransform, dst_index: NNIndex, tau: float
) -> PointCloud:
    """Transformed source points farther than ``tau`` from every target point.

    These are the points the target sensor should not have been able to miss
    if they truly sat inside its view volume; they drive the blocking test.
    The result may be empty and carries the transformed viewpoint.
    """
    mapped = apply(t, src)
    _, dist = dst_index.nearest(mapped.points)
    keep = dist > tau
    return PointCloud(mapped.points[keep], mapped.viewpoint)


def project_sphere(pc: PointCloud, sensor, min_range: float) -> SphereProjection:
    """Project a cloud onto the unit sphere centered at ``sensor``.

    Points closer than ``min_range`` to the sensor (including a point
    exactly at the origin, whose direction is undefined) are dropped.
    Raises :class:`AllPointsDegenerate` when nothing survives.
    """
    sensor = np.asarray(sensor, dtype=np.float64).reshape(3)
    offsets = pc.points - sensor
    ranges = np.sqrt((offsets**2).sum(axis=1))
    keep = (ranges >= min_range) & (ranges > 0.0)
    if not keep.any():
        raise AllPointsDegenerate(
            f"no points at or beyond min_range {min_range} of the sensor"
        )
    idx = np.nonzero(keep)[0]
    dirs = offsets[idx] / ranges[idx, None]
    return SphereProjection(dirs, idx, ranges[idx])


def blocked_count(q_proj: SphereProjection, p_proj: SphereProjection, cfg: SvcConfig) -> int:
    """Number of target sight lines blocked by projected source points.

    For each target direction, the nearest source direction is looked up;
    if it falls inside the cone (dot > t_threshold) and its point is closer
    to the sensor by more than tau, that target point is blocked. Both
    comparisons are strict. An empty source projection blocks nothing.
    """
    if len(p_proj) == 0:
        return 0
    p_index = build(p_proj.directions)
    idx, dots = p_index.nearest_direction(q_proj.directions)
    roi = dots > cfg.t_threshold
    blocked = roi & (q_proj.ranges - p_proj.ranges[idx] > cfg.tau)
    return int(np.count_nonzero(blocked))


def _passes(bc: int, eta2: float, n: int) -> bool:
    # Strict bc < eta2 * n, evaluated through a guarded ceiling so that
    # decimal budgets land exactly (2% of 100 is 2, and bc = 2 must fail).
    return bc < stable_ceil(eta2 * n)


def svc_check(
    src: PointCloud,
    dst: PointCloud,
    t: RigidTransform,
    dst_index: NNIndex,
    cfg: SvcConfig,
) -> tuple[bool, int]:
    """One-directional check of ``t`` mapping ``src`` into ``dst``'s frame.

    Returns ``(passed, blocked)``. The pass rule is strict:
    blocked < eta2 * |dst|. When either projection degenerates (an empty
    non-overlap set, or every point inside the dead zone) there is no
    evidence of blocking and the check passes with a count of zero.
    """
    pnon = non_overlap(src, t, dst_index, cfg.tau)
    try:
        p_proj = project_sphere(pnon, dst.viewpoint, cfg.min_range)
        q_proj = project_sphere(dst, dst.viewpoint, cfg.min_range)
    except AllPointsDegenerate:
        return True, 0
    bc = blocked_count(q_proj, p_proj, cfg)
    return _passes(bc, cfg.eta2, len(dst)), bc


def svc_double_check(
    src: PointCloud,
    dst: PointCloud,
    t: RigidTransform,
    src_index: NNIndex,
    dst_index: NNIndex,
    cfg: SvcConfig,
) -> SvcVerdict:
    """Bidirectional check: ``t`` forward and its inverse backward.

    A transform can look clean in one direction while its inverse reveals
    blocking, so acceptance requires both. Each direction's budget scales
    with the cloud serving as the target of that direction.
    """
    f_pass, f_bc = svc_check(src, dst, t, dst_index, cfg)
    b_pass, b_bc = svc_check(dst, src, inverse(t), src_index, cfg)
    return SvcVerdict(
        accepted=f_pass and b_pass,
        forward_blocked=f_bc,
        backward_blocked=b_bc,
        forward_budget=stable_ceil(cfg.eta2 * len(dst)),
        backward_budget=stable_ceil(cfg.eta2 * len(src)),
    )


@dataclass(frozen=True, eq=False)
class EvaluationResult:
    """Outcome of screening a hypothesis list.

    ``order`` is the evaluation order (hypothesis indices sorted by
    descending correspondence inlier count, ties keeping input order) and
    ``verdicts`` holds one entry per checked rank, so ``len(verdicts)`` is
    the number of checks spent. ``accepted`` is False when every candidate
    failed and ``best`` fell back to the top-scoring one.
    """

    best: RigidTransform
    best_index: int
    best_rank: int
    accepted: bool
    ic_scores: np.ndarray
    order: np.ndarray
    verdicts: list[SvcVerdict]


def evaluate_hypotheses(
    src: PointCloud,
    dst: PointCloud,
    corr: CorrespondenceSet,
    hyps: list[RigidTransform],
    cfg: SvcConfig,
) -> EvaluationResult:
    """Screen hypotheses by inlier score, returning the first that verifies.

    Candidates are scored with the correspondence inlier count, sorted
    descending (stable), and checked bidirectionally in that order. The
    first accepted candidate wins; if none passes, the top-scoring one is
    returned unverified, so the screening never does worse than plain
    inlier maximization.
    """
    if not hyps:
        raise EmptyHypotheses("no hypotheses to evaluate")
    ic = np.array(
        [correspondence_inlier_count(corr, src, dst, h, cfg.tau) for h in hyps],
        dtype=np.int64,
    )
    order = np.argsort(-ic, kind="stable")

    src_index = build(src.points)
    dst_index = build(dst.points)

    verdicts: list[SvcVerdict] = []
    for rank, hyp_idx in enumerate(order):
        v = svc_double_check(src, dst, hyps[hyp_idx], src_index, dst_index, cfg)
        verdicts.append(v)
        if v.accepted:
            return EvaluationResult(
                best=hyps[hyp_idx],
                best_index=int(hyp_idx),
                best_rank=rank,
                accepted=True,
                ic_scores=ic,
                order=order,
                verdicts=verdicts,
            )
    top = int(order[0])
    return EvaluationResult(
        best=hyps[top],
        best_index=top,
        best_rank=0,
        accepted=False,
        ic_scores=ic,
        order=order,
        verdicts=verdicts,
    )
