"""Registration hypothesis generation from putative correspondences.

Candidate rigid motions are fitted to random minimal (3-point) samples of
the correspondence set. Sampling is biased toward mutually consistent
correspondences: matches that preserve pairwise distances with many others
are more likely to be correct, so they are drawn more often.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInput, IndexOutOfBounds, NoValidHypothesis, TooFewCorrespondences
from .geometry import (
    PointCloud,
    RigidTransform,
    fit_rigid,
    rotation_error,
    translation_error,
)
from .metrics import CorrespondenceSet, SvcConfig, correspondence_inlier_count

# Two hypotheses closer than this are duplicates; the higher-scoring one is kept.
_DEDUP_ROT_DEG = 0.5


@dataclass(frozen=True, eq=False)
class HypothesisBatch:
    """Candidate transforms with their scores and originating samples.

    ``provenance[i]`` is the correspondence-index triple hypothesis ``i``
    was fitted from. All three lists share one length, at most the
    configured hypothesis count.
    """

    transforms: list[RigidTransform]
    ic_scores: np.ndarray
    provenance: list[tuple[int, int, int]]

    def __post_init__(self):
        ic = np.ascontiguousarray(np.asarray(self.ic_scores, dtype=np.int64))
        if not (len(self.transforms) == len(ic) == len(self.provenance)):
            raise ValueError("transforms, ic_scores and provenance must align")
        ic.flags.writeable = False
        object.__setattr__(self, "ic_scores", ic)

    def __len__(self) -> int:
        return len(self.transforms)


def compatibility_weights(
    corr: CorrespondenceSet, src: PointCloud, dst: PointCloud, tau_c: float
) -> np.ndarray:
    """Fraction of other correspondences each one is rigidity-consistent with.

    Two matches are consistent when their source-side and target-side
    distances agree within ``tau_c`` (strict <). Correct matches agree with
    every other correct match, so their weights cluster high while random
    mismatches only agree by chance.
    """
    k = len(corr)
    if k < 2:
        raise TooFewCorrespondences(f"need at least 2 correspondences, got {k}")
    si = corr.pairs[:, 0]
    di = corr.pairs[:, 1]
    if si.max() >= len(src) or di.max() >= len(dst):
        raise IndexOutOfBounds(
            f"correspondence indices exceed cloud sizes ({len(src)}, {len(dst)})"
        )
    p = src.points[si]
    q = dst.points[di]
    dp = np.linalg.norm(p[:, None, :] - p[None, :, :], axis=2)
    dq = np.linalg.norm(q[:, None, :] - q[None, :, :], axis=2)
    agree = np.abs(dp - dq) < tau_c
    np.fill_diagonal(agree, False)
    return agree.sum(axis=1) / (k - 1)


def generate(
    corr: CorrespondenceSet,
    src: PointCloud,
    dst: PointCloud,
    cfg: SvcConfig,
    seed: int,
    *,
    tau_c: float | None = None,
) -> HypothesisBatch:
    """Draw up to ``cfg.k`` hypotheses from weighted minimal samples.

    Each draw picks 3 distinct correspondences with probability
    proportional to their compatibility weights and fits a rigid motion;
    degenerate samples are skipped. Near-duplicate transforms (within 0.5
    degrees and half an inlier tolerance) are merged, keeping the higher
    scoring copy. Deterministic for a fixed seed.

    ``tau_c`` is the pairwise-distance agreement tolerance for the weights
    and defaults to half the inlier tolerance, roughly twice the expected
    per-point noise.
    """
    k = len(corr)
    if k < 3:
        raise TooFewCorrespondences(f"need at least 3 correspondences, got {k}")
    if tau_c is None:
        tau_c = cfg.tau / 2.0

    weights = compatibility_weights(corr, src, dst, tau_c)
    # A tiny floor keeps the sampler defined when fewer than 3 matches have
    # any support at all.
    probs = weights + 1e-12
    probs = probs / probs.sum()

    rng = np.random.default_rng(seed)
    src_pts = src.points[corr.pairs[:, 0]]
    dst_pts = dst.points[corr.pairs[:, 1]]

    transforms: list[RigidTransform] = []
    scores: list[int] = []
    provenance: list[tuple[int, int, int]] = []
    dedup_te = cfg.tau / 2.0

    for _ in range(cfg.k):
        triple = rng.choice(k, size=3, replace=False, p=probs)
        try:
            t = fit_rigid(src_pts[triple], dst_pts[triple])
        except DegenerateInput:
            continue
        ic = correspondence_inlier_count(corr, src, dst, t, cfg.tau)
        key = (int(triple[0]), int(triple[1]), int(triple[2]))

        merged = False
        for j, kept in enumerate(transforms):
            if rotation_error(t, kept) < _DEDUP_ROT_DEG and translation_error(t, kept) < dedup_te:
                if ic > scores[j]:
                    transforms[j] = t
                    scores[j] = ic
                    provenance[j] = key
                merged = True
                break
        if not merged:
            transforms.append(t)
            scores.append(ic)
            provenance.append(key)

    if not transforms:
        raise NoValidHypothesis("every sampled correspondence triple was degenerate")
    return HypothesisBatch(transforms, np.array(scores, dtype=np.int64), provenance)
