"""Alignment quality measures over clouds and correspondences.

All tolerance comparisons are strict, matching the decision rules used by
the verification stage: a residual exactly equal to the tolerance is not an
inlier, and an inlier fraction exactly equal to the budget does not pass.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._util import stable_floor
from .errors import IndexOutOfBounds
from .geometry import PointCloud, RigidTransform, transform_points
from .spatial import NNIndex


@dataclass(frozen=True, eq=False)
class CorrespondenceSet:
    """Putative point matches: (k, 2) integer pairs of (source, target) indices.

    Pairs must be unique and non-negative; bounds against particular clouds
    are checked where the set is consumed. ``weights``, when present, is one
    confidence in [0, 1] per pair.
    """

    pairs: np.ndarray
    weights: np.ndarray | None = None

    def __post_init__(self):
        pairs = np.ascontiguousarray(np.asarray(self.pairs, dtype=np.int64))
        if pairs.ndim != 2 or pairs.shape[1] != 2:
            raise ValueError(f"pairs must have shape (k, 2), got {pairs.shape}")
        if pairs.size and pairs.min() < 0:
            raise ValueError("correspondence indices must be non-negative")
        if len(np.unique(pairs, axis=0)) != len(pairs):
            raise ValueError("duplicate correspondence pairs")
        pairs.flags.writeable = False
        object.__setattr__(self, "pairs", pairs)
        if self.weights is not None:
            w = np.ascontiguousarray(np.asarray(self.weights, dtype=np.float64))
            if w.shape != (len(pairs),):
                raise ValueError("weights must be one value per pair")
            if w.size and (w.min() < 0.0 or w.max() > 1.0):
                raise ValueError("weights must lie in [0, 1]")
            w.flags.writeable = False
            object.__setattr__(self, "weights", w)

    def __len__(self) -> int:
        return self.pairs.shape[0]


@dataclass(frozen=True)
class SvcConfig:
    """Parameters of the verification stage.

    tau          inlier / occlusion distance tolerance, meters
    eta1         minimum overlapping fraction for a transform to be range
                 feasible (strict >)
    eta2         blocked-point budget as a fraction of the target cloud
                 (strict <)
    t_threshold  dot-product cone threshold deciding when two directions
                 count as the same line of sight
    k            number of hypotheses drawn per registration attempt
    min_range    sensor dead zone; points closer than this to the sensor are
                 dropped before sphere projection
    """

    tau: float = 0.1
    eta1: float = 0.10
    eta2: float = 0.02
    t_threshold: float = 0.99997
    k: int = 200
    min_range: float = 1e-6

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if not 0 < self.eta1 < 1:
            raise ValueError(f"eta1 must lie in (0, 1), got {self.eta1}")
        if not 0 <= self.eta2 < 1:
            raise ValueError(f"eta2 must lie in [0, 1), got {self.eta2}")
        if not 0 < self.t_threshold < 1:
            raise ValueError(f"t_threshold must lie in (0, 1), got {self.t_threshold}")
        if not (isinstance(self.k, (int, np.integer)) and self.k >= 1):
            raise ValueError(f"k must be a positive integer, got {self.k}")
        if not self.min_range >= 0:
            raise ValueError(f"min_range must be non-negative, got {self.min_range}")

    @classmethod
    def outdoor(cls, **overrides) -> "SvcConfig":
        """Preset with the coarser tolerance used for large outdoor scans."""
        overrides.setdefault("tau", 0.6)
        return cls(**overrides)


def nn_residuals(src: PointCloud, t: RigidTransform, dst_index: NNIndex) -> np.ndarray:
    """Distance from each transformed source point to its nearest target point."""
    mapped = transform_points(t, src.points)
    _, dist = dst_index.nearest(mapped)
    return dist


def inlier_count(residuals, tau: float) -> int:
    """Number of residuals strictly below ``tau``."""
    r = np.asarray(residuals, dtype=np.float64)
    return int(np.count_nonzero(r < tau))


def correspondence_inlier_count(
    corr: CorrespondenceSet,
    src: PointCloud,
    dst: PointCloud,
    t: RigidTransform,
    tau: float,
) -> int:
    """Matches whose endpoints land within ``tau`` under ``t`` (strict <)."""
    if len(corr) == 0:
        return 0
    si = corr.pairs[:, 0]
    di = corr.pairs[:, 1]
    if si.max() >= len(src) or di.max() >= len(dst):
        raise IndexOutOfBounds(
            f"correspondence indices exceed cloud sizes ({len(src)}, {len(dst)})"
        )
    mapped = transform_points(t, src.points[si])
    res = np.linalg.norm(mapped - dst.points[di], axis=1)
    return int(np.count_nonzero(res < tau))


def mae(residuals, tau: float) -> float:
    """Mean absolute residual over inliers (residuals < tau); 0 with none."""
    r = np.asarray(residuals, dtype=np.float64)
    r = r[r < tau]
    return float(np.abs(r).mean()) if r.size else 0.0


def mse(residuals, tau: float) -> float:
    """Mean squared residual over inliers (residuals < tau); 0 with none."""
    r = np.asarray(residuals, dtype=np.float64)
    r = r[r < tau]
    return float((r**2).mean()) if r.size else 0.0


def in_range(src: PointCloud, dst_index: NNIndex, t: RigidTransform, cfg: SvcConfig) -> bool:
    """Range feasibility: does ``t`` overlap more than ``eta1`` of the source?

    True iff the inlier count strictly exceeds eta1 * |src|. The product is
    rounded through a guarded floor so decimal parameters behave exactly
    (10% of 1000 is 100, never 99.999...).
    """
    count = inlier_count(nn_residuals(src, t, dst_index), cfg.tau)
    return count > stable_floor(cfg.eta1 * len(src))
