"""Nearest-neighbor index over 3D points.

A thin wrapper around scipy's kd-tree that pins down the parts the rest of
the pipeline relies on: deterministic construction, exact tie-breaking by
smallest original index, and direction queries over unit vectors (largest
dot product, served by the same Euclidean tree since for unit vectors
min ||u - v|| and max <u, v> agree).
"""

from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree

from .errors import EmptyInput, NotUnitNorm
from .geometry import _as_points

_UNIT_TOL = 1e-9


class NNIndex:
    """Immutable nearest-neighbor index. Build via :func:`build`."""

    __slots__ = ("points", "_tree", "_unit")

    def __init__(self, points):
        pts = _as_points(points)
        if pts.shape[0] == 0:
            raise EmptyInput("cannot index an empty point set")
        pts.flags.writeable = False
        self.points = pts
        # balanced_tree=True splits at the median, keeping construction
        # deterministic for a fixed input order.
        self._tree = cKDTree(pts, balanced_tree=True)
        self._unit = None

    def __len__(self) -> int:
        return self.points.shape[0]

    def _query(self, qs: np.ndarray):
        """k=1 query with ties resolved to the smallest original index.

        scipy's tree picks an arbitrary member of a tie set, so exact ties
        (detected through a k=2 query) are re-resolved by scanning every
        point at the minimum distance. Distances are recomputed with the
        same formula the brute-force oracle uses, which keeps them exactly
        comparable.
        """
        n = len(self)
        if n == 1:
            d = np.sqrt(((qs - self.points[0]) ** 2).sum(axis=1))
            return np.zeros(len(qs), dtype=np.int64), d

        dists, idxs = self._tree.query(qs, k=2)
        best = idxs[:, 0].astype(np.int64)
        # A tie set member can sit one ulp past the reported distance in the
        # tree's arithmetic, so near-equal rows are re-resolved too and the
        # ball radius is inflated; the recomputed distances decide the winner.
        tied = np.nonzero(dists[:, 1] - dists[:, 0] <= dists[:, 0] * 1e-12)[0]
        for row in tied:
            r = dists[row, 0] * (1.0 + 1e-9)
            cand = self._tree.query_ball_point(qs[row], r=r)
            if not cand:
                continue
            cd = np.sqrt(((self.points[cand] - qs[row]) ** 2).sum(axis=1))
            cmin = cd.min()
            best[row] = min(c for c, d in zip(cand, cd) if d == cmin)
        out_d = np.sqrt(((self.points[best] - qs) ** 2).sum(axis=1))
        return best, out_d

    def nearest(self, q):
        """Nearest indexed point to ``q``.

        Accepts a single (3,) point or an (m, 3) batch; returns
        ``(index, distance)`` scalars or arrays accordingly.
        """
        q = np.asarray(q, dtype=np.float64)
        single = q.ndim == 1
        qs = np.atleast_2d(q)
        idx, dist = self._query(qs)
        if single:
            return int(idx[0]), float(dist[0])
        return idx, dist

    def nearest_direction(self, u):
        """Indexed unit vector with the largest dot product against ``u``.

        Both the query and every indexed point must be unit length within
        1e-9. Returns ``(index, dot)``; batches work as in :meth:`nearest`.
        """
        if self._unit is None:
            norms = np.sqrt((self.points**2).sum(axis=1))
            self._unit = bool(np.abs(norms - 1.0).max() <= _UNIT_TOL)
        if not self._unit:
            raise NotUnitNorm("indexed points are not unit vectors")

        u = np.asarray(u, dtype=np.float64)
        single = u.ndim == 1
        us = np.atleast_2d(u)
        qn = np.sqrt((us**2).sum(axis=1))
        if np.abs(qn - 1.0).max() > _UNIT_TOL:
            raise NotUnitNorm("query direction is not unit length")

        idx, _ = self._query(us)
        dots = np.einsum("ij,ij->i", self.points[idx], us)
        if single:
            return int(idx[0]), float(dots[0])
        return idx, dots


def build(points) -> NNIndex:
    """Build an index over an (n, 3) array of points."""
    return NNIndex(points)
