"""Core 3D types and rigid-motion algebra.

Provides the point cloud and rigid transform containers used everywhere
else, plus the small set of SE(3) operations the pipeline needs: apply,
compose, inverse, rotation/translation error, and a least-squares rigid
fit from point correspondences.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .errors import DegenerateInput

F64 = np.float64
Points = NDArray[np.float64]
Vec3 = NDArray[np.float64]
Mat3 = NDArray[np.float64]

# Per-entry tolerance for the orthonormality and determinant invariants.
ROTATION_TOL = 1e-9


def _as_points(a, *, name: str = "points") -> Points:
    pts = np.ascontiguousarray(np.asarray(a, dtype=F64))
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValueError(f"{name} must have shape (n, 3), got {pts.shape}")
    if not np.isfinite(pts).all():
        raise ValueError(f"{name} contains non-finite coordinates")
    return pts


def _as_vec3(a, *, name: str = "vector") -> Vec3:
    v = np.ascontiguousarray(np.asarray(a, dtype=F64)).reshape(-1)
    if v.shape != (3,):
        raise ValueError(f"{name} must have shape (3,), got {np.shape(a)}")
    if not np.isfinite(v).all():
        raise ValueError(f"{name} contains non-finite coordinates")
    return v


@dataclass(frozen=True, eq=False)
class PointCloud:
    """Immutable set of 3D points with the sensor origin that observed them.

    ``points`` is (n, 3) float64 and ``viewpoint`` is the sensor position in
    the same frame. An empty cloud is representable (it occurs naturally as
    the result of overlap filtering); operations that need points say so.
    """

    points: Points
    viewpoint: Vec3 = None  # type: ignore[assignment]

    def __post_init__(self):
        pts = _as_points(self.points)
        vp = np.zeros(3) if self.viewpoint is None else _as_vec3(self.viewpoint, name="viewpoint")
        pts.flags.writeable = False
        vp.flags.writeable = False
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "viewpoint", vp)

    def __len__(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True, eq=False)
class RigidTransform:
    """Proper rigid motion: x -> rotation @ x + translation.

    The rotation block must be orthonormal with determinant +1, both within
    1e-9 per entry; the constructor rejects anything else.
    """

    rotation: Mat3
    translation: Vec3

    def __post_init__(self):
        r = np.ascontiguousarray(np.asarray(self.rotation, dtype=F64))
        t = _as_vec3(self.translation, name="translation")
        if r.shape != (3, 3):
            raise ValueError(f"rotation must be 3x3, got {r.shape}")
        if not np.isfinite(r).all():
            raise ValueError("rotation contains non-finite entries")
        err = np.abs(r.T @ r - np.eye(3)).max()
        if err > ROTATION_TOL:
            raise ValueError(f"rotation is not orthonormal (max deviation {err:.3e})")
        det = np.linalg.det(r)
        if abs(det - 1.0) > ROTATION_TOL:
            raise ValueError(f"rotation determinant {det!r} is not +1")
        r.flags.writeable = False
        t.flags.writeable = False
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)

    def as_matrix(self) -> NDArray[np.float64]:
        """Return the 4x4 homogeneous matrix."""
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.translation
        return m

    @classmethod
    def from_matrix(cls, m) -> "RigidTransform":
        m = np.asarray(m, dtype=F64)
        if m.shape != (4, 4):
            raise ValueError(f"expected a 4x4 matrix, got {m.shape}")
        return cls(m[:3, :3], m[:3, 3])


def identity() -> RigidTransform:
    """The identity motion."""
    return RigidTransform(np.eye(3), np.zeros(3))


def transform_points(t: RigidTransform, pts: Points) -> Points:
    """Apply ``t`` to a raw (n, 3) array."""
    return pts @ t.rotation.T + t.translation


def apply(t: RigidTransform, pc: PointCloud) -> PointCloud:
    """Transform a cloud, carrying its viewpoint through the same motion."""
    return PointCloud(
        transform_points(t, pc.points),
        t.rotation @ pc.viewpoint + t.translation,
    )


def compose(a: RigidTransform, b: RigidTransform) -> RigidTransform:
    """Motion equal to applying ``b`` first, then ``a``."""
    return RigidTransform(a.rotation @ b.rotation, a.rotation @ b.translation + a.translation)


def inverse(t: RigidTransform) -> RigidTransform:
    """Inverse motion (R^T, -R^T t)."""
    rt = np.ascontiguousarray(t.rotation.T)
    return RigidTransform(rt, -(rt @ t.translation))


def rotation_error(a: RigidTransform, b: RigidTransform) -> float:
    """Geodesic angle between the two rotations, in degrees.

    The arccos argument is clamped to [-1, 1] so that rotations equal up to
    floating point noise report exactly zero instead of NaN.  Bitwise equal
    rotations short-circuit to 0.0: arccos loses roughly half the mantissa
    near 1, and the true angle there is exactly zero.
    """
    if np.array_equal(a.rotation, b.rotation):
        return 0.0
    c = (np.trace(a.rotation.T @ b.rotation) - 1.0) / 2.0
    return float(np.degrees(np.arccos(np.clip(c, -1.0, 1.0))))


def translation_error(a: RigidTransform, b: RigidTransform) -> float:
    """Euclidean distance between the two translation vectors."""
    return float(np.linalg.norm(a.translation - b.translation))


def fit_rigid(src_pts, dst_pts) -> RigidTransform:
    """Least-squares rigid motion mapping ``src_pts`` onto ``dst_pts``.

    Standard SVD solution of the orthogonal Procrustes problem with a
    determinant correction so a reflection is never returned. Requires at
    least 3 pairs in a non-collinear configuration.
    """
    a = _as_points(src_pts, name="src_pts")
    b = _as_points(dst_pts, name="dst_pts")
    if a.shape != b.shape:
        raise ValueError(f"point arrays differ in shape: {a.shape} vs {b.shape}")
    n = a.shape[0]
    if n < 3:
        raise DegenerateInput(f"need at least 3 correspondences, got {n}")

    ca = a.mean(axis=0)
    cb = b.mean(axis=0)
    ac = a - ca
    bc = b - cb

    # Collinear (or coincident) configurations leave a rotation axis free.
    for centered, which in ((ac, "source"), (bc, "target")):
        s = np.linalg.svd(centered, compute_uv=False)
        if s[1] <= 1e-9 * max(s[0], 1.0):
            raise DegenerateInput(f"{which} points are collinear or coincident")

    h = ac.T @ bc
    u, _, vt = np.linalg.svd(h)
    d = np.sign(np.linalg.det(vt.T @ u.T))
    corr = np.diag([1.0, 1.0, d])
    r = vt.T @ corr @ u.T
    return RigidTransform(r, cb - r @ ca)


def rotation_x(angle: float) -> Mat3:
    """Rotation matrix about the x axis, angle in radians."""
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rotation_y(angle: float) -> Mat3:
    """Rotation matrix about the y axis, angle in radians."""
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rotation_z(angle: float) -> Mat3:
    """Rotation matrix about the z axis, angle in radians."""
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def axis_angle_rotation(axis, angle: float) -> Mat3:
    """Rodrigues rotation about an arbitrary axis, angle in radians."""
    u = _as_vec3(axis, name="axis")
    n = np.linalg.norm(u)
    if n == 0.0:
        raise ValueError("rotation axis must be nonzero")
    u = u / n
    k = np.array([[0.0, -u[2], u[1]], [u[2], 0.0, -u[0]], [-u[1], u[0], 0.0]])
    return np.eye(3) + np.sin(angle) * k + (1.0 - np.cos(angle)) * (k @ k)


def random_rotation(rng: np.random.Generator) -> Mat3:
    """Uniform random rotation from a normalized quaternion."""
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )
