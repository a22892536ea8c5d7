"""Rigid poses and pose carriers.

A Pose stores a single rigid transformation (R, t). Semantically a pose of a
symmetric object is the whole equivalence class {(R G, t) | G in the proper
symmetry group}; the stored matrix is never canonicalized, the metric owns
the equivalence.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError

POSE_TOL = 1e-9


@dataclass(frozen=True)
class Pose:
    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        r = np.ascontiguousarray(np.asarray(self.rotation, dtype=np.float64))
        t = np.ascontiguousarray(np.asarray(self.translation, dtype=np.float64)).reshape(3)
        if r.shape != (3, 3):
            raise DataError(f"rotation must be 3x3, got {r.shape}")
        if np.abs(r.T @ r - np.eye(3)).max() > POSE_TOL:
            raise DataError("rotation matrix is not orthogonal")
        if abs(np.linalg.det(r) - 1.0) > POSE_TOL:
            raise DataError("rotation matrix must have determinant +1")
        r.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls) -> "Pose":
        return cls(np.eye(3), np.zeros(3))

    def compose(self, other: "Pose") -> "Pose":
        """self after other: (self o other)(x) = self(other(x))."""
        return Pose(self.rotation @ other.rotation,
                    self.rotation @ other.translation + self.translation)

    def rotated_by_element(self, g) -> "Pose":
        """Right-compose with a symmetry rotation: same pose class, (R G, t)."""
        return Pose(self.rotation @ np.asarray(g, dtype=np.float64), self.translation)

    def apply(self, points) -> np.ndarray:
        """Transform (N, 3) or (3,) points."""
        pts = np.asarray(points, dtype=np.float64)
        return pts @ self.rotation.T + self.translation

    def inverse(self) -> "Pose":
        return Pose(self.rotation.T, -(self.rotation.T @ self.translation))

    # --- serialization: 9 row-major rotation floats + 3 translation floats.
    # Floats are emitted with repr, which round-trips doubles exactly
    # (up to 17 significant digits).

    def to_flat(self) -> list:
        return [float(x) for x in self.rotation.reshape(9)] + [float(x) for x in self.translation]

    @classmethod
    def from_flat(cls, values) -> "Pose":
        arr = np.asarray(values, dtype=np.float64).reshape(-1)
        if arr.size != 12:
            raise DataError(f"flat pose must have 12 values, got {arr.size}")
        return cls(arr[:9].reshape(3, 3), arr[9:])


@dataclass(frozen=True)
class ScoredPose:
    """A pose hypothesis or vote with a finite score (higher is better)."""

    pose: Pose
    score: float
    id: int | str = 0

    def __post_init__(self):
        if not np.isfinite(self.score):
            raise DataError(f"score must be finite, got {self.score}")


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    """Uniform rotation from a normalized Gaussian quaternion."""
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
        [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
        [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
    ])


def random_pose(rng: np.random.Generator, translation_scale: float = 1.0) -> Pose:
    return Pose(random_rotation(rng), rng.uniform(-translation_scale, translation_scale, size=3))
