"""Proper symmetry groups of rigid objects.

Four classes cover every bounded object: a finite rotation subgroup, the two
revolution classes (continuous rotation about the object-frame z axis,
optionally with an additional half-turn flipping that axis), and full
spherical symmetry. Finite groups carry an explicit rotation list, identity
first; revolution and spherical classes do not.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import SymmetryError

FINITE = "finite"
REVOLUTION = "revolution"
REVOLUTION_ROTOREFLECTION = "revolution_rotoreflection"
SPHERICAL = "spherical"

CLASSES = (FINITE, REVOLUTION, REVOLUTION_ROTOREFLECTION, SPHERICAL)

GROUP_TOL = 1e-9


def rotation_about(axis, angle: float) -> np.ndarray:
    """Rotation matrix for ``angle`` radians about ``axis`` (Rodrigues)."""
    axis = np.asarray(axis, dtype=np.float64)
    n = np.linalg.norm(axis)
    if n == 0:
        raise ValueError("zero rotation axis")
    x, y, z = axis / n
    k = np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])
    return np.eye(3) + np.sin(angle) * k + (1.0 - np.cos(angle)) * (k @ k)


def rot_x(angle: float) -> np.ndarray:
    return rotation_about((1.0, 0.0, 0.0), angle)


def rot_z(angle: float) -> np.ndarray:
    return rotation_about((0.0, 0.0, 1.0), angle)


def quaternion_to_matrix(q) -> np.ndarray:
    """Unit quaternion (w, x, y, z) to rotation matrix."""
    q = np.asarray(q, dtype=np.float64)
    q = q / np.linalg.norm(q)
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
        [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
        [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
    ])


def is_rotation(m: np.ndarray, tol: float = GROUP_TOL) -> bool:
    m = np.asarray(m, dtype=np.float64)
    if m.shape != (3, 3):
        return False
    return (
        np.abs(m.T @ m - np.eye(3)).max() < tol
        and abs(np.linalg.det(m) - 1.0) < tol
    )


def validate_group(rotations, tol: float = GROUP_TOL):
    """Check the group axioms on an explicit rotation list.

    Returns (ok, diagnostics) where diagnostics is a list of human-readable
    violations. Verifies: every element is a proper rotation, the identity is
    present, and the list is closed under composition and inverse within
    ``tol`` (element match = max absolute entry difference below ``tol``).
    """
    try:
        mats = np.asarray(rotations, dtype=np.float64)
    except (ValueError, TypeError):
        return False, ["rotation list is not an array of 3x3 matrices"]
    problems = []
    if mats.size == 0:
        return False, ["empty rotation list"]
    if mats.ndim != 3 or mats.shape[1:] != (3, 3):
        return False, [f"rotation list has shape {mats.shape}, expected (n, 3, 3)"]
    n = len(mats)
    ortho = np.abs(np.einsum("nji,njk->nik", mats, mats) - np.eye(3)).max(axis=(1, 2))
    dets = np.linalg.det(mats)
    for i in range(n):
        if ortho[i] >= tol:
            problems.append(f"element {i} is not orthogonal")
        elif dets[i] < 0:
            problems.append(f"element {i} is a reflection (det -1)")
    if problems:
        return False, problems

    def find_all(queries):
        # queries (m, 3, 3) -> index of matching group element or -1, per query
        diff = np.abs(queries[:, None] - mats[None]).max(axis=(2, 3))
        hit = diff < tol
        return np.where(hit.any(axis=1), hit.argmax(axis=1), -1)

    if find_all(np.eye(3)[None])[0] < 0:
        problems.append("identity is missing")
    missing_inv = find_all(mats.transpose(0, 2, 1)) < 0
    for i in np.flatnonzero(missing_inv):
        problems.append(f"inverse of element {i} is missing")
    products = np.einsum("aij,bjk->abik", mats, mats).reshape(n * n, 3, 3)
    missing_prod = (find_all(products) < 0).reshape(n, n)
    for i, j in zip(*np.nonzero(missing_prod)):
        problems.append(f"product of elements {i} and {j} is missing (not closed)")
    # duplicates make |G| ambiguous
    pair_diff = np.abs(mats[:, None] - mats[None]).max(axis=(2, 3))
    dup = np.triu(pair_diff < tol, k=1)
    for i, j in zip(*np.nonzero(dup)):
        problems.append(f"elements {i} and {j} are duplicates")
    return not problems, problems


def _canonical_order(mats):
    """Identity first, remaining elements in input order."""
    idx = next(
        (i for i, m in enumerate(mats) if np.abs(m - np.eye(3)).max() < GROUP_TOL), None)
    out = [np.eye(3)]
    out.extend(m for i, m in enumerate(mats) if i != idx)
    return out


@dataclass(frozen=True)
class ProperSymmetryGroup:
    """Symmetry class plus, for the finite class, the explicit rotation list.

    The symmetry axis of revolution classes is the object-frame z axis by
    convention. ``rotations`` is a read-only (|G|, 3, 3) array with the
    identity first; it is None for the non-finite classes.
    """

    kind: str
    rotations: np.ndarray | None = field(default=None)

    def __post_init__(self):
        if self.kind not in CLASSES:
            raise SymmetryError(f"unknown symmetry class '{self.kind}'")
        if self.kind == FINITE:
            if self.rotations is None:
                raise SymmetryError("finite symmetry class requires a rotation list")
            mats = [np.asarray(r, dtype=np.float64) for r in self.rotations]
            ok, problems = validate_group(mats)
            if not ok:
                raise SymmetryError("rotation list is not a group: " + "; ".join(problems))
            arr = np.ascontiguousarray(_canonical_order(mats))
            arr.setflags(write=False)
            object.__setattr__(self, "rotations", arr)
        elif self.rotations is not None:
            raise SymmetryError(f"symmetry class '{self.kind}' carries no rotation list")

    @property
    def order(self) -> int:
        """|G| for the finite class; None is returned for continuous groups."""
        return len(self.rotations) if self.kind == FINITE else None

    @classmethod
    def trivial(cls) -> "ProperSymmetryGroup":
        return cls(FINITE, [np.eye(3)])

    @classmethod
    def cyclic(cls, n: int) -> "ProperSymmetryGroup":
        """Cyclic group of order n about the z axis."""
        if n < 1:
            raise SymmetryError("cyclic order must be >= 1")
        return cls(FINITE, [rot_z(2.0 * np.pi * k / n) for k in range(n)])

    @classmethod
    def dihedral(cls, n: int) -> "ProperSymmetryGroup":
        """Dihedral group of order 2n: n-fold about z plus n half-turns in the xy plane."""
        if n < 1:
            raise SymmetryError("dihedral order must be >= 1")
        mats = [rot_z(2.0 * np.pi * k / n) for k in range(n)]
        mats += [rot_z(2.0 * np.pi * k / n) @ rot_x(np.pi) for k in range(n)]
        return cls(FINITE, mats)

    @classmethod
    def icosahedral(cls) -> "ProperSymmetryGroup":
        """Rotation group of the icosahedron, order 60, generated by closure."""
        phi = (1.0 + np.sqrt(5.0)) / 2.0
        gens = [rot_z(np.pi), rotation_about((0.0, 1.0, phi), 2.0 * np.pi / 5.0)]
        return cls(FINITE, close_under_composition(gens))

    @classmethod
    def revolution(cls, rotoreflection: bool = False) -> "ProperSymmetryGroup":
        return cls(REVOLUTION_ROTOREFLECTION if rotoreflection else REVOLUTION)

    @classmethod
    def spherical(cls) -> "ProperSymmetryGroup":
        return cls(SPHERICAL)


def close_under_composition(generators, tol: float = 1e-6, max_order: int = 1000):
    """Close a set of rotations under composition. Raises if the group blows up.

    Breadth-first, and every accepted element is snapped to the nearest
    rotation (SVD), so numerical drift cannot compound into spurious
    near-duplicate elements however large the group is.
    """
    from collections import deque

    mats = [np.eye(3)]

    def snap(m):
        u, _, vt = np.linalg.svd(m)
        return u @ np.diag([1.0, 1.0, np.sign(np.linalg.det(u @ vt))]) @ vt

    def find(m):
        return bool((np.abs(np.asarray(mats) - m).max(axis=(1, 2)) < tol).any())

    frontier = deque(np.asarray(g, dtype=np.float64) for g in generators)
    while frontier:
        m = snap(frontier.popleft())
        if find(m):
            continue
        mats.append(m)
        if len(mats) > max_order:
            raise SymmetryError(f"group closure exceeded {max_order} elements")
        for g in mats[1:]:
            frontier.append(m @ g)
            frontier.append(g @ m)
    return mats
