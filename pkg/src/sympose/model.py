"""Object models: mesh + symmetry group + derived geometry.

A loaded model lives in its object frame: the surface centroid sits at the
origin and, for revolution classes, the symmetry axis is z. The derived
quantities consumed everywhere else are the geometry-weighting matrix
``lam`` (square root of the surface second moment), its scalar reduction
``lam_scalar`` for revolution classes, and the enclosing diameter.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import symmetry as sym
from .errors import DataError, MeshError, SymmetryError
from .mesh import TriangleMesh, compute_lambda, load_mesh, mesh_diameter, sqrtm_psd, surface_centroid

AXIAL_SYMMETRY_TOL = 1e-6  # relative to trace(lam)


@dataclass(frozen=True)
class ObjectModel:
    """Immutable object description; safe to share across workers.

    ``lam`` commutes exactly with every declared symmetry element (the second
    moment is symmetrized over the group on construction), which makes the
    pose distance independent of the representative chosen on the left.
    ``mesh`` may be None for models built from bare point sets; operations
    that need actual surface geometry raise in that case.
    """

    group: sym.ProperSymmetryGroup
    lam: np.ndarray
    diameter: float
    mesh: TriangleMesh | None = None
    lam_scalar: float | None = None
    original_centroid: np.ndarray = field(default_factory=lambda: np.zeros(3))
    units: str = "m"
    group_lams: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        lam = np.ascontiguousarray(np.asarray(self.lam, dtype=np.float64))
        lam.setflags(write=False)
        object.__setattr__(self, "lam", lam)
        centroid = np.asarray(self.original_centroid, dtype=np.float64).reshape(3).copy()
        centroid.setflags(write=False)
        object.__setattr__(self, "original_centroid", centroid)
        if self.group.kind == sym.FINITE:
            # precomputed G @ lam stack, identity first: the rotation blocks of
            # the pose representatives are R @ group_lams[g]
            gl = np.ascontiguousarray(np.einsum("gij,jk->gik", self.group.rotations, lam))
            gl.setflags(write=False)
            object.__setattr__(self, "group_lams", gl)
        if self.group.kind in (sym.REVOLUTION, sym.REVOLUTION_ROTOREFLECTION):
            if self.lam_scalar is None:
                lr, lz = lam[0, 0], lam[2, 2]
                object.__setattr__(self, "lam_scalar", float(np.hypot(lr, lz)))

    @property
    def rep_dim(self) -> int:
        """Dimension of the representative embedding: 12, 6 or 3."""
        if self.group.kind == sym.FINITE:
            return 12
        if self.group.kind == sym.SPHERICAL:
            return 3
        return 6

    @property
    def rep_count(self) -> int:
        """Number of representative points per pose."""
        if self.group.kind == sym.FINITE:
            return len(self.group.rotations)
        if self.group.kind == sym.REVOLUTION_ROTOREFLECTION:
            return 2
        return 1

    def require_mesh(self) -> TriangleMesh:
        if self.mesh is None:
            raise MeshError("this operation needs a mesh, but the model has none")
        return self.mesh

    @classmethod
    def from_mesh(cls, mesh: TriangleMesh, group: sym.ProperSymmetryGroup,
                  units: str = "m") -> "ObjectModel":
        """Build a model from a mesh: re-center, compute lam and diameter."""
        centroid = surface_centroid(mesh)
        mesh = mesh.translated(-centroid)
        lam_raw = compute_lambda(mesh)
        lam, lam_scalar = _conditioned_lambda(lam_raw, group)
        return cls(
            group=group,
            lam=lam,
            lam_scalar=lam_scalar,
            diameter=mesh_diameter(mesh, np.zeros(3)),
            mesh=mesh,
            original_centroid=centroid,
            units=units,
        )

    @classmethod
    def from_points(cls, points, group: sym.ProperSymmetryGroup,
                    units: str = "m") -> "ObjectModel":
        """Model from a bare point set, with the discrete second moment.

        Points are centered at their mean and lam is ((1/N) sum x x^T)^(1/2),
        the matched weighting for which the vertex-sampled distance agrees
        with the closed form exactly. No mesh is attached.
        """
        pts = np.asarray(points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 3 or len(pts) == 0:
            raise DataError(f"points must be (N, 3), got {pts.shape}")
        pts = pts - pts.mean(axis=0)
        lam_raw = sqrtm_psd(pts.T @ pts / len(pts))
        lam, lam_scalar = _conditioned_lambda(lam_raw, group)
        return cls(
            group=group,
            lam=lam,
            lam_scalar=lam_scalar,
            diameter=2.0 * float(np.linalg.norm(pts, axis=1).max()),
            mesh=None,
            units=units,
        )


def _conditioned_lambda(lam: np.ndarray, group: sym.ProperSymmetryGroup):
    """Validate lam against the declared symmetry and symmetrize it exactly.

    Finite class: average lam^2 over the group (exact commutation afterwards).
    Revolution classes: require lam ~ diag(lr, lr, lz) within
    AXIAL_SYMMETRY_TOL * trace(lam), then flatten to the exact axial form.
    Returns (lam, lam_scalar or None).
    """
    if group.kind == sym.FINITE:
        m2 = lam @ lam
        m2 = np.einsum("gij,jk,glk->il", group.rotations, m2, group.rotations) / len(group.rotations)
        return sqrtm_psd(m2), None
    if group.kind == sym.SPHERICAL:
        return lam, None
    tol = AXIAL_SYMMETRY_TOL * np.trace(lam)
    axial = np.diag([lam[0, 0], lam[0, 0], lam[2, 2]])
    deviation = max(np.abs(lam - axial).max(), abs(lam[0, 0] - lam[1, 1]))
    if deviation > tol:
        raise SymmetryError(
            f"revolution object is not axially symmetric about z: lam deviates by "
            f"{deviation:g} (tolerance {tol:g})")
    lr = 0.5 * (lam[0, 0] + lam[1, 1])
    lz = lam[2, 2]
    return np.diag([lr, lr, lz]), float(np.hypot(lr, lz))


def parse_symmetry_spec(spec: dict) -> sym.ProperSymmetryGroup:
    """Symmetry descriptor to group.

    Accepts {"class": "finite", "rotations": [...]} with rotations given as
    row-major 9-float lists, 3x3 nested lists or (w, x, y, z) quaternions,
    or the shorthands {"class": "finite", "cyclic_order": n} (about z) and
    {"class": "finite", "dihedral_order": n}. Revolution and spherical
    classes take no rotation list.
    """
    if not isinstance(spec, dict) or "class" not in spec:
        raise DataError("symmetry spec must be an object with a 'class' field")
    kind = spec["class"]
    if kind not in sym.CLASSES:
        raise DataError(f"unknown symmetry class '{kind}'")
    if kind != sym.FINITE:
        for key in ("rotations", "cyclic_order", "dihedral_order"):
            if key in spec:
                raise DataError(f"symmetry class '{kind}' does not accept '{key}'")
        if kind == sym.SPHERICAL:
            return sym.ProperSymmetryGroup.spherical()
        return sym.ProperSymmetryGroup(kind)
    if "rotations" in spec:
        return sym.ProperSymmetryGroup(sym.FINITE, [_parse_rotation(r) for r in spec["rotations"]])
    if "cyclic_order" in spec:
        return sym.ProperSymmetryGroup.cyclic(int(spec["cyclic_order"]))
    if "dihedral_order" in spec:
        return sym.ProperSymmetryGroup.dihedral(int(spec["dihedral_order"]))
    raise DataError("finite symmetry class needs 'rotations', 'cyclic_order' or 'dihedral_order'")


def _parse_rotation(r):
    arr = np.asarray(r, dtype=np.float64)
    if arr.shape == (4,):
        return sym.quaternion_to_matrix(arr)
    if arr.shape == (9,):
        return arr.reshape(3, 3)
    if arr.shape == (3, 3):
        return arr
    raise DataError(f"rotation must be a quaternion (4), flat matrix (9) or 3x3, got shape {arr.shape}")


def to_centered_frame(pose, obj: ObjectModel):
    """Convert a pose expressed in the original mesh frame to the object frame.

    Models are re-centered on load; a pose (R, t) acting on original mesh
    coordinates acts on centered coordinates as (R, R c + t) with c the
    original surface centroid.
    """
    from .pose import Pose
    return Pose(pose.rotation, pose.rotation @ obj.original_centroid + pose.translation)


def to_original_frame(pose, obj: ObjectModel):
    """Inverse of to_centered_frame."""
    from .pose import Pose
    return Pose(pose.rotation, pose.translation - pose.rotation @ obj.original_centroid)


def load_object(descriptor_path) -> ObjectModel:
    """Load an object descriptor JSON and build the model.

    Descriptor: {"mesh": path (relative to the descriptor), "units": "m",
    "symmetry": {...}}. The mesh is re-centered on its surface centroid; the
    original centroid is kept on the model so poses expressed in the original
    mesh frame can be converted.
    """
    descriptor_path = Path(descriptor_path)
    try:
        spec = json.loads(descriptor_path.read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise DataError(f"cannot read object descriptor {descriptor_path}: {e}") from e
    if "mesh" not in spec or "symmetry" not in spec:
        raise DataError(f"{descriptor_path}: descriptor needs 'mesh' and 'symmetry' fields")
    mesh_path = Path(spec["mesh"])
    if not mesh_path.is_absolute():
        mesh_path = descriptor_path.parent / mesh_path
    mesh = load_mesh(mesh_path)
    group = parse_symmetry_spec(spec["symmetry"])
    return ObjectModel.from_mesh(mesh, group, units=spec.get("units", "m"))
