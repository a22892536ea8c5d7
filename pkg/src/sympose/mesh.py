"""Triangle meshes and their exact surface moments.

All surface quantities (area, centroid, second moment) are closed-form
integrals over each triangle, so they are exact for the piecewise-linear
surface and independent of tessellation density.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import MeshError

_DEGENERATE_AREA = 1e-30


@dataclass(frozen=True)
class TriangleMesh:
    """Indexed triangle soup. ``vertices`` is (N, 3), ``triangles`` (M, 3) int."""

    vertices: np.ndarray
    triangles: np.ndarray

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.vertices, dtype=np.float64))
        t = np.ascontiguousarray(np.asarray(self.triangles, dtype=np.int64))
        if v.ndim != 2 or v.shape[1] != 3:
            raise MeshError(f"vertices must be (N, 3), got {v.shape}")
        if t.ndim != 2 or t.shape[1] != 3 or len(t) == 0:
            raise MeshError(f"triangles must be (M, 3) with M >= 1, got {t.shape}")
        if t.min() < 0 or t.max() >= len(v):
            raise MeshError("triangle index out of range")
        v.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "triangles", t)
        if self.area() <= _DEGENERATE_AREA:
            raise MeshError("degenerate surface: total area is zero")

    def corners(self):
        """Triangle corner positions as three (M, 3) arrays."""
        a, b, c = (self.vertices[self.triangles[:, i]] for i in range(3))
        return a, b, c

    def triangle_areas(self) -> np.ndarray:
        a, b, c = self.corners()
        return 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)

    def area(self) -> float:
        return float(self.triangle_areas().sum())

    def translated(self, offset) -> "TriangleMesh":
        return TriangleMesh(self.vertices + np.asarray(offset, dtype=np.float64), self.triangles)

    def transformed(self, rotation, translation=(0.0, 0.0, 0.0)) -> "TriangleMesh":
        rotation = np.asarray(rotation, dtype=np.float64)
        return TriangleMesh(self.vertices @ rotation.T + np.asarray(translation, dtype=np.float64), self.triangles)


def surface_centroid(mesh: TriangleMesh) -> np.ndarray:
    """Area-weighted mean of triangle centroids (exact surface centroid)."""
    areas = mesh.triangle_areas()
    total = areas.sum()
    if total <= _DEGENERATE_AREA:
        raise MeshError("degenerate surface: total area is zero")
    a, b, c = mesh.corners()
    centroids = (a + b + c) / 3.0
    return (areas[:, None] * centroids).sum(axis=0) / total


def second_moment(mesh: TriangleMesh) -> np.ndarray:
    """Area-normalized second moment of the surface, (1/S) * integral of x x^T ds.

    Uses the closed form per triangle with corners A, B, C and area T:

        integral x x^T ds = (T / 12) * (A A^T + B B^T + C C^T + s s^T),  s = A + B + C

    which is exact for the flat triangle (quadratic integrand).
    """
    areas = mesh.triangle_areas()
    total = areas.sum()
    if total <= _DEGENERATE_AREA:
        raise MeshError("degenerate surface: total area is zero")
    a, b, c = mesh.corners()
    s = a + b + c
    m = (
        np.einsum("ni,nj->ij", areas[:, None] * a, a)
        + np.einsum("ni,nj->ij", areas[:, None] * b, b)
        + np.einsum("ni,nj->ij", areas[:, None] * c, c)
        + np.einsum("ni,nj->ij", areas[:, None] * s, s)
    ) / 12.0
    m /= total
    return 0.5 * (m + m.T)


def sqrtm_psd(m: np.ndarray, clamp_tol: float = 1e-12) -> np.ndarray:
    """Symmetric PSD matrix square root via eigendecomposition.

    Eigenvalues in [-clamp_tol * trace, 0) are clamped to zero (numerical
    noise); anything more negative raises.
    """
    m = 0.5 * (m + m.T)
    w, v = np.linalg.eigh(m)
    floor = -clamp_tol * max(np.trace(m), np.finfo(float).tiny)
    if w.min() < floor:
        raise MeshError(f"matrix is not PSD: eigenvalue {w.min():g}")
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.T


def compute_lambda(mesh: TriangleMesh) -> np.ndarray:
    """Geometry-weighting matrix: square root of the surface second moment.

    The mesh is expected to be centered at its surface centroid; the result
    is computed about the origin of the mesh frame either way.
    """
    return sqrtm_psd(second_moment(mesh))


def monte_carlo_second_moment(mesh: TriangleMesh, n_samples: int, seed: int = 0) -> np.ndarray:
    """Monte-Carlo estimate of (1/S) * integral of x x^T ds, for cross-checks.

    Samples points uniformly on the surface (area-weighted triangle choice,
    uniform barycentric placement). Independent of the closed-form route.
    """
    rng = np.random.default_rng(seed)
    areas = mesh.triangle_areas()
    probs = areas / areas.sum()
    idx = rng.choice(len(areas), size=n_samples, p=probs)
    a, b, c = mesh.corners()
    r1 = np.sqrt(rng.random(n_samples))
    r2 = rng.random(n_samples)
    pts = (
        (1.0 - r1)[:, None] * a[idx]
        + (r1 * (1.0 - r2))[:, None] * b[idx]
        + (r1 * r2)[:, None] * c[idx]
    )
    return (pts.T @ pts) / n_samples


def mesh_diameter(mesh: TriangleMesh, center) -> float:
    """Diameter of the smallest sphere around ``center`` enclosing all vertices."""
    return 2.0 * float(np.linalg.norm(mesh.vertices - np.asarray(center), axis=1).max())


# ---------------------------------------------------------------------------
# File loading: OBJ and PLY, triangles only.

def load_mesh(path) -> TriangleMesh:
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".obj":
        return _load_obj(path)
    if suffix == ".ply":
        return _load_ply(path)
    raise MeshError(f"unsupported mesh format '{suffix}' (expected .obj or .ply)")


def _load_obj(path: Path) -> TriangleMesh:
    vertices = []
    faces = []
    with open(path, "r", errors="replace") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            if parts[0] == "v":
                if len(parts) < 4:
                    raise MeshError(f"{path}:{lineno}: bad vertex line")
                vertices.append([float(x) for x in parts[1:4]])
            elif parts[0] == "f":
                idx = [int(p.split("/")[0]) for p in parts[1:]]
                if len(idx) != 3:
                    raise MeshError(f"{path}:{lineno}: only triangular faces are supported")
                faces.append([i - 1 if i > 0 else len(vertices) + i for i in idx])
    if not vertices or not faces:
        raise MeshError(f"{path}: no triangles found")
    return TriangleMesh(np.array(vertices), np.array(faces))


def _load_ply(path: Path) -> TriangleMesh:
    with open(path, "rb") as fh:
        magic = fh.readline().strip()
        if magic != b"ply":
            raise MeshError(f"{path}: not a PLY file")
        fmt = None
        elements = []  # (name, count, [(prop_type, prop_name) or ('list', count_t, item_t, name)])
        while True:
            line = fh.readline()
            if not line:
                raise MeshError(f"{path}: unexpected end of header")
            tokens = line.decode("ascii", errors="replace").split()
            if not tokens:
                continue
            if tokens[0] == "format":
                fmt = tokens[1]
            elif tokens[0] == "element":
                elements.append((tokens[1], int(tokens[2]), []))
            elif tokens[0] == "property":
                if not elements:
                    raise MeshError(f"{path}: property before element")
                if tokens[1] == "list":
                    elements[-1][2].append(("list", tokens[2], tokens[3], tokens[4]))
                else:
                    elements[-1][2].append((tokens[1], tokens[2]))
            elif tokens[0] == "end_header":
                break
        if fmt == "ascii":
            return _parse_ply_ascii(fh, elements, path)
        if fmt == "binary_little_endian":
            return _parse_ply_binary(fh, elements, path)
        raise MeshError(f"{path}: unsupported PLY format '{fmt}'")


_PLY_STRUCT = {
    "char": "b", "int8": "b", "uchar": "B", "uint8": "B",
    "short": "h", "int16": "h", "ushort": "H", "uint16": "H",
    "int": "i", "int32": "i", "uint": "I", "uint32": "I",
    "float": "f", "float32": "f", "double": "d", "float64": "d",
}


def _parse_ply_ascii(fh, elements, path):
    vertices, faces = [], []
    for name, count, props in elements:
        for _ in range(count):
            tokens = fh.readline().split()
            if name == "vertex":
                named = {}
                pos = 0
                for p in props:
                    if p[0] == "list":
                        n = int(tokens[pos]); pos += 1 + n
                    else:
                        named[p[1]] = float(tokens[pos]); pos += 1
                vertices.append([named["x"], named["y"], named["z"]])
            elif name == "face":
                n = int(tokens[0])
                if n != 3:
                    raise MeshError(f"{path}: only triangular faces are supported")
                faces.append([int(t) for t in tokens[1:4]])
    if not vertices or not faces:
        raise MeshError(f"{path}: no triangles found")
    return TriangleMesh(np.array(vertices, dtype=float), np.array(faces))


def _parse_ply_binary(fh, elements, path):
    vertices, faces = [], []
    for name, count, props in elements:
        for _ in range(count):
            named = {}
            for p in props:
                if p[0] == "list":
                    cnt_fmt = _PLY_STRUCT[p[1]]
                    n = struct.unpack("<" + cnt_fmt, fh.read(struct.calcsize(cnt_fmt)))[0]
                    item_fmt = _PLY_STRUCT[p[2]]
                    items = struct.unpack(
                        "<" + item_fmt * n, fh.read(struct.calcsize(item_fmt) * n))
                    named[p[3]] = items
                else:
                    fmt = _PLY_STRUCT[p[0]]
                    named[p[1]] = struct.unpack("<" + fmt, fh.read(struct.calcsize(fmt)))[0]
            if name == "vertex":
                vertices.append([named["x"], named["y"], named["z"]])
            elif name == "face":
                idx = named.get("vertex_indices", named.get("vertex_index"))
                if idx is None or len(idx) != 3:
                    raise MeshError(f"{path}: only triangular faces are supported")
                faces.append(list(idx))
    if not vertices or not faces:
        raise MeshError(f"{path}: no triangles found")
    return TriangleMesh(np.array(vertices, dtype=float), np.array(faces))
