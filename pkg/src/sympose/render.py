"""Depth rendering of posed object instances through a pinhole camera.

The per-pixel work is done by one of two interchangeable kernel backends:
a Cython extension (sympose._zbuffer, built at install time) and a pure-numpy
fallback (sympose._zbuffer_py). The compiled backend is picked when available
unless SYMPOSE_PURE_PYTHON is set; both produce bit-identical buffers, and
benchmarks/bench_kernels.py compares their throughput.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from . import _zbuffer_py
from .errors import DataError
from .model import ObjectModel
from .pnp import CameraModel

try:
    from . import _zbuffer
except ImportError:
    _zbuffer = None

_NEAR_PLANE = 1e-9


def available_backends():
    backends = {"python": _zbuffer_py}
    if _zbuffer is not None:
        backends["compiled"] = _zbuffer
    return backends


def default_backend():
    if os.environ.get("SYMPOSE_PURE_PYTHON"):
        return _zbuffer_py
    return _zbuffer if _zbuffer is not None else _zbuffer_py


@dataclass(frozen=True)
class DepthImage:
    """Z-buffer output: depth along the optical axis (0 where empty) and the
    winning instance id per pixel (-1 where none)."""

    depth: np.ndarray
    instance_ids: np.ndarray

    @property
    def width(self):
        return self.depth.shape[1]

    @property
    def height(self):
        return self.depth.shape[0]


def _project_triangles(poses, obj: ObjectModel, cam: CameraModel):
    """Screen-space triangle soup for all instances.

    Returns (tri_xy (M, 3, 2), tri_invz (M, 3), tri_id (M,) int32). Triangles
    with any corner at camera depth <= 0 are dropped (no near-plane clipping);
    lateral frustum clipping happens per pixel in the kernels.
    """
    mesh = obj.require_mesh()
    k = cam.intrinsics
    fx, s, cx0 = k[0, 0], k[0, 1], k[0, 2]
    fy, cy0 = k[1, 1], k[1, 2]
    xy_parts, invz_parts, id_parts = [], [], []
    for idx, pose in enumerate(poses):
        pc = cam.camera_points(pose.apply(mesh.vertices))
        z = pc[:, 2]
        with np.errstate(divide="ignore", invalid="ignore"):
            u = fx * pc[:, 0] / z + s * pc[:, 1] / z + cx0
            v = fy * pc[:, 1] / z + cy0
        corners_z = z[mesh.triangles]
        valid = (corners_z > _NEAR_PLANE).all(axis=1)
        if not valid.any():
            continue
        tris = mesh.triangles[valid]
        xy_parts.append(np.stack([u[tris], v[tris]], axis=2))
        invz_parts.append(1.0 / z[tris])
        id_parts.append(np.full(len(tris), idx, dtype=np.int32))
    if not xy_parts:
        return (np.zeros((0, 3, 2)), np.zeros((0, 3)), np.zeros(0, dtype=np.int32))
    return (np.ascontiguousarray(np.concatenate(xy_parts)),
            np.ascontiguousarray(np.concatenate(invz_parts)),
            np.concatenate(id_parts))


def render_depth(poses, obj: ObjectModel, cam: CameraModel, size=(640, 480),
                 backend=None) -> DepthImage:
    """Z-buffer render of all instances; back-face culling off, no antialiasing.

    ``size`` is (width, height) in pixels. Deterministic: identical inputs
    produce bit-identical images.
    """
    width, height = int(size[0]), int(size[1])
    if width <= 0 or height <= 0:
        raise DataError(f"image size must be positive, got {size}")
    kernels = backend or default_backend()
    tri_xy, tri_invz, tri_id = _project_triangles(poses, obj, cam)
    depth = np.full((height, width), np.inf)
    ids = np.full((height, width), -1, dtype=np.int32)
    kernels.fill_zbuffer(tri_xy, tri_invz, tri_id, depth, ids)
    depth[ids < 0] = 0.0
    return DepthImage(depth=depth, instance_ids=ids)


def occlusion_rates(poses, obj: ObjectModel, cam: CameraModel, size=(640, 480),
                    backend=None) -> np.ndarray:
    """Occlusion rate per instance: 1 - (pixels won in the full scene) /
    (pixels covered when rendered alone); 1.0 for instances fully outside
    the frustum."""
    poses = list(poses)
    width, height = int(size[0]), int(size[1])
    if width <= 0 or height <= 0:
        raise DataError(f"image size must be positive, got {size}")
    kernels = backend or default_backend()
    scene = render_depth(poses, obj, cam, size, backend=kernels)
    visible = np.bincount(
        scene.instance_ids[scene.instance_ids >= 0].reshape(-1), minlength=len(poses))
    rates = np.empty(len(poses))
    for i, pose in enumerate(poses):
        tri_xy, _, _ = _project_triangles([pose], obj, cam)
        mask = np.zeros((height, width), dtype=np.uint8)
        kernels.coverage_mask(tri_xy, mask)
        alone = int(mask.sum())
        rates[i] = 1.0 - visible[i] / alone if alone > 0 else 1.0
    return rates
