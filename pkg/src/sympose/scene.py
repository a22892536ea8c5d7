"""Synthetic evaluation fixtures: collision-free bulk scenes with occlusion
annotation.

Instance poses are sampled with uniform random orientations and uniform
positions inside an axis-aligned bin, rejecting placements whose enclosing
spheres (radius = diameter / 2 around the centroid) intersect each other or
the bin walls. The scenes are valid, deterministic evaluation fixtures with
high pose variability, not physically settled piles.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError, NumericalError
from .evaluation import GroundTruthInstance
from .model import ObjectModel
from .pnp import CameraModel
from .pose import Pose, random_rotation
from .render import occlusion_rates

MAX_PLACEMENT_TRIES = 10_000


@dataclass(frozen=True)
class SceneSpec:
    """Recipe for one sampled scene; rng_seed makes it reproducible."""

    instance_count: int
    bin_min: np.ndarray
    bin_max: np.ndarray
    rng_seed: int = 0

    def __post_init__(self):
        lo = np.asarray(self.bin_min, dtype=np.float64).reshape(3)
        hi = np.asarray(self.bin_max, dtype=np.float64).reshape(3)
        if not (hi > lo).all():
            raise DataError("bin_max must exceed bin_min on every axis")
        if self.instance_count < 1:
            raise DataError("instance_count must be >= 1")
        object.__setattr__(self, "bin_min", lo)
        object.__setattr__(self, "bin_max", hi)


def sample_scene(spec: SceneSpec, obj: ObjectModel):
    """Collision-free instance poses, deterministic in the seed.

    Returns a list of Pose. Raises NumericalError when instances cannot be
    placed within the retry budget (bin too small for the requested count).
    """
    radius = 0.5 * obj.diameter
    lo = spec.bin_min + radius
    hi = spec.bin_max - radius
    if not (hi >= lo).all():
        raise DataError("bin cannot admit a single enclosing sphere")
    rng = np.random.default_rng(np.random.SeedSequence(spec.rng_seed))
    centers = []
    poses = []
    for _ in range(spec.instance_count):
        for _try in range(MAX_PLACEMENT_TRIES):
            rot = random_rotation(rng)
            t = rng.uniform(lo, hi)
            if all(np.linalg.norm(t - c) >= obj.diameter for c in centers):
                centers.append(t)
                poses.append(Pose(rot, t))
                break
        else:
            raise NumericalError(
                f"could not place instance {len(poses) + 1}/{spec.instance_count} "
                f"after {MAX_PLACEMENT_TRIES} tries; enlarge the bin or reduce the count")
    return poses


def top_view_camera(spec: SceneSpec, size=(640, 480), focal: float = 600.0) -> CameraModel:
    """Deterministic camera centered above the bin, looking straight down.

    The height is chosen so the whole bin fits the view with a 10% margin.
    Camera x follows world x; y and z are flipped so depths are positive.
    """
    width, height = size
    k = np.array([[focal, 0.0, width / 2.0],
                  [0.0, focal, height / 2.0],
                  [0.0, 0.0, 1.0]])
    center = 0.5 * (spec.bin_min + spec.bin_max)
    half = 0.5 * (spec.bin_max - spec.bin_min)
    # top-down axes: x_cam = x_world, y_cam = -y_world, z_cam = -z_world
    rot = np.diag([1.0, -1.0, -1.0])
    tan_x = (width / 2.0) / focal
    tan_y = (height / 2.0) / focal
    clearance = 1.1 * max(half[0] / tan_x, half[1] / tan_y)
    eye = np.array([center[0], center[1], spec.bin_max[2] + clearance])
    return CameraModel(intrinsics=k, rotation=rot, translation=-(rot @ eye))


def annotate_scene(spec: SceneSpec, obj: ObjectModel, cam: CameraModel | None = None,
                   size=(640, 480), backend=None):
    """Sample a scene and attach render-based occlusion rates.

    Returns (instances, camera) where instances is a list of
    GroundTruthInstance.
    """
    poses = sample_scene(spec, obj)
    if cam is None:
        cam = top_view_camera(spec, size)
    rates = occlusion_rates(poses, obj, cam, size, backend=backend)
    instances = [GroundTruthInstance(pose=p, occlusion_rate=float(o))
                 for p, o in zip(poses, rates)]
    return instances, cam
