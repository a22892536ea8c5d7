import json

import numpy as np
import pytest

from helpers import box_mesh, icosphere_mesh, write_obj
from sympose import ObjectModel
from sympose.symmetry import ProperSymmetryGroup

BRICK_HALF_SIDES = (0.04, 0.025, 0.015)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture(scope="session")
def brick_object():
    """Box with two distinct half-sides, declared half-turn symmetric about z."""
    mesh = box_mesh(BRICK_HALF_SIDES, divisions=4)
    return ObjectModel.from_mesh(mesh, ProperSymmetryGroup.cyclic(2))


@pytest.fixture(scope="session")
def sphere_object():
    mesh = icosphere_mesh(subdivisions=2, radius=0.05)
    return ObjectModel.from_mesh(mesh, ProperSymmetryGroup.spherical())


@pytest.fixture
def brick_descriptor(tmp_path):
    """Object descriptor on disk (brick OBJ + JSON), for CLI and loader tests."""
    mesh = box_mesh(BRICK_HALF_SIDES, divisions=4)
    write_obj(mesh, tmp_path / "brick.obj")
    descriptor = {
        "mesh": "brick.obj",
        "units": "m",
        "symmetry": {"class": "finite", "cyclic_order": 2},
    }
    path = tmp_path / "brick.json"
    path.write_text(json.dumps(descriptor))
    return path
