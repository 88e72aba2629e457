import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from plate_junction.experiments import RoofGeometry, example1_descriptors, example1_exact  # noqa: E402
from plate_junction.mesh import build_coupled_mesh, mesh_at_level  # noqa: E402


@pytest.fixture(scope="session")
def ex1_exact():
    return example1_exact()


@pytest.fixture(scope="session")
def ex1_mesh1():
    return build_coupled_mesh(*example1_descriptors(), 2)


@pytest.fixture(scope="session")
def ex1_mesh2():
    return mesh_at_level(*example1_descriptors(), 2, 2)


@pytest.fixture(scope="session")
def roof():
    return RoofGeometry()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
