import numpy as np
import pytest

import meshes


@pytest.fixture(scope="session")
def flat_disk():
    return meshes.flat_disk(radius=5.5, rings=60)


@pytest.fixture(scope="session")
def sphere3():
    return meshes.icosphere(3)


@pytest.fixture(scope="session")
def sphere5():
    return meshes.icosphere(5)


@pytest.fixture(scope="session")
def sphere6():
    return meshes.icosphere(6)


@pytest.fixture(scope="session")
def cube24():
    return meshes.cube_grid(n=24)


@pytest.fixture(scope="session")
def cylinder():
    return meshes.cylinder_tube()


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260826)
