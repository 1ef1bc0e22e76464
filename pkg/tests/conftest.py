import pytest

from hdg_interface import build_mesh, preset


@pytest.fixture(scope="session")
def ex1():
    return preset("example1")


@pytest.fixture(scope="session")
def ex2():
    return preset("example2")


@pytest.fixture(scope="session")
def patch():
    return preset("patch")


@pytest.fixture(params=["rectangle", "triangle"])
def kind(request):
    return request.param


def mesh_for(name, n, kind="rectangle"):
    geom, problem = preset(name)
    return build_mesh(geom, n, kind), problem
