import os

import numpy as np
import pytest

from fracdg.mesh import Mesh, load_mesh, load_mesh_files

MESH_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))),
                        "meshes")

REF_TRI_NODE = """3 2 0 0
1 -1.0 -1.0
2 1.0 -1.0
3 -1.0 1.0
"""
REF_TRI_ELE = """1 3 0
1 1 2 3
"""

UNIT_SQ_NODE = """4 2 0 1
# unit square
1 0.0 0.0 1
2 1.0 0.0 1
3 1.0 1.0 1
4 0.0 1.0 1
"""
UNIT_SQ_ELE = """2 3 0
1 1 2 3
2 1 3 4
"""

SQ4_NODE = """5 2 0 1
1 0.0 0.0
2 1.0 0.0
3 1.0 1.0
4 0.0 1.0
5 0.55 0.45
"""
SQ4_ELE = """4 3 0
1 1 2 5
2 2 3 5
3 3 4 5
4 4 1 5
"""


def mesh_path(k: int) -> str:
    return os.path.join(MESH_DIR, f"square_k{k}")


@pytest.fixture(scope="session")
def ref_tri_mesh() -> Mesh:
    return load_mesh(REF_TRI_NODE, REF_TRI_ELE)


@pytest.fixture(scope="session")
def unit_square_mesh() -> Mesh:
    return load_mesh(UNIT_SQ_NODE, UNIT_SQ_ELE)


@pytest.fixture(scope="session")
def square4_mesh() -> Mesh:
    return load_mesh(SQ4_NODE, SQ4_ELE)


@pytest.fixture(scope="session")
def mesh_k32() -> Mesh:
    return load_mesh_files(mesh_path(32))


@pytest.fixture(scope="session")
def mesh_k128() -> Mesh:
    return load_mesh_files(mesh_path(128))


@pytest.fixture(scope="session")
def mesh_k392() -> Mesh:
    return load_mesh_files(mesh_path(392))


@pytest.fixture(scope="session")
def mesh_k882() -> Mesh:
    return load_mesh_files(mesh_path(882))


def structured_square_mesh(n: int) -> Mesh:
    """Structured right-triangle grid on [-1,1]^2 (vertex rows share y)."""
    g = np.linspace(-1.0, 1.0, n)
    xx, yy = np.meshgrid(g, g)
    pts = np.column_stack([xx.ravel(), yy.ravel()])
    tris = []
    for j in range(n - 1):
        for i in range(n - 1):
            v00 = j * n + i
            v10 = j * n + i + 1
            v01 = (j + 1) * n + i
            v11 = (j + 1) * n + i + 1
            tris.append((v00, v10, v11))
            tris.append((v00, v11, v01))
    return Mesh(pts, np.asarray(tris))
