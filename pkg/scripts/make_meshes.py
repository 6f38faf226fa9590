"""Regenerate the unstructured test meshes shipped under meshes/.

Delaunay triangulations of jittered grids on [-1,1]^2: boundary points stay
exactly on the square so the computational domain equals the bounding box,
interior points are perturbed for unstructured character.  Deterministic
(fixed seed); run from the repository root:

    python3 scripts/make_meshes.py
"""

from __future__ import annotations

import os

import numpy as np
from scipy.spatial import Delaunay

# grid sizes chosen so element counts land near 32 / 137 / 378 / 899
GRIDS = (5, 9, 15, 22)
JITTER = 0.28
SEED = 20240611


def jittered_square_points(n: int, rng) -> np.ndarray:
    g = np.linspace(-1.0, 1.0, n)
    xx, yy = np.meshgrid(g, g)
    pts = np.column_stack([xx.ravel(), yy.ravel()])
    h = 2.0 / (n - 1)
    interior = (np.abs(pts[:, 0]) < 1.0 - 1e-12) & (np.abs(pts[:, 1]) < 1.0 - 1e-12)
    pts[interior] += rng.uniform(-JITTER * h, JITTER * h, size=(interior.sum(), 2))
    return smooth(pts, interior)


def smooth(pts: np.ndarray, interior: np.ndarray, passes: int = 2) -> np.ndarray:
    """Laplacian smoothing of interior points over the Delaunay edge graph;
    keeps the unstructured character while tightening the max edge length."""
    for _ in range(passes):
        tri = Delaunay(pts)
        neighbors = [set() for _ in range(len(pts))]
        for simplex in tri.simplices:
            for a in simplex:
                for b in simplex:
                    if a != b:
                        neighbors[a].add(b)
        new_pts = pts.copy()
        for i in np.nonzero(interior)[0]:
            nb = list(neighbors[i])
            new_pts[i] = 0.5 * pts[i] + 0.5 * pts[nb].mean(axis=0)
        pts = new_pts
    return pts


def write_mesh(prefix: str, pts: np.ndarray, tris: np.ndarray) -> None:
    with open(prefix + ".node", "w") as fh:
        fh.write(f"{len(pts)} 2 0 0\n")
        for i, (x, y) in enumerate(pts, start=1):
            fh.write(f"{i} {float(x)!r} {float(y)!r}\n")
    with open(prefix + ".ele", "w") as fh:
        fh.write(f"{len(tris)} 3 0\n")
        for i, (a, b, c) in enumerate(tris, start=1):
            fh.write(f"{i} {a + 1} {b + 1} {c + 1}\n")


def min_signed_area(pts: np.ndarray, tris: np.ndarray) -> float:
    a = pts[tris[:, 0]]
    b = pts[tris[:, 1]]
    c = pts[tris[:, 2]]
    d1 = b - a
    d2 = c - a
    return float(np.min(np.abs(d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]) / 2.0))


def main() -> None:
    out_dir = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))),
                           "meshes")
    os.makedirs(out_dir, exist_ok=True)
    rng = np.random.default_rng(SEED)
    for n in GRIDS:
        pts = jittered_square_points(n, rng)
        tri = Delaunay(pts)
        simplices = tri.simplices
        if min_signed_area(pts, simplices) < 1e-6:
            raise RuntimeError(f"grid n={n} produced a sliver triangle; change SEED")
        prefix = os.path.join(out_dir, f"square_k{len(simplices)}")
        write_mesh(prefix, pts, simplices)
        print(f"wrote {prefix}.node/.ele  (V={len(pts)}, K={len(simplices)})")


if __name__ == "__main__":
    main()
