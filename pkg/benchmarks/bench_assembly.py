"""Benchmark the fractional stiffness assembly: compiled core vs numpy kernel.

Run from the repository root:

    python3 benchmarks/bench_assembly.py [--degree N] [--alpha A]
"""

from __future__ import annotations

import argparse
import os
import sys
import time

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(os.path.dirname(
    os.path.abspath(__file__))), "src"))

from fracdg import backend, stiffness  # noqa: E402
from fracdg.mesh import load_mesh_files  # noqa: E402
from fracdg.refelem import build_reference  # noqa: E402

MESH_DIR = os.path.join(os.path.dirname(os.path.dirname(
    os.path.abspath(__file__))), "meshes")


def bench(kernel: str, mesh, ref, alpha: float, repeats: int = 3) -> tuple[float, object]:
    best = np.inf
    S = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        S = stiffness.assemble(mesh, ref, alpha, "x", "left", kernel=kernel)
        best = min(best, time.perf_counter() - t0)
    return best, S


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--degree", type=int, default=2)
    ap.add_argument("--alpha", type=float, default=1.5)
    args = ap.parse_args()

    ref = build_reference(args.degree)
    print(f"assembly benchmark: degree N={args.degree}, alpha={args.alpha}, "
          f"Q_D={len(ref.cub_weights)} cubature points/element")
    if not backend.HAVE_COMPILED:
        print("NOTE: compiled extension not built; python kernel only")
    header = f"{'K':>6} {'python [s]':>12} {'compiled [s]':>13} {'speedup':>8} {'max rel diff':>13}"
    print(header)
    print("-" * len(header))
    for k in (32, 128, 392, 882):
        mesh = load_mesh_files(os.path.join(MESH_DIR, f"square_k{k}"))
        tp, Sp = bench("python", mesh, ref, args.alpha)
        if backend.HAVE_COMPILED:
            tc, Sc = bench("compiled", mesh, ref, args.alpha)
            rel = abs(Sc.bsr - Sp.bsr).max() / abs(Sp.bsr).max()
            print(f"{k:>6} {tp:>12.3f} {tc:>13.3f} {tp / tc:>8.1f} {rel:>13.2e}")
        else:
            print(f"{k:>6} {tp:>12.3f} {'-':>13} {'-':>8} {'-':>13}")


if __name__ == "__main__":
    main()
