"""Global fractional stiffness matrices: segment-traced block assembly.

For every element k and each of its volume cubature points, the axis-aligned
segment to the domain boundary is traced; every crossed element m contributes
a rank-one update (outer cubature weight times the fractional integral of m's
basis over its crossing interval) to block (k, m).  Blocks are stored in BSR
form, so application is a single sparse matrix-vector product.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from scipy.special import gamma as gamma_fn

from .backend import get_kernel
from .fracquad import gauss_jacobi
from .mesh import Mesh, trace_axis, trace_scratch, _walk_trace_fast
from .refelem import ReferenceElement


class FracStiffness:
    """K x K block-sparse fractional stiffness matrix (blocks Np x Np)."""

    def __init__(self, direction: str, side: str, alpha: float,
                 K: int, Np: int, bsr: sp.bsr_matrix):
        self.direction = direction
        self.side = side
        self.alpha = alpha
        self.K = K
        self.Np = Np
        self.bsr = bsr

    @property
    def nnz_blocks(self) -> int:
        return self.bsr.indices.shape[0]

    @property
    def fill_fraction(self) -> float:
        """Occupied fraction of the K x K block grid."""
        return self.nnz_blocks / float(self.K * self.K)

    def block(self, k: int, m: int):
        """Dense (Np, Np) block (k, m), or None when absent."""
        start, stop = self.bsr.indptr[k], self.bsr.indptr[k + 1]
        cols = self.bsr.indices[start:stop]
        hit = np.nonzero(cols == m)[0]
        if len(hit) == 0:
            return None
        return np.asarray(self.bsr.data[start + hit[0]])

    def toarray(self) -> np.ndarray:
        return self.bsr.toarray()

    def dump(self, fh) -> None:
        """Write `k m i j value` coordinate lines for every stored entry."""
        fh.write(f"# direction={self.direction} side={self.side} "
                 f"alpha={self.alpha} K={self.K} Np={self.Np}\n")
        indptr, indices, data = self.bsr.indptr, self.bsr.indices, self.bsr.data
        for k in range(self.K):
            for b in range(indptr[k], indptr[k + 1]):
                m = indices[b]
                blk = data[b]
                for i in range(self.Np):
                    for j in range(self.Np):
                        fh.write(f"{k} {m} {i} {j} {blk[i, j]:.17e}\n")


def apply(S: FracStiffness, v: np.ndarray) -> np.ndarray:
    """Block-sparse matrix-vector product S @ v."""
    v = np.asarray(v, dtype=float)
    if v.shape != (S.K * S.Np,):
        raise ValueError(f"field vector has length {v.shape}, expected {S.K * S.Np}")
    return S.bsr @ v


def _mass_block_diag(mesh: Mesh, ref: ReferenceElement) -> sp.bsr_matrix:
    """Block diagonal of cubature-assembled element mass matrices."""
    K, Np = mesh.num_elements, ref.Np
    mass_cub = (ref.cubature_basis * ref.cub_weights) @ ref.cubature_basis.T
    data = mesh.jacobian[:, None, None] * mass_cub[None, :, :]
    indptr = np.arange(K + 1, dtype=np.int32)
    indices = np.arange(K, dtype=np.int32)
    return sp.bsr_matrix((data, indices, indptr), shape=(K * Np, K * Np))


def assemble(mesh: Mesh, ref: ReferenceElement, alpha: float,
             direction: str = "x", side: str = "left",
             n_gj: int | None = None, kernel: str | None = None) -> FracStiffness:
    """Assemble one global fractional stiffness matrix.

    Realizes the fractional integral of order 2-alpha along ``direction``
    from the ``side`` domain boundary, tested against the basis by volume
    cubature.  alpha=2 short-circuits to the block-diagonal cubature mass
    (the order-0 fractional integral is the identity).
    """
    if direction not in ("x", "y"):
        raise ValueError("direction must be 'x' or 'y'")
    if side not in ("left", "right"):
        raise ValueError("side must be 'left' or 'right'")
    if not (1.0 < alpha <= 2.0):
        raise ValueError(f"fractional order alpha={alpha} outside (1, 2]")

    K, Np = mesh.num_elements, ref.Np
    if alpha == 2.0:
        return FracStiffness(direction, side, alpha, K, Np,
                             _mass_block_diag(mesh, ref))

    gamma_ord = 2.0 - alpha
    if n_gj is None:
        n_gj = ref.N + 3
    if side == "left":
        rule = gauss_jacobi(n_gj, gamma_ord - 1.0, 0.0)
    else:
        rule = gauss_jacobi(n_gj, 0.0, gamma_ord - 1.0)
    toward_min = side == "left"
    ax = 0 if direction == "x" else 1
    accumulate = get_kernel(kernel)
    inv_gamma = 1.0 / gamma_fn(gamma_ord)
    extent = (mesh.bbox[1] - mesh.bbox[0]) if ax == 0 else (mesh.bbox[3] - mesh.bbox[2])
    sing_tol = 1.0e-13 * max(1.0, extent)

    xq_all, yq_all = mesh.map_points(ref.cub_points)   # (K, Q)
    Q = ref.cub_points.shape[0]
    base_outer = np.ascontiguousarray(ref.cub_weights[:, None] * ref.cubature_basis.T)

    indptr = np.zeros(K + 1, dtype=np.int32)
    indices_rows = []
    data_rows = []
    scratch = trace_scratch(mesh)
    cap = Q * (K + 2)   # a trace crosses at most K elements
    ent_m = np.empty(cap, dtype=np.int64)
    ent_q = np.empty(cap, dtype=np.int64)
    ent_lo = np.empty(cap)
    ent_hi = np.empty(cap)
    ent_tgt = np.empty(cap)
    ent_fix = np.empty(cap)
    for k in range(K):
        tgt_all = xq_all[k] if ax == 0 else yq_all[k]
        fix_all = yq_all[k] if ax == 0 else xq_all[k]
        c = 0
        for q in range(Q):
            res = _walk_trace_fast(mesh, k, float(tgt_all[q]), float(fix_all[q]),
                                   ax, toward_min, scratch)
            if res is not None:
                elems, breaks = res
                nq = len(elems)
                b = np.asarray(breaks)
                lo, hi = (b[1:], b[:-1]) if toward_min else (b[:-1], b[1:])
            else:
                elems, ivals = trace_axis(mesh, k, float(tgt_all[q]),
                                          float(fix_all[q]), ax, toward_min)
                nq = len(elems)
                lo, hi = ivals[:, 0], ivals[:, 1]
            ent_m[c:c + nq] = elems
            ent_q[c:c + nq] = q
            ent_lo[c:c + nq] = lo
            ent_hi[c:c + nq] = hi
            ent_tgt[c:c + nq] = tgt_all[q]
            ent_fix[c:c + nq] = fix_all[q]
            c += nq

        cols, ent_slot = np.unique(ent_m[:c], return_inverse=True)
        blocks = np.zeros((len(cols), Np, Np))
        outer = mesh.jacobian[k] * base_outer
        accumulate(np.ascontiguousarray(ent_slot, dtype=np.int64),
                   np.ascontiguousarray(ent_m[:c]),
                   np.ascontiguousarray(ent_q[:c]),
                   np.ascontiguousarray(ent_lo[:c]), np.ascontiguousarray(ent_hi[:c]),
                   np.ascontiguousarray(ent_tgt[:c]), np.ascontiguousarray(ent_fix[:c]),
                   ax, toward_min, gamma_ord, inv_gamma, sing_tol,
                   mesh.rmap, mesh.smap, rule.nodes, rule.weights,
                   ref.inv_vandermonde, ref.N, ref.modal_norm, outer, blocks)
        indptr[k + 1] = indptr[k] + len(cols)
        indices_rows.append(cols.astype(np.int32))
        data_rows.append(blocks)

    indices = np.concatenate(indices_rows)
    data = np.concatenate(data_rows, axis=0)
    bsr = sp.bsr_matrix((data, indices, indptr), shape=(K * Np, K * Np))
    return FracStiffness(direction, side, alpha, K, Np, bsr)
