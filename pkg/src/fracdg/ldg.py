"""Semidiscrete LDG right-hand side with central fluxes.

The second-order fractional operator is split into first-order pieces:
p = grad(u) with central flux and zero Dirichlet trace, q = per-axis
fractional integral of p (order 2-alpha, applied through the assembled
global stiffness matrices), and du/dt = div(q) with central flux plus the
nodal forcing interpolant.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import stiffness
from .mesh import Mesh
from .refelem import ReferenceElement


@dataclass
class LdgContext:
    """Mesh + element operators + assembled fractional matrices for one case.

    Fields are immutable after construction; compute_* functions are pure.
    """
    mesh: Mesh
    ref: ReferenceElement
    alpha: float
    beta: float
    dplus: float
    dminus: float
    eplus: float
    eminus: float
    op_x: sp.spmatrix          # dplus * left + dminus * right, x direction
    op_y: sp.spmatrix
    frac_x: dict = field(default_factory=dict)   # side -> FracStiffness
    frac_y: dict = field(default_factory=dict)
    # geometry caches
    x_nodes: np.ndarray = None
    y_nodes: np.ndarray = None
    vmap_p: np.ndarray = None
    bmask: np.ndarray = None
    fmask_flat: np.ndarray = None
    nx_f: np.ndarray = None
    ny_f: np.ndarray = None
    fscale: np.ndarray = None

    @property
    def shape(self) -> tuple[int, int]:
        return self.mesh.num_elements, self.ref.Np


def _build_face_maps(mesh: Mesh, ref: ReferenceElement):
    """Exterior-trace gather index, boundary mask, and per-face-node geometry."""
    K, Np = mesh.num_elements, ref.Np
    nfp = ref.N + 1
    fmask_flat = ref.face_nodes.reshape(-1)
    xn, yn = mesh.physical_nodes(ref)             # (K, Np)
    fx = xn[:, fmask_flat]                        # (K, 3*nfp)
    fy = yn[:, fmask_flat]

    vmap_m = (np.arange(K)[:, None] * Np + fmask_flat[None, :])
    vmap_p = vmap_m.copy()
    bmask = np.zeros((K, 3 * nfp), dtype=bool)
    tol = max(mesh.geom_tol * 1.0e2, 1.0e-12)
    for k in range(K):
        for f in range(3):
            nb = mesh.elem_to_elem[k, f]
            sl = slice(f * nfp, (f + 1) * nfp)
            if nb == k:
                bmask[k, sl] = True
                continue
            g = mesh.elem_to_face[k, f]
            nb_nodes = ref.face_nodes[g]
            nxv = xn[nb, nb_nodes]
            nyv = yn[nb, nb_nodes]
            d = (np.abs(fx[k, sl][:, None] - nxv[None, :])
                 + np.abs(fy[k, sl][:, None] - nyv[None, :]))
            match = np.argmin(d, axis=1)
            if np.any(np.min(d, axis=1) > 1e3 * tol * max(1.0, mesh.h_per_elem[k])):
                raise RuntimeError(f"face node matching failed between elements {k} and {nb}")
            vmap_p[k, sl] = nb * Np + nb_nodes[match]

    nx_f = np.repeat(mesh.normals[:, :, 0], nfp, axis=1)   # (K, 3*nfp)
    ny_f = np.repeat(mesh.normals[:, :, 1], nfp, axis=1)
    fscale = np.repeat(mesh.face_jacobian / mesh.jacobian[:, None], nfp, axis=1)
    return xn, yn, vmap_p, bmask, fmask_flat, nx_f, ny_f, fscale


def build_context(mesh: Mesh, ref: ReferenceElement, alpha: float, beta: float,
                  dplus: float = 1.0, dminus: float = 0.0,
                  eplus: float = 1.0, eminus: float = 0.0,
                  n_gj: int | None = None, kernel: str | None = None) -> LdgContext:
    """Assemble the fractional matrices a case needs and cache geometry.

    Sides with zero coefficient are not assembled; coefficients must be
    nonnegative.
    """
    for name, c in (("dplus", dplus), ("dminus", dminus),
                    ("eplus", eplus), ("eminus", eminus)):
        if c < 0:
            raise ValueError(f"coefficient {name}={c} must be nonnegative")

    K, Np = mesh.num_elements, ref.Np
    frac_x, frac_y = {}, {}
    op_x = sp.bsr_matrix((K * Np, K * Np))
    op_y = sp.bsr_matrix((K * Np, K * Np))
    if dplus > 0:
        frac_x["left"] = stiffness.assemble(mesh, ref, alpha, "x", "left", n_gj, kernel)
        op_x = op_x + dplus * frac_x["left"].bsr
    if dminus > 0:
        frac_x["right"] = stiffness.assemble(mesh, ref, alpha, "x", "right", n_gj, kernel)
        op_x = op_x + dminus * frac_x["right"].bsr
    if eplus > 0:
        frac_y["left"] = stiffness.assemble(mesh, ref, beta, "y", "left", n_gj, kernel)
        op_y = op_y + eplus * frac_y["left"].bsr
    if eminus > 0:
        frac_y["right"] = stiffness.assemble(mesh, ref, beta, "y", "right", n_gj, kernel)
        op_y = op_y + eminus * frac_y["right"].bsr

    xn, yn, vmap_p, bmask, fmask_flat, nx_f, ny_f, fscale = _build_face_maps(mesh, ref)
    return LdgContext(mesh=mesh, ref=ref, alpha=alpha, beta=beta,
                      dplus=dplus, dminus=dminus, eplus=eplus, eminus=eminus,
                      op_x=op_x.tobsr(blocksize=(Np, Np)),
                      op_y=op_y.tobsr(blocksize=(Np, Np)),
                      frac_x=frac_x, frac_y=frac_y,
                      x_nodes=xn, y_nodes=yn, vmap_p=vmap_p, bmask=bmask,
                      fmask_flat=fmask_flat, nx_f=nx_f, ny_f=ny_f, fscale=fscale)


def _as_elements(ctx: LdgContext, u: np.ndarray) -> np.ndarray:
    K, Np = ctx.shape
    u = np.asarray(u, dtype=float)
    if u.shape != (K * Np,):
        raise ValueError(f"field vector has shape {u.shape}, expected ({K * Np},)")
    return u.reshape(K, Np)


def _deriv(ctx: LdgContext, U: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mesh, ref = ctx.mesh, ctx.ref
    ur = U @ ref.d_r.T
    us = U @ ref.d_s.T
    return (mesh.rx[:, None] * ur + mesh.sx[:, None] * us,
            mesh.ry[:, None] * ur + mesh.sy[:, None] * us)


def _lift(ctx: LdgContext, face_values: np.ndarray) -> np.ndarray:
    return (ctx.fscale * face_values) @ ctx.ref.lift.T


def compute_gradient(ctx: LdgContext, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Auxiliary gradient p = grad(u): central flux inside, zero trace on the wall."""
    U = _as_elements(ctx, u)
    dudx, dudy = _deriv(ctx, U)
    uf = u.reshape(-1)[ctx.vmap_p.reshape(-1)].reshape(ctx.vmap_p.shape)
    um = U[:, ctx.fmask_flat]
    du = 0.5 * (um - uf)
    du[ctx.bmask] = um[ctx.bmask]          # boundary: u_hat = 0
    px = dudx - _lift(ctx, ctx.nx_f * du)
    py = dudy - _lift(ctx, ctx.ny_f * du)
    return px.reshape(-1), py.reshape(-1)


def compute_q(ctx: LdgContext, px: np.ndarray, py: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Fractional flux q: q_x = M^-1 (d+ S~x,left + d- S~x,right) p_x and same in y."""
    if ctx.dplus > 0 or ctx.dminus > 0:
        if (ctx.dplus > 0 and "left" not in ctx.frac_x) or \
           (ctx.dminus > 0 and "right" not in ctx.frac_x):
            raise RuntimeError("fractional matrix missing for a configured x side")
    if (ctx.eplus > 0 and "left" not in ctx.frac_y) or \
       (ctx.eminus > 0 and "right" not in ctx.frac_y):
        raise RuntimeError("fractional matrix missing for a configured y side")
    K, Np = ctx.shape
    inv_j = 1.0 / ctx.mesh.jacobian[:, None]
    qx = ((ctx.op_x @ px).reshape(K, Np) @ ctx.ref.inv_mass_ref) * inv_j
    qy = ((ctx.op_y @ py).reshape(K, Np) @ ctx.ref.inv_mass_ref) * inv_j
    return qx.reshape(-1), qy.reshape(-1)


def compute_rhs(ctx: LdgContext, u: np.ndarray, t: float, forcing=None) -> np.ndarray:
    """du/dt: divergence of the fractional flux plus the nodal forcing."""
    px, py = compute_gradient(ctx, u)
    qx, qy = compute_q(ctx, px, py)
    QX = qx.reshape(ctx.shape)
    QY = qy.reshape(ctx.shape)
    dqxdx, _ = _deriv(ctx, QX)
    _, dqydy = _deriv(ctx, QY)

    qxf = qx[ctx.vmap_p.reshape(-1)].reshape(ctx.vmap_p.shape)
    qyf = qy[ctx.vmap_p.reshape(-1)].reshape(ctx.vmap_p.shape)
    dqx = 0.5 * (QX[:, ctx.fmask_flat] - qxf)   # boundary: q_hat = q, jump 0
    dqy = 0.5 * (QY[:, ctx.fmask_flat] - qyf)
    rhs = dqxdx + dqydy - _lift(ctx, ctx.nx_f * dqx + ctx.ny_f * dqy)
    if forcing is not None:
        rhs = rhs + forcing(ctx.x_nodes, ctx.y_nodes, t)
    return rhs.reshape(-1)


def l2_norm(ctx: LdgContext, u: np.ndarray) -> float:
    """Discrete L2 norm induced by the element mass matrices."""
    U = _as_elements(ctx, u)
    return float(np.sqrt(np.sum((U @ ctx.ref.mass_ref) * U
                                * ctx.mesh.jacobian[:, None])))


def interpolate(ctx: LdgContext, fn, t: float | None = None) -> np.ndarray:
    """Nodal interpolant of fn(x, y) or fn(x, y, t) as a field vector."""
    if t is None:
        vals = fn(ctx.x_nodes, ctx.y_nodes)
    else:
        vals = fn(ctx.x_nodes, ctx.y_nodes, t)
    return np.asarray(vals, dtype=float).reshape(-1)
