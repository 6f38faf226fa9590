"""Nodal basis construction on the reference triangle.

The reference element is the right triangle with vertices (-1,-1), (1,-1),
(-1,1) (area 2).  Interpolation nodes follow the electrostatics-optimized
warp & blend distribution, so operators stay well conditioned up to degree 8.
The modal basis is the orthonormal Koornwinder-Dubiner family, evaluated in a
homogenized form that contains no division by (1-s) and therefore remains
valid, and exact, arbitrarily far outside the element; the fractional segment
quadrature depends on that polynomial extension.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gamma as gamma_fn
from scipy.special import roots_jacobi

MAX_DEGREE = 8

REF_VERTICES = np.array([[-1.0, -1.0], [1.0, -1.0], [-1.0, 1.0]])

# Warp & blend node-optimization constants for N = 1..15.
_WARP_ALPHA = (0.0, 0.0, 1.4152, 0.1001, 0.2751, 0.9800, 1.0999, 1.2832,
               1.3648, 1.4773, 1.4959, 1.5743, 1.5770, 1.6223, 1.6258)

_NODE_TOL = 1.0e-10


def jacobi_norm_sq(n: int, a: float, b: float) -> float:
    """L2 norm squared of the classical Jacobi polynomial P_n^(a,b) on [-1,1]."""
    return (2.0 ** (a + b + 1) / (2 * n + a + b + 1)
            * gamma_fn(n + a + 1) * gamma_fn(n + b + 1)
            / (gamma_fn(n + a + b + 1) * gamma_fn(n + 1.0)))


def jacobi_seq(nmax, a, b, x):
    """Classical Jacobi polynomials P_0..P_nmax at x; shape (nmax+1,) + x.shape."""
    x = np.asarray(x, dtype=float)
    out = np.empty((nmax + 1,) + x.shape)
    out[0] = 1.0
    if nmax >= 1:
        out[1] = 0.5 * (a - b + (a + b + 2.0) * x)
    for n in range(1, nmax):
        c = 2.0 * n + a + b
        a1 = 2.0 * (n + 1) * (n + a + b + 1) * c
        a2 = (c + 1.0) * (a * a - b * b)
        a3 = c * (c + 1.0) * (c + 2.0)
        a4 = 2.0 * (n + a) * (n + b) * (c + 2.0)
        out[n + 1] = ((a2 + a3 * x) * out[n] - a4 * out[n - 1]) / a1
    return out


def _legendre_homog(nmax, u, v, with_grad=False):
    """q_n = v**n * P_n(u/v) for Legendre P_n, evaluated division-free.

    Satisfies (n+1) q_{n+1} = (2n+1) u q_n - n v^2 q_{n-1}, which is the
    Legendre recurrence homogenized by v**n; at v=0 it reproduces the exact
    polynomial limit, so the collapsed-coordinate singular line s=1 needs no
    special case.
    """
    u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
    q = np.empty((nmax + 1,) + u.shape)
    q[0] = 1.0
    if nmax >= 1:
        q[1] = u
    for n in range(1, nmax):
        q[n + 1] = ((2 * n + 1) * u * q[n] - n * v * v * q[n - 1]) / (n + 1)
    if not with_grad:
        return q
    qu = np.zeros_like(q)
    qv = np.zeros_like(q)
    if nmax >= 1:
        qu[1] = 1.0
    for n in range(1, nmax):
        qu[n + 1] = ((2 * n + 1) * (q[n] + u * qu[n]) - n * v * v * qu[n - 1]) / (n + 1)
        qv[n + 1] = ((2 * n + 1) * u * qv[n]
                     - n * (2.0 * v * q[n - 1] + v * v * qv[n - 1])) / (n + 1)
    return q, qu, qv


def modal_indices(N: int) -> list[tuple[int, int]]:
    """(i, j) index pairs of the Np modal functions, i outer, j inner."""
    return [(i, j) for i in range(N + 1) for j in range(N + 1 - i)]


def modal_norms(N: int) -> np.ndarray:
    """Normalization factors making the Dubiner modes orthonormal on the triangle."""
    return np.array([np.sqrt(2.0) / np.sqrt(jacobi_norm_sq(i, 0.0, 0.0)
                                            * jacobi_norm_sq(j, 2.0 * i + 1.0, 0.0))
                     for i, j in modal_indices(N)])


def dubiner_eval(N, r, s):
    """Orthonormal modal basis at (r, s); shape (Np,) + r.shape.

    Valid for any (r, s), inside or outside the reference triangle.
    """
    r, s = np.broadcast_arrays(np.asarray(r, float), np.asarray(s, float))
    u = 2.0 * r + 1.0 + s
    v = 1.0 - s
    q = _legendre_homog(N, u, v)
    norms = modal_norms(N)
    psi = np.empty((len(norms),) + r.shape)
    sk = 0
    for i in range(N + 1):
        pj = jacobi_seq(N - i, 2.0 * i + 1.0, 0.0, s)
        for j in range(N + 1 - i):
            psi[sk] = norms[sk] * q[i] * pj[j]
            sk += 1
    return psi


def dubiner_grad(N, r, s):
    """(d/dr, d/ds) of the modal basis at (r, s); two (Np,)+shape arrays."""
    r, s = np.broadcast_arrays(np.asarray(r, float), np.asarray(s, float))
    u = 2.0 * r + 1.0 + s
    v = 1.0 - s
    q, qu, qv = _legendre_homog(N, u, v, with_grad=True)
    norms = modal_norms(N)
    dpdr = np.empty((len(norms),) + r.shape)
    dpds = np.empty((len(norms),) + r.shape)
    sk = 0
    for i in range(N + 1):
        a = 2.0 * i + 1.0
        pj = jacobi_seq(N - i, a, 0.0, s)
        dpj = np.zeros_like(pj)
        if N - i >= 1:
            # d/dx P_j^(a,0) = (j+a+1)/2 * P_{j-1}^(a+1,1)
            pj_shift = jacobi_seq(N - i - 1, a + 1.0, 1.0, s)
            for j in range(1, N + 1 - i):
                dpj[j] = 0.5 * (j + a + 1.0) * pj_shift[j - 1]
        # u = 2r+1+s, v = 1-s:  d/dr = 2 d/du,  d/ds = d/du - d/dv
        for j in range(N + 1 - i):
            dpdr[sk] = norms[sk] * 2.0 * qu[i] * pj[j]
            dpds[sk] = norms[sk] * ((qu[i] - qv[i]) * pj[j] + q[i] * dpj[j])
            sk += 1
    return dpdr, dpds


def _gauss_lobatto(N: int) -> np.ndarray:
    """N+1 Legendre-Gauss-Lobatto points on [-1,1], ascending."""
    if N == 1:
        return np.array([-1.0, 1.0])
    interior = roots_jacobi(N - 1, 1.0, 1.0)[0]
    return np.concatenate(([-1.0], interior, [1.0]))


def _warp_factor(N: int, rout: np.ndarray) -> np.ndarray:
    """1D warp displacement from equispaced toward Gauss-Lobatto nodes."""
    lgl = _gauss_lobatto(N)
    req = np.linspace(-1.0, 1.0, N + 1)
    veq = (jacobi_seq(N, 0.0, 0.0, req)
           / np.sqrt([jacobi_norm_sq(n, 0.0, 0.0) for n in range(N + 1)])[:, None])
    pmat = (jacobi_seq(N, 0.0, 0.0, rout)
            / np.sqrt([jacobi_norm_sq(n, 0.0, 0.0) for n in range(N + 1)])[:, None])
    lmat = np.linalg.solve(veq, pmat)  # Lagrange values of equispaced nodes at rout
    warp = lmat.T @ (lgl - req)
    interior = np.abs(rout) < 1.0 - _NODE_TOL
    sf = 1.0 - (np.where(interior, rout, 0.0)) ** 2
    return np.where(interior, warp / sf, 0.0)


def warp_blend_nodes(N: int) -> np.ndarray:
    """Warp & blend interpolation nodes on the reference triangle, (Np, 2)."""
    alpha = _WARP_ALPHA[N - 1] if N <= 15 else 5.0 / 3.0
    npts = (N + 1) * (N + 2) // 2
    l1 = np.empty(npts)
    l3 = np.empty(npts)
    sk = 0
    for n in range(N + 1):
        for m in range(N + 1 - n):
            l1[sk] = n / N
            l3[sk] = m / N
            sk += 1
    l2 = 1.0 - l1 - l3
    # equilateral-triangle coordinates
    x = -l2 + l3
    y = (-l2 - l3 + 2.0 * l1) / np.sqrt(3.0)
    blend1 = 4.0 * l2 * l3
    blend2 = 4.0 * l1 * l3
    blend3 = 4.0 * l1 * l2
    warp1 = blend1 * _warp_factor(N, l3 - l2) * (1.0 + (alpha * l1) ** 2)
    warp2 = blend2 * _warp_factor(N, l1 - l3) * (1.0 + (alpha * l2) ** 2)
    warp3 = blend3 * _warp_factor(N, l2 - l1) * (1.0 + (alpha * l3) ** 2)
    x = x + warp1 + np.cos(2.0 * np.pi / 3.0) * warp2 + np.cos(4.0 * np.pi / 3.0) * warp3
    y = y + 0.0 * warp1 + np.sin(2.0 * np.pi / 3.0) * warp2 + np.sin(4.0 * np.pi / 3.0) * warp3
    # back to (r, s) on the right reference triangle
    l1 = (np.sqrt(3.0) * y + 1.0) / 3.0
    l2 = (-3.0 * x - np.sqrt(3.0) * y + 2.0) / 6.0
    l3 = (3.0 * x - np.sqrt(3.0) * y + 2.0) / 6.0
    r = -l2 + l3 - l1
    s = -l2 - l3 + l1
    return np.column_stack([r, s])


def triangle_cubature(N: int, n1: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Volume cubature on the reference triangle, exact to degree 2*n1-1
    (default n1 = N+2, degree 2N+3).

    Collapsed (Duffy) product of Gauss-Legendre in the first coordinate and
    Gauss-Jacobi(1,0) in the second; the (1-b)/2 map Jacobian is absorbed by
    the Jacobi weight, so all weights are positive and sum to 2.
    """
    if n1 is None:
        n1 = N + 2
    ga, wa = roots_jacobi(n1, 0.0, 0.0)
    gb, wb = roots_jacobi(n1, 1.0, 0.0)
    A, B = np.meshgrid(ga, gb)
    r = (0.5 * (1.0 + A) * (1.0 - B) - 1.0).ravel()
    s = B.ravel()
    w = (0.5 * np.outer(wb, wa)).ravel()
    return np.column_stack([r, s]), w


class ReferenceElement:
    """Degree-N nodal element: nodes, modal/nodal transforms, local operators.

    Attributes
    ----------
    N, Np : degree and basis size (N+1)(N+2)/2
    nodes : (Np, 2) interpolation nodes (r, s)
    vandermonde : (Np, Np), entry (i, m) = psi_m(node_i)
    d_r, d_s : (Np, Np) nodal differentiation operators
    mass_ref : (Np, Np) reference mass matrix (J=1)
    face_nodes : (3, N+1) node indices on each face, ordered along the face
    lift : (Np, 3*(N+1)) surface-to-volume operator, inv(M_ref) @ Emat
    cub_points, cub_weights : volume cubature, exactness degree >= 2N+2
    cubature_basis : (Np, Q_D) Lagrange basis values at the cubature points
    """

    def __init__(self, N: int, cub_points_1d: int | None = None):
        if not (1 <= N <= MAX_DEGREE):
            raise ValueError(f"degree N={N} outside supported range 1..{MAX_DEGREE}")
        self.N = N
        self.Np = (N + 1) * (N + 2) // 2
        self.nodes = warp_blend_nodes(N)
        r, s = self.nodes[:, 0], self.nodes[:, 1]
        self._cub_points_1d = cub_points_1d

        self.vandermonde = dubiner_eval(N, r, s).T
        self.inv_vandermonde = np.linalg.inv(self.vandermonde)
        vr, vs = dubiner_grad(N, r, s)
        self.d_r = np.linalg.solve(self.vandermonde.T, vr).T
        self.d_s = np.linalg.solve(self.vandermonde.T, vs).T
        self.mass_ref = np.linalg.inv(self.vandermonde @ self.vandermonde.T)
        self.inv_mass_ref = self.vandermonde @ self.vandermonde.T

        self.face_nodes = self._build_face_nodes()
        self.lift = self._build_lift()

        self.cub_points, self.cub_weights = triangle_cubature(N, cub_points_1d)
        self.cubature_basis = self.basis_at(self.cub_points, allow_outside=False)

        self.modal_ids = modal_indices(N)
        self.modal_norm = modal_norms(N)

    def _build_face_nodes(self) -> np.ndarray:
        r, s = self.nodes[:, 0], self.nodes[:, 1]
        f0 = np.nonzero(np.abs(s + 1.0) < _NODE_TOL)[0]
        f1 = np.nonzero(np.abs(r + s) < _NODE_TOL)[0]
        f2 = np.nonzero(np.abs(r + 1.0) < _NODE_TOL)[0]
        f0 = f0[np.argsort(r[f0])]        # v0 -> v1
        f1 = f1[np.argsort(s[f1])]        # v1 -> v2
        f2 = f2[np.argsort(-s[f2])]       # v2 -> v0
        faces = np.vstack([f0, f1, f2])
        if faces.shape != (3, self.N + 1):
            raise RuntimeError("face node extraction failed")
        return faces

    def _face_param(self, face: int) -> np.ndarray:
        """Arclength-affine coordinate in [-1,1] of the face nodes."""
        idx = self.face_nodes[face]
        r, s = self.nodes[idx, 0], self.nodes[idx, 1]
        return (r, s, -s)[face]

    def _build_lift(self) -> np.ndarray:
        nfp = self.N + 1
        emat = np.zeros((self.Np, 3 * nfp))
        for f in range(3):
            p = self._face_param(f)
            v1d = (jacobi_seq(self.N, 0.0, 0.0, p)
                   / np.sqrt([jacobi_norm_sq(n, 0.0, 0.0)
                              for n in range(self.N + 1)])[:, None]).T
            mass_edge = np.linalg.inv(v1d @ v1d.T)
            emat[np.ix_(self.face_nodes[f], range(f * nfp, (f + 1) * nfp))] = mass_edge
        return self.inv_mass_ref @ emat

    def basis_at(self, pts: np.ndarray, allow_outside: bool = False) -> np.ndarray:
        """Lagrange basis values at reference points, (Np, npts)."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        r, s = pts[:, 0], pts[:, 1]
        if not allow_outside:
            lam = np.stack([-(r + s) / 2.0, (1.0 + r) / 2.0, (1.0 + s) / 2.0])
            if np.any(lam < -_NODE_TOL):
                raise ValueError("evaluation point outside the reference triangle")
        psi = dubiner_eval(self.N, r, s)
        return self.inv_vandermonde.T @ psi


@dataclass
class LocalOperators:
    """Per-element mass/stiffness matrices and the mass inverse."""
    mass: np.ndarray
    stiff_x: np.ndarray
    stiff_y: np.ndarray
    inv_mass: np.ndarray


def build_reference(N: int, cub_points_1d: int | None = None) -> ReferenceElement:
    """Construct the degree-N reference element (1 <= N <= 8).

    cub_points_1d overrides the volume-cubature density (default N+2 per
    collapsed direction, exactness 2N+3); the fractional assembly benefits
    from denser rules when the order sits close to 1.
    """
    return ReferenceElement(N, cub_points_1d)


def eval_basis(ref: ReferenceElement, pts: np.ndarray, allow_outside: bool = False) -> np.ndarray:
    """Lagrange basis values at reference coordinates pts, shape (Np, |pts|)."""
    return ref.basis_at(pts, allow_outside=allow_outside)


def local_operators(ref: ReferenceElement, mesh, k: int) -> LocalOperators:
    """Mass and physical-derivative stiffness matrices of element k.

    Entry (i, j) of stiff_x is (ell_i, d ell_j / dx) over the element; built
    from the reference operators and the constant metric of the affine map.
    """
    jk = mesh.jacobian[k]
    dxd = mesh.rx[k] * ref.d_r + mesh.sx[k] * ref.d_s
    dyd = mesh.ry[k] * ref.d_r + mesh.sy[k] * ref.d_s
    mass = jk * ref.mass_ref
    return LocalOperators(
        mass=mass,
        stiff_x=mass @ dxd,
        stiff_y=mass @ dyd,
        inv_mass=ref.inv_mass_ref / jk,
    )
