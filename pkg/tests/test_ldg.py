import numpy as np
import pytest
from scipy.special import gamma as gamma_fn

from fracdg import cases, ldg, stiffness, timestep
from fracdg.refelem import build_reference


@pytest.fixture(scope="module")
def ctx32(mesh_k32):
    return ldg.build_context(mesh_k32, build_reference(2), 1.5, 1.5,
                             1.0, 0.0, 1.0, 0.0)


def test_gradient_of_zero(ctx32):
    z = np.zeros(ctx32.mesh.num_elements * ctx32.ref.Np)
    px, py = ldg.compute_gradient(ctx32, z)
    assert np.abs(px).max() == 0.0 and np.abs(py).max() == 0.0


def test_gradient_of_linear_interior(ctx32):
    """u = x recovers p = (1, 0) exactly on elements without boundary faces."""
    u = ctx32.x_nodes.reshape(-1)
    px, py = ldg.compute_gradient(ctx32, u)
    PX = px.reshape(ctx32.shape)
    PY = py.reshape(ctx32.shape)
    interior = np.nonzero(~ctx32.mesh.boundary_faces.any(axis=1))[0]
    assert len(interior) > 0
    assert np.abs(PX[interior] - 1.0).max() < 1e-10
    assert np.abs(PY[interior]).max() < 1e-10


def test_gradient_penalty_vanishes_for_continuous_fields(ctx32):
    """A globally continuous nodal field has zero internal-face jumps, so the
    gradient equals the elementwise derivative on interior elements."""
    xn, yn = ctx32.x_nodes, ctx32.y_nodes
    u = (xn ** 2 * yn + 3.0).reshape(-1)   # continuous, degree <= N
    px, _ = ldg.compute_gradient(ctx32, u)
    mesh, ref = ctx32.mesh, ctx32.ref
    dudx = (mesh.rx[:, None] * ((u.reshape(ctx32.shape)) @ ref.d_r.T)
            + mesh.sx[:, None] * ((u.reshape(ctx32.shape)) @ ref.d_s.T))
    interior = np.nonzero(~mesh.boundary_faces.any(axis=1))[0]
    assert np.abs((px.reshape(ctx32.shape) - dudx)[interior]).max() < 1e-10


def test_q_is_identity_at_alpha_two(mesh_k32):
    ctx = ldg.build_context(mesh_k32, build_reference(2), 2.0, 2.0,
                            1.0, 0.0, 1.0, 0.0)
    rng = np.random.default_rng(3)
    p = rng.standard_normal(mesh_k32.num_elements * 6)
    qx, qy = ldg.compute_q(ctx, p, 0.0 * p)
    assert np.abs(qx - p).max() < 1e-10
    assert np.abs(qy).max() < 1e-12


def test_q_of_zero(ctx32):
    z = np.zeros(ctx32.mesh.num_elements * ctx32.ref.Np)
    qx, qy = ldg.compute_q(ctx32, z, z)
    assert np.abs(qx).max() == 0.0 and np.abs(qy).max() == 0.0


def test_q_chained_constant_oracle(ref_tri_mesh):
    """K=1, N=1: q_x for p_x = 1 equals M^-1 applied to the closed-form
    moment vector of the fractional integral of the constant."""
    ref = build_reference(1)
    ctx = ldg.build_context(ref_tri_mesh, ref, 1.5, 1.5, 1.0, 0.0, 1.0, 0.0)
    ones = np.ones(ref.Np)
    qx, _ = ldg.compute_q(ctx, ones, ones)
    xq, _ = ref_tri_mesh.map_points(ref.cub_points)
    inner = (xq[0] + 1.0) ** 0.5 / (0.5 * gamma_fn(0.5))
    moment = ref_tri_mesh.jacobian[0] * (ref.cubature_basis
                                         * (ref.cub_weights * inner)).sum(1)
    want = (ref.inv_mass_ref @ moment) / ref_tri_mesh.jacobian[0]
    assert np.abs(qx - want).max() < 1e-11


def test_q_mixes_left_and_right_sides(unit_square_mesh):
    ref = build_reference(1)
    ctx_l = ldg.build_context(unit_square_mesh, ref, 1.5, 1.5, 1.0, 0.0, 1.0, 0.0)
    ctx_r = ldg.build_context(unit_square_mesh, ref, 1.5, 1.5, 0.0, 1.0, 0.0, 1.0)
    ctx_b = ldg.build_context(unit_square_mesh, ref, 1.5, 1.5, 1.0, 1.0, 1.0, 1.0)
    rng = np.random.default_rng(1)
    p = rng.standard_normal(2 * ref.Np)
    qxl, _ = ldg.compute_q(ctx_l, p, p)
    qxr, _ = ldg.compute_q(ctx_r, p, p)
    qxb, _ = ldg.compute_q(ctx_b, p, p)
    assert np.abs(qxb - (qxl + qxr)).max() < 1e-11


def test_missing_side_raises(unit_square_mesh):
    ref = build_reference(1)
    ctx = ldg.build_context(unit_square_mesh, ref, 1.5, 1.5, 1.0, 0.0, 1.0, 0.0)
    ctx.dminus = 1.0   # misconfigure: coefficient without matrix
    with pytest.raises(RuntimeError):
        ldg.compute_q(ctx, np.zeros(2 * ref.Np), np.zeros(2 * ref.Np))


def test_rhs_zero_state_zero_forcing(ctx32):
    z = np.zeros(ctx32.mesh.num_elements * ctx32.ref.Np)
    assert np.abs(ldg.compute_rhs(ctx32, z, 0.0, None)).max() == 0.0


def test_rhs_constant_forcing(ctx32):
    z = np.zeros(ctx32.mesh.num_elements * ctx32.ref.Np)
    rhs = ldg.compute_rhs(ctx32, z, 0.0, lambda x, y, t: 4.5 + 0.0 * x)
    assert np.abs(rhs - 4.5).max() < 1e-12


def test_rhs_linearity(ctx32):
    rng = np.random.default_rng(8)
    n = ctx32.mesh.num_elements * ctx32.ref.Np
    u, v = rng.standard_normal((2, n))
    f = None
    lhs = ldg.compute_rhs(ctx32, u + 2.0 * v, 0.3, f)
    rhs = (ldg.compute_rhs(ctx32, u, 0.3, f)
           + 2.0 * ldg.compute_rhs(ctx32, v, 0.3, f))
    assert np.abs(lhs - rhs).max() < 1e-10 * max(1.0, np.abs(rhs).max())


def test_numerical_flux_single_valued(ctx32):
    """The central flux value must be identical from both sides of every
    internal face (a connectivity/orientation regression catcher)."""
    mesh, ref = ctx32.mesh, ctx32.ref
    rng = np.random.default_rng(4)
    q = rng.standard_normal(mesh.num_elements * ref.Np)
    Q = q.reshape(ctx32.shape)
    qm = Q[:, ctx32.fmask_flat]
    qp = q[ctx32.vmap_p.reshape(-1)].reshape(ctx32.vmap_p.shape)
    qhat = 0.5 * (qm + qp)
    nfp = ref.N + 1
    for k in range(mesh.num_elements):
        for f in range(3):
            nb = mesh.elem_to_elem[k, f]
            if nb == k:
                continue
            g = mesh.elem_to_face[k, f]
            mine = qhat[k, f * nfp:(f + 1) * nfp]
            # match the neighbor's face nodes by position
            xn_mine = ctx32.x_nodes[k, ref.face_nodes[f]]
            yn_mine = ctx32.y_nodes[k, ref.face_nodes[f]]
            xn_nb = ctx32.x_nodes[nb, ref.face_nodes[g]]
            yn_nb = ctx32.y_nodes[nb, ref.face_nodes[g]]
            perm = np.argmin(np.abs(xn_mine[:, None] - xn_nb)
                             + np.abs(yn_mine[:, None] - yn_nb), axis=1)
            theirs = qhat[nb, g * nfp:(g + 1) * nfp][perm]
            assert np.abs(mine - theirs).max() < 1e-13 * max(1.0, np.abs(mine).max())


def test_coefficients_must_be_nonnegative(mesh_k32):
    with pytest.raises(ValueError):
        ldg.build_context(mesh_k32, build_reference(1), 1.5, 1.5,
                          -1.0, 0.0, 1.0, 0.0)


def test_energy_decay_quick(mesh_k32):
    """Zero forcing: the discrete L2 norm decays along the flow (small case;
    the full criterion runs in the acceptance suite)."""
    ref = build_reference(1)
    ctx = ldg.build_context(mesh_k32, ref, 1.5, 1.5, 1.0, 0.0, 1.0, 0.0)
    u0 = ldg.interpolate(ctx, lambda x, y: (x * x - 1.0) ** 3 * (y * y - 1.0) ** 3)
    lam = timestep.estimate_spectral_radius(ctx)
    norms = [ldg.l2_norm(ctx, u0)]
    timestep.advance(ctx, u0, timestep.TimeSpec(t_final=0.3, dt=1.0 / lam),
                     None, callback=lambda s, t, n: norms.append(n))
    diffs = np.diff(norms)
    assert diffs.max() <= 1e-8
    assert norms[-1] <= norms[0] + 1e-8


@pytest.mark.parametrize("alpha", [1.2, 1.5])
def test_residual_truncation_rate(alpha, mesh_k32, mesh_k128, mesh_k392):
    """Truncation study: rhs(interpolant) versus the interpolated time
    derivative decays under refinement at the strong-form DG rate, which for
    this operator sits near N+1-alpha."""
    N = 2
    ref = build_reference(N)
    errs, hs = [], []
    for mesh in (mesh_k32, mesh_k128, mesh_k392):
        ctx = ldg.build_context(mesh, ref, alpha, alpha, 1.0, 0.0, 1.0, 0.0)
        cfg = cases.CaseConfig(example=1, alpha=alpha, beta=alpha, degree=N,
                               mesh_paths=["<mem>"])
        forcing = cases.make_forcing(cfg)
        u_i = ldg.interpolate(ctx, lambda x, y: cases.exact_solution(1, x, y, 0.0))
        rhs = ldg.compute_rhs(ctx, u_i, 0.0, forcing)
        resid = rhs - (-u_i)   # d/dt of e^{-t} w at t = 0 is -w
        errs.append(cases.l2_error(mesh, ref, resid, 0.0, lambda x, y, t: 0.0 * x))
        hs.append(mesh.h_max)
    assert errs[0] > errs[1] > errs[2]
    rate = np.log(errs[1] / errs[2]) / np.log(hs[1] / hs[2])
    assert rate >= N + 0.55 - alpha


def test_fractional_apply_matches_stiffness_module(mesh_k32):
    """compute_q and direct FracStiffness application agree."""
    ref = build_reference(1)
    ctx = ldg.build_context(mesh_k32, ref, 1.7, 1.7, 1.0, 0.0, 1.0, 0.0)
    rng = np.random.default_rng(12)
    p = rng.standard_normal(mesh_k32.num_elements * ref.Np)
    qx, _ = ldg.compute_q(ctx, p, p)
    raw = stiffness.apply(ctx.frac_x["left"], p).reshape(ctx.shape)
    want = ((raw @ ref.inv_mass_ref) / mesh_k32.jacobian[:, None]).reshape(-1)
    assert np.abs(qx - want).max() < 1e-12 * max(1.0, np.abs(want).max())
