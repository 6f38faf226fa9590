"""Vectorized numpy kernel for fractional stiffness block accumulation.

Fallback used when the compiled extension is unavailable; same contract as
fracdg._assembly_cy.accumulate_blocks.
"""

from __future__ import annotations

import numpy as np

from .refelem import dubiner_eval


def accumulate_blocks(ent_slot, ent_m, ent_q, ent_lo, ent_hi, ent_tgt, ent_fix,
                      ax, toward_min, gamma_ord, inv_gamma, sing_tol,
                      rmap, smap, gj_nodes, gj_weights, vinv, degree, mode_norm,
                      outer, out_blocks):
    """Accumulate outer(w_i, I_j) into out_blocks[slot] for every contribution.

    Each contribution is one (cubature point, crossed element) pair: element
    ent_m crossed on [ent_lo, ent_hi] by the segment traced from coordinate
    ent_tgt (fixed transverse coordinate ent_fix).  I_j is the fractional
    integral of basis function j of element m over that interval, computed by
    the difference of two Gauss-Jacobi sums anchored at the singular point;
    the near-anchor term drops out on the singular self-interval.  mode_norm
    is consumed by the compiled twin; dubiner_eval normalizes internally here.
    """
    C = len(ent_slot)
    if C == 0:
        return
    ent_lo = np.asarray(ent_lo)
    ent_hi = np.asarray(ent_hi)
    ent_tgt = np.asarray(ent_tgt)
    ent_fix = np.asarray(ent_fix)

    if toward_min:
        far, near = ent_lo, ent_hi
        nonsing = (ent_tgt - ent_hi) > sing_tol
    else:
        far, near = ent_hi, ent_lo
        nonsing = (ent_lo - ent_tgt) > sing_tol

    modal = _anchored_sums(ent_m, far, ent_tgt, ent_fix, ax, gamma_ord,
                           rmap, smap, gj_nodes, gj_weights, degree)
    if np.any(nonsing):
        sub = np.nonzero(nonsing)[0]
        modal[sub] -= _anchored_sums(ent_m[sub], near[sub], ent_tgt[sub],
                                     ent_fix[sub], ax, gamma_ord,
                                     rmap, smap, gj_nodes, gj_weights, degree)
    nodal = (modal * inv_gamma) @ vinv                     # (C, Np)
    weights = outer[ent_q]                                 # (C, Np)
    np.add.at(out_blocks, ent_slot, weights[:, :, None] * nodal[:, None, :])


def _anchored_sums(ms, anchors, targets, fixed, ax, gamma_ord,
                   rmap, smap, gj_nodes, gj_weights, degree):
    """scale * sum_g w_g psi(xi_g) for every contribution; (C, Np)."""
    half = 0.5 * np.abs(targets - anchors)
    mid = 0.5 * (targets + anchors)
    xi = mid[:, None] + half[:, None] * gj_nodes[None, :]  # (C, n)
    if ax == 0:
        px, py = xi, np.broadcast_to(fixed[:, None], xi.shape)
    else:
        px, py = np.broadcast_to(fixed[:, None], xi.shape), xi
    rm = rmap[ms]
    sm = smap[ms]
    r = rm[:, 0, None] + rm[:, 1, None] * px + rm[:, 2, None] * py
    s = sm[:, 0, None] + sm[:, 1, None] * px + sm[:, 2, None] * py
    psi = dubiner_eval(degree, r, s)                       # (Np, C, n)
    sums = psi @ gj_weights                                # (Np, C)
    return (half ** gamma_ord)[:, None] * sums.T           # (C, Np)
