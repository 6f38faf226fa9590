"""Gauss-Jacobi rules and fractional integrals along axis-aligned segments.

The weakly singular kernels (x-xi)^(gamma-1) and (xi-x)^(gamma-1) are
absorbed into Gauss-Jacobi weights through the [-1,1] change of variables,
so each segment integral of a polynomial basis function is evaluated exactly
by a difference of two rules anchored at the singular point.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gamma as gamma_fn
from scipy.special import roots_jacobi

from .refelem import ReferenceElement, dubiner_eval

_SINGULAR_TOL = 1.0e-13


@dataclass(frozen=True)
class JacobiRule:
    """Gaussian rule exact against the weight (1-x)^a_w (1+x)^b_w on (-1,1)."""
    a_w: float
    b_w: float
    n: int
    nodes: np.ndarray
    weights: np.ndarray


@lru_cache(maxsize=256)
def _cached_rule(n: int, a_w: float, b_w: float) -> JacobiRule:
    nodes, weights = roots_jacobi(n, a_w, b_w)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return JacobiRule(a_w=a_w, b_w=b_w, n=n, nodes=nodes, weights=weights)


def gauss_jacobi(n: int, a_w: float, b_w: float) -> JacobiRule:
    """n-point Gauss-Jacobi rule for the weight (1-x)^a_w (1+x)^b_w.

    Rules are cached per (n, a_w, b_w) and immutable.
    """
    if n < 1:
        raise ValueError(f"point count n={n} must be >= 1")
    if a_w <= -1.0 or b_w <= -1.0:
        raise ValueError(f"weight exponents must exceed -1, got ({a_w}, {b_w})")
    return _cached_rule(int(n), float(a_w), float(b_w))


def rl_integral_shifted_power(p: int, gamma_ord: float, a: float, x):
    """Left Riemann-Liouville integral of (xi - a)^p, evaluated at x >= a.

    Returns Gamma(p+1)/Gamma(p+1+gamma) * (x-a)^(p+gamma).
    """
    if p < 0:
        raise ValueError("power p must be nonnegative")
    if gamma_ord < 0:
        raise ValueError("integral order must be nonnegative")
    x = np.asarray(x, dtype=float)
    return (gamma_fn(p + 1.0) / gamma_fn(p + 1.0 + gamma_ord)
            * (x - a) ** (p + gamma_ord))


def rl_integral_shifted_power_right(p: int, gamma_ord: float, b: float, x):
    """Right Riemann-Liouville integral of (b - xi)^p, evaluated at x <= b."""
    if p < 0:
        raise ValueError("power p must be nonnegative")
    if gamma_ord < 0:
        raise ValueError("integral order must be nonnegative")
    x = np.asarray(x, dtype=float)
    return (gamma_fn(p + 1.0) / gamma_fn(p + 1.0 + gamma_ord)
            * (b - x) ** (p + gamma_ord))


def _anchored_modal_sum(ref, mesh, m, anchor, target, fixed, rule, axis):
    """Gauss-Jacobi sum of the modal basis along the segment between target
    and anchor, for the rule whose weight absorbs the kernel singularity at
    the target end.  Points may fall outside element m: the polynomial
    extension of the basis is evaluated there.
    """
    mid = 0.5 * (target + anchor)
    half = 0.5 * abs(target - anchor)
    xi = mid + half * rule.nodes
    if axis == 0:
        px, py = xi, np.full_like(xi, fixed)
    else:
        px, py = np.full_like(xi, fixed), xi
    r, s = mesh.to_reference(m, px, py)
    psi = dubiner_eval(ref.N, r, s)              # (Np, n)
    return psi @ rule.weights                    # modal sums, (Np,)


def frac_segment_integral(ref: ReferenceElement, mesh, m: int, interval, target,
                          gamma_ord: float, axis: str = "x", side: str = "left",
                          n_points: int | None = None) -> np.ndarray:
    """Fractional integral of element m's basis functions over one interval.

    For side="left" returns, per basis function,
    (1/Gamma(g)) * integral_{lo}^{hi} (t - xi)^(g-1) ell_j(xi) dxi with t the
    target coordinate along the axis, computed as the difference of two
    Gauss-Jacobi sums anchored at the singular point; when hi coincides with
    the target (the singular self-interval) a single rule is used.
    side="right" mirrors with kernel (xi - t)^(g-1).
    """
    if not (0.0 < gamma_ord < 1.0):
        raise ValueError(f"fractional integral order {gamma_ord} outside (0,1)")
    if axis not in ("x", "y"):
        raise ValueError("axis must be 'x' or 'y'")
    ax = 0 if axis == "x" else 1
    lo, hi = float(interval[0]), float(interval[1])
    if not lo < hi:
        raise ValueError("empty interval")
    t = float(target[ax])
    fixed = float(target[1 - ax])
    if n_points is None:
        n_points = ref.N + 3

    if side == "left":
        if hi > t + _SINGULAR_TOL * max(1.0, abs(t)):
            raise ValueError("left-sided interval must lie at or below the target")
        rule = gauss_jacobi(n_points, gamma_ord - 1.0, 0.0)
        far = lo
        scale_far = (0.5 * (t - lo)) ** gamma_ord
        singular = (t - hi) <= _SINGULAR_TOL * max(1.0, abs(t - lo))
        scale_near = 0.0 if singular else (0.5 * (t - hi)) ** gamma_ord
    elif side == "right":
        if lo < t - _SINGULAR_TOL * max(1.0, abs(t)):
            raise ValueError("right-sided interval must lie at or above the target")
        rule = gauss_jacobi(n_points, 0.0, gamma_ord - 1.0)
        far = hi
        scale_far = (0.5 * (hi - t)) ** gamma_ord
        singular = (lo - t) <= _SINGULAR_TOL * max(1.0, abs(hi - t))
        scale_near = 0.0 if singular else (0.5 * (lo - t)) ** gamma_ord
    else:
        raise ValueError("side must be 'left' or 'right'")

    near = hi if side == "left" else lo
    acc = scale_far * _anchored_modal_sum(ref, mesh, m, far, t, fixed, rule, ax)
    if scale_near > 0.0:
        acc = acc - scale_near * _anchored_modal_sum(ref, mesh, m, near, t, fixed, rule, ax)
    modal = acc / gamma_fn(gamma_ord)
    return ref.inv_vandermonde.T @ modal
