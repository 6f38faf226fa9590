"""Low-storage five-stage fourth-order explicit Runge-Kutta time stepping."""

from __future__ import annotations

import sys
from dataclasses import dataclass

import numpy as np

from . import ldg

# Carpenter-Kennedy 5-stage, 4th-order low-storage coefficients.
LSRK_A = (0.0,
          -567301805773.0 / 1357537059087.0,
          -2404267990393.0 / 2016746695238.0,
          -3550918686646.0 / 2091501179385.0,
          -1275806237668.0 / 842570457699.0)
LSRK_B = (1432997174477.0 / 9575080441755.0,
          5161836677717.0 / 13612068292357.0,
          1720146321549.0 / 2090206949498.0,
          3134564353537.0 / 4481467310338.0,
          2277821191437.0 / 14882151754819.0)
LSRK_C = (0.0,
          1432997174477.0 / 9575080441755.0,
          2526269341429.0 / 6820363962896.0,
          2006345519317.0 / 3224310063776.0,
          2802321613138.0 / 2924317926251.0)

# Largest stable factor measured for the worst case (N=1, alpha=2, where the
# operator norm reaches ~100 N^4 / h_min^2 and the LSRK45 real-axis bound is
# 4.66); 0.025 keeps ~1.8x margin and only gets safer for N >= 2 or alpha < 2.
DEFAULT_CFL = 0.025


class InstabilityError(RuntimeError):
    """Non-finite state detected after a step."""


@dataclass
class TimeSpec:
    """Integration horizon and step control.

    Exactly one of dt and cfl drives the step size; with cfl the step is
    dt = cfl * h_min^2 / N^4 (a conservative parabolic-type bound).  The
    final step is truncated to land exactly on t_final.
    """
    t_final: float
    dt: float | None = None
    cfl: float | None = None
    steps_taken: int = 0

    def resolve_dt(self, mesh, degree: int) -> float:
        if self.t_final < 0:
            raise ValueError("t_final must be nonnegative")
        if self.dt is not None:
            if self.dt <= 0:
                raise ValueError("dt must be positive")
            return self.dt
        cfl = self.cfl if self.cfl is not None else DEFAULT_CFL
        return cfl * mesh.h_min ** 2 / max(1, degree) ** 4


def lsrk_step(rhs, u: np.ndarray, t: float, dt: float) -> np.ndarray:
    """One five-stage two-register update; global order 4 in dt."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    u = np.array(u, dtype=float, copy=True)
    res = np.zeros_like(u)
    for a, b, c in zip(LSRK_A, LSRK_B, LSRK_C):
        res = a * res + dt * rhs(u, t + c * dt)
        u += b * res
    if not np.all(np.isfinite(u)):
        raise InstabilityError(f"solution became non-finite at t={t + dt:.6g} (dt={dt:.3e})")
    return u


def advance(ctx, u0: np.ndarray, spec: TimeSpec, forcing=None,
            callback=None, verbose: bool = False) -> np.ndarray:
    """March the semidiscrete system to spec.t_final.

    callback, when given, receives (step, t, l2_norm) after every step; the
    same information goes to stderr as `step <n> t=<t> l2=<norm>` when
    verbose.
    """
    dt = spec.resolve_dt(ctx.mesh, ctx.ref.N)
    u = np.array(u0, dtype=float, copy=True)
    if u.shape != (ctx.mesh.num_elements * ctx.ref.Np,):
        raise ValueError("initial state has the wrong length")

    def rhs(state, t):
        return ldg.compute_rhs(ctx, state, t, forcing)

    t = 0.0
    spec.steps_taken = 0
    tiny = 1e-12 * max(1.0, spec.t_final)
    while t < spec.t_final - tiny:
        step_dt = min(dt, spec.t_final - t)
        u = lsrk_step(rhs, u, t, step_dt)
        t += step_dt
        spec.steps_taken += 1
        if callback is not None or verbose:
            norm = ldg.l2_norm(ctx, u)
            if callback is not None:
                callback(spec.steps_taken, t, norm)
            if verbose:
                print(f"step {spec.steps_taken} t={t:.8g} l2={norm:.10e}",
                      file=sys.stderr)
    return u


def estimate_spectral_radius(ctx, n_iter: int = 40, seed: int = 0) -> float:
    """Power-iteration estimate of |lambda|_max of the semidiscrete operator.

    The zero-forcing right-hand side is linear in the state, so repeated
    application of the operator on a random vector converges to the dominant
    eigenvalue magnitude; used to pick stable explicit steps.
    """
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(ctx.mesh.num_elements * ctx.ref.Np)
    v /= np.linalg.norm(v)
    lam = 1.0
    for _ in range(n_iter):
        w = ldg.compute_rhs(ctx, v, 0.0, None)
        lam = np.linalg.norm(w)
        if lam == 0.0:
            return 0.0
        v = w / lam
    return float(lam)
