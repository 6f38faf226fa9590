"""Nodal DG solver for 2D space-fractional diffusion on triangular meshes."""

from .backend import kernel_name
from .mesh import Mesh, TraceResult, load_mesh, load_mesh_files, trace_segment
from .refelem import ReferenceElement, build_reference, eval_basis, local_operators
from .fracquad import (JacobiRule, gauss_jacobi, frac_segment_integral,
                       rl_integral_shifted_power, rl_integral_shifted_power_right)
from .stiffness import FracStiffness, assemble
from .ldg import LdgContext, build_context, compute_gradient, compute_q, compute_rhs, l2_norm
from .timestep import TimeSpec, lsrk_step, advance
from .cases import (CaseConfig, RunResult, exact_solution, make_forcing,
                    l2_error, run_convergence, run_single)

__version__ = "0.1.0"

__all__ = [
    "Mesh", "TraceResult", "load_mesh", "load_mesh_files", "trace_segment",
    "ReferenceElement", "build_reference", "eval_basis", "local_operators",
    "JacobiRule", "gauss_jacobi", "frac_segment_integral",
    "rl_integral_shifted_power", "rl_integral_shifted_power_right",
    "FracStiffness", "assemble",
    "LdgContext", "build_context", "compute_gradient", "compute_q",
    "compute_rhs", "l2_norm",
    "TimeSpec", "lsrk_step", "advance",
    "CaseConfig", "RunResult", "exact_solution", "make_forcing",
    "l2_error", "run_convergence", "run_single",
    "kernel_name",
]
