"""barons2d: implicit 2D barotropic compressible Navier-Stokes solver
with Navier slip walls on a staggered (MAC) grid.

Hot stencil kernels run through a compiled extension when available; the
numpy fallback is selected automatically (see barons2d._backend).
"""

from ._backend import backend_name
from .config import (ALL_SLIP, PERIODIC_X, ConfigError, GridSpec,
                     PhysicalParams, RegularizationParams, TimeSpec,
                     ValidatedConfig, validate)
from .density import (DensitySolveReport, NegativeInput, NonConvergence,
                      solve_density)
from .diagnostics import (DiagnosticsRecord, dissipation, effective_viscous_flux,
                          energy, entropy_residual, helmholtz_decompose,
                          interpolants, tail_measure, weakform_residuals)
from .eos import PressureLaw
from .grid import (ScalarField, VectorField, boundary_integrate_tangential_sq,
                   curl2d, curl_nodes, divergence, gradient, integrate,
                   laplacian_neumann, sym_grad_normsq)
from .io import read_snapshot, write_snapshot
from .lame import (LameSystem, SolverBreakdown, assemble_lame,
                   assemble_momentum_rhs, solve_lame)
from .state import FluidState
from .stepper import (StepperContext, bump_state, epsilon_continuation,
                      fixed_point_step, random_smooth_state, run,
                      uniform_state)
from .sweeps import SweepReport, dt_sweep, eps_sweep

__version__ = "0.1.0"

__all__ = [
    "ALL_SLIP", "PERIODIC_X", "ConfigError", "GridSpec", "PhysicalParams",
    "RegularizationParams", "TimeSpec", "ValidatedConfig", "validate",
    "DensitySolveReport", "NegativeInput", "NonConvergence", "solve_density",
    "DiagnosticsRecord", "dissipation", "effective_viscous_flux", "energy",
    "entropy_residual", "helmholtz_decompose", "interpolants", "tail_measure",
    "weakform_residuals", "PressureLaw", "ScalarField", "VectorField",
    "boundary_integrate_tangential_sq", "curl2d", "curl_nodes", "divergence",
    "gradient", "integrate", "laplacian_neumann", "sym_grad_normsq",
    "read_snapshot", "write_snapshot", "LameSystem", "SolverBreakdown",
    "assemble_lame", "assemble_momentum_rhs", "solve_lame", "FluidState",
    "StepperContext", "bump_state", "epsilon_continuation", "fixed_point_step",
    "random_smooth_state", "run", "uniform_state", "SweepReport", "dt_sweep",
    "eps_sweep", "backend_name",
]
