"""Implicit time stepping: one step is an outer damped fixed point that
alternates the regularized density solve with the Lame momentum solve,
plus the time loop and the epsilon-continuation study.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import density as density_mod
from .config import ValidatedConfig
from .density import NonConvergence, laplacian_matrix, solve_density
from .diagnostics import (DiagnosticsRecord, compute_record, dissipation,
                          effective_viscous_flux, energy, entropy_residual,
                          tail_measure)
from .eos import PressureLaw
from .grid import (ScalarField, VectorField, gradient, h1_normsq, norm_l2_cells,
                   norm_l2_faces)
from .lame import ShiftedLameSolver, assemble_lame, assemble_momentum_rhs
from .state import FluidState

logger = logging.getLogger(__name__)


def default_epsilon(grid) -> float:
    """Artificial diffusion tied to the mesh: 0.1 * min(hx, hy)^2."""
    return 0.1 * min(grid.hx, grid.hy) ** 2


class StepperContext:
    """Everything one run needs: pressure law, factorized Lame system,
    cached Laplacian, tolerances.  Independent of dt, so sweep runs with
    different time steps share one context."""

    def __init__(self, cfg: ValidatedConfig, tol_outer: float = 1e-8,
                 max_outer: int = 200, relax_theta: float = 0.7,
                 density_tol: float = 1e-10, density_max_iters: int = 200):
        if not 0.0 < relax_theta <= 1.0:
            raise ValueError(f"relax_theta must be in (0, 1], got {relax_theta}")
        self.cfg = cfg
        self.law = PressureLaw(cfg.params.gamma, cfg.reg)
        self.lame = assemble_lame(cfg.grid, cfg.params)
        self.lap = laplacian_matrix(cfg.grid)
        self.tol_outer = tol_outer
        self.max_outer = max_outer
        self.relax_theta = relax_theta
        self.density_tol = density_tol
        self.density_max_iters = density_max_iters

    @property
    def epsilon(self) -> float:
        return self.cfg.reg.epsilon


@dataclass
class StepReport:
    outer_iters: int = 0
    outer_residual: float = np.inf
    density_reports: list = field(default_factory=list)
    energy_before: float = 0.0
    energy_after: float = 0.0
    dissipation: float = 0.0
    entropy_residual: float = 0.0


def fixed_point_step(prev: FluidState, dt: float, ctx: StepperContext,
                     tol_outer: float | None = None,
                     max_outer: int | None = None,
                     relax_theta: float | None = None,
                     epsilon: float | None = None,
                     initial_guess: tuple | None = None):
    """One implicit step; returns (state, report) or raises NonConvergence
    with the best iterate attached."""
    tol_outer = ctx.tol_outer if tol_outer is None else tol_outer
    max_outer = ctx.max_outer if max_outer is None else max_outer
    theta = ctx.relax_theta if relax_theta is None else relax_theta
    eps = ctx.epsilon if epsilon is None else epsilon
    alpha = 1.0 / dt
    law = ctx.law

    h, g_prev = prev.rho, prev.v
    report = StepReport(energy_before=energy(h, g_prev, law))

    if initial_guess is not None:
        rho_i, v_i = initial_guess[0].copy(), initial_guess[1].copy()
    else:
        rho_i, v_i = h.copy(), g_prev.copy()

    # the alpha*rho*v mass term is treated implicitly (shifted operator,
    # frozen at h for the step) so the outer map stays contractive as
    # dt -> 0; the converged state satisfies the unshifted equations
    from .grid import interp_cell_to_facex, interp_cell_to_facey
    h_face = VectorField(h.grid, interp_cell_to_facex(h), interp_cell_to_facey(h))
    h_face.enforce_slip()
    h_face_dof = ctx.lame.to_dof(h_face)
    shifted = ShiftedLameSolver(ctx.lame, alpha * h_face_dof)
    area = ctx.cfg.grid.cell_area

    best = (rho_i, v_i)
    best_res = np.inf
    for it in range(1, max_outer + 1):
        rho_next, dreport = solve_density(
            v_i, h, alpha, ctx.cfg.reg, law, tol=ctx.density_tol,
            max_iters=ctx.density_max_iters, epsilon=eps, lap=ctx.lap)
        report.density_reports.append(dreport)

        load = assemble_momentum_rhs(rho_next, v_i, h, g_prev, alpha, eps, law)
        rhs = area * (ctx.lame.to_dof(load)
                      + alpha * h_face_dof * ctx.lame.to_dof(v_i))
        w = ctx.lame.from_dof(shifted.solve_dof(rhs))
        v_next = VectorField(v_i.grid,
                             (1.0 - theta) * v_i.vx + theta * w.vx,
                             (1.0 - theta) * v_i.vy + theta * w.vy)

        dv = np.sqrt(h1_normsq(v_next - v_i))
        drho = norm_l2_cells(rho_next - rho_i)
        # the sound-speed fraction keeps the velocity scale away from zero
        # at (near-)rest states, where the update is pure roundoff
        c_ref = np.sqrt(law.gamma * max(float(h.values.max()), 0.0)
                        ** (law.gamma - 1.0))
        scale_v = max(np.sqrt(h1_normsq(v_next)), 1e-6 * c_ref, 1e-30)
        scale_r = max(norm_l2_cells(rho_next), 1e-30)
        res = dv / scale_v + drho / scale_r
        report.outer_iters = it
        report.outer_residual = res

        rho_i, v_i = rho_next, v_next
        if res < best_res:
            best, best_res = (rho_i, v_i), res
        if res <= tol_outer:
            break

    if best_res > tol_outer:
        state = FluidState(best[0], best[1], prev.time + dt,
                           prev.step_index + 1, eps)
        raise NonConvergence(
            f"outer fixed point stalled at residual {best_res:.3e} after "
            f"{report.outer_iters} iterations (tol {tol_outer:.1e})",
            best=state, report=report)

    state = FluidState(rho_i, v_i, prev.time + dt, prev.step_index + 1, eps)
    report.outer_residual = best_res
    report.energy_after = energy(state.rho, state.v, law)
    report.dissipation = dissipation(state.v, ctx.cfg.params)
    report.entropy_residual = entropy_residual(prev, state, dt)
    return state, report


@dataclass
class Trajectory:
    states: list = field(default_factory=list)
    records: list = field(default_factory=list)
    step_reports: list = field(default_factory=list)

    @property
    def final(self) -> FluidState:
        return self.states[-1]


def run(initial: FluidState, dt: float, n_steps: int, ctx: StepperContext,
        callbacks=None, tail_thresholds=(), with_weakform: bool = True,
        check_invariants: bool = True) -> Trajectory:
    """March n_steps implicit steps, recording per-step diagnostics."""
    if float(initial.rho.values.min()) < 0:
        raise ValueError("initial density must be nonnegative")
    traj = Trajectory(states=[initial])
    state = initial
    for _ in range(n_steps):
        state, rep = fixed_point_step(state, dt, ctx)
        if check_invariants:
            state.check_invariants(ctx.cfg.reg.m2)
        record = compute_record(traj.states[-1], state, dt, ctx.law,
                                ctx.cfg.params, tail_thresholds, ctx.lame,
                                with_weakform=with_weakform)
        traj.states.append(state)
        traj.records.append(record)
        traj.step_reports.append(rep)
        if callbacks:
            for cb in callbacks:
                cb(state, record)
    return traj


@dataclass
class EpsilonPoint:
    epsilon: float
    converged: bool
    state: FluidState | None
    eps_grad_rho: float = np.nan
    g_distance: float = np.nan
    tail_measures: dict = field(default_factory=dict)
    message: str = ""


def epsilon_continuation(prev: FluidState, dt: float, ctx: StepperContext,
                         eps_schedule, tail_thresholds=()):
    """Solve the same implicit step for each epsilon in a decreasing
    schedule, warm-starting from the previous epsilon's solution.

    Records eps * |grad rho_eps|_2 and |G_eps - G_ref|_2 with G_ref taken
    from the smallest converged epsilon, plus density-tail measures.
    """
    eps_schedule = list(eps_schedule)
    if any(e <= 0 for e in eps_schedule):
        raise ValueError("epsilon schedule must be positive")
    if any(b >= a for a, b in zip(eps_schedule, eps_schedule[1:])):
        raise ValueError("epsilon schedule must be strictly decreasing")

    points = []
    guess = None
    for eps in eps_schedule:
        try:
            state, _ = fixed_point_step(prev, dt, ctx, epsilon=eps,
                                        initial_guess=guess)
            grad_rho = norm_l2_faces(gradient(state.rho))
            points.append(EpsilonPoint(
                epsilon=eps, converged=True, state=state,
                eps_grad_rho=eps * grad_rho,
                tail_measures={m: tail_measure(state.rho, m)
                               for m in tail_thresholds}))
            guess = (state.rho, state.v)
        except NonConvergence as exc:
            logger.warning("epsilon continuation: step failed at eps=%g: %s",
                           eps, exc)
            points.append(EpsilonPoint(epsilon=eps, converged=False,
                                       state=None, message=str(exc)))

    converged = [p for p in points if p.converged]
    if converged:
        ref = converged[-1].state
        g_ref = effective_viscous_flux(ref.rho, ref.v, ctx.law, ctx.cfg.params)
        for p in converged:
            g_eps = effective_viscous_flux(p.state.rho, p.state.v, ctx.law,
                                           ctx.cfg.params)
            p.g_distance = norm_l2_cells(g_eps - g_ref)
    return points


# ---------------------------------------------------------------------------
# initial data

def uniform_state(grid, value: float, epsilon: float = 0.0) -> FluidState:
    return FluidState(ScalarField.full(grid, value), VectorField.zeros(grid),
                      epsilon_used=epsilon)


def bump_state(grid, base: float = 1.0, amplitude: float = 0.5,
               center=(0.5, 0.5), width: float = 0.15) -> FluidState:
    """Gaussian density bump at rest."""
    cx, cy = center
    rho = ScalarField.from_function(
        grid, lambda x, y: base + amplitude
        * np.exp(-((x - cx) ** 2 + (y - cy) ** 2) / (2.0 * width ** 2)))
    return FluidState(rho, VectorField.zeros(grid))


def random_smooth_state(grid, seed: int, base: float = 1.0,
                        rho_amplitude: float = 0.3,
                        v_amplitude: float = 0.1, modes: int = 3) -> FluidState:
    """Low-frequency Fourier initial data with a fixed seed.

    The density uses Neumann-compatible cosine modes, the velocity a
    perp-gradient of a sine stream function (slip-compatible and
    divergence-free by construction).
    """
    rng = np.random.default_rng(seed)
    from .grid import cell_centers, node_coords
    x, y = cell_centers(grid)
    lx, ly = grid.lx, grid.ly
    vals = np.zeros(grid.shape_cell)
    norm = 0.0
    for k in range(modes + 1):
        for l in range(modes + 1):
            if k == l == 0:
                continue
            c = rng.standard_normal()
            if grid.periodic_x:
                fx = np.cos(2 * np.pi * k * x / lx) + np.sin(2 * np.pi * k * x / lx)
            else:
                fx = np.cos(np.pi * k * x / lx)
            vals += c * fx * np.cos(np.pi * l * y / ly)
            norm = max(norm, 1e-30)
    amp = np.abs(vals).max()
    if amp > 0:
        vals *= rho_amplitude / amp
    rho = ScalarField(grid, base + vals)
    if rho.values.min() <= 0:
        raise ValueError("random initial density not positive; reduce amplitude")

    nxg, nyg = node_coords(grid)
    psi = np.zeros(nxg.shape)
    for k in range(1, modes + 1):
        for l in range(1, modes + 1):
            c = rng.standard_normal()
            if grid.periodic_x:
                sx = np.sin(2 * np.pi * k * nxg / lx) + np.cos(2 * np.pi * k * nxg / lx)
            else:
                sx = np.sin(np.pi * k * nxg / lx)
            psi += c * sx * np.sin(np.pi * l * nyg / ly)
    pamp = np.abs(psi).max()
    if pamp > 0:
        psi *= v_amplitude / pamp
    if grid.periodic_x:
        vx = -(psi[:, 1:] - psi[:, :-1]) / grid.hy
        vy = (np.roll(psi, -1, axis=0) - psi) / grid.hx
    else:
        vx = -(psi[:, 1:] - psi[:, :-1]) / grid.hy
        vy = (psi[1:, :] - psi[:-1, :]) / grid.hx
    return FluidState(rho, VectorField(grid, vx, vy).enforce_slip())
