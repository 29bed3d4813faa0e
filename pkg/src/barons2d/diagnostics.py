"""Observables of the discrete system: energy and dissipation, entropy
residual, norm family, Helmholtz decomposition, effective viscous flux,
density-tail measures, weak-form residuals and time interpolants.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ._backend import kernels
from .config import GridSpec, PhysicalParams
from .density import density_defect, laplacian_matrix
from .eos import PressureLaw
from .grid import (ScalarField, VectorField, boundary_integrate_tangential_sq,
                   cell_centers, divergence, gradient, h1_normsq, inner_cells,
                   inner_faces, integrate, node_coords, norm_l2_cells,
                   norm_l2_faces, sym_grad_normsq)
from .lame import LameSystem, assemble_momentum_rhs
from .state import FluidState


@dataclass
class DiagnosticsRecord:
    """Per-step scalar observables; serializes to one CSV row."""

    step_index: int
    time: float
    mass: float
    energy: float
    dissipation: float
    boundary_friction_dissipation: float
    entropy_residual: float
    rho_gamma_norm: float
    rho_v2_norm: float
    v_h1_normsq: float
    rho_increment_gamma: float
    pressure_l2: float
    rho_gammaplus1_norm: float
    max_rho: float
    min_rho: float
    weakform_continuity: float
    weakform_momentum: float
    tail_measures: dict = field(default_factory=dict)

    SCALAR_COLUMNS = (
        "step_index", "time", "mass", "energy", "dissipation",
        "boundary_friction_dissipation", "entropy_residual",
        "rho_gamma_norm", "rho_v2_norm", "v_h1_normsq",
        "rho_increment_gamma", "pressure_l2", "rho_gammaplus1_norm",
        "max_rho", "min_rho", "weakform_continuity", "weakform_momentum",
    )


# ---------------------------------------------------------------------------
# energy / dissipation / entropy

def kinetic_energy_density(rho: ScalarField, v: VectorField) -> ScalarField:
    vsq = kernels.vel_sq_cells(v.vx, v.vy, rho.grid.periodic_x)
    return ScalarField(rho.grid, rho.values * vsq)


def energy(rho: ScalarField, v: VectorField, law: PressureLaw) -> float:
    """Total energy 0.5*int rho v^2 + 1/(gamma-1) * int rho^gamma."""
    kin = 0.5 * integrate(kinetic_energy_density(rho, v))
    internal = integrate(rho.map(law.pi)) / (law.gamma - 1.0)
    return kin + internal


def dissipation(v: VectorField, params: PhysicalParams) -> float:
    """int(2 mu |D(v)|^2 + nu (div v)^2) + f * boundary (v.tau)^2.

    Identical (to roundoff) to the Lame bilinear form <Av, v>: the same
    discrete strain, divergence and trace enter both.
    """
    d = divergence(v)
    return (2.0 * params.mu * integrate(sym_grad_normsq(v))
            + params.nu * inner_cells(d, d)
            + params.f_friction * boundary_integrate_tangential_sq(v))


def boundary_friction_dissipation(v: VectorField, params: PhysicalParams) -> float:
    return params.f_friction * boundary_integrate_tangential_sq(v)


def _xlogx(a: np.ndarray) -> np.ndarray:
    # the integrand rho*ln(rho) extended by its limit 0 at rho = 0
    out = np.zeros_like(a)
    pos = a > 0
    out[pos] = a[pos] * np.log(a[pos])
    return out


def entropy_residual(prev: FluidState, cur: FluidState, dt: float) -> float:
    """(1/dt) int [rho^k ln rho^k - rho^(k-1) ln rho^(k-1)] + int rho^k div v^k."""
    g = cur.grid
    ent = g.cell_area * float(np.sum(_xlogx(cur.rho.values) - _xlogx(prev.rho.values)))
    return ent / dt + inner_cells(cur.rho, divergence(cur.v))


# ---------------------------------------------------------------------------
# Helmholtz decomposition

@lru_cache(maxsize=8)
def _neumann_poisson_solver(grid: GridSpec):
    """Pinned factorization of the (singular) cell Neumann Laplacian."""
    lap = laplacian_matrix(grid).tolil()
    lap[0, :] = 0.0
    lap[0, 0] = 1.0
    return spla.splu(lap.tocsc())


@lru_cache(maxsize=8)
def _dirichlet_node_solver(grid: GridSpec):
    """Factorization of the node Laplacian, zero on the y-walls (and the
    x-walls unless periodic); returns (solver, interior mask, node shape)."""
    nnx = grid.nx if grid.periodic_x else grid.nx + 1
    nny = grid.ny + 1
    interior = np.ones((nnx, nny), dtype=bool)
    interior[:, 0] = interior[:, -1] = False
    if not grid.periodic_x:
        interior[0, :] = interior[-1, :] = False
    idx = -np.ones((nnx, nny), dtype=np.int64)
    n = int(interior.sum())
    idx[interior] = np.arange(n)
    rows, cols, vals = [], [], []
    wx, wy = 1.0 / grid.hx ** 2, 1.0 / grid.hy ** 2

    def couple(ai, aj, bi, bj, w):
        a = idx[ai, aj]
        b = idx[bi, bj]
        m = (a >= 0)
        rows.append(a[m]); cols.append(a[m]); vals.append(np.full(m.sum(), -w))
        mm = m & (b >= 0)
        rows.append(a[mm]); cols.append(b[mm]); vals.append(np.full(mm.sum(), w))

    ii, jj = np.meshgrid(np.arange(nnx), np.arange(nny), indexing="ij")
    ii, jj = ii.ravel(), jj.ravel()
    if grid.periodic_x:
        couple(ii, jj, (ii + 1) % nnx, jj, wx)
        couple(ii, jj, (ii - 1) % nnx, jj, wx)
    else:
        m = ii + 1 < nnx
        couple(ii[m], jj[m], ii[m] + 1, jj[m], wx)
        m = ii - 1 >= 0
        couple(ii[m], jj[m], ii[m] - 1, jj[m], wx)
    m = jj + 1 < nny
    couple(ii[m], jj[m], ii[m], jj[m] + 1, wy)
    m = jj - 1 >= 0
    couple(ii[m], jj[m], ii[m], jj[m] - 1, wy)
    mat = sp.coo_matrix((np.concatenate(vals),
                         (np.concatenate(rows), np.concatenate(cols))),
                        shape=(n, n)).tocsc()
    return spla.splu(mat), interior, (nnx, nny)


def helmholtz_decompose(v: VectorField):
    """Split v = grad(phi) + perp-grad(A) (+ mean x-flow in the channel).

    phi solves the Neumann Poisson problem lap phi = div v (zero mean);
    A solves the Dirichlet node problem lap A = curl v.  On the MAC grid
    the discrete reconstruction is exact up to solver roundoff, so the
    returned reconstruction error measures only algebra.
    """
    g = v.grid
    rhs = divergence(v).values.ravel().copy()
    rhs -= rhs.mean()          # project out the incompatibility (zero for slip v)
    rhs[0] = 0.0
    phi_vals = _neumann_poisson_solver(g).solve(rhs).reshape(g.shape_cell)
    phi_vals -= phi_vals.mean()
    phi = ScalarField(g, phi_vals)

    solver, interior, shape = _dirichlet_node_solver(g)
    omega = kernels.curl_nodes(v.vx, v.vy, g.hx, g.hy, g.periodic_x)
    a_vals = np.zeros(shape)
    a_vals[interior] = solver.solve(omega[interior].ravel())
    # perp gradient of the node function lands exactly on faces
    if g.periodic_x:
        ax = -(a_vals[:, 1:] - a_vals[:, :-1]) / g.hy
        ay = (np.roll(a_vals, -1, axis=0) - a_vals) / g.hx
    else:
        ax = -(a_vals[:, 1:] - a_vals[:, :-1]) / g.hy
        ay = (a_vals[1:, :] - a_vals[:-1, :]) / g.hx
    sol = VectorField(g, ax, ay)

    recon = gradient(phi) + sol
    if g.periodic_x:
        # the harmonic mean flow is invisible to both potentials
        recon.vx[:] += float(v.vx.mean())
    err = norm_l2_faces(v - recon)
    vnorm = norm_l2_faces(v)
    return phi, ScalarField(g, 0.25 * _nodes_to_cells(a_vals, g)), \
        (err / vnorm if vnorm > 0 else 0.0)


def _nodes_to_cells(a_vals, grid: GridSpec):
    if grid.periodic_x:
        ar = np.roll(a_vals, -1, axis=0)
        return a_vals[:, :-1] + a_vals[:, 1:] + ar[:, :-1] + ar[:, 1:]
    return (a_vals[:-1, :-1] + a_vals[:-1, 1:]
            + a_vals[1:, :-1] + a_vals[1:, 1:])


def helmholtz_parts(v: VectorField):
    """Gradient and solenoidal parts as face fields (for orthogonality and
    oracle tests)."""
    g = v.grid
    phi, _, err = helmholtz_decompose(v)
    gp = gradient(phi)
    rest = v - gp
    if g.periodic_x:
        rest.vx[:] -= float(v.vx.mean())
    return gp, rest, err


# ---------------------------------------------------------------------------
# effective viscous flux and tails

def effective_viscous_flux(rho: ScalarField, v: VectorField, law: PressureLaw,
                           params: PhysicalParams, zero_mean: bool = False) -> ScalarField:
    """G = P(rho) - (2 mu + nu) div v at cells."""
    g = rho.grid
    vals = law.truncated_pressure_P(rho.values) \
        - (2.0 * params.mu + params.nu) * divergence(v).values
    if zero_mean:
        vals = vals - vals.mean()
    return ScalarField(g, vals)


def tail_measure(rho: ScalarField, threshold: float) -> float:
    """Total area of the cells with rho > threshold."""
    if threshold <= 0:
        raise ValueError("tail threshold must be positive")
    return rho.grid.cell_area * float(np.count_nonzero(rho.values > threshold))


# ---------------------------------------------------------------------------
# weak-form residuals

@lru_cache(maxsize=8)
def _test_family(grid: GridSpec):
    """Fixed family of 25 discrete test functions.

    5 scalar shapes (cosine modes, Neumann compatible) for the continuity
    identity; 10 discrete gradients of cosine potentials and 10 discrete
    perp-gradients of sine stream functions for the momentum identity.
    Discrete liftings keep every vector test slip-compatible exactly.
    In the channel the x-dependence uses periodic modes.
    """
    x, y = cell_centers(grid)
    lx, ly = grid.lx, grid.ly

    def cosmode(k, l):
        if grid.periodic_x:
            fx = np.cos(2.0 * np.pi * k * x / lx)
        else:
            fx = np.cos(np.pi * k * x / lx)
        return fx * np.cos(np.pi * l * y / ly)

    scalars = [ScalarField(grid, cosmode(k, l))
               for k, l in ((0, 0), (1, 0), (0, 1), (1, 1), (2, 2))]

    grads = [gradient(ScalarField(grid, cosmode(k, l)))
             for k, l in ((1, 0), (0, 1), (1, 1), (2, 0), (0, 2),
                          (2, 1), (1, 2), (2, 2), (3, 1), (1, 3))]

    nxg, nyg = node_coords(grid)
    curls = []
    for k, l in ((1, 1), (2, 1), (1, 2), (2, 2), (3, 1),
                 (1, 3), (3, 2), (2, 3), (3, 3), (4, 1)):
        if grid.periodic_x:
            sx = np.sin(2.0 * np.pi * k * nxg / lx)
        else:
            sx = np.sin(np.pi * k * nxg / lx)
        a_vals = sx * np.sin(np.pi * l * nyg / ly)
        if grid.periodic_x:
            ax = -(a_vals[:, 1:] - a_vals[:, :-1]) / grid.hy
            ay = (np.roll(a_vals, -1, axis=0) - a_vals) / grid.hx
        else:
            ax = -(a_vals[:, 1:] - a_vals[:, :-1]) / grid.hy
            ay = (a_vals[1:, :] - a_vals[:-1, :]) / grid.hx
        curls.append(VectorField(grid, ax, ay))

    scalar_norms = [float(np.sqrt(inner_cells(s, s)
                                  + inner_faces(gradient(s), gradient(s))))
                    for s in scalars]
    vector_tests = grads + curls
    vector_norms = [float(np.sqrt(h1_normsq(w))) for w in vector_tests]
    return scalars, scalar_norms, vector_tests, vector_norms


def state_scales(cur: FluidState, law: PressureLaw, alpha: float):
    """Normalization scales for residuals, shared with the outer loop."""
    rho_scale = max(norm_l2_cells(cur.rho), 1e-30)
    mom = VectorField(cur.grid,
                      cur.v.vx * _face_rho_x(cur.rho),
                      cur.v.vy * _face_rho_y(cur.rho))
    p = ScalarField(cur.grid, law.truncated_pressure_P(cur.rho.values))
    mom_scale = max(alpha * norm_l2_faces(mom), norm_l2_faces(gradient(p)), 1e-30)
    return alpha * rho_scale, mom_scale


def _face_rho_x(rho: ScalarField):
    from .grid import interp_cell_to_facex
    return interp_cell_to_facex(rho)


def _face_rho_y(rho: ScalarField):
    from .grid import interp_cell_to_facey
    return interp_cell_to_facey(rho)


def weakform_residuals(prev: FluidState, cur: FluidState, dt: float,
                       law: PressureLaw, params: PhysicalParams,
                       lame_system: LameSystem | None = None):
    """Largest normalized defect of the two weak-form identities over the
    fixed test family.

    Each identity is evaluated with the solver's own discrete operators
    (the pressure and transport pairings are the exact summation-by-parts
    partners of the strong form), so a converged step keeps both
    residuals at the level of the outer fixed-point tolerance.
    """
    grid = cur.grid
    alpha = 1.0 / dt
    eps = cur.epsilon_used
    if lame_system is None:
        lame_system = LameSystem(grid, params)

    defect_c = density_defect(cur.rho, cur.v, prev.rho, alpha, eps, law)
    load = assemble_momentum_rhs(cur.rho, cur.v, prev.rho, prev.v, alpha, eps, law)
    area = grid.cell_area
    defect_m_dof = lame_system.apply(cur.v) - area * lame_system.to_dof(load)
    defect_m = lame_system.from_dof(defect_m_dof / area)

    scalars, scalar_norms, vectors, vector_norms = _test_family(grid)
    s_c, s_m = state_scales(cur, law, alpha)

    r_cont = max(abs(inner_cells(defect_c, s)) / (n * s_c)
                 for s, n in zip(scalars, scalar_norms))
    r_mom = max(abs(inner_faces(defect_m, w)) / (n * s_m)
                for w, n in zip(vectors, vector_norms))
    return r_cont, r_mom


# ---------------------------------------------------------------------------
# time interpolants

def interpolants(trajectory: list[FluidState], t: float):
    """Piecewise-constant and piecewise-linear states at time t."""
    if not trajectory:
        raise ValueError("empty trajectory")
    t0 = trajectory[0].time
    t1 = trajectory[-1].time
    if not (t0 <= t <= t1 + 1e-12 * max(1.0, abs(t1))):
        raise ValueError(f"t={t} outside trajectory span [{t0}, {t1}]")
    if len(trajectory) == 1:
        return trajectory[0], trajectory[0]
    dt = trajectory[1].time - trajectory[0].time
    k = int(np.floor((t - t0) / dt + 1e-12))
    k = min(max(k, 0), len(trajectory) - 1)
    hat = trajectory[k]
    if k == len(trajectory) - 1:
        return hat, hat
    nxt = trajectory[k + 1]
    w = (t - hat.time) / dt
    if w <= 1e-12:
        return hat, hat
    tilde = FluidState(
        ScalarField(hat.grid, (1 - w) * hat.rho.values + w * nxt.rho.values),
        VectorField(hat.grid, (1 - w) * hat.v.vx + w * nxt.v.vx,
                    (1 - w) * hat.v.vy + w * nxt.v.vy),
        time=t, step_index=hat.step_index, epsilon_used=hat.epsilon_used)
    return hat, tilde


# ---------------------------------------------------------------------------
# full per-step record

def compute_record(prev: FluidState, cur: FluidState, dt: float,
                   law: PressureLaw, params: PhysicalParams,
                   tail_thresholds=(), lame_system: LameSystem | None = None,
                   with_weakform: bool = True) -> DiagnosticsRecord:
    rho, v = cur.rho, cur.v
    gamma = law.gamma
    pvals = law.truncated_pressure_P(rho.values)
    incr = np.abs(cur.rho.values - prev.rho.values)
    if with_weakform:
        r_c, r_m = weakform_residuals(prev, cur, dt, law, params, lame_system)
    else:
        r_c = r_m = np.nan
    return DiagnosticsRecord(
        step_index=cur.step_index,
        time=cur.time,
        mass=integrate(rho),
        energy=energy(rho, v, law),
        dissipation=dissipation(v, params),
        boundary_friction_dissipation=boundary_friction_dissipation(v, params),
        entropy_residual=entropy_residual(prev, cur, dt),
        rho_gamma_norm=integrate(rho.map(lambda r: r ** gamma)),
        rho_v2_norm=integrate(kinetic_energy_density(rho, v)),
        v_h1_normsq=h1_normsq(v),
        rho_increment_gamma=cur.grid.cell_area * float(np.sum(incr ** gamma)),
        pressure_l2=float(np.sqrt(cur.grid.cell_area * np.sum(pvals ** 2))),
        rho_gammaplus1_norm=integrate(rho.map(lambda r: r ** (gamma + 1.0))),
        max_rho=float(rho.values.max()),
        min_rho=float(rho.values.min()),
        weakform_continuity=r_c,
        weakform_momentum=r_m,
        tail_measures={m: tail_measure(rho, m) for m in tail_thresholds},
    )
