"""Viscous (Lame) operator -mu*lap w - (mu+nu)*grad div w with slip walls
and friction on the tangential stress, plus the momentum right-hand side.

The operator is assembled from its bilinear form

    a(w, u) = 2*mu*<D(w), D(u)> + nu*<div w, div u>
              + f * sum_walls (w.tau)(u.tau) * edge length

over the slip-compatible face unknowns, with diagonal strain components
at cells, the off-diagonal component at nodes (trapezoidal weights,
one-sided second order at walls) and the wall traces extrapolated to
second order.  Weak enforcement of the friction condition keeps the
matrix symmetric and makes a(v, v) identical to the dissipation
functional the diagnostics compute.
"""

from __future__ import annotations

import logging

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ._backend import kernels
from .config import GridSpec, PhysicalParams
from .eos import PressureLaw
from .grid import (ScalarField, VectorField, h1_normsq, interp_cell_to_facex,
                   interp_cell_to_facey, norm_l2_faces, _node_weights)

logger = logging.getLogger(__name__)

DIRECT_SOLVE_MAX_DOFS = 2 * 128 * 128


class SolverBreakdown(RuntimeError):
    """The iterative linear solver stagnated."""


def _dof_maps(grid: GridSpec):
    """Index maps facex/facey -> DOF (-1 for structurally zero wall faces)."""
    xdof = -np.ones(grid.shape_facex, dtype=np.int64)
    ydof = -np.ones(grid.shape_facey, dtype=np.int64)
    if grid.periodic_x:
        nxd = grid.nx * grid.ny
        xdof[:, :] = np.arange(nxd).reshape(grid.nx, grid.ny)
    else:
        nxd = (grid.nx - 1) * grid.ny
        xdof[1:-1, :] = np.arange(nxd).reshape(grid.nx - 1, grid.ny)
    nyd = grid.nx * (grid.ny - 1)
    ydof[:, 1:-1] = nxd + np.arange(nyd).reshape(grid.nx, grid.ny - 1)
    return xdof, ydof, nxd + nyd


class _FormBuilder:
    """Accumulates rows of a quadrature-space operator matrix."""

    def __init__(self, n_rows, n_dofs):
        self.n_rows = n_rows
        self.n_dofs = n_dofs
        self.rows, self.cols, self.vals = [], [], []

    def add(self, row_idx, dof_idx, coeff):
        row_idx = np.broadcast_to(row_idx, dof_idx.shape).ravel()
        coeff = np.broadcast_to(coeff, dof_idx.shape).ravel()
        dof_idx = dof_idx.ravel()
        keep = dof_idx >= 0
        self.rows.append(row_idx[keep])
        self.cols.append(dof_idx[keep])
        self.vals.append(coeff[keep])

    def build(self) -> sp.csr_matrix:
        return sp.coo_matrix(
            (np.concatenate(self.vals),
             (np.concatenate(self.rows), np.concatenate(self.cols))),
            shape=(self.n_rows, self.n_dofs)).tocsr()


def _cell_forms(grid: GridSpec, xdof, ydof, ndof):
    """B11, B22 (cell strain diagonals); their sum is the divergence."""
    nx, ny, hx, hy = grid.nx, grid.ny, grid.hx, grid.hy
    cell = np.arange(nx * ny).reshape(nx, ny)
    b11 = _FormBuilder(nx * ny, ndof)
    if grid.periodic_x:
        right = np.roll(xdof, -1, axis=0)
        b11.add(cell, right, 1.0 / hx)
        b11.add(cell, xdof, -1.0 / hx)
    else:
        b11.add(cell, xdof[1:, :], 1.0 / hx)
        b11.add(cell, xdof[:-1, :], -1.0 / hx)
    b22 = _FormBuilder(nx * ny, ndof)
    b22.add(cell, ydof[:, 1:], 1.0 / hy)
    b22.add(cell, ydof[:, :-1], -1.0 / hy)
    return b11.build(), b22.build()


def _node_form(grid: GridSpec, xdof, ydof, ndof):
    """B12: the off-diagonal strain 0.5*(dvx/dy + dvy/dx) at nodes,
    mirroring the kernel stencils entry for entry."""
    nx, ny, hx, hy = grid.nx, grid.ny, grid.hx, grid.hy
    nnx = nx if grid.periodic_x else nx + 1
    node = np.arange(nnx * (ny + 1)).reshape(nnx, ny + 1)
    b = _FormBuilder(nnx * (ny + 1), ndof)

    # dvx/dy: interior rows (vx[i,j] - vx[i,j-1])/hy at node rows 1..ny-1
    rows = node[:, 1:-1]
    b.add(rows, xdof[:, 1:], 0.5 / hy)
    b.add(rows, xdof[:, :-1], -0.5 / hy)
    # one-sided second order at the y-walls
    b.add(node[:, 0], xdof[:, 1], 0.5 * 3.0 / hy)
    b.add(node[:, 0], xdof[:, 0], 0.5 * -2.0 / hy)
    b.add(node[:, 0], xdof[:, 2], 0.5 * -1.0 / hy)
    b.add(node[:, -1], xdof[:, -1], 0.5 * 2.0 / hy)
    b.add(node[:, -1], xdof[:, -2], 0.5 * -3.0 / hy)
    b.add(node[:, -1], xdof[:, -3], 0.5 * 1.0 / hy)

    # dvy/dx
    if grid.periodic_x:
        b.add(node, ydof, 0.5 / hx)
        b.add(node, np.roll(ydof, 1, axis=0), -0.5 / hx)
    else:
        rows = node[1:-1, :]
        b.add(rows, ydof[1:, :], 0.5 / hx)
        b.add(rows, ydof[:-1, :], -0.5 / hx)
        b.add(node[0, :], ydof[1, :], 0.5 * 3.0 / hx)
        b.add(node[0, :], ydof[0, :], 0.5 * -2.0 / hx)
        b.add(node[0, :], ydof[2, :], 0.5 * -1.0 / hx)
        b.add(node[-1, :], ydof[-1, :], 0.5 * 2.0 / hx)
        b.add(node[-1, :], ydof[-2, :], 0.5 * -3.0 / hx)
        b.add(node[-1, :], ydof[-3, :], 0.5 * 1.0 / hx)
    return b.build()


def _trace_forms(grid: GridSpec, xdof, ydof, ndof):
    """Second-order extrapolated tangential traces, one matrix per wall."""
    out = []
    nfx = grid.shape_facex[0]
    for j0, j1 in ((0, 1), (-1, -2)):  # bottom, top
        b = _FormBuilder(nfx, ndof)
        pos = np.arange(nfx)
        b.add(pos, xdof[:, j0], 1.5)
        b.add(pos, xdof[:, j1], -0.5)
        out.append((b.build(), grid.hx))
    if not grid.periodic_x:
        for i0, i1 in ((0, 1), (-1, -2)):  # left, right
            b = _FormBuilder(grid.ny + 1, ndof)
            pos = np.arange(grid.ny + 1)
            b.add(pos, ydof[i0, :], 1.5)
            b.add(pos, ydof[i1, :], -0.5)
            out.append((b.build(), grid.hy))
    return out


class LameSystem:
    """Assembled viscous operator with a cached factorization.

    Immutable after construction; concurrent solves are safe (each call
    works on private vectors).
    """

    def __init__(self, grid: GridSpec, params: PhysicalParams):
        self.grid = grid
        self.params = params
        self.xdof, self.ydof, self.n_dofs = _dof_maps(grid)
        mu, nu, f = params.mu, params.nu, params.f_friction

        b11, b22 = _cell_forms(grid, self.xdof, self.ydof, self.n_dofs)
        b12 = _node_form(grid, self.xdof, self.ydof, self.n_dofs)
        bdiv = b11 + b22
        wc = grid.cell_area
        wn = sp.diags(_node_weights(grid).ravel())
        mat = 2.0 * mu * wc * (b11.T @ b11 + b22.T @ b22) \
            + 4.0 * mu * (b12.T @ wn @ b12) \
            + nu * wc * (bdiv.T @ bdiv)
        for btr, edge in _trace_forms(grid, self.xdof, self.ydof, self.n_dofs):
            mat = mat + f * edge * (btr.T @ btr)
        self.matrix = mat.tocsc()
        self.div_form = bdiv

        # pure x-translation is slip-compatible only in the channel; with
        # zero friction it spans the kernel and gets projected out
        self._kernel_vec = None
        if grid.periodic_x and f == 0.0:
            vec = np.zeros(self.n_dofs)
            vec[self.xdof[self.xdof >= 0]] = 1.0
            self._kernel_vec = vec / np.linalg.norm(vec)
            reg = self._kernel_vec[:, None] * self._kernel_vec[None, :]
            self._solver = spla.splu(self.matrix + sp.csc_matrix(reg))
        elif self.n_dofs <= DIRECT_SOLVE_MAX_DOFS:
            self._solver = spla.splu(self.matrix)
        else:
            self._solver = None
            self._ilu = spla.spilu(self.matrix, drop_tol=1e-5, fill_factor=10)

    # --- DOF packing -----------------------------------------------------
    def to_dof(self, v: VectorField) -> np.ndarray:
        u = np.empty(self.n_dofs)
        u[self.xdof[self.xdof >= 0]] = v.vx[self.xdof >= 0]
        u[self.ydof[self.ydof >= 0]] = v.vy[self.ydof >= 0]
        return u

    def from_dof(self, u: np.ndarray) -> VectorField:
        v = VectorField.zeros(self.grid)
        v.vx[self.xdof >= 0] = u[self.xdof[self.xdof >= 0]]
        v.vy[self.ydof >= 0] = u[self.ydof[self.ydof >= 0]]
        return v

    # --- actions ----------------------------------------------------------
    def apply(self, v: VectorField) -> np.ndarray:
        return self.matrix @ self.to_dof(v)

    def bilinear(self, w: VectorField, u: VectorField) -> float:
        return float(self.to_dof(u) @ (self.matrix @ self.to_dof(w)))

    def solve(self, load: VectorField) -> VectorField:
        """Solve a(w, u) = <load, u> for all slip-compatible u.

        The load is a face field; it enters through the lumped pairing
        cell_area * sum(load * u).  Relative algebraic residual <= 1e-10.
        """
        rhs = self.grid.cell_area * self.to_dof(load)
        if self._kernel_vec is not None:
            rhs = rhs - self._kernel_vec * (self._kernel_vec @ rhs)
        if self._solver is not None:
            u = self._solver.solve(rhs)
        else:
            prec = spla.LinearOperator((self.n_dofs, self.n_dofs), self._ilu.solve)
            u, info = spla.cg(self.matrix, rhs, rtol=1e-12, atol=0.0,
                              maxiter=5000, M=prec)
            if info != 0:
                raise SolverBreakdown(f"CG failed on the Lame system (info={info})")
        rnorm = float(np.linalg.norm(self.matrix @ u - rhs))
        bnorm = float(np.linalg.norm(rhs))
        if bnorm > 0 and rnorm > 1e-10 * bnorm:
            raise SolverBreakdown(
                f"Lame solve residual {rnorm / bnorm:.3e} above 1e-10")
        if self._kernel_vec is not None:
            u = u - self._kernel_vec * (self._kernel_vec @ u)
        w = self.from_dof(u)
        load_norm = norm_l2_faces(load)
        if load_norm > 0:
            logger.debug("lame stability |w|_H1 / |F|_L2 = %.3e",
                         np.sqrt(h1_normsq(w)) / load_norm)
        return w


class ShiftedLameSolver:
    """Factorization of (A + diag(cell_area * shift)) for one time step.

    The shift is the face-interpolated alpha*h mass density; moving it to
    the left side keeps the outer fixed point contractive for small dt
    (the bare splitting has feedback gain ~ alpha/(mu*lambda_min), which
    exceeds 1 once alpha is large).  The converged state solves the same
    discrete momentum equation.
    """

    def __init__(self, system: LameSystem, shift_dof: np.ndarray):
        if np.any(shift_dof < 0):
            raise ValueError("mass shift must be nonnegative")
        self.system = system
        mat = system.matrix + sp.diags(system.grid.cell_area * shift_dof).tocsc()
        self._project = system._kernel_vec is not None and not np.any(shift_dof > 0)
        if self._project:
            kv = system._kernel_vec
            mat = mat + sp.csc_matrix(kv[:, None] * kv[None, :])
        self._solver = spla.splu(mat)

    def solve_dof(self, rhs: np.ndarray) -> np.ndarray:
        if self._project:
            kv = self.system._kernel_vec
            rhs = rhs - kv * (kv @ rhs)
        u = self._solver.solve(rhs)
        if self._project:
            kv = self.system._kernel_vec
            u = u - kv * (kv @ u)
        return u


def assemble_lame(grid: GridSpec, params: PhysicalParams) -> LameSystem:
    return LameSystem(grid, params)


def solve_lame(system: LameSystem, load: VectorField) -> VectorField:
    return system.solve(load)


def assemble_momentum_rhs(rho: ScalarField, v: VectorField, h: ScalarField,
                          g_prev: VectorField, alpha: float, epsilon: float,
                          law: PressureLaw) -> VectorField:
    """Face-located load alpha*h*g - alpha*rho*v - div(K rho v x v)
    - grad P(rho) - eps*grad(rho).grad(v).

    The convective term reuses the density solver's upwind mass fluxes so
    mass and momentum are transported consistently; the eps term uses
    centered differences.
    """
    grid = rho.grid
    hx, hy, per = grid.hx, grid.hy, grid.periodic_x

    h_fx, h_fy = interp_cell_to_facex(h), interp_cell_to_facey(h)
    r_fx, r_fy = interp_cell_to_facex(rho), interp_cell_to_facey(rho)
    fx_load = alpha * (h_fx * g_prev.vx - r_fx * v.vx)
    fy_load = alpha * (h_fy * g_prev.vy - r_fy * v.vy)

    k = law.cutoff_K(rho.values)
    axl, axr, ayl, ayr = kernels.upwind_coeffs(v.vx, v.vy, k, per)
    mfx, mfy = kernels.mass_flux(axl, axr, ayl, ayr, rho.values, per)
    conv_x, conv_y = kernels.momentum_convection(mfx, mfy, v.vx, v.vy, hx, hy, per)
    fx_load -= conv_x
    fy_load -= conv_y

    gpx, gpy = kernels.gradient(law.truncated_pressure_P(rho.values), hx, hy, per)
    fx_load -= gpx
    fy_load -= gpy

    if epsilon != 0.0:
        ex, ey = _eps_grad_rho_grad_v(rho.values, v, hx, hy, per)
        fx_load -= epsilon * ex
        fy_load -= epsilon * ey

    out = VectorField(grid, fx_load, fy_load)
    return out.enforce_slip()


def _dy_centered_cells(c, hy):
    out = np.empty_like(c)
    out[:, 1:-1] = (c[:, 2:] - c[:, :-2]) / (2.0 * hy)
    out[:, 0] = (c[:, 1] - c[:, 0]) / hy
    out[:, -1] = (c[:, -1] - c[:, -2]) / hy
    return out


def _dx_centered_cells(c, hx, periodic_x):
    if periodic_x:
        return (np.roll(c, -1, axis=0) - np.roll(c, 1, axis=0)) / (2.0 * hx)
    out = np.empty_like(c)
    out[1:-1, :] = (c[2:, :] - c[:-2, :]) / (2.0 * hx)
    out[0, :] = (c[1, :] - c[0, :]) / hx
    out[-1, :] = (c[-1, :] - c[-2, :]) / hx
    return out


def _eps_grad_rho_grad_v(rho, v, hx, hy, periodic_x):
    """(grad rho . grad) applied to each velocity component, at faces."""
    gx, gy = kernels.gradient(rho, hx, hy, periodic_x)

    # x-component at x-faces: gx is already there; dy(rho) is averaged from cells
    dyr_c = _dy_centered_cells(rho, hy)
    if periodic_x:
        dyr_fx = 0.5 * (dyr_c + np.roll(dyr_c, 1, axis=0))
        dvx_dx = (np.roll(v.vx, -1, axis=0) - np.roll(v.vx, 1, axis=0)) / (2.0 * hx)
    else:
        dyr_fx = np.zeros_like(v.vx)
        dyr_fx[1:-1, :] = 0.5 * (dyr_c[:-1, :] + dyr_c[1:, :])
        dvx_dx = np.zeros_like(v.vx)
        dvx_dx[1:-1, :] = (v.vx[2:, :] - v.vx[:-2, :]) / (2.0 * hx)
    dvx_dy = np.empty_like(v.vx)
    dvx_dy[:, 1:-1] = (v.vx[:, 2:] - v.vx[:, :-2]) / (2.0 * hy)
    dvx_dy[:, 0] = (v.vx[:, 1] - v.vx[:, 0]) / hy
    dvx_dy[:, -1] = (v.vx[:, -1] - v.vx[:, -2]) / hy
    ex = gx * dvx_dx + dyr_fx * dvx_dy

    # y-component at y-faces
    dxr_c = _dx_centered_cells(rho, hx, periodic_x)
    dxr_fy = np.zeros_like(v.vy)
    dxr_fy[:, 1:-1] = 0.5 * (dxr_c[:, :-1] + dxr_c[:, 1:])
    if periodic_x:
        dvy_dx = (np.roll(v.vy, -1, axis=0) - np.roll(v.vy, 1, axis=0)) / (2.0 * hx)
    else:
        dvy_dx = np.zeros_like(v.vy)
        dvy_dx[1:-1, :] = (v.vy[2:, :] - v.vy[:-2, :]) / (2.0 * hx)
        dvy_dx[0, :] = (v.vy[1, :] - v.vy[0, :]) / hx
        dvy_dx[-1, :] = (v.vy[-1, :] - v.vy[-2, :]) / hx
    dvy_dy = np.zeros_like(v.vy)
    dvy_dy[:, 1:-1] = (v.vy[:, 2:] - v.vy[:, :-2]) / (2.0 * hy)
    ey = dxr_fy * dvy_dx + gy * dvy_dy

    return ex, ey
