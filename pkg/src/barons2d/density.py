"""Regularized discrete continuity solve.

Given a velocity v and the previous density h, find rho with

    alpha*(rho - h*K(rho)) + div(K(rho) rho v) - eps*lap(rho) = 0,
    d(rho)/dn = 0 on the walls.

The transport term is discretized with first-order upwind fluxes and the
cutoff K is frozen at the previous Picard iterate, so every linear system
is an M-matrix: nonnegativity and the mass bound hold for each iterate,
not just the converged solution.  With K identically 1 the equation is
linear and one solve is exact; the conservative fluxes then keep the
cell-integrated mass equal to that of h to roundoff.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ._backend import kernels
from .config import GridSpec, RegularizationParams
from .eos import PressureLaw
from .grid import ScalarField, VectorField

DIRECT_SOLVE_MAX_CELLS = 128 * 128


class NegativeInput(ValueError):
    """The previous density h has negative entries."""


class NonConvergence(RuntimeError):
    """Picard iteration did not reach the residual tolerance."""

    def __init__(self, message, best=None, report=None):
        super().__init__(message)
        self.best = best
        self.report = report


@dataclass
class DensitySolveReport:
    picard_iters: int = 0
    final_residual: float = np.inf
    mass_in: float = 0.0
    mass_out: float = 0.0
    min_rho: float = 0.0
    max_rho: float = 0.0
    residual_history: list = field(default_factory=list)
    iterate_min_rho: list = field(default_factory=list)
    iterate_max_rho: list = field(default_factory=list)
    iterate_mass: list = field(default_factory=list)
    nonmonotone_steps: int = 0


def _cell_index(grid: GridSpec):
    return np.arange(grid.n_cells).reshape(grid.shape_cell)


def laplacian_matrix(grid: GridSpec) -> sp.csr_matrix:
    """Neumann 5-point Laplacian assembled from face connections."""
    idx = _cell_index(grid)
    rows, cols, vals = [], [], []

    def connect(a, b, w):
        rows.extend((a, a, b, b))
        cols.extend((b, a, a, b))
        vals.extend((w, -w, w, -w))

    wx = 1.0 / grid.hx ** 2
    wy = 1.0 / grid.hy ** 2
    if grid.periodic_x:
        a = idx.ravel()
        b = np.roll(idx, 1, axis=0).ravel()
        connect(a, b, np.full(a.size, wx))
    else:
        a = idx[:-1, :].ravel()
        b = idx[1:, :].ravel()
        connect(a, b, np.full(a.size, wx))
    a = idx[:, :-1].ravel()
    b = idx[:, 1:].ravel()
    connect(a, b, np.full(a.size, wy))
    rows = np.concatenate([np.atleast_1d(r) for r in rows])
    cols = np.concatenate([np.atleast_1d(c) for c in cols])
    vals = np.concatenate([np.atleast_1d(v) for v in vals])
    n = grid.n_cells
    return sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()


def transport_matrix(v: VectorField, kcell: np.ndarray) -> sp.csr_matrix:
    """Conservative upwind transport operator rho -> div(K_frozen rho v).

    Column sums vanish (each face flux moves mass between two cells), the
    diagonal is nonnegative and off-diagonal entries are nonpositive.
    """
    g = v.grid
    axl, axr, ayl, ayr = kernels.upwind_coeffs(v.vx, v.vy, kcell, g.periodic_x)
    idx = _cell_index(g)
    rows, cols, vals = [], [], []

    def face(left_cells, right_cells, al, ar, h):
        # flux F = al*rho_L + ar*rho_R leaves L and enters R
        rows.append(left_cells)
        cols.append(left_cells)
        vals.append(al / h)
        rows.append(left_cells)
        cols.append(right_cells)
        vals.append(ar / h)
        rows.append(right_cells)
        cols.append(left_cells)
        vals.append(-al / h)
        rows.append(right_cells)
        cols.append(right_cells)
        vals.append(-ar / h)

    if g.periodic_x:
        face(np.roll(idx, 1, axis=0).ravel(), idx.ravel(),
             axl.ravel(), axr.ravel(), g.hx)
    else:
        face(idx[:-1, :].ravel(), idx[1:, :].ravel(),
             axl[1:-1, :].ravel(), axr[1:-1, :].ravel(), g.hx)
    face(idx[:, :-1].ravel(), idx[:, 1:].ravel(),
         ayl[:, 1:-1].ravel(), ayr[:, 1:-1].ravel(), g.hy)

    n = g.n_cells
    return sp.coo_matrix((np.concatenate(vals),
                          (np.concatenate(rows), np.concatenate(cols))),
                         shape=(n, n)).tocsr()


def density_operator(v: VectorField, kcell: np.ndarray, alpha: float,
                     epsilon: float, lap: sp.csr_matrix | None = None) -> sp.csr_matrix:
    g = v.grid
    if lap is None:
        lap = laplacian_matrix(g)
    n = g.n_cells
    return (alpha * sp.identity(n, format="csr")
            + transport_matrix(v, kcell)
            - epsilon * lap)


def _solve_linear(mat: sp.csr_matrix, rhs: np.ndarray) -> np.ndarray:
    n = mat.shape[0]
    if n <= DIRECT_SOLVE_MAX_CELLS:
        return spla.splu(mat.tocsc()).solve(rhs)
    ilu = spla.spilu(mat.tocsc(), drop_tol=1e-5, fill_factor=10)
    prec = spla.LinearOperator((n, n), ilu.solve)
    x, info = spla.bicgstab(mat, rhs, rtol=1e-10, atol=0.0, maxiter=2000, M=prec)
    if info != 0:
        raise NonConvergence(f"BiCGStab failed on the density system (info={info})")
    return x


def density_defect(rho: ScalarField, v: VectorField, h: ScalarField,
                   alpha: float, epsilon: float, law: PressureLaw) -> ScalarField:
    """Pointwise defect of the nonlinear discrete continuity equation."""
    g = rho.grid
    k = law.cutoff_K(rho.values)
    axl, axr, ayl, ayr = kernels.upwind_coeffs(v.vx, v.vy, k, g.periodic_x)
    fx, fy = kernels.mass_flux(axl, axr, ayl, ayr, rho.values, g.periodic_x)
    div = kernels.divergence(fx, fy, g.hx, g.hy, g.periodic_x)
    lap = kernels.lap_neumann(rho.values, g.hx, g.hy, g.periodic_x)
    vals = alpha * (rho.values - h.values * k) + div - epsilon * lap
    return ScalarField(g, vals)


def solve_density(v: VectorField, h: ScalarField, alpha: float,
                  reg: RegularizationParams, law: PressureLaw,
                  tol: float = 1e-10, max_iters: int = 200,
                  epsilon: float | None = None,
                  lap: sp.csr_matrix | None = None):
    """Solve the regularized continuity equation; returns (rho, report).

    epsilon defaults to reg.epsilon; an explicit epsilon of 0 is accepted
    only when max(h) stays below the cutoff onset m1 (the K == 1 regime,
    where the transport operator alone is an M-matrix).
    """
    g = v.grid
    eps = reg.epsilon if epsilon is None else float(epsilon)
    hmin = float(h.values.min())
    if hmin < -1e-12 * max(1.0, float(np.abs(h.values).max())):
        raise NegativeInput(f"previous density has negative entries (min {hmin})")
    if eps == 0.0 and float(h.values.max()) >= law.m1:
        raise ValueError(
            "epsilon = 0 requires the K == 1 regime (max h below m1); "
            f"got max h = {h.values.max()} >= m1 = {law.m1}")
    if eps < 0.0:
        raise ValueError(f"epsilon must be nonnegative, got {eps}")

    if lap is None and eps != 0.0:
        lap = laplacian_matrix(g)

    area = g.cell_area
    report = DensitySolveReport(mass_in=area * float(h.values.sum()))
    norm_h = float(np.sqrt(area * np.sum(h.values ** 2)))
    denom = alpha * norm_h if norm_h > 0 else 1.0

    def residual(candidate: ScalarField) -> float:
        defect = density_defect(candidate, v, h, alpha, eps, law)
        return float(np.sqrt(area * np.sum(defect.values ** 2))) / denom

    rho = h.copy()
    best = rho
    best_res = prev_res = np.inf
    rhs_base = alpha * h.values.ravel()
    for it in range(1, max_iters + 1):
        k = law.cutoff_K(rho.values)
        mat = density_operator(v, k, alpha, eps, lap)
        lin_vals = _solve_linear(mat, rhs_base * k.ravel()).reshape(g.shape_cell)

        # accept the full update when it reduces the defect, otherwise
        # backtrack; convex combinations keep every iterate nonnegative,
        # below m2 and within the mass bound
        rho_next = ScalarField(g, lin_vals)
        res = residual(rho_next)
        theta = 1.0
        while res > prev_res and theta > 0.05:
            theta *= 0.5
            rho_next = ScalarField(g, (1.0 - theta) * rho.values + theta * lin_vals)
            res = residual(rho_next)
        rho = rho_next
        new_vals = rho.values
        report.picard_iters = it
        report.residual_history.append(res)
        report.iterate_min_rho.append(float(new_vals.min()))
        report.iterate_max_rho.append(float(new_vals.max()))
        report.iterate_mass.append(area * float(new_vals.sum()))
        if __debug__:
            assert report.iterate_min_rho[-1] >= -1e-12 * max(1.0, report.iterate_max_rho[-1])
            assert report.iterate_mass[-1] <= report.mass_in \
                + 1e-12 * max(1.0, abs(report.mass_in))
        if res < best_res:
            best, best_res = rho, res
        if res > prev_res:
            report.nonmonotone_steps += 1
            warnings.warn("density Picard residual increased "
                          f"({prev_res:.3e} -> {res:.3e})",
                          RuntimeWarning, stacklevel=2)
        prev_res = res
        if res <= tol:
            break

    report.final_residual = best_res
    report.mass_out = area * float(best.values.sum())
    report.min_rho = float(best.values.min())
    report.max_rho = float(best.values.max())
    if best_res > tol:
        raise NonConvergence(
            f"density Picard stalled at residual {best_res:.3e} after "
            f"{report.picard_iters} iterations (tol {tol:.1e})",
            best=best, report=report)
    if eps == 0.0 and report.max_rho >= law.m1:
        warnings.warn(
            "epsilon = 0 certification violated a posteriori: max rho = "
            f"{report.max_rho} reached the cutoff onset m1 = {law.m1}; "
            "exact mass conservation does not apply", RuntimeWarning,
            stacklevel=2)
    return best, report
