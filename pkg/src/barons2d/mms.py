"""Manufactured-solution convergence suites for the discrete operators,
the Lame solve and the upwind density solve.

Each suite samples an analytic solution, runs a refinement family and
reports the least-squares observed order of the L2 errors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .config import GridSpec, PhysicalParams, RegularizationParams
from .density import solve_density
from .eos import PressureLaw
from .grid import (ScalarField, VectorField, curl_nodes, divergence, gradient,
                   laplacian_neumann, norm_l2_cells)
from .lame import assemble_lame, solve_lame


@dataclass
class ConvergenceResult:
    name: str
    grids: list
    errors: list

    @property
    def observed_order(self) -> float:
        lev = np.arange(len(self.errors))
        return float(-np.polyfit(lev, np.log2(self.errors), 1)[0])

    def __str__(self):
        errs = " ".join(f"{e:.3e}" for e in self.errors)
        return f"{self.name:<24s} order {self.observed_order:5.2f}   errors: {errs}"


def _l2_cells(arr, grid):
    return float(np.sqrt(grid.cell_area * np.sum(arr ** 2)))


def grid_ops_suite(sizes=(16, 32, 64, 128)) -> list[ConvergenceResult]:
    res = []

    def family(name, err_fn):
        errs = [err_fn(GridSpec(nx=n, ny=n)) for n in sizes]
        res.append(ConvergenceResult(name, list(sizes), errs))

    def err_div(g):
        v = VectorField.from_function(
            g, lambda x, y: np.sin(np.pi * x) * np.cos(np.pi * y),
            lambda x, y: 0.0 * x)
        want = ScalarField.from_function(
            g, lambda x, y: np.pi * np.cos(np.pi * x) * np.cos(np.pi * y))
        return _l2_cells(divergence(v).values - want.values, g)

    def err_grad(g):
        p = ScalarField.from_function(
            g, lambda x, y: np.cos(np.pi * x) * np.cos(np.pi * y))
        got = gradient(p)
        from .grid import face_coords
        (xx, xy), (yx, yy) = face_coords(g)
        want_x = -np.pi * np.sin(np.pi * xx) * np.cos(np.pi * xy)
        want_y = -np.pi * np.cos(np.pi * yx) * np.sin(np.pi * yy)
        # wall-normal faces are structurally zero; measure interior faces
        ex = got.vx[1:-1, :] - want_x[1:-1, :]
        ey = got.vy[:, 1:-1] - want_y[:, 1:-1]
        return float(np.sqrt(g.cell_area * (np.sum(ex ** 2) + np.sum(ey ** 2))))

    def err_lap(g):
        p = ScalarField.from_function(
            g, lambda x, y: np.cos(np.pi * x) * np.cos(2 * np.pi * y))
        want = ScalarField.from_function(
            g, lambda x, y: -(np.pi ** 2 + (2 * np.pi) ** 2)
            * np.cos(np.pi * x) * np.cos(2 * np.pi * y))
        return _l2_cells(laplacian_neumann(p).values - want.values, g)

    def err_curl(g):
        # the curl of a sampled gradient field vanishes at second order
        v = VectorField.from_function(
            g, lambda x, y: -np.pi * np.sin(np.pi * x) * np.cos(np.pi * y),
            lambda x, y: -np.pi * np.cos(np.pi * x) * np.sin(np.pi * y))
        w = curl_nodes(v)
        return float(np.sqrt(g.cell_area * np.sum(w ** 2)))

    family("divergence", err_div)
    family("gradient", err_grad)
    family("laplacian_neumann", err_lap)
    family("curl_of_gradient", err_curl)
    return res


def lame_robin_solution(mu: float, nu: float, f: float):
    """Manufactured (w, F) satisfying the slip and friction conditions on
    the unit box: w = (sin(pi x) g(y), 0) with g a Robin-compatible
    trigonometric profile."""
    a = np.pi

    if f == 0.0:
        k = np.pi
        s = 0.0
    else:
        def cond(k):
            s = f / (mu * k)
            return mu * (-k * np.sin(k) + s * k * np.cos(k)) \
                + f * (np.cos(k) + s * np.sin(k))
        k = brentq(cond, np.pi * 0.9 + 1e-6, np.pi * 1.4)
        s = f / (mu * k)

    def gy(y):
        return np.cos(k * y) + s * np.sin(k * y)

    def gp(y):
        return -k * np.sin(k * y) + s * k * np.cos(k * y)

    def wx(x, y):
        return np.sin(a * x) * gy(y)

    def wy(x, y):
        return 0.0 * x

    def fx(x, y):
        return np.sin(a * x) * (mu * (a * a * gy(y) + k * k * gy(y))
                                + (mu + nu) * a * a * gy(y))

    def fy(x, y):
        return -(mu + nu) * a * np.cos(a * x) * gp(y)

    return (wx, wy), (fx, fy)


def lame_suite(sizes=(8, 16, 32, 64),
               params: PhysicalParams | None = None) -> list[ConvergenceResult]:
    if params is None:
        params = PhysicalParams(mu=1.0, nu=0.3, gamma=3.0, f_friction=0.1)
    (wx, wy), (fx, fy) = lame_robin_solution(params.mu, params.nu,
                                             params.f_friction)
    errs = []
    for n in sizes:
        g = GridSpec(nx=n, ny=n)
        system = assemble_lame(g, params)
        load = VectorField.from_function(g, fx, fy).enforce_slip()
        w = solve_lame(system, load)
        wstar = VectorField.from_function(g, wx, wy).enforce_slip()
        diff = w - wstar
        errs.append(float(np.sqrt(g.cell_area * (np.sum(diff.vx ** 2)
                                                 + np.sum(diff.vy ** 2)))))
    return [ConvergenceResult("lame_solve", list(sizes), errs)]


def density_suite(sizes=(16, 32, 64, 128), alpha: float = 10.0) -> list[ConvergenceResult]:
    """Upwind transport-reaction solve against an analytic steady state
    (epsilon = 0, cutoff inactive)."""
    reg = RegularizationParams(epsilon=1e-6, m1=4.0, m2=5.0)
    law = PressureLaw(3.0, reg)

    def rho_star(x, y):
        return 1.0 + 0.3 * np.cos(np.pi * x) * np.cos(np.pi * y)

    def vx_star(x, y):
        return 0.2 * np.sin(np.pi * x) * np.cos(np.pi * y)

    def vy_star(x, y):
        return 0.2 * np.sin(np.pi * y) * np.cos(np.pi * x)

    def div_rho_v(x, y):
        # d/dx(rho vx) + d/dy(rho vy) for the fields above
        pi = np.pi
        rho = rho_star(x, y)
        drdx = -0.3 * pi * np.sin(pi * x) * np.cos(pi * y)
        drdy = -0.3 * pi * np.cos(pi * x) * np.sin(pi * y)
        dvxdx = 0.2 * pi * np.cos(pi * x) * np.cos(pi * y)
        dvydy = 0.2 * pi * np.cos(pi * y) * np.cos(pi * x)
        return (drdx * vx_star(x, y) + rho * dvxdx
                + drdy * vy_star(x, y) + rho * dvydy)

    errs = []
    for n in sizes:
        g = GridSpec(nx=n, ny=n)
        v = VectorField.from_function(g, vx_star, vy_star).enforce_slip()
        h = ScalarField.from_function(
            g, lambda x, y: rho_star(x, y) + div_rho_v(x, y) / alpha)
        rho, _ = solve_density(v, h, alpha, reg, law, tol=1e-11, epsilon=0.0)
        want = ScalarField.from_function(g, rho_star)
        errs.append(norm_l2_cells(rho - want))
    return [ConvergenceResult("density_upwind", list(sizes), errs)]


def full_suite():
    """All suites, as (results, thresholds) pairs for reporting."""
    out = []
    for r in grid_ops_suite():
        out.append((r, 1.9))
    for r in lame_suite():
        out.append((r, 1.5))
    for r in density_suite():
        out.append((r, 0.9))
    return out
