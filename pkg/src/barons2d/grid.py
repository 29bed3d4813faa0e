"""Staggered-grid fields and discrete differential operators.

MAC layout: scalars (density, pressure, potentials) live at cell centers,
velocity components on faces.  Cell (i, j) spans
[i*hx, (i+1)*hx] x [j*hy, (j+1)*hy]; vx[i, j] sits at (i*hx, (j+1/2)*hy),
vy[i, j] at ((i+1/2)*hx, j*hy).  In the periodic-x channel the face at
x = lx is the face at x = 0 and is stored once.

The div/grad pair is discretely adjoint, <grad p, v> = -<p, div v>, for
every v with zero wall-normal components; this identity is the backbone
of each integration-by-parts step in the solvers and is exact to
roundoff.  curl2d returns the cell-centered average of the node-located
curl; curl_nodes exposes the node values (one-sided second order at
walls).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .config import GridSpec


class GridMismatchError(ValueError):
    """Fields on different grids were combined."""


def _same_grid(a, b):
    if a.grid != b.grid:
        raise GridMismatchError(f"grid mismatch: {a.grid} vs {b.grid}")


@dataclass(frozen=True)
class ScalarField:
    """Cell-centered grid function."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != self.grid.shape_cell:
            raise GridMismatchError(
                f"cell field shape {self.values.shape} does not match grid "
                f"{self.grid.shape_cell}")

    @classmethod
    def zeros(cls, grid: GridSpec) -> "ScalarField":
        return cls(grid, np.zeros(grid.shape_cell))

    @classmethod
    def full(cls, grid: GridSpec, value: float) -> "ScalarField":
        return cls(grid, np.full(grid.shape_cell, float(value)))

    @classmethod
    def from_function(cls, grid: GridSpec, fn) -> "ScalarField":
        x, y = cell_centers(grid)
        return cls(grid, np.asarray(fn(x, y), dtype=float))

    def copy(self) -> "ScalarField":
        return ScalarField(self.grid, self.values.copy())

    def map(self, fn) -> "ScalarField":
        return ScalarField(self.grid, np.asarray(fn(self.values), dtype=float))

    def __add__(self, other):
        _same_grid(self, other)
        return ScalarField(self.grid, self.values + other.values)

    def __sub__(self, other):
        _same_grid(self, other)
        return ScalarField(self.grid, self.values - other.values)

    def __mul__(self, c: float):
        return ScalarField(self.grid, self.values * c)

    __rmul__ = __mul__


@dataclass(frozen=True)
class VectorField:
    """Face-staggered vector field.

    Wall-normal entries (vx on the x-walls unless periodic, vy on the
    y-walls) are part of the arrays; slip-compatible fields keep them at
    exactly zero.  Operator tests may store arbitrary sampled values.
    """

    grid: GridSpec
    vx: np.ndarray
    vy: np.ndarray

    def __post_init__(self):
        if self.vx.shape != self.grid.shape_facex or self.vy.shape != self.grid.shape_facey:
            raise GridMismatchError(
                f"face field shapes {self.vx.shape}/{self.vy.shape} do not match "
                f"grid {self.grid.shape_facex}/{self.grid.shape_facey}")

    @classmethod
    def zeros(cls, grid: GridSpec) -> "VectorField":
        return cls(grid, np.zeros(grid.shape_facex), np.zeros(grid.shape_facey))

    @classmethod
    def from_function(cls, grid: GridSpec, fx, fy) -> "VectorField":
        (xx, xy), (yx, yy) = face_coords(grid)
        return cls(grid, np.asarray(fx(xx, xy), dtype=float),
                   np.asarray(fy(yx, yy), dtype=float))

    def copy(self) -> "VectorField":
        return VectorField(self.grid, self.vx.copy(), self.vy.copy())

    def enforce_slip(self) -> "VectorField":
        """Zero the wall-normal components in place and return self."""
        if not self.grid.periodic_x:
            self.vx[0, :] = 0.0
            self.vx[-1, :] = 0.0
        self.vy[:, 0] = 0.0
        self.vy[:, -1] = 0.0
        return self

    def is_slip_compatible(self, tol: float = 0.0) -> bool:
        ok = (np.abs(self.vy[:, 0]) <= tol).all() and (np.abs(self.vy[:, -1]) <= tol).all()
        if not self.grid.periodic_x:
            ok = ok and (np.abs(self.vx[0, :]) <= tol).all() \
                and (np.abs(self.vx[-1, :]) <= tol).all()
        return bool(ok)

    def __add__(self, other):
        _same_grid(self, other)
        return VectorField(self.grid, self.vx + other.vx, self.vy + other.vy)

    def __sub__(self, other):
        _same_grid(self, other)
        return VectorField(self.grid, self.vx - other.vx, self.vy - other.vy)

    def __mul__(self, c: float):
        return VectorField(self.grid, self.vx * c, self.vy * c)

    __rmul__ = __mul__


# ---------------------------------------------------------------------------
# coordinates

def cell_centers(grid: GridSpec):
    x = (np.arange(grid.nx) + 0.5) * grid.hx
    y = (np.arange(grid.ny) + 0.5) * grid.hy
    return np.meshgrid(x, y, indexing="ij")

def face_coords(grid: GridSpec):
    nfx = grid.shape_facex[0]
    xx = np.arange(nfx) * grid.hx
    xy = (np.arange(grid.ny) + 0.5) * grid.hy
    yx = (np.arange(grid.nx) + 0.5) * grid.hx
    yy = np.arange(grid.ny + 1) * grid.hy
    return np.meshgrid(xx, xy, indexing="ij"), np.meshgrid(yx, yy, indexing="ij")

def node_coords(grid: GridSpec):
    nnx = grid.nx if grid.periodic_x else grid.nx + 1
    x = np.arange(nnx) * grid.hx
    y = np.arange(grid.ny + 1) * grid.hy
    return np.meshgrid(x, y, indexing="ij")


# ---------------------------------------------------------------------------
# first/second difference operators

def divergence(v: VectorField) -> ScalarField:
    """Conservative cell divergence; cell-area-weighted sum telescopes to
    the net boundary normal flux (zero for slip fields)."""
    g = v.grid
    return ScalarField(g, kernels.divergence(v.vx, v.vy, g.hx, g.hy, g.periodic_x))


def gradient(p: ScalarField) -> VectorField:
    """Face gradient, adjoint to -divergence; wall-normal faces are zero."""
    g = p.grid
    gx, gy = kernels.gradient(p.values, g.hx, g.hy, g.periodic_x)
    return VectorField(g, gx, gy)


def laplacian_neumann(p: ScalarField) -> ScalarField:
    """5-point Laplacian with mirror ghosts (homogeneous Neumann walls)."""
    g = p.grid
    return ScalarField(g, kernels.lap_neumann(p.values, g.hx, g.hy, g.periodic_x))


def curl_nodes(v: VectorField) -> np.ndarray:
    """Node-located curl dvy/dx - dvx/dy, one-sided second order at walls."""
    g = v.grid
    return kernels.curl_nodes(v.vx, v.vy, g.hx, g.hy, g.periodic_x)


def curl2d(v: VectorField) -> ScalarField:
    """Cell-centered curl: average of the four surrounding node values."""
    g = v.grid
    w = curl_nodes(v)
    if g.periodic_x:
        wr = np.roll(w, -1, axis=0)
        c = 0.25 * (w[:, :-1] + w[:, 1:] + wr[:, :-1] + wr[:, 1:])
    else:
        c = 0.25 * (w[:-1, :-1] + w[:-1, 1:] + w[1:, :-1] + w[1:, 1:])
    return ScalarField(g, c)


def sym_grad_normsq(v: VectorField) -> ScalarField:
    """Cell-centered |D(v)|^2 with the node-located off-diagonal part
    folded onto cells so that integrate(sym_grad_normsq(v)) carries
    trapezoidal node weights (the same quadrature the viscous operator
    assembly uses)."""
    g = v.grid
    d11 = kernels.d11_cells(v.vx, g.hx, g.periodic_x)
    d22 = kernels.d22_cells(v.vy, g.hy)
    d12 = kernels.d12_nodes(v.vx, v.vy, g.hx, g.hy, g.periodic_x)
    sq = d12 * d12
    if g.periodic_x:
        sr = np.roll(sq, -1, axis=0)
        fold = sq[:, :-1] + sq[:, 1:] + sr[:, :-1] + sr[:, 1:]
    else:
        fold = sq[:-1, :-1] + sq[:-1, 1:] + sq[1:, :-1] + sq[1:, 1:]
    return ScalarField(g, d11 * d11 + d22 * d22 + 0.5 * fold)


# ---------------------------------------------------------------------------
# integrals and inner products

def integrate(p: ScalarField) -> float:
    """Midpoint quadrature: cell area times the sum of cell values."""
    return p.grid.cell_area * float(np.sum(p.values))


def inner_cells(p: ScalarField, q: ScalarField) -> float:
    _same_grid(p, q)
    return p.grid.cell_area * float(np.sum(p.values * q.values))


def inner_faces(u: VectorField, v: VectorField) -> float:
    """L2 inner product of face fields; every stored face carries full
    cell-area weight (wall-normal faces of slip fields contribute zero)."""
    _same_grid(u, v)
    a = u.grid.cell_area
    return a * (float(np.sum(u.vx * v.vx)) + float(np.sum(u.vy * v.vy)))


def norm_l2_cells(p: ScalarField) -> float:
    return float(np.sqrt(inner_cells(p, p)))


def norm_l2_faces(v: VectorField) -> float:
    return float(np.sqrt(inner_faces(v, v)))


def wall_tangential_traces(v: VectorField):
    """Second-order one-sided tangential traces on each wall.

    Returns a list of (trace values, edge length) pairs: bottom and top
    always; left and right only on the all-slip rectangle.
    """
    g = v.grid
    out = [
        (1.5 * v.vx[:, 0] - 0.5 * v.vx[:, 1], g.hx),
        (1.5 * v.vx[:, -1] - 0.5 * v.vx[:, -2], g.hx),
    ]
    if not g.periodic_x:
        out.append((1.5 * v.vy[0, :] - 0.5 * v.vy[1, :], g.hy))
        out.append((1.5 * v.vy[-1, :] - 0.5 * v.vy[-2, :], g.hy))
    return out


def boundary_integrate_tangential_sq(v: VectorField) -> float:
    """Integral of (v.tau)^2 over the slip walls."""
    total = 0.0
    for trace, edge in wall_tangential_traces(v):
        total += edge * float(np.sum(trace * trace))
    return total


def h1_normsq(v: VectorField) -> float:
    """Discrete squared H^1 norm: L2 of v plus L2 of the full gradient
    (diagonal derivatives at cells, off-diagonal at nodes with
    trapezoidal weights)."""
    g = v.grid
    dxx = kernels.d11_cells(v.vx, g.hx, g.periodic_x)
    dyy = kernels.d22_cells(v.vy, g.hy)
    dyx = kernels.dvx_dy_nodes(v.vx, g.hy)
    dxy = kernels.dvy_dx_nodes(v.vy, g.hx, g.periodic_x)
    a = g.cell_area
    grad_sq = a * (float(np.sum(dxx ** 2)) + float(np.sum(dyy ** 2)))
    w = _node_weights(g)
    grad_sq += float(np.sum(w * (dyx ** 2 + dxy ** 2)))
    return inner_faces(v, v) + grad_sq


def _node_weights(grid: GridSpec) -> np.ndarray:
    """Trapezoidal node quadrature weights (fraction of adjacent cells)."""
    nnx = grid.nx if grid.periodic_x else grid.nx + 1
    w = np.full((nnx, grid.ny + 1), grid.cell_area)
    w[:, 0] *= 0.5
    w[:, -1] *= 0.5
    if not grid.periodic_x:
        w[0, :] *= 0.5
        w[-1, :] *= 0.5
    return w


def interp_cell_to_facex(p: ScalarField) -> np.ndarray:
    """Arithmetic cell-to-x-face average; wall faces get the adjacent cell."""
    g = p.grid
    c = p.values
    if g.periodic_x:
        return 0.5 * (c + np.roll(c, 1, axis=0))
    out = np.empty(g.shape_facex)
    out[1:-1, :] = 0.5 * (c[:-1, :] + c[1:, :])
    out[0, :] = c[0, :]
    out[-1, :] = c[-1, :]
    return out


def interp_cell_to_facey(p: ScalarField) -> np.ndarray:
    g = p.grid
    c = p.values
    out = np.empty(g.shape_facey)
    out[:, 1:-1] = 0.5 * (c[:, :-1] + c[:, 1:])
    out[:, 0] = c[:, 0]
    out[:, -1] = c[:, -1]
    return out
