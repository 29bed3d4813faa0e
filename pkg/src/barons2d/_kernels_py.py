"""Numpy fallback for the stencil kernels.

Mirrors barons2d._kernels (the compiled extension) function for function;
expression structure is kept identical so both backends agree to roundoff.
All functions take raw arrays in the staggered layout:

    cell   (nx, ny)
    facex  (nx+1, ny), or (nx, ny) when periodic in x
    facey  (nx, ny+1)
    node   (nx+1, ny+1), or (nx, ny+1) when periodic in x
"""

import numpy as np

BACKEND = "python"


def divergence(vx, vy, hx, hy, periodic_x):
    """Conservative cell-centered divergence of a face field."""
    if periodic_x:
        dvx = (np.roll(vx, -1, axis=0) - vx) / hx
    else:
        dvx = (vx[1:, :] - vx[:-1, :]) / hx
    dvy = (vy[:, 1:] - vy[:, :-1]) / hy
    return dvx + dvy


def gradient(p, hx, hy, periodic_x):
    """Face-located centered gradient; wall-normal faces are zero."""
    nx, ny = p.shape
    if periodic_x:
        gx = (p - np.roll(p, 1, axis=0)) / hx
    else:
        gx = np.zeros((nx + 1, ny), dtype=p.dtype)
        gx[1:-1, :] = (p[1:, :] - p[:-1, :]) / hx
    gy = np.zeros((nx, ny + 1), dtype=p.dtype)
    gy[:, 1:-1] = (p[:, 1:] - p[:, :-1]) / hy
    return gx, gy


def lap_neumann(p, hx, hy, periodic_x):
    """5-point Laplacian with homogeneous-Neumann (mirror) closure."""
    out = np.zeros_like(p)
    if periodic_x:
        out += (np.roll(p, -1, axis=0) - 2.0 * p + np.roll(p, 1, axis=0)) / (hx * hx)
    else:
        out[1:-1, :] += (p[2:, :] - 2.0 * p[1:-1, :] + p[:-2, :]) / (hx * hx)
        out[0, :] += (p[1, :] - p[0, :]) / (hx * hx)
        out[-1, :] += (p[-2, :] - p[-1, :]) / (hx * hx)
    out[:, 1:-1] += (p[:, 2:] - 2.0 * p[:, 1:-1] + p[:, :-2]) / (hy * hy)
    out[:, 0] += (p[:, 1] - p[:, 0]) / (hy * hy)
    out[:, -1] += (p[:, -2] - p[:, -1]) / (hy * hy)
    return out


def dvx_dy_nodes(vx, hy):
    """d(vx)/dy at node rows; second-order one-sided at the y-walls."""
    nfx, ny = vx.shape
    out = np.empty((nfx, ny + 1), dtype=vx.dtype)
    out[:, 1:-1] = (vx[:, 1:] - vx[:, :-1]) / hy
    out[:, 0] = (3.0 * vx[:, 1] - 2.0 * vx[:, 0] - vx[:, 2]) / hy
    out[:, -1] = (2.0 * vx[:, -1] - 3.0 * vx[:, -2] + vx[:, -3]) / hy
    return out


def dvy_dx_nodes(vy, hx, periodic_x):
    """d(vy)/dx at node columns; one-sided at the x-walls unless periodic."""
    nx, nfy = vy.shape
    if periodic_x:
        return (vy - np.roll(vy, 1, axis=0)) / hx
    out = np.empty((nx + 1, nfy), dtype=vy.dtype)
    out[1:-1, :] = (vy[1:, :] - vy[:-1, :]) / hx
    out[0, :] = (3.0 * vy[1, :] - 2.0 * vy[0, :] - vy[2, :]) / hx
    out[-1, :] = (2.0 * vy[-1, :] - 3.0 * vy[-2, :] + vy[-3, :]) / hx
    return out


def curl_nodes(vx, vy, hx, hy, periodic_x):
    """Node-located curl dvy/dx - dvx/dy (one-sided second order at walls)."""
    return dvy_dx_nodes(vy, hx, periodic_x) - dvx_dy_nodes(vx, hy)


def d11_cells(vx, hx, periodic_x):
    if periodic_x:
        return (np.roll(vx, -1, axis=0) - vx) / hx
    return (vx[1:, :] - vx[:-1, :]) / hx


def d22_cells(vy, hy):
    return (vy[:, 1:] - vy[:, :-1]) / hy


def d12_nodes(vx, vy, hx, hy, periodic_x):
    """Off-diagonal strain-rate 0.5*(dvx/dy + dvy/dx) at nodes."""
    return 0.5 * (dvx_dy_nodes(vx, hy) + dvy_dx_nodes(vy, hx, periodic_x))


def vel_sq_cells(vx, vy, periodic_x):
    """Cell-centered v^2 as the average of squared face values."""
    if periodic_x:
        vx2 = 0.5 * (vx * vx + np.roll(vx, -1, axis=0) ** 2)
    else:
        vx2 = 0.5 * (vx[:-1, :] ** 2 + vx[1:, :] ** 2)
    vy2 = 0.5 * (vy[:, :-1] ** 2 + vy[:, 1:] ** 2)
    return vx2 + vy2


def upwind_coeffs(vx, vy, kcell, periodic_x):
    """Per-face upwind coefficients of the mass flux v * K_face * rho_upwind.

    The flux through an x-face is axl*rho_left + axr*rho_right (and
    analogously through y-faces), which is both the flux evaluation rule
    and the matrix stencil of the transport operator.  The face cutoff is
    the minimum of the two adjacent cell values, so a cell whose density
    reaches the ceiling (K = 0) exchanges no mass at all; that makes the
    upper bound a property of the converged state, not of the mesh size.
    Wall faces get zero coefficients.
    """
    if periodic_x:
        kf = np.minimum(np.roll(kcell, 1, axis=0), kcell)
        axl = np.maximum(vx, 0.0) * kf
        axr = np.minimum(vx, 0.0) * kf
    else:
        axl = np.zeros_like(vx)
        axr = np.zeros_like(vx)
        kf = np.minimum(kcell[:-1, :], kcell[1:, :])
        axl[1:-1, :] = np.maximum(vx[1:-1, :], 0.0) * kf
        axr[1:-1, :] = np.minimum(vx[1:-1, :], 0.0) * kf
    ayl = np.zeros_like(vy)
    ayr = np.zeros_like(vy)
    kf = np.minimum(kcell[:, :-1], kcell[:, 1:])
    ayl[:, 1:-1] = np.maximum(vy[:, 1:-1], 0.0) * kf
    ayr[:, 1:-1] = np.minimum(vy[:, 1:-1], 0.0) * kf
    return axl, axr, ayl, ayr


def mass_flux(axl, axr, ayl, ayr, rho, periodic_x):
    """Evaluate the upwind mass fluxes for a given cell density."""
    if periodic_x:
        fx = axl * np.roll(rho, 1, axis=0) + axr * rho
    else:
        fx = np.zeros_like(axl)
        fx[1:-1, :] = axl[1:-1, :] * rho[:-1, :] + axr[1:-1, :] * rho[1:, :]
    fy = np.zeros_like(ayl)
    fy[:, 1:-1] = ayl[:, 1:-1] * rho[:, :-1] + ayr[:, 1:-1] * rho[:, 1:]
    return fx, fy


def momentum_convection(fx, fy, vx, vy, hx, hy, periodic_x):
    """Dual-grid upwind divergence of the momentum flux.

    fx, fy are the same face mass fluxes the density transport uses, so
    momentum is advected consistently with mass.  Returns face fields;
    wall-normal entries are zero.
    """
    nx, ny = fy.shape[0], fx.shape[1]

    # --- x-momentum ---
    # dual faces in x sit at cell centers, transporting vx between faces i, i+1
    if periodic_x:
        fbar_cx = 0.5 * (fx + np.roll(fx, -1, axis=0))           # (nx, ny)
        xflux = np.where(fbar_cx >= 0.0, fbar_cx * vx,
                         fbar_cx * np.roll(vx, -1, axis=0))
    else:
        fbar_cx = 0.5 * (fx[:-1, :] + fx[1:, :])                 # (nx, ny)
        xflux = np.where(fbar_cx >= 0.0, fbar_cx * vx[:-1, :], fbar_cx * vx[1:, :])
    # dual faces in y sit at nodes (rows j = 0..ny), transporting vx between
    # face rows j-1 and j; the wall rows see no transported value from outside
    nfx = vx.shape[0]
    if periodic_x:
        fbar_ny = 0.5 * (np.roll(fy, 1, axis=0) + fy)            # (nx, ny+1)
    else:
        fbar_ny = np.zeros((nfx, ny + 1), dtype=fx.dtype)
        fbar_ny[1:-1, :] = 0.5 * (fy[:-1, :] + fy[1:, :])
    yflux = np.empty((nfx, ny + 1), dtype=fx.dtype)
    yflux[:, 1:-1] = np.where(fbar_ny[:, 1:-1] >= 0.0,
                              fbar_ny[:, 1:-1] * vx[:, :-1],
                              fbar_ny[:, 1:-1] * vx[:, 1:])
    yflux[:, 0] = np.where(fbar_ny[:, 0] >= 0.0, 0.0, fbar_ny[:, 0] * vx[:, 0])
    yflux[:, -1] = np.where(fbar_ny[:, -1] >= 0.0, fbar_ny[:, -1] * vx[:, -1], 0.0)

    if periodic_x:
        conv_x = (xflux - np.roll(xflux, 1, axis=0)) / hx \
            + (yflux[:, 1:] - yflux[:, :-1]) / hy
    else:
        conv_x = np.zeros_like(vx)
        conv_x[1:-1, :] = (xflux[1:, :] - xflux[:-1, :]) / hx \
            + (yflux[1:-1, 1:] - yflux[1:-1, :-1]) / hy

    # --- y-momentum ---
    # dual faces in y sit at cell centers, transporting vy between rows j, j+1
    fbar_cy = 0.5 * (fy[:, :-1] + fy[:, 1:])                     # (nx, ny)
    yflux_c = np.where(fbar_cy >= 0.0, fbar_cy * vy[:, :-1], fbar_cy * vy[:, 1:])
    # dual faces in x sit at nodes, transporting vy (interior rows j = 1..ny-1)
    # between columns i-1 and i
    vyi = vy[:, 1:-1]                                            # (nx, ny-1)
    fbar_nx_i = 0.5 * (fx[:, :-1] + fx[:, 1:])                   # node cols, ny-1 rows
    if periodic_x:
        xflux_n = np.where(fbar_nx_i >= 0.0,
                           fbar_nx_i * np.roll(vyi, 1, axis=0),
                           fbar_nx_i * vyi)                      # (nx, ny-1)
        conv_y = np.zeros_like(vy)
        conv_y[:, 1:-1] = (np.roll(xflux_n, -1, axis=0) - xflux_n) / hx \
            + (yflux_c[:, 1:] - yflux_c[:, :-1]) / hy
    else:
        xflux_n = np.empty((nx + 1, ny - 1), dtype=fx.dtype)
        xflux_n[1:-1, :] = np.where(fbar_nx_i[1:-1, :] >= 0.0,
                                    fbar_nx_i[1:-1, :] * vyi[:-1, :],
                                    fbar_nx_i[1:-1, :] * vyi[1:, :])
        xflux_n[0, :] = np.where(fbar_nx_i[0, :] >= 0.0, 0.0,
                                 fbar_nx_i[0, :] * vyi[0, :])
        xflux_n[-1, :] = np.where(fbar_nx_i[-1, :] >= 0.0,
                                  fbar_nx_i[-1, :] * vyi[-1, :], 0.0)
        conv_y = np.zeros_like(vy)
        conv_y[:, 1:-1] = (xflux_n[1:, :] - xflux_n[:-1, :]) / hx \
            + (yflux_c[:, 1:] - yflux_c[:, :-1]) / hy

    return conv_x, conv_y
