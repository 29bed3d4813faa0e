# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled stencil kernels; the numpy twin lives in _kernels_py.

Same signatures, same expression structure (compiled with fp-contract
off), so both backends agree to roundoff.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND = "compiled"

ctypedef cnp.float64_t f64


def divergence(double[:, ::1] vx, double[:, ::1] vy, double hx, double hy,
               bint periodic_x):
    cdef Py_ssize_t nx = vy.shape[0], ny = vx.shape[1]
    cdef Py_ssize_t i, j, ip
    out_arr = np.empty((nx, ny))
    cdef double[:, ::1] out = out_arr
    for i in range(nx):
        ip = (0 if i + 1 == nx else i + 1) if periodic_x else i + 1
        for j in range(ny):
            out[i, j] = (vx[ip, j] - vx[i, j]) / hx + (vy[i, j + 1] - vy[i, j]) / hy
    return out_arr


def gradient(double[:, ::1] p, double hx, double hy, bint periodic_x):
    cdef Py_ssize_t nx = p.shape[0], ny = p.shape[1]
    cdef Py_ssize_t i, j, im
    gx_arr = np.zeros((nx if periodic_x else nx + 1, ny))
    gy_arr = np.zeros((nx, ny + 1))
    cdef double[:, ::1] gx = gx_arr
    cdef double[:, ::1] gy = gy_arr
    if periodic_x:
        for i in range(nx):
            im = nx - 1 if i == 0 else i - 1
            for j in range(ny):
                gx[i, j] = (p[i, j] - p[im, j]) / hx
    else:
        for i in range(1, nx):
            for j in range(ny):
                gx[i, j] = (p[i, j] - p[i - 1, j]) / hx
    for i in range(nx):
        for j in range(1, ny):
            gy[i, j] = (p[i, j] - p[i, j - 1]) / hy
    return gx_arr, gy_arr


def lap_neumann(double[:, ::1] p, double hx, double hy, bint periodic_x):
    cdef Py_ssize_t nx = p.shape[0], ny = p.shape[1]
    cdef Py_ssize_t i, j, ip, im
    cdef double wx = hx * hx, wy = hy * hy
    cdef double acc
    out_arr = np.empty((nx, ny))
    cdef double[:, ::1] out = out_arr
    for i in range(nx):
        for j in range(ny):
            acc = 0.0
            if periodic_x:
                ip = 0 if i + 1 == nx else i + 1
                im = nx - 1 if i == 0 else i - 1
                acc += (p[ip, j] - 2.0 * p[i, j] + p[im, j]) / wx
            else:
                if 0 < i < nx - 1:
                    acc += (p[i + 1, j] - 2.0 * p[i, j] + p[i - 1, j]) / wx
                elif i == 0:
                    acc += (p[1, j] - p[0, j]) / wx
                else:
                    acc += (p[nx - 2, j] - p[nx - 1, j]) / wx
            if 0 < j < ny - 1:
                acc += (p[i, j + 1] - 2.0 * p[i, j] + p[i, j - 1]) / wy
            elif j == 0:
                acc += (p[i, 1] - p[i, 0]) / wy
            else:
                acc += (p[i, ny - 2] - p[i, ny - 1]) / wy
            out[i, j] = acc
    return out_arr


def dvx_dy_nodes(double[:, ::1] vx, double hy):
    cdef Py_ssize_t nfx = vx.shape[0], ny = vx.shape[1]
    cdef Py_ssize_t i, j
    out_arr = np.empty((nfx, ny + 1))
    cdef double[:, ::1] out = out_arr
    for i in range(nfx):
        out[i, 0] = (3.0 * vx[i, 1] - 2.0 * vx[i, 0] - vx[i, 2]) / hy
        for j in range(1, ny):
            out[i, j] = (vx[i, j] - vx[i, j - 1]) / hy
        out[i, ny] = (2.0 * vx[i, ny - 1] - 3.0 * vx[i, ny - 2] + vx[i, ny - 3]) / hy
    return out_arr


def dvy_dx_nodes(double[:, ::1] vy, double hx, bint periodic_x):
    cdef Py_ssize_t nx = vy.shape[0], nfy = vy.shape[1]
    cdef Py_ssize_t i, j, im
    out_arr = np.empty((nx if periodic_x else nx + 1, nfy))
    cdef double[:, ::1] out = out_arr
    if periodic_x:
        for i in range(nx):
            im = nx - 1 if i == 0 else i - 1
            for j in range(nfy):
                out[i, j] = (vy[i, j] - vy[im, j]) / hx
    else:
        for j in range(nfy):
            out[0, j] = (3.0 * vy[1, j] - 2.0 * vy[0, j] - vy[2, j]) / hx
            out[nx, j] = (2.0 * vy[nx - 1, j] - 3.0 * vy[nx - 2, j] + vy[nx - 3, j]) / hx
        for i in range(1, nx):
            for j in range(nfy):
                out[i, j] = (vy[i, j] - vy[i - 1, j]) / hx
    return out_arr


cdef inline double _dy_vx_at(double[:, ::1] vx, Py_ssize_t i, Py_ssize_t j,
                             Py_ssize_t ny, double hy) noexcept:
    if j == 0:
        return (3.0 * vx[i, 1] - 2.0 * vx[i, 0] - vx[i, 2]) / hy
    if j == ny:
        return (2.0 * vx[i, ny - 1] - 3.0 * vx[i, ny - 2] + vx[i, ny - 3]) / hy
    return (vx[i, j] - vx[i, j - 1]) / hy


cdef inline double _dx_vy_at(double[:, ::1] vy, Py_ssize_t i, Py_ssize_t j,
                             Py_ssize_t nx, double hx, bint periodic_x) noexcept:
    cdef Py_ssize_t im
    if periodic_x:
        im = nx - 1 if i == 0 else i - 1
        return (vy[i, j] - vy[im, j]) / hx
    if i == 0:
        return (3.0 * vy[1, j] - 2.0 * vy[0, j] - vy[2, j]) / hx
    if i == nx:
        return (2.0 * vy[nx - 1, j] - 3.0 * vy[nx - 2, j] + vy[nx - 3, j]) / hx
    return (vy[i, j] - vy[i - 1, j]) / hx


def curl_nodes(double[:, ::1] vx, double[:, ::1] vy, double hx, double hy,
               bint periodic_x):
    cdef Py_ssize_t nx = vy.shape[0], ny = vx.shape[1]
    cdef Py_ssize_t nnx = nx if periodic_x else nx + 1
    cdef Py_ssize_t i, j
    out_arr = np.empty((nnx, ny + 1))
    cdef double[:, ::1] out = out_arr
    for i in range(nnx):
        for j in range(ny + 1):
            out[i, j] = _dx_vy_at(vy, i, j, nx, hx, periodic_x) \
                - _dy_vx_at(vx, i, j, ny, hy)
    return out_arr


def d11_cells(double[:, ::1] vx, double hx, bint periodic_x):
    cdef Py_ssize_t ny = vx.shape[1]
    cdef Py_ssize_t nx = vx.shape[0] if periodic_x else vx.shape[0] - 1
    cdef Py_ssize_t i, j, ip
    out_arr = np.empty((nx, ny))
    cdef double[:, ::1] out = out_arr
    for i in range(nx):
        ip = (0 if i + 1 == nx else i + 1) if periodic_x else i + 1
        for j in range(ny):
            out[i, j] = (vx[ip, j] - vx[i, j]) / hx
    return out_arr


def d22_cells(double[:, ::1] vy, double hy):
    cdef Py_ssize_t nx = vy.shape[0], ny = vy.shape[1] - 1
    cdef Py_ssize_t i, j
    out_arr = np.empty((nx, ny))
    cdef double[:, ::1] out = out_arr
    for i in range(nx):
        for j in range(ny):
            out[i, j] = (vy[i, j + 1] - vy[i, j]) / hy
    return out_arr


def d12_nodes(double[:, ::1] vx, double[:, ::1] vy, double hx, double hy,
              bint periodic_x):
    cdef Py_ssize_t nx = vy.shape[0], ny = vx.shape[1]
    cdef Py_ssize_t nnx = nx if periodic_x else nx + 1
    cdef Py_ssize_t i, j
    out_arr = np.empty((nnx, ny + 1))
    cdef double[:, ::1] out = out_arr
    for i in range(nnx):
        for j in range(ny + 1):
            out[i, j] = 0.5 * (_dy_vx_at(vx, i, j, ny, hy)
                               + _dx_vy_at(vy, i, j, nx, hx, periodic_x))
    return out_arr


def vel_sq_cells(double[:, ::1] vx, double[:, ::1] vy, bint periodic_x):
    cdef Py_ssize_t nx = vy.shape[0], ny = vx.shape[1]
    cdef Py_ssize_t i, j, ip
    out_arr = np.empty((nx, ny))
    cdef double[:, ::1] out = out_arr
    for i in range(nx):
        ip = (0 if i + 1 == nx else i + 1) if periodic_x else i + 1
        for j in range(ny):
            out[i, j] = 0.5 * (vx[i, j] * vx[i, j] + vx[ip, j] * vx[ip, j]) \
                + 0.5 * (vy[i, j] * vy[i, j] + vy[i, j + 1] * vy[i, j + 1])
    return out_arr


def upwind_coeffs(double[:, ::1] vx, double[:, ::1] vy, double[:, ::1] kcell,
                  bint periodic_x):
    cdef Py_ssize_t nx = kcell.shape[0], ny = kcell.shape[1]
    cdef Py_ssize_t nfx = vx.shape[0]
    cdef Py_ssize_t i, j, im
    cdef double kf, u
    axl_arr = np.zeros((nfx, ny))
    axr_arr = np.zeros((nfx, ny))
    ayl_arr = np.zeros((nx, ny + 1))
    ayr_arr = np.zeros((nx, ny + 1))
    cdef double[:, ::1] axl = axl_arr, axr = axr_arr
    cdef double[:, ::1] ayl = ayl_arr, ayr = ayr_arr
    if periodic_x:
        for i in range(nx):
            im = nx - 1 if i == 0 else i - 1
            for j in range(ny):
                kf = kcell[im, j] if kcell[im, j] < kcell[i, j] else kcell[i, j]
                u = vx[i, j]
                axl[i, j] = (u if u > 0.0 else 0.0) * kf
                axr[i, j] = (u if u < 0.0 else 0.0) * kf
    else:
        for i in range(1, nx):
            for j in range(ny):
                kf = kcell[i - 1, j] if kcell[i - 1, j] < kcell[i, j] else kcell[i, j]
                u = vx[i, j]
                axl[i, j] = (u if u > 0.0 else 0.0) * kf
                axr[i, j] = (u if u < 0.0 else 0.0) * kf
    for i in range(nx):
        for j in range(1, ny):
            kf = kcell[i, j - 1] if kcell[i, j - 1] < kcell[i, j] else kcell[i, j]
            u = vy[i, j]
            ayl[i, j] = (u if u > 0.0 else 0.0) * kf
            ayr[i, j] = (u if u < 0.0 else 0.0) * kf
    return axl_arr, axr_arr, ayl_arr, ayr_arr


def mass_flux(double[:, ::1] axl, double[:, ::1] axr, double[:, ::1] ayl,
              double[:, ::1] ayr, double[:, ::1] rho, bint periodic_x):
    cdef Py_ssize_t nx = rho.shape[0], ny = rho.shape[1]
    cdef Py_ssize_t nfx = axl.shape[0]
    cdef Py_ssize_t i, j, im
    fx_arr = np.zeros((nfx, ny))
    fy_arr = np.zeros((nx, ny + 1))
    cdef double[:, ::1] fx = fx_arr, fy = fy_arr
    if periodic_x:
        for i in range(nx):
            im = nx - 1 if i == 0 else i - 1
            for j in range(ny):
                fx[i, j] = axl[i, j] * rho[im, j] + axr[i, j] * rho[i, j]
    else:
        for i in range(1, nx):
            for j in range(ny):
                fx[i, j] = axl[i, j] * rho[i - 1, j] + axr[i, j] * rho[i, j]
    for i in range(nx):
        for j in range(1, ny):
            fy[i, j] = ayl[i, j] * rho[i, j - 1] + ayr[i, j] * rho[i, j]
    return fx_arr, fy_arr


def momentum_convection(double[:, ::1] fx, double[:, ::1] fy,
                        double[:, ::1] vx, double[:, ::1] vy,
                        double hx, double hy, bint periodic_x):
    cdef Py_ssize_t nx = fy.shape[0], ny = fx.shape[1]
    cdef Py_ssize_t nfx = vx.shape[0]
    cdef Py_ssize_t i, j, ip, im
    cdef double fbar, lo, hi

    # dual fluxes for the x-momentum
    xflux_arr = np.empty((nx, ny))
    cdef double[:, ::1] xflux = xflux_arr
    for i in range(nx):
        ip = (0 if i + 1 == nx else i + 1) if periodic_x else i + 1
        for j in range(ny):
            fbar = 0.5 * (fx[i, j] + fx[ip, j])
            xflux[i, j] = fbar * (vx[i, j] if fbar >= 0.0 else vx[ip, j])

    yflux_arr = np.empty((nfx, ny + 1))
    cdef double[:, ::1] yflux = yflux_arr
    for i in range(nfx):
        if periodic_x:
            im = nx - 1 if i == 0 else i - 1
            fbar = 0.5 * (fy[im, 0] + fy[i, 0])
        elif 0 < i < nfx - 1:
            fbar = 0.5 * (fy[i - 1, 0] + fy[i, 0])
        else:
            fbar = 0.0
        yflux[i, 0] = 0.0 if fbar >= 0.0 else fbar * vx[i, 0]
        for j in range(1, ny):
            if periodic_x:
                im = nx - 1 if i == 0 else i - 1
                fbar = 0.5 * (fy[im, j] + fy[i, j])
            elif 0 < i < nfx - 1:
                fbar = 0.5 * (fy[i - 1, j] + fy[i, j])
            else:
                fbar = 0.0
            yflux[i, j] = fbar * (vx[i, j - 1] if fbar >= 0.0 else vx[i, j])
        if periodic_x:
            im = nx - 1 if i == 0 else i - 1
            fbar = 0.5 * (fy[im, ny] + fy[i, ny])
        elif 0 < i < nfx - 1:
            fbar = 0.5 * (fy[i - 1, ny] + fy[i, ny])
        else:
            fbar = 0.0
        yflux[i, ny] = fbar * vx[i, ny - 1] if fbar >= 0.0 else 0.0

    conv_x_arr = np.zeros((nfx, ny))
    cdef double[:, ::1] conv_x = conv_x_arr
    if periodic_x:
        for i in range(nfx):
            im = nx - 1 if i == 0 else i - 1
            for j in range(ny):
                conv_x[i, j] = (xflux[i, j] - xflux[im, j]) / hx \
                    + (yflux[i, j + 1] - yflux[i, j]) / hy
    else:
        for i in range(1, nfx - 1):
            for j in range(ny):
                conv_x[i, j] = (xflux[i, j] - xflux[i - 1, j]) / hx \
                    + (yflux[i, j + 1] - yflux[i, j]) / hy

    # dual fluxes for the y-momentum (interior rows only)
    yfc_arr = np.empty((nx, ny))
    cdef double[:, ::1] yfc = yfc_arr
    for i in range(nx):
        for j in range(ny):
            fbar = 0.5 * (fy[i, j] + fy[i, j + 1])
            yfc[i, j] = fbar * (vy[i, j] if fbar >= 0.0 else vy[i, j + 1])

    cdef Py_ssize_t nnx = nx if periodic_x else nx + 1
    xfn_arr = np.empty((nnx, ny - 1))
    cdef double[:, ::1] xfn = xfn_arr
    for i in range(nnx):
        for j in range(ny - 1):
            if periodic_x:
                im = nx - 1 if i == 0 else i - 1
                fbar = 0.5 * (fx[i, j] + fx[i, j + 1])
                xfn[i, j] = fbar * (vy[im, j + 1] if fbar >= 0.0 else vy[i, j + 1])
            else:
                fbar = 0.5 * (fx[i, j] + fx[i, j + 1])
                if i == 0:
                    xfn[i, j] = 0.0 if fbar >= 0.0 else fbar * vy[0, j + 1]
                elif i == nnx - 1:
                    xfn[i, j] = fbar * vy[nx - 1, j + 1] if fbar >= 0.0 else 0.0
                else:
                    xfn[i, j] = fbar * (vy[i - 1, j + 1] if fbar >= 0.0 else vy[i, j + 1])

    conv_y_arr = np.zeros((nx, ny + 1))
    cdef double[:, ::1] conv_y = conv_y_arr
    for i in range(nx):
        ip = (0 if i + 1 == nx else i + 1) if periodic_x else i + 1
        for j in range(1, ny):
            conv_y[i, j] = (xfn[ip, j - 1] - xfn[i, j - 1]) / hx \
                + (yfc[i, j] - yfc[i, j - 1]) / hy
    return conv_x_arr, conv_y_arr
