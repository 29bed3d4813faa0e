import numpy as np
import pytest

from barons2d import grid as G
from barons2d.config import ALL_SLIP, PERIODIC_X, GridSpec, RegularizationParams
from barons2d.density import (NegativeInput, NonConvergence, density_operator,
                              laplacian_matrix, solve_density, transport_matrix)
from barons2d.eos import PressureLaw


@pytest.fixture(scope="module")
def reg():
    return RegularizationParams(epsilon=1e-3, m1=2.0, m2=3.0)


@pytest.fixture(scope="module")
def law(reg):
    return PressureLaw(3.0, reg)


def test_uniform_rest_state_is_exact_fixed_point(reg, law):
    g = GridSpec(nx=8, ny=8)
    h = G.ScalarField.full(g, 1.2)
    rho, rep = solve_density(G.VectorField.zeros(g), h, 100.0, reg, law)
    assert np.abs(rho.values - 1.2).max() < 1e-13
    assert rep.picard_iters == 1


def test_matches_dense_oracle_on_8x8(reg, law):
    """v = 0 reduces the system to alpha*(rho - h) = eps*lap(rho); an
    independently hand-assembled dense matrix provides the oracle."""
    g = GridSpec(nx=8, ny=8)
    alpha = 100.0
    h = G.ScalarField.from_function(
        g, lambda x, y: 0.8 * (1.0 + 0.5 * np.cos(2 * np.pi * x)))
    rho, _ = solve_density(G.VectorField.zeros(g), h, alpha, reg, law)

    n = g.n_cells
    dense = np.zeros((n, n))
    idx = lambda i, j: i * g.ny + j
    for i in range(g.nx):
        for j in range(g.ny):
            r = idx(i, j)
            dense[r, r] += alpha
            for di, dj, h2 in ((1, 0, g.hx ** 2), (-1, 0, g.hx ** 2),
                               (0, 1, g.hy ** 2), (0, -1, g.hy ** 2)):
                ii, jj = i + di, j + dj
                if 0 <= ii < g.nx and 0 <= jj < g.ny:
                    dense[r, idx(ii, jj)] -= reg.epsilon / h2
                    dense[r, r] += reg.epsilon / h2
    want = np.linalg.solve(dense, alpha * h.values.ravel()).reshape(g.shape_cell)
    assert np.abs(rho.values - want).max() / np.abs(want).max() < 1e-10


def test_transport_matrix_is_m_matrix_and_conservative(law):
    g = GridSpec(nx=9, ny=7)
    rng = np.random.default_rng(2)
    v = G.VectorField(g, rng.standard_normal(g.shape_facex),
                      rng.standard_normal(g.shape_facey)).enforce_slip()
    k = np.clip(rng.uniform(0, 1, g.shape_cell), 0, 1)
    t = transport_matrix(v, k).toarray()
    off = t - np.diag(np.diag(t))
    assert np.diag(t).min() >= 0.0
    assert off.max() <= 1e-14
    assert np.abs(t.sum(axis=0)).max() < 1e-12  # column sums: conservation


@pytest.mark.parametrize("mode", (ALL_SLIP, PERIODIC_X))
def test_mass_and_positivity_per_iterate(reg, law, mode):
    g = GridSpec(nx=16, ny=12, wall_mode=mode)
    rng = np.random.default_rng(4)
    v = G.VectorField(g, rng.standard_normal(g.shape_facex),
                      rng.standard_normal(g.shape_facey)).enforce_slip()
    h = G.ScalarField.from_function(
        g, lambda x, y: 1.0 + 0.5 * np.exp(-((x - 0.5) ** 2 + (y - 0.5) ** 2) / 0.02))
    rho, rep = solve_density(v, h, 100.0, reg, law)
    assert min(rep.iterate_min_rho) >= -1e-12
    assert max(rep.iterate_mass) <= rep.mass_in + 1e-12 * rep.mass_in
    assert rep.mass_out <= rep.mass_in + 1e-12 * rep.mass_in
    assert rep.final_residual <= 1e-10


def test_exact_mass_conservation_with_eps_zero(reg, law):
    g = GridSpec(nx=16, ny=16)
    rng = np.random.default_rng(5)
    v = G.VectorField(g, 0.1 * rng.standard_normal(g.shape_facex),
                      0.1 * rng.standard_normal(g.shape_facey)).enforce_slip()
    h = G.ScalarField.from_function(
        g, lambda x, y: 1.0 + 0.4 * np.cos(np.pi * x) * np.cos(np.pi * y))
    rho, rep = solve_density(v, h, 50.0, reg, law, epsilon=0.0)
    assert abs(rep.mass_out - rep.mass_in) <= 1e-13 * rep.mass_in
    # with eps > 0 conservation holds too (Neumann Laplacian telescopes)
    rho2, rep2 = solve_density(v, h, 50.0, reg, law)
    assert abs(rep2.mass_out - rep2.mass_in) <= 1e-12 * rep2.mass_in


def test_eps_zero_requires_certified_regime(reg, law):
    g = GridSpec(nx=8, ny=8)
    h = G.ScalarField.full(g, 2.5)  # above m1
    with pytest.raises(ValueError, match="K == 1 regime"):
        solve_density(G.VectorField.zeros(g), h, 10.0, reg, law, epsilon=0.0)


def test_negative_h_rejected(reg, law):
    g = GridSpec(nx=8, ny=8)
    vals = np.full(g.shape_cell, 1.0)
    vals[3, 3] = -0.5
    with pytest.raises(NegativeInput):
        solve_density(G.VectorField.zeros(g), G.ScalarField(g, vals),
                      10.0, reg, law)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_upper_bound_at_ceiling(reg, law):
    """Converged densities stay below m2 even when h sits mid-bridge and
    the velocity compresses strongly (the face cutoff kills all exchange
    of an at-ceiling cell)."""
    g = GridSpec(nx=20, ny=16)
    rng = np.random.default_rng(1)
    v = G.VectorField(g, rng.standard_normal(g.shape_facex),
                      rng.standard_normal(g.shape_facey)).enforce_slip()
    h = G.ScalarField.from_function(
        g, lambda x, y: 2.4 + 0.5 * np.cos(2 * np.pi * x) * np.cos(np.pi * y))
    rho, rep = solve_density(v, h, 50.0, reg, law, tol=1e-9)
    assert rep.max_rho <= reg.m2 + 1e-12
    assert rep.min_rho >= -1e-12
    assert rep.mass_out <= rep.mass_in + 1e-12 * rep.mass_in


def test_nonconvergence_carries_report(reg, law):
    g = GridSpec(nx=12, ny=12)
    rng = np.random.default_rng(9)
    v = G.VectorField(g, rng.standard_normal(g.shape_facex),
                      rng.standard_normal(g.shape_facey)).enforce_slip()
    h = G.ScalarField.from_function(
        g, lambda x, y: 2.4 + 0.5 * np.cos(2 * np.pi * x))
    with pytest.raises(NonConvergence) as err:
        solve_density(v, h, 50.0, reg, law, tol=1e-13, max_iters=3)
    assert err.value.report.picard_iters == 3
    assert err.value.best is not None


def test_residual_decreases_on_well_posed_input(reg, law):
    g = GridSpec(nx=12, ny=10)
    rng = np.random.default_rng(12)
    v = G.VectorField(g, 0.3 * rng.standard_normal(g.shape_facex),
                      0.3 * rng.standard_normal(g.shape_facey)).enforce_slip()
    h = G.ScalarField.from_function(
        g, lambda x, y: 1.8 + 0.4 * np.cos(np.pi * x))  # touches the bridge
    rho, rep = solve_density(v, h, 100.0, reg, law)
    hist = rep.residual_history
    assert all(b <= a * (1 + 1e-9) for a, b in zip(hist, hist[1:]))
    assert rep.nonmonotone_steps == 0


@pytest.mark.parametrize("mode", (ALL_SLIP, PERIODIC_X))
def test_operator_matrix_matches_defect_kernels(reg, law, mode):
    from barons2d._backend import kernels
    g = GridSpec(nx=10, ny=8, wall_mode=mode)
    rng = np.random.default_rng(3)
    v = G.VectorField(g, rng.standard_normal(g.shape_facex),
                      rng.standard_normal(g.shape_facey)).enforce_slip()
    k = rng.uniform(0, 1, g.shape_cell)
    p = rng.standard_normal(g.shape_cell)
    alpha, eps = 7.0, 1e-2
    mat = density_operator(v, k, alpha, eps, laplacian_matrix(g))
    via_matrix = (mat @ p.ravel()).reshape(g.shape_cell)
    axl, axr, ayl, ayr = kernels.upwind_coeffs(v.vx, v.vy, k, g.periodic_x)
    fx, fy = kernels.mass_flux(axl, axr, ayl, ayr, p, g.periodic_x)
    via_kernels = alpha * p + kernels.divergence(fx, fy, g.hx, g.hy, g.periodic_x) \
        - eps * kernels.lap_neumann(p, g.hx, g.hy, g.periodic_x)
    assert np.abs(via_matrix - via_kernels).max() < 1e-12
