"""Acceptance suite: every criterion runs at its stated tolerance and
prints one pass/fail line.

The presets are the CLI defaults: a unit box at 64x64, gamma = 3,
mu = 1, nu = 0, f = 0.1, dt = 0.01; the bump preset starts from a
Gaussian density bump at rest (densities stay far below the cutoff
onset m1 = 4 * max rho0), the random preset from seeded low-frequency
Fourier data.  Runs stay within a few minutes total on a laptop.
"""

import numpy as np
import pytest

from barons2d import grid as G
from barons2d.cli import main as cli_main
from barons2d.density import density_operator, laplacian_matrix, solve_density
from barons2d.io import build_setup
from barons2d.lame import assemble_lame, solve_lame
from barons2d.mms import density_suite, grid_ops_suite, lame_suite
from barons2d.stepper import StepperContext, run
from barons2d.sweeps import dt_sweep, eps_sweep

DT_FAMILY = (0.02, 0.01, 0.005)
T_FINAL = 0.5
EPS_SCHEDULE = (1e-2, 1e-3, 1e-4)


def _criterion(num: int, ok: bool, desc: str):
    print(f"ACCEPTANCE {num:2d} {'PASS' if ok else 'FAIL'}: {desc}")
    assert ok, f"criterion {num} failed: {desc}"


@pytest.fixture(scope="module")
def bump_setup():
    return build_setup({}, {})


@pytest.fixture(scope="module")
def bump_traj(bump_setup):
    s = bump_setup
    ctx = StepperContext(s.cfg, tol_outer=s.tol_outer, max_outer=s.max_outer,
                         relax_theta=s.relax_theta, density_tol=s.density_tol)
    return ctx, run(s.initial, s.cfg.time.dt, s.cfg.time.n_steps, ctx,
                    tail_thresholds=s.tail_thresholds)


@pytest.fixture(scope="module")
def random_setup():
    return build_setup({}, {"initial_kind": "random-smooth", "n_steps": "50"})


@pytest.fixture(scope="module")
def random_traj(random_setup):
    s = random_setup
    ctx = StepperContext(s.cfg, tol_outer=s.tol_outer, max_outer=s.max_outer,
                         relax_theta=s.relax_theta, density_tol=s.density_tol)
    return ctx, run(s.initial, s.cfg.time.dt, s.cfg.time.n_steps, ctx,
                    with_weakform=False)


@pytest.fixture(scope="module")
def dtsweep_report(bump_setup):
    s = bump_setup
    return dt_sweep(s.cfg, DT_FAMILY, s.initial, T_FINAL,
                    stepper_options=dict(tol_outer=s.tol_outer))


@pytest.fixture(scope="module")
def epssweep_report(bump_setup):
    s = bump_setup
    m1 = s.cfg.reg.m1
    return eps_sweep(s.cfg, EPS_SCHEDULE, s.initial, s.cfg.time.dt,
                     tail_thresholds=(0.8 * m1,))


def test_criterion_1_mass_conservation(bump_setup, bump_traj):
    ctx, traj = bump_traj
    assert max(r.max_rho for r in traj.records) < bump_setup.cfg.reg.m1, \
        "preset must stay below the cutoff onset"
    m0 = G.integrate(bump_setup.initial.rho)
    drift = max(abs(r.mass - m0) / m0 for r in traj.records)
    _criterion(1, drift <= 1e-10,
               f"bump-preset mass drift {drift:.3e} <= 1e-10 over "
               f"{len(traj.records)} steps")


def test_criterion_2_sign_bounds(bump_setup, bump_traj, random_traj):
    ok = True
    worst_min, worst_max = 0.0, -np.inf
    for (ctx, traj), m2 in ((bump_traj, bump_setup.cfg.reg.m2),
                            (random_traj, random_traj[0].cfg.reg.m2)):
        for rep in traj.step_reports:
            for d in rep.density_reports:
                worst_min = min(worst_min, min(d.iterate_min_rho))
                worst_max = max(worst_max, max(d.iterate_max_rho))
                ok &= min(d.iterate_min_rho) >= -1e-12
                ok &= max(d.iterate_max_rho) <= m2 + 1e-12
    _criterion(2, ok, f"every Picard iterate of both presets: min rho "
                      f"{worst_min:.2e} >= -1e-12, max rho {worst_max:.4f} <= m2")


def test_criterion_3_energy_inequality(bump_setup, bump_traj, random_traj):
    ok = True
    for (ctx, traj), monotone_required in ((bump_traj, True), (random_traj, False)):
        grid = ctx.cfg.grid
        dt = ctx.cfg.time.dt
        slack_scale = traj.step_reports[0].energy_before
        slack = 1.0 * (max(grid.hx, grid.hy) ** 2 + dt) * slack_scale
        energies = [traj.step_reports[0].energy_before] \
            + [r.energy for r in traj.records]
        for k, rec in enumerate(traj.records):
            ok &= rec.energy + dt * rec.dissipation \
                <= energies[k] * (1 + 1e-8) + slack
        if monotone_required:
            ok &= all(b <= a * (1 + 1e-12)
                      for a, b in zip(energies, energies[1:]))
    _criterion(3, ok, "E_k + dt*dissipation <= E_(k-1)(1+1e-8) + (h^2+dt)*E_0 "
                      "on both presets; raw energy nonincreasing on the bump")


def test_criterion_4_entropy_inequality(bump_setup, bump_traj, dtsweep_report):
    # calibrate the tolerance constant on the coarsest sweep run, reuse it
    coarse = dtsweep_report.rows[0]
    grid = bump_setup.cfg.grid
    h = max(grid.hx, grid.hy)
    c_cal = max(0.0, coarse.max_entropy_residual) / (h + coarse.dt)

    def tol(dt):
        return c_cal * (h + dt) + 1e-9

    ok = all(row.max_entropy_residual <= tol(row.dt)
             for row in dtsweep_report.rows if row.completed)
    ctx, traj = bump_traj
    dt = ctx.cfg.time.dt
    worst = max(r.entropy_residual for r in traj.records)
    ok &= worst <= tol(dt)
    _criterion(4, ok, f"entropy residual <= tol(h, dt) everywhere "
                      f"(calibrated C = {c_cal:.3e}, bump worst {worst:.3e})")


def test_criterion_5_dt_uniformity(dtsweep_report):
    rows = dtsweep_report.rows
    ok = not dtsweep_report.incomplete
    by_name = {a.name: a for a in dtsweep_report.assertions}
    for name in ("sup_energy_spread", "vh1_spread", "osz3_uniform_bound",
                 "l_spread"):
        ok &= by_name[name].passed
    detail = "; ".join(f"{n}={by_name[n].passed}" for n in by_name)
    _criterion(5, ok, f"dt family {[r.dt for r in rows]}: {detail}")


def test_criterion_6_dt_cauchy(dtsweep_report):
    diffs = [r.diff_to_prev for r in dtsweep_report.rows[1:]]
    ratios = [a / b for a, b in zip(diffs, diffs[1:])]
    ok = all(r >= 1.5 for r in ratios)
    _criterion(6, ok, f"trajectory differences {[f'{d:.3e}' for d in diffs]} "
                      f"shrink by {[f'{r:.2f}' for r in ratios]} (>= 1.5)")


def test_criterion_7_eps_trends(epssweep_report):
    ok = epssweep_report.passed
    detail = "; ".join(f"{a.name}={a.passed}" for a in epssweep_report.assertions)
    _criterion(7, ok, f"eps schedule {EPS_SCHEDULE}: {detail}")


def test_criterion_8_mms_orders():
    ok = True
    parts = []
    for result in grid_ops_suite():
        ok &= result.observed_order >= 1.9
        parts.append(f"{result.name}={result.observed_order:.2f}")
    lame = lame_suite()[0]
    ok &= lame.observed_order >= 1.5
    parts.append(f"lame={lame.observed_order:.2f}")
    dens = density_suite()[0]
    ok &= dens.observed_order >= 0.9
    parts.append(f"density={dens.observed_order:.2f}")
    _criterion(8, ok, "observed orders " + ", ".join(parts))


def test_criterion_9_oracle_equivalence(bump_setup):
    s = build_setup({}, {"nx": "8", "ny": "8"})
    cfg = s.cfg
    rng = np.random.default_rng(17)
    grid = cfg.grid
    v = G.VectorField(grid, 0.2 * rng.standard_normal(grid.shape_facex),
                      0.2 * rng.standard_normal(grid.shape_facey)).enforce_slip()
    h = s.initial.rho
    law = StepperContext(cfg).law
    alpha = cfg.time.alpha
    rho, _ = solve_density(v, h, alpha, cfg.reg, law)
    mat = density_operator(v, law.cutoff_K(rho.values), alpha,
                           cfg.reg.epsilon, laplacian_matrix(grid))
    dense = np.linalg.solve(mat.toarray(),
                            alpha * (h.values * law.cutoff_K(rho.values)).ravel())
    err_d = np.linalg.norm(rho.values.ravel() - dense) / np.linalg.norm(dense)

    system = assemble_lame(grid, cfg.params)
    load = G.VectorField(grid, rng.standard_normal(grid.shape_facex),
                         rng.standard_normal(grid.shape_facey)).enforce_slip()
    w = solve_lame(system, load)
    dense_w = np.linalg.solve(system.matrix.toarray(),
                              grid.cell_area * system.to_dof(load))
    err_l = np.linalg.norm(system.to_dof(w) - dense_w) / np.linalg.norm(dense_w)
    ok = err_d <= 1e-10 and err_l <= 1e-10
    _criterion(9, ok, f"8x8 dense-factorization oracles: density rel err "
                      f"{err_d:.2e}, lame rel err {err_l:.2e} (<= 1e-10)")


def test_criterion_10_weakform_residuals(bump_setup, bump_traj):
    ctx, traj = bump_traj
    bound = 10.0 * ctx.tol_outer
    worst_c = max(r.weakform_continuity for r in traj.records)
    worst_m = max(r.weakform_momentum for r in traj.records)
    ok = worst_c <= bound and worst_m <= bound
    _criterion(10, ok, f"weak-form residuals on every accepted bump step: "
                       f"continuity {worst_c:.2e}, momentum {worst_m:.2e} "
                       f"(<= {bound:.1e})")


def test_criterion_11_determinism(tmp_path):
    args = ["--override", "nx=16", "--override", "ny=16",
            "--override", "dt_list=0.02,0.01", "--override", "t_final=0.06",
            "--override", "seed=7"]
    outs = []
    for tag in ("a", "b"):
        out = tmp_path / tag
        code = cli_main(["sweep-dt", "--out", str(out), *args])
        assert code == 0
        outs.append((out / "sweep_dt.csv").read_bytes()
                    + (out / "sweep_dt_summary.json").read_bytes())
    ok = outs[0] == outs[1]
    _criterion(11, ok, "two sweep-dt executions with identical config and "
                       "seed produce byte-identical outputs")
