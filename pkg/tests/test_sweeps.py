import numpy as np
import pytest

from barons2d.config import (GridSpec, PhysicalParams, RegularizationParams,
                             TimeSpec, validate)
from barons2d.stepper import bump_state, default_epsilon, uniform_state
from barons2d.sweeps import (dt_sweep, eps_sweep, write_sweep_csv,
                             write_sweep_summary)

PARAMS = PhysicalParams(mu=1.0, nu=0.0, gamma=3.0, f_friction=0.1)


def make_cfg(grid, initial, dt=0.01):
    m1 = 4.0 * float(initial.rho.values.max())
    reg = RegularizationParams(epsilon=default_epsilon(grid), m1=m1, m2=m1 + 1.0)
    return validate(PARAMS, reg, grid, TimeSpec(dt=dt, n_steps=1))


def test_singleton_dt_sweep_has_no_trend_assertions():
    g = GridSpec(nx=12, ny=12)
    st0 = bump_state(g)
    cfg = make_cfg(g, st0)
    report = dt_sweep(cfg, [0.01], st0, t_final=0.05)
    assert len(report.rows) == 1
    assert report.rows[0].completed
    assert report.assertions == []
    assert report.passed


def test_rest_state_dt_sweep_trends_flat():
    g = GridSpec(nx=12, ny=12)
    st0 = uniform_state(g, 1.0)
    cfg = make_cfg(g, st0)
    report = dt_sweep(cfg, [0.02, 0.01, 0.005], st0, t_final=0.08)
    assert report.passed
    by_name = {a.name: a for a in report.assertions}
    assert by_name["sup_energy_spread"].passed
    diffs = [r.diff_to_prev for r in report.rows[1:]]
    assert all(d < 1e-12 for d in diffs)


def test_rest_state_eps_sweep_flat():
    g = GridSpec(nx=12, ny=12)
    st0 = uniform_state(g, 1.0)
    cfg = make_cfg(g, st0)
    report = eps_sweep(cfg, [1e-2, 1e-3], st0, dt=0.01,
                       tail_thresholds=(3.0,))
    assert report.passed
    vals = [r.eps_grad_rho for r in report.rows]
    assert all(v < 1e-12 for v in vals)


def test_dt_sweep_requires_decreasing_schedule():
    g = GridSpec(nx=8, ny=8)
    st0 = uniform_state(g, 1.0)
    cfg = make_cfg(g, st0)
    with pytest.raises(ValueError):
        dt_sweep(cfg, [0.01, 0.02], st0, t_final=0.04)


def test_sweep_csv_and_summary_deterministic(tmp_path):
    g = GridSpec(nx=12, ny=12)
    st0 = bump_state(g)
    cfg = make_cfg(g, st0)
    paths = []
    for tag in ("a", "b"):
        report = dt_sweep(cfg, [0.02, 0.01], st0, t_final=0.06)
        csv = tmp_path / f"sweep_{tag}.csv"
        js = tmp_path / f"summary_{tag}.json"
        write_sweep_csv(report, csv)
        write_sweep_summary(report, js)
        paths.append((csv, js))
    assert paths[0][0].read_bytes() == paths[1][0].read_bytes()
    assert paths[0][1].read_bytes() == paths[1][1].read_bytes()


def test_dt_sweep_workers_match_serial():
    g = GridSpec(nx=12, ny=12)
    st0 = bump_state(g)
    cfg = make_cfg(g, st0)
    serial = dt_sweep(cfg, [0.02, 0.01], st0, t_final=0.06, workers=1)
    parallel = dt_sweep(cfg, [0.02, 0.01], st0, t_final=0.06, workers=2)
    for a, b in zip(serial.rows, parallel.rows):
        assert a.sup_energy == b.sup_energy
        assert a.vh1_sum == b.vh1_sum
        assert a.osz3_sum == b.osz3_sum


def test_eps_sweep_reports_gamma_regime():
    g = GridSpec(nx=12, ny=12)
    st0 = uniform_state(g, 1.0)
    cfg = make_cfg(g, st0)
    report = eps_sweep(cfg, [1e-2, 1e-3], st0, dt=0.01)
    assert report.gamma_regime == "2<gamma<=3"
