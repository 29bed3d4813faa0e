import pytest

from barons2d.config import (ConfigError, GridSpec, PhysicalParams,
                             RegularizationParams, TimeSpec, validate,
                             validate_config)


def good_parts():
    return (PhysicalParams(mu=1.0, nu=0.0, gamma=3.0, f_friction=0.1),
            RegularizationParams(epsilon=1e-3, m1=2.0, m2=3.0),
            GridSpec(nx=8, ny=8),
            TimeSpec(dt=0.01, n_steps=10))


def test_accepts_valid_config():
    cfg = validate(*good_parts())
    assert cfg.params.mu == 1.0
    assert cfg.time.alpha == pytest.approx(100.0)


def test_validate_is_idempotent():
    cfg = validate(*good_parts())
    assert validate_config(cfg) == cfg


def test_rejects_gamma_two():
    params, reg, grid, time = good_parts()
    with pytest.raises(ConfigError, match="gamma must exceed 2"):
        validate(PhysicalParams(mu=1.0, nu=0.0, gamma=2.0, f_friction=0.0),
                 reg, grid, time)


def test_rejects_bad_cutoff_gap():
    params, reg, grid, time = good_parts()
    with pytest.raises(ConfigError, match="m2 - m1 must equal 1"):
        validate(params, RegularizationParams(epsilon=1e-3, m1=2.0, m2=3.5),
                 grid, time)


def test_rejects_nonpositive_mu_and_bulk():
    params, reg, grid, time = good_parts()
    with pytest.raises(ConfigError, match="mu must be positive"):
        validate(PhysicalParams(mu=0.0, nu=1.0, gamma=3.0), reg, grid, time)
    with pytest.raises(ConfigError, match="2\\*mu \\+ 3\\*nu"):
        validate(PhysicalParams(mu=1.0, nu=-1.0, gamma=3.0), reg, grid, time)


def test_rejects_negative_friction_and_epsilon():
    params, reg, grid, time = good_parts()
    with pytest.raises(ConfigError, match="f_friction"):
        validate(PhysicalParams(mu=1.0, nu=0.0, gamma=3.0, f_friction=-0.1),
                 reg, grid, time)
    with pytest.raises(ConfigError, match="epsilon must be positive"):
        validate(params, RegularizationParams(epsilon=0.0, m1=2.0, m2=3.0),
                 grid, time)


def test_rejects_tiny_grid_and_bad_mode():
    params, reg, grid, time = good_parts()
    with pytest.raises(ConfigError, match="nx must be at least 4"):
        validate(params, reg, GridSpec(nx=3, ny=8), time)
    with pytest.raises(ConfigError, match="wall_mode"):
        validate(params, reg, GridSpec(nx=8, ny=8, wall_mode="dirichlet"), time)


def test_rejects_inconsistent_alpha():
    params, reg, grid, _ = good_parts()
    with pytest.raises(ConfigError, match="alpha\\*dt"):
        validate(params, reg, grid, TimeSpec(dt=0.01, n_steps=1, alpha=7.0))


def test_first_violation_wins():
    # both gamma and m2-m1 are wrong; field-declaration order reports gamma
    params = PhysicalParams(mu=1.0, nu=0.0, gamma=1.5, f_friction=0.0)
    reg = RegularizationParams(epsilon=1e-3, m1=2.0, m2=9.0)
    _, _, grid, time = good_parts()
    with pytest.raises(ConfigError, match="gamma"):
        validate(params, reg, grid, time)


def test_alpha_derived_from_dt():
    t = TimeSpec(dt=0.02, n_steps=5)
    assert t.alpha * t.dt == pytest.approx(1.0, abs=1e-15)
