"""Validated physical, regularization, grid and time parameters.

Every solver module receives a ValidatedConfig; nothing downstream
re-checks parameter ranges.
"""

from __future__ import annotations

from dataclasses import dataclass, field

ALL_SLIP = "all-slip-walls"
PERIODIC_X = "periodic-x-channel"
WALL_MODES = (ALL_SLIP, PERIODIC_X)

CUTOFF_PROFILES = ("smoothstep",)

_MACHEPS = 2.220446049250313e-16


class ConfigError(ValueError):
    """A parameter violates its admissibility constraint."""


@dataclass(frozen=True)
class PhysicalParams:
    mu: float = 1.0            # shear viscosity, > 0
    nu: float = 0.0            # second viscosity, 2*mu + 3*nu > 0
    gamma: float = 3.0         # adiabatic exponent, > 2
    f_friction: float = 0.0    # wall friction coefficient, >= 0


@dataclass(frozen=True)
class RegularizationParams:
    epsilon: float             # artificial diffusion, > 0 (0 only via solver-level certification)
    m1: float                  # cutoff onset, > 0
    m2: float                  # cutoff ceiling, must equal m1 + 1
    cutoff_profile: str = "smoothstep"


@dataclass(frozen=True)
class GridSpec:
    nx: int
    ny: int
    lx: float = 1.0
    ly: float = 1.0
    wall_mode: str = ALL_SLIP

    @property
    def hx(self) -> float:
        return self.lx / self.nx

    @property
    def hy(self) -> float:
        return self.ly / self.ny

    @property
    def cell_area(self) -> float:
        return self.hx * self.hy

    @property
    def periodic_x(self) -> bool:
        return self.wall_mode == PERIODIC_X

    @property
    def n_cells(self) -> int:
        return self.nx * self.ny

    @property
    def shape_cell(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    @property
    def shape_facex(self) -> tuple[int, int]:
        # periodic in x: the face at x = lx is the face at x = 0, stored once
        return (self.nx if self.periodic_x else self.nx + 1, self.ny)

    @property
    def shape_facey(self) -> tuple[int, int]:
        return (self.nx, self.ny + 1)


@dataclass(frozen=True)
class TimeSpec:
    dt: float
    n_steps: int
    alpha: float = field(default=0.0)  # 1/dt, derived when left at 0

    def __post_init__(self):
        if self.alpha == 0.0 and self.dt > 0:
            object.__setattr__(self, "alpha", 1.0 / self.dt)


@dataclass(frozen=True)
class ValidatedConfig:
    """Immutable bundle of checked parameters; safe to share across threads."""

    params: PhysicalParams
    reg: RegularizationParams
    grid: GridSpec
    time: TimeSpec


def _check(cond: bool, message: str):
    if not cond:
        raise ConfigError(message)


def validate(params: PhysicalParams, reg: RegularizationParams,
             grid: GridSpec, time: TimeSpec) -> ValidatedConfig:
    """Check every invariant and return an immutable config.

    Constraints are checked in field-declaration order and the first
    violation raises ConfigError naming the field and the bound, so a
    rejected config always reports the same constraint.
    """
    _check(params.mu > 0, f"mu must be positive, got {params.mu}")
    _check(2 * params.mu + 3 * params.nu > 0,
           f"2*mu + 3*nu must be positive, got {2 * params.mu + 3 * params.nu}")
    _check(params.gamma > 2, f"gamma must exceed 2, got {params.gamma}")
    _check(params.f_friction >= 0,
           f"f_friction must be nonnegative, got {params.f_friction}")

    _check(reg.epsilon > 0, f"epsilon must be positive, got {reg.epsilon}")
    _check(reg.m1 > 0, f"m1 must be positive, got {reg.m1}")
    _check(abs(reg.m2 - reg.m1 - 1.0) <= 4 * _MACHEPS * max(1.0, abs(reg.m2)),
           f"m2 - m1 must equal 1, got m2 - m1 = {reg.m2 - reg.m1}")
    _check(reg.cutoff_profile in CUTOFF_PROFILES,
           f"cutoff_profile must be one of {CUTOFF_PROFILES}, got {reg.cutoff_profile!r}")

    _check(grid.nx >= 4, f"nx must be at least 4, got {grid.nx}")
    _check(grid.ny >= 4, f"ny must be at least 4, got {grid.ny}")
    _check(grid.lx > 0, f"lx must be positive, got {grid.lx}")
    _check(grid.ly > 0, f"ly must be positive, got {grid.ly}")
    _check(grid.wall_mode in WALL_MODES,
           f"wall_mode must be one of {WALL_MODES}, got {grid.wall_mode!r}")

    _check(time.dt > 0, f"dt must be positive, got {time.dt}")
    _check(time.n_steps >= 0, f"n_steps must be nonnegative, got {time.n_steps}")
    _check(abs(time.alpha * time.dt - 1.0) <= 4 * _MACHEPS,
           f"alpha*dt must equal 1 to machine precision, got {time.alpha * time.dt}")

    return ValidatedConfig(params=params, reg=reg, grid=grid, time=time)


def validate_config(cfg: ValidatedConfig) -> ValidatedConfig:
    """Re-validate an existing config (idempotence helper)."""
    return validate(cfg.params, cfg.reg, cfg.grid, cfg.time)
