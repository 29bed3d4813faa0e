"""Config files, field / state snapshots and the diagnostics CSV.

Snapshot layout (binary): one ASCII header line, then the raw arrays as
row-major little-endian IEEE-754 doubles.  A full state stores the x-face
array, the y-face array and the cell array in that order.  ASCII mode
stores one value per line with 17 significant digits.  Every file starts
with a versioned magic token and readers reject unknown ones.
"""

from __future__ import annotations

import io as _io
import os
from dataclasses import dataclass, replace

import numpy as np

from .config import (ALL_SLIP, ConfigError, GridSpec, PhysicalParams,
                     RegularizationParams, TimeSpec, ValidatedConfig, validate)
from .grid import ScalarField, VectorField
from .state import FluidState

FIELD_MAGIC = "BARONS2D"
STATE_MAGIC = "BARONS2D-STATE-V1"
CSV_MAGIC = "# barons2d-diagnostics-v1"
FIELD_KINDS = ("cell", "facex", "facey")


class FormatError(ValueError):
    """Malformed or truncated snapshot / diagnostics file."""


# ---------------------------------------------------------------------------
# numbers

def format_double(x: float) -> str:
    return f"{x:.17g}"


def _write_array(fh, arr: np.ndarray, binary: bool):
    if binary:
        fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    else:
        for val in arr.ravel():
            fh.write(f"{val:.17g}\n".encode())


def _read_array(fh, shape, binary: bool) -> np.ndarray:
    count = int(np.prod(shape))
    if binary:
        raw = fh.read(8 * count)
        if len(raw) != 8 * count:
            raise FormatError(f"truncated snapshot: expected {8 * count} bytes, "
                              f"got {len(raw)}")
        return np.frombuffer(raw, dtype="<f8").reshape(shape).copy()
    vals = []
    for _ in range(count):
        line = fh.readline()
        if not line:
            raise FormatError(f"truncated snapshot: expected {count} values, "
                              f"got {len(vals)}")
        vals.append(float(line))
    return np.array(vals).reshape(shape)


# ---------------------------------------------------------------------------
# single-field snapshots

def write_field(path, grid: GridSpec, values: np.ndarray, kind: str,
                time: float = 0.0, binary: bool = True):
    if kind not in FIELD_KINDS:
        raise ValueError(f"kind must be one of {FIELD_KINDS}")
    mode = "b" if binary else "a"
    header = f"{FIELD_MAGIC} {grid.nx} {grid.ny} {format_double(grid.lx)} " \
             f"{format_double(grid.ly)} {format_double(time)} {kind} {mode}\n"
    with open(path, "wb") as fh:
        fh.write(header.encode())
        _write_array(fh, values, binary)


def read_field(path, expected_grid: GridSpec | None = None):
    with open(path, "rb") as fh:
        header = fh.readline().decode(errors="replace").split()
        if not header or header[0] != FIELD_MAGIC:
            raise FormatError(f"not a {FIELD_MAGIC} field file: {path}")
        if len(header) != 8:
            raise FormatError(f"malformed field header in {path}")
        nx, ny = int(header[1]), int(header[2])
        lx, ly, time = float(header[3]), float(header[4]), float(header[5])
        kind, mode = header[6], header[7]
        if kind not in FIELD_KINDS or mode not in ("b", "a"):
            raise FormatError(f"malformed field header in {path}")
        if expected_grid is not None and (nx, ny) != (expected_grid.nx, expected_grid.ny):
            raise FormatError(
                f"grid mismatch: file is {nx}x{ny}, expected "
                f"{expected_grid.nx}x{expected_grid.ny}")
        grid = expected_grid or GridSpec(nx=nx, ny=ny, lx=lx, ly=ly)
        shape = {"cell": grid.shape_cell, "facex": grid.shape_facex,
                 "facey": grid.shape_facey}[kind]
        values = _read_array(fh, shape, mode == "b")
        return grid, values, kind, time


# ---------------------------------------------------------------------------
# full-state snapshots

def write_snapshot(state: FluidState, path, binary: bool = True):
    g = state.grid
    mode = "b" if binary else "a"
    header = (f"{STATE_MAGIC} {g.nx} {g.ny} {format_double(g.lx)} "
              f"{format_double(g.ly)} {g.wall_mode} {format_double(state.time)} "
              f"{state.step_index} {format_double(state.epsilon_used)} {mode}\n")
    with open(path, "wb") as fh:
        fh.write(header.encode())
        _write_array(fh, state.v.vx, binary)
        _write_array(fh, state.v.vy, binary)
        _write_array(fh, state.rho.values, binary)


def read_snapshot(path, expected_grid: GridSpec | None = None) -> FluidState:
    with open(path, "rb") as fh:
        header = fh.readline().decode(errors="replace").split()
        if not header or header[0] != STATE_MAGIC:
            raise FormatError(f"not a {STATE_MAGIC} snapshot: {path}")
        if len(header) != 10:
            raise FormatError(f"malformed snapshot header in {path}")
        nx, ny = int(header[1]), int(header[2])
        lx, ly = float(header[3]), float(header[4])
        wall_mode = header[5]
        time, step_index = float(header[6]), int(header[7])
        epsilon_used = float(header[8])
        mode = header[9]
        if mode not in ("b", "a"):
            raise FormatError(f"malformed snapshot header in {path}")
        grid = GridSpec(nx=nx, ny=ny, lx=lx, ly=ly, wall_mode=wall_mode)
        if expected_grid is not None and grid != expected_grid:
            raise FormatError(f"grid mismatch: snapshot has {grid}, "
                              f"expected {expected_grid}")
        binary = mode == "b"
        vx = _read_array(fh, grid.shape_facex, binary)
        vy = _read_array(fh, grid.shape_facey, binary)
        rho = _read_array(fh, grid.shape_cell, binary)
        return FluidState(ScalarField(grid, rho), VectorField(grid, vx, vy),
                          time=time, step_index=step_index,
                          epsilon_used=epsilon_used)


# ---------------------------------------------------------------------------
# diagnostics CSV

class DiagnosticsWriter:
    """Streams DiagnosticsRecord rows; the column set is pinned by the
    versioned magic comment."""

    def __init__(self, path, tail_thresholds=()):
        self.path = path
        self.tail_thresholds = tuple(tail_thresholds)
        from .diagnostics import DiagnosticsRecord
        self.columns = list(DiagnosticsRecord.SCALAR_COLUMNS) + \
            [f"tail_m_{format_double(m)}" for m in self.tail_thresholds]
        self._fh = open(path, "w")
        self._fh.write(CSV_MAGIC + "\n")
        self._fh.write(",".join(self.columns) + "\n")

    def write(self, record):
        vals = [getattr(record, c) for c in record.SCALAR_COLUMNS]
        vals += [record.tail_measures[m] for m in self.tail_thresholds]
        out = []
        for c, v in zip(self.columns, vals):
            if c == "step_index":
                out.append(str(int(v)))
            else:
                out.append(format_double(v))
        self._fh.write(",".join(out) + "\n")

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_diagnostics_csv(path):
    """Returns (columns, rows) after checking the version line."""
    with open(path) as fh:
        magic = fh.readline().rstrip("\n")
        if magic != CSV_MAGIC:
            raise FormatError(f"unknown diagnostics version line: {magic!r}")
        columns = fh.readline().rstrip("\n").split(",")
        rows = [[float(tok) for tok in line.rstrip("\n").split(",")]
                for line in fh if line.strip()]
    return columns, rows


# ---------------------------------------------------------------------------
# run configuration

_CONFIG_DEFAULTS = {
    "mu": "1.0",
    "nu": "0.0",
    "gamma": "3.0",
    "f_friction": "0.1",
    "epsilon": "auto",
    "m1": "auto",
    "m2": "auto",
    "cutoff_profile": "smoothstep",
    "nx": "64",
    "ny": "64",
    "lx": "1.0",
    "ly": "1.0",
    "wall_mode": ALL_SLIP,
    "dt": "0.01",
    "n_steps": "100",
    "t_final": "0.5",
    "dt_list": "0.02,0.01,0.005",
    "eps_list": "1e-2,1e-3,1e-4",
    "initial_kind": "bump",
    "initial_base": "1.0",
    "initial_amplitude": "0.5",
    "initial_bump_center_x": "0.5",
    "initial_bump_center_y": "0.5",
    "initial_bump_width": "0.15",
    "initial_modes": "3",
    "initial_v_amplitude": "0.1",
    "initial_snapshot": "",
    "seed": "12345",
    "tol_outer": "1e-8",
    "max_outer": "200",
    "relax_theta": "0.7",
    "density_tol": "1e-10",
    "density_max_iters": "200",
    "tail_thresholds": "auto",
}


def parse_config_file(path) -> dict:
    """Flat key = value lines, '#' comments."""
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value', "
                                  f"got {raw.rstrip()!r}")
            key, val = (part.strip() for part in line.split("=", 1))
            if key not in _CONFIG_DEFAULTS:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            out[key] = val
    return out


@dataclass(frozen=True)
class RunSetup:
    """Validated config plus everything the CLI needs to start a run."""

    cfg: ValidatedConfig
    initial: FluidState
    raw: dict
    seed: int
    tol_outer: float
    max_outer: int
    relax_theta: float
    density_tol: float
    density_max_iters: int
    t_final: float
    dt_list: tuple
    eps_list: tuple
    tail_thresholds: tuple


def _parse_float(raw, key):
    try:
        return float(raw[key])
    except ValueError as exc:
        raise ConfigError(f"{key} must be a number, got {raw[key]!r}") from exc


def _parse_int(raw, key):
    try:
        return int(raw[key])
    except ValueError as exc:
        raise ConfigError(f"{key} must be an integer, got {raw[key]!r}") from exc


def _parse_list(raw, key):
    try:
        return tuple(float(tok) for tok in raw[key].split(",") if tok.strip())
    except ValueError as exc:
        raise ConfigError(f"{key} must be a comma list of numbers, "
                          f"got {raw[key]!r}") from exc


def build_setup(file_values: dict | None = None, overrides: dict | None = None) -> RunSetup:
    """Merge defaults, config file and CLI overrides, resolve 'auto'
    values (epsilon from the grid, m1 from the initial data) and
    validate."""
    raw = dict(_CONFIG_DEFAULTS)
    for src in (file_values or {}), (overrides or {}):
        for key, val in src.items():
            if key not in _CONFIG_DEFAULTS:
                raise ConfigError(f"unknown config key {key!r}")
            raw[key] = str(val)

    grid = GridSpec(nx=_parse_int(raw, "nx"), ny=_parse_int(raw, "ny"),
                    lx=_parse_float(raw, "lx"), ly=_parse_float(raw, "ly"),
                    wall_mode=raw["wall_mode"])
    if grid.wall_mode not in (ALL_SLIP, "periodic-x-channel"):
        raise ConfigError(f"wall_mode must be one of ('{ALL_SLIP}', "
                          f"'periodic-x-channel'), got {raw['wall_mode']!r}")

    seed = _parse_int(raw, "seed")
    initial = _build_initial(raw, grid, seed)

    if raw["m1"] == "auto":
        m1 = 4.0 * float(initial.rho.values.max())
    else:
        m1 = _parse_float(raw, "m1")
    m2 = m1 + 1.0 if raw["m2"] == "auto" else _parse_float(raw, "m2")
    if raw["epsilon"] == "auto":
        epsilon = 0.1 * min(grid.hx, grid.hy) ** 2
    else:
        epsilon = _parse_float(raw, "epsilon")
    reg = RegularizationParams(epsilon=epsilon, m1=m1, m2=m2,
                               cutoff_profile=raw["cutoff_profile"])

    params = PhysicalParams(mu=_parse_float(raw, "mu"),
                            nu=_parse_float(raw, "nu"),
                            gamma=_parse_float(raw, "gamma"),
                            f_friction=_parse_float(raw, "f_friction"))
    time = TimeSpec(dt=_parse_float(raw, "dt"), n_steps=_parse_int(raw, "n_steps"))
    cfg = validate(params, reg, grid, time)

    if raw["tail_thresholds"] == "auto":
        tails = (0.8 * m1, m1, m2)
    else:
        tails = _parse_list(raw, "tail_thresholds")

    return RunSetup(
        cfg=cfg, initial=initial, raw=raw, seed=seed,
        tol_outer=_parse_float(raw, "tol_outer"),
        max_outer=_parse_int(raw, "max_outer"),
        relax_theta=_parse_float(raw, "relax_theta"),
        density_tol=_parse_float(raw, "density_tol"),
        density_max_iters=_parse_int(raw, "density_max_iters"),
        t_final=_parse_float(raw, "t_final"),
        dt_list=_parse_list(raw, "dt_list"),
        eps_list=_parse_list(raw, "eps_list"),
        tail_thresholds=tails,
    )


def _build_initial(raw: dict, grid: GridSpec, seed: int) -> FluidState:
    from . import stepper
    kind = raw["initial_kind"]
    if kind == "uniform":
        return stepper.uniform_state(grid, _parse_float(raw, "initial_base"))
    if kind == "bump":
        return stepper.bump_state(
            grid, base=_parse_float(raw, "initial_base"),
            amplitude=_parse_float(raw, "initial_amplitude"),
            center=(_parse_float(raw, "initial_bump_center_x"),
                    _parse_float(raw, "initial_bump_center_y")),
            width=_parse_float(raw, "initial_bump_width"))
    if kind == "random-smooth":
        return stepper.random_smooth_state(
            grid, seed, base=_parse_float(raw, "initial_base"),
            rho_amplitude=_parse_float(raw, "initial_amplitude"),
            v_amplitude=_parse_float(raw, "initial_v_amplitude"),
            modes=_parse_int(raw, "initial_modes"))
    if kind == "snapshot":
        path = raw["initial_snapshot"]
        if not path:
            raise ConfigError("initial_kind = snapshot requires initial_snapshot = <path>")
        if not os.path.exists(path):
            raise ConfigError(f"initial_snapshot file not found: {path}")
        return read_snapshot(path, expected_grid=grid)
    raise ConfigError(f"initial_kind must be uniform|bump|random-smooth|snapshot, "
                      f"got {kind!r}")
