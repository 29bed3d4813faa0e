"""Command-line entry point.

Subcommands: run (single simulation), sweep-dt, sweep-eps, check (validate
a config and print derived quantities), mms (convergence suites).
Exit codes: 0 success, 2 config error, 3 solver non-convergence,
4 failed sweep assertion.
"""

from __future__ import annotations

import argparse
import os
import sys

from .config import ConfigError
from .density import NonConvergence
from .io import (DiagnosticsWriter, FormatError, build_setup,
                 parse_config_file, write_snapshot)
from .lame import SolverBreakdown
from .stepper import StepperContext, default_epsilon, run
from .sweeps import dt_sweep, eps_sweep, write_sweep_csv, write_sweep_summary

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NONCONVERGENCE = 3
EXIT_SWEEP_ASSERTION = 4


def _parser():
    p = argparse.ArgumentParser(prog="barons2d",
                                description="implicit 2D barotropic flow solver")
    p.add_argument("--config", metavar="PATH", help="flat key = value config file")
    p.add_argument("--out", metavar="DIR", default="out", help="output directory")
    p.add_argument("--override", metavar="KEY=VALUE", action="append", default=[],
                   help="override a config value (repeatable)")
    p.add_argument("--snapshot-every", metavar="N", type=int, default=0,
                   help="write a state snapshot every N steps")
    p.add_argument("--workers", metavar="N", type=int, default=1,
                   help="concurrent runs inside a sweep")
    p.add_argument("--seed", metavar="U64", type=int, default=None,
                   help="override the config seed")
    p.add_argument("command", choices=("run", "sweep-dt", "sweep-eps",
                                       "check", "mms"))
    return p


def _load_setup(args):
    file_values = parse_config_file(args.config) if args.config else {}
    overrides = {}
    for item in args.override:
        if "=" not in item:
            raise ConfigError(f"--override expects KEY=VALUE, got {item!r}")
        key, val = item.split("=", 1)
        overrides[key.strip()] = val.strip()
    if args.seed is not None:
        overrides["seed"] = str(args.seed)
    return build_setup(file_values, overrides)


def _stepper_options(setup):
    return dict(tol_outer=setup.tol_outer, max_outer=setup.max_outer,
                relax_theta=setup.relax_theta, density_tol=setup.density_tol,
                density_max_iters=setup.density_max_iters)


def cmd_check(args, setup) -> int:
    cfg = setup.cfg
    print(f"config OK ({cfg.grid.nx}x{cfg.grid.ny}, {cfg.grid.wall_mode})")
    print(f"alpha = {cfg.time.alpha:.17g}  (dt = {cfg.time.dt:.17g})")
    print(f"m1 = {cfg.reg.m1:.17g}  m2 = {cfg.reg.m2:.17g}")
    print(f"epsilon = {cfg.reg.epsilon:.17g}  "
          f"(grid default {default_epsilon(cfg.grid):.17g})")
    print(f"initial: {setup.raw['initial_kind']}, max rho0 = "
          f"{setup.initial.rho.values.max():.17g}")
    return EXIT_OK


def cmd_run(args, setup) -> int:
    os.makedirs(args.out, exist_ok=True)
    ctx = StepperContext(setup.cfg, **_stepper_options(setup))
    writer = DiagnosticsWriter(os.path.join(args.out, "diagnostics.csv"),
                               tail_thresholds=setup.tail_thresholds)
    every = args.snapshot_every

    def on_step(state, record):
        writer.write(record)
        if every and state.step_index % every == 0:
            write_snapshot(state, os.path.join(
                args.out, f"state_{state.step_index:06d}.bin"))

    try:
        traj = run(setup.initial, setup.cfg.time.dt, setup.cfg.time.n_steps,
                   ctx, callbacks=[on_step],
                   tail_thresholds=setup.tail_thresholds)
    finally:
        writer.close()
    write_snapshot(traj.final, os.path.join(args.out, "state_final.bin"))
    print(f"run complete: {setup.cfg.time.n_steps} steps, diagnostics in "
          f"{os.path.join(args.out, 'diagnostics.csv')}")
    return EXIT_OK


def cmd_sweep_dt(args, setup) -> int:
    os.makedirs(args.out, exist_ok=True)
    report = dt_sweep(setup.cfg, setup.dt_list, setup.initial, setup.t_final,
                      workers=args.workers,
                      stepper_options=_stepper_options(setup))
    write_sweep_csv(report, os.path.join(args.out, "sweep_dt.csv"))
    write_sweep_summary(report, os.path.join(args.out, "sweep_dt_summary.json"))
    for a in report.assertions:
        print(f"[{'pass' if a.passed else 'FAIL'}] {a.name}: {a.detail}")
    if report.incomplete:
        print("sweep incomplete: at least one run failed", file=sys.stderr)
    return EXIT_OK if report.passed else EXIT_SWEEP_ASSERTION


def cmd_sweep_eps(args, setup) -> int:
    os.makedirs(args.out, exist_ok=True)
    report = eps_sweep(setup.cfg, setup.eps_list, setup.initial,
                       setup.cfg.time.dt, tail_thresholds=setup.tail_thresholds,
                       stepper_options=_stepper_options(setup))
    write_sweep_csv(report, os.path.join(args.out, "sweep_eps.csv"))
    write_sweep_summary(report, os.path.join(args.out, "sweep_eps_summary.json"))
    for a in report.assertions:
        print(f"[{'pass' if a.passed else 'FAIL'}] {a.name}: {a.detail}")
    if report.incomplete:
        print("sweep incomplete: at least one epsilon failed", file=sys.stderr)
    return EXIT_OK if report.passed else EXIT_SWEEP_ASSERTION


def cmd_mms(args) -> int:
    from .mms import full_suite
    worst_margin = None
    for result, threshold in full_suite():
        order = result.observed_order
        status = "ok" if order >= threshold else "LOW"
        print(f"[{status}] {result}   (threshold {threshold})")
        margin = order - threshold
        worst_margin = margin if worst_margin is None else min(worst_margin, margin)
    print(f"worst margin over thresholds: {worst_margin:+.2f}")
    return EXIT_OK


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "mms":
            return cmd_mms(args)
        setup = _load_setup(args)
        if args.command == "check":
            return cmd_check(args, setup)
        if args.command == "run":
            return cmd_run(args, setup)
        if args.command == "sweep-dt":
            return cmd_sweep_dt(args, setup)
        if args.command == "sweep-eps":
            return cmd_sweep_eps(args, setup)
        raise AssertionError(args.command)
    except (ConfigError, FormatError, FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NonConvergence, SolverBreakdown) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE


if __name__ == "__main__":
    sys.exit(main())
