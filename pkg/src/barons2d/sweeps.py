"""Reproducible dt-refinement and epsilon-schedule studies.

A sweep runs the same initial data across a schedule, collects the
uniform-bound quantities, and evaluates the boundedness / trend
assertions.  No absolute constants from the underlying estimates are
asserted (none are computable); only uniformity across the family and
monotone trends with a small slack.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .config import ValidatedConfig
from .density import NonConvergence
from .diagnostics import interpolants
from .grid import norm_l2_cells, norm_l2_faces
from .io import format_double
from .state import FluidState
from .stepper import StepperContext, epsilon_continuation, run

logger = logging.getLogger(__name__)

TREND_SLACK = 0.05       # relative slack per schedule step for monotone trends
SPREAD_LIMIT = 0.10      # family agreement for the convergent quantities
BOUND_HEADROOM = 1.10    # headroom over the coarsest run for decaying sums


@dataclass
class Assertion:
    name: str
    passed: bool
    detail: str


@dataclass
class DtRunRow:
    dt: float
    n_steps: int
    completed: bool
    sup_energy: float = np.nan
    vh1_sum: float = np.nan
    osz3_sum: float = np.nan
    l_sum: float = np.nan
    max_entropy_residual: float = np.nan
    final_mass: float = np.nan
    min_rho: float = np.nan
    max_rho: float = np.nan
    diff_to_prev: float = np.nan


@dataclass
class SweepReport:
    kind: str
    columns: list
    rows: list
    assertions: list = field(default_factory=list)
    incomplete: bool = False
    gamma_regime: str = ""

    @property
    def passed(self) -> bool:
        return (not self.incomplete) and all(a.passed for a in self.assertions)

    def summary_dict(self) -> dict:
        return {
            "kind": self.kind,
            "incomplete": self.incomplete,
            "gamma_regime": self.gamma_regime,
            "passed": self.passed,
            "assertions": [asdict(a) for a in self.assertions],
        }


def _gamma_regime(gamma: float) -> str:
    # the sharpened commutator step of the time-limit argument needs
    # gamma > 3; runs below that are still admissible (gamma > 2)
    return "gamma>3" if gamma > 3.0 else "2<gamma<=3"


def _stepper_options(options: dict | None) -> dict:
    return dict(options or {})


def _run_one_dt(cfg: ValidatedConfig, initial: FluidState, dt: float,
                n_steps: int, options: dict | None):
    ctx = StepperContext(cfg, **_stepper_options(options))
    return run(initial, dt, n_steps, ctx, with_weakform=False)


def _dt_worker(args):
    cfg, initial, dt, n_steps, options = args
    try:
        traj = _run_one_dt(cfg, initial, dt, n_steps, options)
        return dt, traj, None
    except NonConvergence as exc:
        return dt, None, str(exc)


def dt_sweep(cfg: ValidatedConfig, dts, initial: FluidState, t_final: float,
             workers: int = 1, stepper_options: dict | None = None) -> SweepReport:
    """Run the same initial data at each dt up to t_final and check the
    dt-uniform bounds and the Cauchy trend."""
    dts = list(dts)
    if any(b >= a for a, b in zip(dts, dts[1:])):
        raise ValueError("dts must be strictly decreasing")

    jobs = [(cfg, initial, dt, max(1, round(t_final / dt)), stepper_options)
            for dt in dts]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = {dt: (traj, err) for dt, traj, err in pool.map(_dt_worker, jobs)}
    else:
        results = {}
        for job in jobs:
            dt, traj, err = _dt_worker(job)
            results[dt] = (traj, err)

    rows, trajs = [], {}
    for dt in dts:
        traj, err = results[dt]
        n_steps = max(1, round(t_final / dt))
        if traj is None:
            logger.warning("dt sweep: run at dt=%g failed: %s", dt, err)
            rows.append(DtRunRow(dt=dt, n_steps=n_steps, completed=False))
            continue
        recs = traj.records
        e0 = traj.step_reports[0].energy_before
        rows.append(DtRunRow(
            dt=dt, n_steps=n_steps, completed=True,
            sup_energy=max([e0] + [r.energy for r in recs]),
            vh1_sum=sum(dt * r.v_h1_normsq for r in recs),
            osz3_sum=sum(r.rho_increment_gamma for r in recs),
            l_sum=sum(dt * r.rho_gammaplus1_norm for r in recs),
            max_entropy_residual=max(r.entropy_residual for r in recs),
            final_mass=recs[-1].mass,
            min_rho=min(r.min_rho for r in recs),
            max_rho=max(r.max_rho for r in recs)))
        trajs[dt] = traj

    # trajectory differences at the coarsest run's time grid
    sample_times = [k * dts[0] for k in range(1, round(t_final / dts[0]) + 1)]
    for i in range(1, len(dts)):
        a, b = trajs.get(dts[i - 1]), trajs.get(dts[i])
        if a is None or b is None:
            continue
        worst = 0.0
        for t in sample_times:
            _, sa = interpolants(a.states, t)
            _, sb = interpolants(b.states, t)
            worst = max(worst, norm_l2_cells(sa.rho - sb.rho)
                        + norm_l2_faces(sa.v - sb.v))
        rows[i].diff_to_prev = worst

    report = SweepReport(
        kind="dt", rows=rows,
        columns=["dt", "n_steps", "completed", "sup_energy", "vh1_sum",
                 "osz3_sum", "l_sum", "max_entropy_residual", "final_mass",
                 "min_rho", "max_rho", "diff_to_prev"],
        incomplete=not all(r.completed for r in rows),
        gamma_regime=_gamma_regime(cfg.params.gamma))
    _dt_assertions(report, [r for r in rows if r.completed])
    return report


def _spread(vals) -> float:
    top = max(vals)
    return 0.0 if top == 0 else (top - min(vals)) / abs(top)


def _dt_assertions(report: SweepReport, rows):
    if len(rows) < 2:
        return
    # quantities below the roundoff floor (rest states) count as zero
    floor = 1e-13 * max(1.0, max(r.sup_energy for r in rows))

    def spread_check(name, vals):
        if max(vals) <= floor:
            ok, detail = True, "all values at roundoff floor"
        else:
            ok = _spread(vals) < SPREAD_LIMIT
            detail = f"spread {_spread(vals):.4f} (limit {SPREAD_LIMIT})"
        report.assertions.append(Assertion(name, ok, detail))

    spread_check("sup_energy_spread", [r.sup_energy for r in rows])
    spread_check("vh1_spread", [r.vh1_sum for r in rows])
    spread_check("l_spread", [r.l_sum for r in rows])

    # the per-step increment sum decays with dt; uniform boundedness means
    # no run may exceed the coarsest one beyond headroom
    osz3 = [r.osz3_sum for r in rows]
    ok = all(v <= BOUND_HEADROOM * osz3[0] + floor for v in osz3)
    report.assertions.append(Assertion(
        "osz3_uniform_bound", ok,
        f"values {[format_double(v) for v in osz3]} vs "
        f"{BOUND_HEADROOM}x coarsest"))

    diffs = [r.diff_to_prev for r in rows[1:] if np.isfinite(r.diff_to_prev)]
    if len(diffs) >= 2:
        if max(diffs) <= 1e-12:
            report.assertions.append(Assertion(
                "cauchy_decreasing", True, "all diffs at roundoff floor"))
            return
        dec = all(b <= a for a, b in zip(diffs, diffs[1:]))
        ratios = [a / b if b > 0 else np.inf for a, b in zip(diffs, diffs[1:])]
        halving = all(abs(rows[i].dt / rows[i + 1].dt - 2.0) < 1e-12
                      for i in range(len(rows) - 1))
        ok = dec and (not halving or all(r >= 1.5 for r in ratios))
        report.assertions.append(Assertion(
            "cauchy_decreasing", ok,
            f"diffs {[format_double(d) for d in diffs]} ratios "
            f"{[format_double(r) for r in ratios]}"))


@dataclass
class EpsRunRow:
    epsilon: float
    completed: bool
    eps_grad_rho: float = np.nan
    g_distance: float = np.nan
    tails: dict = field(default_factory=dict)


def eps_sweep(cfg: ValidatedConfig, eps_schedule, initial: FluidState,
              dt: float, tail_thresholds=(),
              stepper_options: dict | None = None) -> SweepReport:
    """One implicit step per epsilon (warm-started continuation) with
    monotone-trend assertions on the regularization diagnostics."""
    ctx = StepperContext(cfg, **_stepper_options(stepper_options))
    points = epsilon_continuation(initial, dt, ctx, eps_schedule,
                                  tail_thresholds=tail_thresholds)
    rows = [EpsRunRow(epsilon=p.epsilon, completed=p.converged,
                      eps_grad_rho=p.eps_grad_rho, g_distance=p.g_distance,
                      tails=dict(p.tail_measures)) for p in points]
    columns = ["epsilon", "completed", "eps_grad_rho", "g_distance"] + \
        [f"tail_m_{format_double(m)}" for m in tail_thresholds]
    report = SweepReport(kind="eps", rows=rows, columns=columns,
                         incomplete=not all(r.completed for r in rows),
                         gamma_regime=_gamma_regime(cfg.params.gamma))

    done = [r for r in rows if r.completed]
    if len(done) >= 2:
        def trend(name, vals):
            scale = max(max(abs(v) for v in vals), 1e-30)
            ok = all(b <= a * (1.0 + TREND_SLACK) + 1e-12 * scale
                     for a, b in zip(vals, vals[1:]))
            report.assertions.append(Assertion(
                name, ok, f"values {[format_double(v) for v in vals]}"))

        trend("eps_grad_rho_nonincreasing", [r.eps_grad_rho for r in done])
        trend("g_distance_nonincreasing", [r.g_distance for r in done])
        for m in tail_thresholds:
            trend(f"tail_m_{format_double(m)}_nonincreasing",
                  [r.tails[m] for r in done])
    return report


# ---------------------------------------------------------------------------
# persistence

def write_sweep_csv(report: SweepReport, path):
    with open(path, "w") as fh:
        fh.write(f"# barons2d-sweep-{report.kind}-v1\n")
        fh.write(",".join(report.columns) + "\n")
        for row in report.rows:
            vals = []
            for col in report.columns:
                if col.startswith("tail_m_"):
                    thr = float(col[len("tail_m_"):])
                    vals.append(format_double(row.tails[thr]))
                elif col in ("completed",):
                    vals.append(str(int(getattr(row, col))))
                elif col == "n_steps":
                    vals.append(str(getattr(row, col)))
                else:
                    vals.append(format_double(getattr(row, col)))
            fh.write(",".join(vals) + "\n")


def write_sweep_summary(report: SweepReport, path):
    with open(path, "w") as fh:
        json.dump(report.summary_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
