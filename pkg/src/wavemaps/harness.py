"""Simulation driver: full runs, reference comparison, and EOC tables.

A run advances the midpoint scheme from the configured initial state to
T_end, evaluates the residual bounds and the rates alpha_hat/delta_hat on
every accepted interval, and feeds them into the accumulated error bound.
Fixed-step runs bypass the controller (but still halve the step when the
nonlinear solve fails to converge or the smallness condition breaks);
adaptive runs consult the controller after every attempt.

Reference comparisons measure, over the times shared by two trajectories
on the same grid,

    err_w  = max_t || w_coarse - w_ref ||_L2
    err_gu = max_t || grad(u_coarse - u_ref) ||_L2,

which requires the coarse step times to nest into the reference times;
dyadic fixed steps guarantee that exactly.
"""

import csv
import math
import os
from dataclasses import dataclass, field, replace

import numpy as np

from . import grid as gr
from .adapt import AdaptiveController, StepFloor, decide
from .estimator import (EstimatorState, SmallnessViolated, accumulate, alpha_hat,
                        check_smallness, delta_hat, local_quantities, residual_bounds)
from .grid import Grid2D
from .scheme import (NonConvergence, SolverConfig, StepRecord, constant_data,
                     energy, initial_data, rotation_data, step)

__all__ = [
    "ConfigError",
    "TimeMismatch",
    "NonPositiveError",
    "RunConfig",
    "Trajectory",
    "run",
    "energy_norm_error",
    "eoc",
    "run_eoc_study",
    "write_eoc_csv",
    "DEFAULT_SNAPSHOT_FRACTIONS",
]

_TIME_ATOL = 2.0**-40

# snapshot schedule (fractions of T_end) mirroring the usual eight dump times
DEFAULT_SNAPSHOT_FRACTIONS = (
    0.0, 0.139205, 0.278409, 0.417614, 0.582386, 0.721591, 0.860795, 1.0,
)


class ConfigError(Exception):
    """Invalid run configuration."""


class TimeMismatch(Exception):
    """Trajectories do not share the grid or the required comparison times."""


class NonPositiveError(Exception):
    """EOC requested for a non-positive error value."""


@dataclass
class RunConfig:
    M: int = 32
    mode: str = "fixed"  # "fixed" | "adaptive"
    tau: float = 2.0**-9  # fixed step size, or initial step in adaptive mode
    t_end: float = 0.2
    solver: SolverConfig = field(default_factory=SolverConfig)
    controller: AdaptiveController | None = None
    b0: float = 0.0  # initial value of the accumulated bound
    initial: str = "problem"  # "problem" | "constant" | "rotation"
    tau_min: float = 2.0**-20  # floor for forced halving in fixed mode
    out_dir: str | None = None
    snapshot_times: tuple | None = None  # None -> DEFAULT_SNAPSHOT_FRACTIONS * t_end
    store_times: tuple = ()  # keep (t, u, w) in memory at these times
    store_all: bool = False
    dump_residuals: bool = False  # debug: residual samples next to each snapshot

    def __post_init__(self):
        if self.mode not in ("fixed", "adaptive"):
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.initial not in ("problem", "constant", "rotation"):
            raise ConfigError(f"unknown initial data {self.initial!r}")
        if self.t_end <= 0.0:
            raise ConfigError("t_end must be positive")
        if self.tau <= 0.0:
            raise ConfigError("tau must be positive")
        if self.b0 < 0.0:
            raise ConfigError("b0 must be nonnegative")
        if self.M < 2:
            raise ConfigError("M must be at least 2")
        if self.mode == "adaptive" and self.controller is None:
            self.controller = AdaptiveController()


@dataclass
class Trajectory:
    grid: Grid2D
    times: list  # accepted step end times, starting after t=0
    states: list  # stored (t, u, w) triples
    est: EstimatorState
    controller_rows: list  # (t_attempt, tau, decision, current_tol, density)
    estimator_rows: list  # (t_j, tau_j, alpha_hat, delta_hat, int_alpha, int_delta, B_j)
    energies: list  # E at t=0 and after every accepted step
    unit_dev_max: float
    orth_dev_max: float
    n_accepted: int
    n_rejected: int
    final_t: float
    final_u: np.ndarray
    final_w: np.ndarray

    @property
    def energy_drift(self) -> float:
        """Max relative deviation of the discrete energy from its initial value."""
        e0 = self.energies[0]
        scale = abs(e0) if e0 != 0.0 else 1.0
        return max(abs(e - e0) for e in self.energies) / scale


def _initial_state(cfg: RunConfig, g: Grid2D):
    if cfg.initial == "problem":
        return initial_data(g)
    if cfg.initial == "constant":
        return constant_data(g)
    return rotation_data(g)


def run(cfg: RunConfig) -> Trajectory:
    """Drive one full simulation; returns the trajectory with all diagnostics."""
    g = Grid2D(cfg.M)
    u, w = _initial_state(cfg, g)
    lap_u = gr.laplacian(u, g)
    est = EstimatorState(b0=cfg.b0)
    ctrl = replace(cfg.controller) if cfg.controller is not None else None

    snapshot_times = cfg.snapshot_times
    if snapshot_times is None:
        snapshot_times = tuple(f * cfg.t_end for f in DEFAULT_SNAPSHOT_FRACTIONS)
    pending_snaps = sorted(snapshot_times)
    pending_stores = sorted(cfg.store_times)

    times: list = []
    states: list = []
    controller_rows: list = []
    estimator_rows: list = []
    energies = [energy(u, w, g)]
    unit_dev = gr.unit_deviation(u)
    orth_dev = gr.orthogonality_deviation(u, w)
    n_accepted = 0
    n_rejected = 0
    snap_index = 0

    def maybe_store(t_now, u_now, w_now):
        nonlocal pending_stores
        if cfg.store_all:
            states.append((t_now, u_now.copy(), w_now.copy()))
            return
        while pending_stores and t_now >= pending_stores[0] - _TIME_ATOL:
            if abs(t_now - pending_stores[0]) <= _TIME_ATOL:
                states.append((t_now, u_now.copy(), w_now.copy()))
            pending_stores = pending_stores[1:]

    def maybe_snapshot(t_now, tau_now, u_now, w_now, rec=None):
        nonlocal pending_snaps, snap_index
        if cfg.out_dir is None:
            pending_snaps = [s for s in pending_snaps if s > t_now + _TIME_ATOL]
            return
        while pending_snaps and t_now >= pending_snaps[0] - _TIME_ATOL:
            _write_snapshot(cfg.out_dir, snap_index, t_now, tau_now, u_now, w_now, g)
            if cfg.dump_residuals and rec is not None:
                _write_residual_dump(cfg.out_dir, snap_index, rec, g)
            snap_index += 1
            pending_snaps = pending_snaps[1:]

    maybe_store(0.0, u, w)
    maybe_snapshot(0.0, cfg.tau, u, w)

    tau = cfg.tau
    tau_floor = ctrl.tau_min if ctrl is not None else cfg.tau_min
    t = 0.0
    j_exact = 0  # step counter while fixed mode is running at the pristine tau
    pristine = cfg.mode == "fixed"

    while cfg.t_end - t > tau_floor:
        tau_eff = min(tau, cfg.t_end - t)
        clamped = tau_eff < tau
        try:
            u1, w1, _ = step(u, w, tau_eff, cfg.solver, g)
            solver_ok = True
        except NonConvergence:
            solver_ok = False

        a_j = d_j = 0.0
        bounds_ok = False
        if solver_ok:
            lap_u1 = gr.laplacian(u1, g)
            rec = StepRecord(grid=g, t_n=t, t_np1=t + tau_eff, u_n=u, u_np1=u1,
                             w_n=w, w_np1=w1, lap_u_n=lap_u, lap_u_np1=lap_u1)
            lb = local_quantities(rec, g)
            if check_smallness(lb, tau_eff):
                bounds_ok = True
                rbf = residual_bounds(lb, tau_eff)
                a_j = alpha_hat(rbf, lb, tau_eff, g)
                d_j = delta_hat(lb, tau_eff, cfg.solver, g)

        if cfg.mode == "fixed":
            if solver_ok and bounds_ok:
                accepted = True
                tau_next = tau
            else:
                accepted = False
                tau_next = tau_eff * 0.5
                if tau_next < tau_floor:
                    raise StepFloor(
                        f"fixed-mode halving pushed tau to {tau_next:.3e} < {tau_floor:.3e}")
                pristine = False
        else:
            tol_used = ctrl.current_tol
            decision = decide(ctrl, tau_eff, a_j, d_j, solver_ok and bounds_ok)
            accepted = decision.accepted
            tau_next = decision.tau_next
            controller_rows.append(
                (t, tau_eff, "accept" if accepted else "reject", tol_used, a_j))

        if not accepted:
            n_rejected += 1
            tau = tau_next
            continue

        if pristine and not clamped:
            j_exact += 1
            t_new = j_exact * tau  # exact dyadic times for nested comparisons
        else:
            t_new = cfg.t_end if clamped else t + tau_eff

        int_a = tau_eff * a_j
        int_d = tau_eff * d_j
        accumulate(est, int_a, int_d, t_j=t_new)
        estimator_rows.append((t_new, tau_eff, a_j, d_j, int_a, int_d, est.B_j))

        u, w, lap_u = u1, w1, lap_u1
        t = t_new
        tau = tau_next
        n_accepted += 1
        times.append(t)
        energies.append(energy(u, w, g))
        unit_dev = max(unit_dev, gr.unit_deviation(u))
        orth_dev = max(orth_dev, gr.orthogonality_deviation(u, w))
        maybe_store(t, u, w)
        maybe_snapshot(t, tau_eff, u, w, rec)

    traj = Trajectory(
        grid=g, times=times, states=states, est=est,
        controller_rows=controller_rows, estimator_rows=estimator_rows,
        energies=energies, unit_dev_max=unit_dev, orth_dev_max=orth_dev,
        n_accepted=n_accepted, n_rejected=n_rejected,
        final_t=t, final_u=u, final_w=w,
    )
    if cfg.out_dir is not None:
        _write_outputs(cfg, traj)
    return traj


# ---------------------------------------------------------------------------
# reference comparison and EOC


def energy_norm_error(coarse: Trajectory, ref: Trajectory, g: Grid2D):
    """(err_w, err_gu) over the stored times shared by both trajectories."""
    if coarse.grid != ref.grid or coarse.grid != g:
        raise TimeMismatch("trajectories live on different grids")
    if not coarse.states:
        raise TimeMismatch("coarse trajectory stored no states")
    ref_times = [t for t, _, _ in ref.states]
    err_w = 0.0
    err_gu = 0.0
    for t, u_c, w_c in coarse.states:
        k = _find_time(ref_times, t)
        if k is None:
            raise TimeMismatch(f"time {t!r} missing from reference trajectory")
        _, u_r, w_r = ref.states[k]
        err_w = max(err_w, gr.lp_norm(w_c - w_r, 2.0, g))
        err_gu = max(err_gu, math.sqrt(gr.integrate(gr.gradient_sq(u_c - u_r, g), g)))
    return err_w, err_gu


def _find_time(times, t):
    lo, hi = 0, len(times)
    while lo < hi:
        mid = (lo + hi) // 2
        if times[mid] < t - _TIME_ATOL:
            lo = mid + 1
        else:
            hi = mid
    if lo < len(times) and abs(times[lo] - t) <= _TIME_ATOL:
        return lo
    return None


def eoc(e_coarse: float, e_fine: float) -> float:
    """Experimental order of convergence under step halving."""
    if e_coarse <= 0.0 or e_fine <= 0.0:
        raise NonPositiveError(f"errors must be positive, got {e_coarse}, {e_fine}")
    return math.log2(e_coarse / e_fine)


def run_eoc_study(M: int, taus, tau_ref: float, t_end: float,
                  solver: SolverConfig | None = None, initial: str = "problem"):
    """Self-convergence study against a fine-step reference on the same grid.

    Returns rows (tau, err_w, eoc_w, err_gu, eoc_gu); the first row carries
    None for both EOC entries.
    """
    solver = solver if solver is not None else SolverConfig()
    taus = sorted(taus, reverse=True)
    if any(t <= tau_ref for t in taus):
        raise ConfigError("every coarse tau must exceed tau_ref")
    g = Grid2D(M)
    finest = min(taus)
    store = tuple(_step_times(finest, t_end))
    ref = run(RunConfig(M=M, mode="fixed", tau=tau_ref, t_end=t_end, solver=solver,
                        initial=initial, store_times=store))
    rows = []
    prev = None
    for tau in taus:
        cfg = RunConfig(M=M, mode="fixed", tau=tau, t_end=t_end, solver=solver,
                        initial=initial, store_times=tuple(_step_times(tau, t_end)))
        traj = run(cfg)
        err_w, err_gu = energy_norm_error(traj, ref, g)
        if prev is None:
            rows.append((tau, err_w, None, err_gu, None))
        else:
            rows.append((tau, err_w, eoc(prev[0], err_w), err_gu, eoc(prev[1], err_gu)))
        prev = (err_w, err_gu)
    return rows


def _step_times(tau, t_end):
    times = []
    k = 1
    while k * tau < t_end - _TIME_ATOL:
        times.append(k * tau)
        k += 1
    times.append(t_end)
    return times


# ---------------------------------------------------------------------------
# output files


def _fmt(x) -> str:
    return "%.17g" % x


def _write_outputs(cfg: RunConfig, traj: Trajectory):
    os.makedirs(cfg.out_dir, exist_ok=True)
    with open(os.path.join(cfg.out_dir, "estimator.csv"), "w", newline="") as fh:
        wtr = csv.writer(fh)
        wtr.writerow(["t_j", "tau_j", "alpha_hat", "delta_hat",
                      "int_alpha", "int_delta", "B_j"])
        for row in traj.estimator_rows:
            wtr.writerow([_fmt(v) for v in row])
    if cfg.mode == "adaptive":
        with open(os.path.join(cfg.out_dir, "controller.csv"), "w", newline="") as fh:
            wtr = csv.writer(fh)
            wtr.writerow(["t_j", "tau_j", "decision", "current_tol", "density"])
            for t, tau, dec, tol, dens in traj.controller_rows:
                wtr.writerow([_fmt(t), _fmt(tau), dec, _fmt(tol), _fmt(dens)])
    gr.write_field(os.path.join(cfg.out_dir, "final_u.wmf"), traj.final_u)
    gr.write_field(os.path.join(cfg.out_dir, "final_w.wmf"), traj.final_w)
    with open(os.path.join(cfg.out_dir, "final.txt"), "w") as fh:
        fh.write(f"t={_fmt(traj.final_t)} tau={_fmt(traj.estimator_rows[-1][1] if traj.estimator_rows else cfg.tau)}\n")


def _write_snapshot(out_dir, index, t, tau, u, w, g):
    os.makedirs(out_dir, exist_ok=True)
    tag = f"{index:03d}"
    gr.write_field(os.path.join(out_dir, f"snap_{tag}_u.wmf"), u)
    gr.write_field(os.path.join(out_dir, f"snap_{tag}_w.wmf"), w)
    gr.write_field_csv(os.path.join(out_dir, f"snap_{tag}_u.csv"), u, g)
    with open(os.path.join(out_dir, f"snap_{tag}.txt"), "w") as fh:
        fh.write(f"t={_fmt(t)} tau={_fmt(tau)}\n")


def _write_residual_dump(out_dir, index, rec, g):
    # debug aid: sample the residual parts at the interval midpoint
    from .reconstruct import eval_residuals

    s = eval_residuals(rec, rec.t_n + 0.5 * rec.tau)
    tag = f"{index:03d}"
    for name, field_ in (("ru", s.r_u), ("rw", s.r_w), ("rg", s.r_g)):
        gr.write_field_csv(os.path.join(out_dir, f"resid_{tag}_{name}.csv"), field_, g)


def write_eoc_csv(path, rows):
    with open(path, "w", newline="") as fh:
        wtr = csv.writer(fh)
        wtr.writerow(["tau", "err_w", "eoc_w", "err_gu", "eoc_gu"])
        for tau, err_w, eoc_w, err_gu, eoc_gu in rows:
            wtr.writerow([
                _fmt(tau), _fmt(err_w),
                "" if eoc_w is None else _fmt(eoc_w),
                _fmt(err_gu),
                "" if eoc_gu is None else _fmt(eoc_gu),
            ])
