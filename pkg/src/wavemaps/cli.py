"""Command-line entry point.

Configuration comes from an optional flat text file (one ``key = value``
per line, ``#`` comments) overridden by command-line flags.  Supported
modes: ``fixed`` and ``adaptive`` single runs, and ``eoc`` which drives a
step-halving self-convergence study and writes eoc.csv.

Exit codes: 0 on success, 2 when the step controller hits its floor,
3 on configuration errors.
"""

import argparse
import sys

from .adapt import EQUIDISTRIBUTE, UPDATED_TOLERANCE, AdaptiveController, StepFloor
from .harness import (ConfigError, RunConfig, run, run_eoc_study, write_eoc_csv)
from .scheme import SolverConfig

_CONFIG_KEYS = {
    "grid", "mode", "tau", "tend", "strategy", "tol0", "out", "initial",
    "fp_tol", "fp_max_iter", "unit_tol", "c_q", "p_exp", "b0",
    "grow", "shrink", "safety", "tau_min", "tau_max", "snapshots",
    "eoc_taus", "tau_ref", "dump_residuals",
}

_DEFAULT_EOC_TAUS = "2^-7,2^-8,2^-9,2^-10"


def _parse_number(text):
    """Accept plain floats and dyadic shorthand like 2^-9."""
    text = text.strip()
    if text.startswith("2^"):
        return 2.0 ** float(text[2:])
    return float(text)


def load_config_file(path) -> dict:
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, _, value = line.partition("=")
            key = key.strip().lower()
            if key not in _CONFIG_KEYS:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            values[key] = value.strip()
    return values


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="wavemaps",
        description="Sphere-valued wave field simulator with a posteriori "
                    "error bounds and adaptive time stepping.")
    ap.add_argument("--config", help="flat key = value configuration file")
    ap.add_argument("--out", help="output directory for CSVs and field dumps")
    ap.add_argument("--mode", choices=["fixed", "adaptive", "eoc"])
    ap.add_argument("--tau", help="step size (fixed) or initial step (adaptive)")
    ap.add_argument("--grid", type=int, help="cells per axis M")
    ap.add_argument("--tend", help="final time")
    ap.add_argument("--strategy", choices=[EQUIDISTRIBUTE, UPDATED_TOLERANCE])
    ap.add_argument("--tol0", help="base tolerance for the adaptive controller")
    return ap


def _merge(args) -> dict:
    values = load_config_file(args.config) if args.config else {}
    for key in ("out", "mode", "tau", "grid", "tend", "strategy", "tol0"):
        v = getattr(args, key)
        if v is not None:
            values[key] = str(v)
    return values


def _build_run_config(values: dict):
    solver = SolverConfig(
        fp_tol=_parse_number(values.get("fp_tol", "1e-12")),
        fp_max_iter=int(values.get("fp_max_iter", "200")),
        unit_tol=_parse_number(values.get("unit_tol", "1e-9")),
        c_q=_parse_number(values.get("c_q", "4.0")),
        p_exp=_parse_number(values.get("p_exp", "4.0")),
    )
    mode = values.get("mode", "fixed")
    strategy = values.get("strategy", EQUIDISTRIBUTE)
    controller = None
    if mode == "adaptive":
        default_tol0 = "1e-6" if strategy == UPDATED_TOLERANCE else "1e-4"
        controller = AdaptiveController(
            strategy=strategy,
            tol0=_parse_number(values.get("tol0", default_tol0)),
            grow=_parse_number(values.get("grow", "1.2")),
            shrink=_parse_number(values.get("shrink", "0.5")),
            safety=_parse_number(values.get("safety", "0.4")),
            tau_min=_parse_number(values.get("tau_min", "2^-20")),
            tau_max=_parse_number(values.get("tau_max", "2^-6")),
        )
    snapshots = None
    if "snapshots" in values:
        snapshots = tuple(_parse_number(tok) for tok in values["snapshots"].split(","))
    dump_residuals = values.get("dump_residuals", "false").lower() in ("1", "true", "yes", "on")
    default_tau = "2^-9" if mode == "fixed" else "2^-10"
    return RunConfig(
        M=int(values.get("grid", "32")),
        mode=mode,
        tau=_parse_number(values.get("tau", default_tau)),
        t_end=_parse_number(values.get("tend", "0.2")),
        solver=solver,
        controller=controller,
        b0=_parse_number(values.get("b0", "0.0")),
        initial=values.get("initial", "problem"),
        tau_min=_parse_number(values.get("tau_min", "2^-20")),
        out_dir=values.get("out"),
        snapshot_times=snapshots,
        dump_residuals=dump_residuals,
    )


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        values = _merge(args)
        mode = values.get("mode", "fixed")
        if mode == "eoc":
            taus = [_parse_number(tok)
                    for tok in values.get("eoc_taus", _DEFAULT_EOC_TAUS).split(",")]
            rows = run_eoc_study(
                M=int(values.get("grid", "32")),
                taus=taus,
                tau_ref=_parse_number(values.get("tau_ref", "2^-13")),
                t_end=_parse_number(values.get("tend", "0.2")),
                solver=_build_run_config({k: v for k, v in values.items()
                                          if k not in ("mode", "out")}).solver,
                initial=values.get("initial", "problem"),
            )
            print(f"{'tau':>12} {'err_w':>12} {'eoc_w':>7} {'err_gu':>12} {'eoc_gu':>7}")
            for tau, err_w, eoc_w, err_gu, eoc_gu in rows:
                print(f"{tau:12.6g} {err_w:12.4e} "
                      f"{'---' if eoc_w is None else format(eoc_w, '7.2f')} "
                      f"{err_gu:12.4e} "
                      f"{'---' if eoc_gu is None else format(eoc_gu, '7.2f')}")
            out = values.get("out")
            if out:
                import os
                os.makedirs(out, exist_ok=True)
                write_eoc_csv(os.path.join(out, "eoc.csv"), rows)
            return 0
        cfg = _build_run_config(values)
        traj = run(cfg)
        print(f"finished at t={traj.final_t:.6g} after {traj.n_accepted} steps "
              f"({traj.n_rejected} rejected)")
        print(f"energy drift (relative): {traj.energy_drift:.3e}")
        print(f"max | |u|-1 |: {traj.unit_dev_max:.3e}   max |u.w|: {traj.orth_dev_max:.3e}")
        print(f"accumulated error bound B_N: {traj.est.B_j:.6g} (log: {traj.est.log_B:.6g})")
        return 0
    except StepFloor as exc:
        print(f"step floor reached: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, ValueError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
