"""Command line interface.

Subcommands:
  validate  check a scenario file and its feasibility, no simulation
  run       simulate one scenario and write trajectory, summary, plots
  batch     run many scenarios, optionally in parallel, with a table
  certify   recheck certificate bounds from a written trajectory CSV

Exit codes: 0 success, 1 a run or check failed, 2 malformed input or
usage error. Set SIM_LOG=debug|info|warning to control verbosity.
"""

from __future__ import annotations

import argparse
import glob as globmod
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import output
from .analysis import certify
from .errors import (
    CollisionImminent,
    InfeasibleScenario,
    InfeasibleTarget,
    NotConverged,
    RingformError,
    ScenarioError,
)
from .formation import TargetSpec, validate_feasibility
from .scenario import Scenario, load_scenario, materialize
from .simulator import run as run_simulation

log = logging.getLogger("ringform")


def _configure_logging():
    level_name = os.environ.get("SIM_LOG", "warning").upper()
    level = getattr(logging, level_name, None)
    if not isinstance(level, int):
        level = logging.WARNING
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def cmd_validate(args) -> int:
    sc = load_scenario(args.scenario)
    try:
        state, spec = materialize(sc)
    except (InfeasibleTarget, RingformError) as exc:
        print(f"FAIL initial layout: {exc}")
        return 1
    report = validate_feasibility(state, spec)
    checks = [
        ("angle-sum match", report.sum_ok,
         f"initial {report.angle_sum_initial:.9f} vs target "
         f"{report.angle_sum_target:.9f} (residual {report.sum_residual:.3e})"),
        ("target nondegeneracy", report.assumption_ok,
         "targets away from {0, pi}"),
        ("side flags match", report.sides_ok,
         f"initial {report.initial_sides} vs target {report.target_sides}"),
    ]
    for name, ok, detail in checks:
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    return 0 if report.ok else 1


def _write_run_outputs(out_dir: Path, sc: Scenario, record, certificate,
                       failure: str | None, figures: bool = True):
    out_dir.mkdir(parents=True, exist_ok=True)
    feasibility = None
    if record is not None:
        output.write_trajectory_csv(out_dir / "trajectory.csv", record)
        output.write_plotdata(out_dir / "plotdata", record)
        if figures:
            from . import figures as figmod

            figs = out_dir / "figs"
            figs.mkdir(exist_ok=True)
            figmod.render_trajectory_figure(record, figs / "trajectory.png")
            figmod.render_error_figure(record, figs / "errors.png")
    payload = output.summary_payload(sc, record=record, certificate=certificate,
                                     feasibility=feasibility, failure=failure)
    output.write_summary_json(out_dir / "summary.json", payload)
    return payload


def _execute_scenario(scenario_path: str, out_dir: str, force: bool,
                      figures: bool = True) -> dict:
    """Run one scenario to completion and write its outputs.

    Returns a flat summary row. Never raises on simulation failures;
    those are recorded in the row and in summary.json.
    """
    sc = load_scenario(scenario_path)
    out = Path(out_dir)
    record = None
    certificate = None
    failure = None
    try:
        state, spec = materialize(sc)
        record = run_simulation(state, spec, sc.sim, force=force)
        if record.converged:
            certificate = certify(record, spec)
    except InfeasibleScenario as exc:
        failure = f"infeasible scenario: {exc}"
        payload = output.summary_payload(sc, feasibility=exc.report, failure=failure)
        out.mkdir(parents=True, exist_ok=True)
        output.write_summary_json(out / "summary.json", payload)
        return {"scenario": sc.name, "path": scenario_path, "event": "infeasible",
                "converged": False, "t_f": None, "failure": failure}
    except CollisionImminent as exc:
        failure = str(exc)
        record = exc.record
    except RingformError as exc:
        failure = str(exc)

    _write_run_outputs(out, sc, record, certificate, failure, figures=figures)
    row = {
        "scenario": sc.name,
        "path": scenario_path,
        "event": record.event if record is not None else "error",
        "converged": bool(record.converged) if record is not None else False,
        "t_f": record.t_f if record is not None else None,
        "t_star": record.t_star if record is not None else None,
        "certificate_ok": certificate.all_ok if certificate is not None else None,
        "failure": failure,
    }
    return row


def cmd_run(args) -> int:
    row = _execute_scenario(args.scenario, args.out, args.force)
    if row["failure"]:
        log.warning("run failed: %s", row["failure"])
    t_f = row["t_f"]
    print(
        f"{row['scenario']}: event={row['event']}"
        + (f" t_f={t_f:.6g}" if t_f is not None else "")
        + (f" t_star={row['t_star']:.6g}" if row["t_star"] is not None else "")
        + (f" certificate={'pass' if row['certificate_ok'] else 'FAIL'}"
           if row["certificate_ok"] is not None else "")
    )
    return 0 if row["converged"] else 1


def _batch_worker(job):
    path, out_dir, force = job
    try:
        return _execute_scenario(path, out_dir, force)
    except RingformError as exc:
        return {"scenario": Path(path).stem, "path": path, "event": "error",
                "converged": False, "t_f": None, "t_star": None,
                "certificate_ok": None, "failure": str(exc)}


def cmd_batch(args) -> int:
    paths: list[str] = []
    for pattern in args.scenarios:
        matches = sorted(globmod.glob(pattern))
        paths.extend(matches if matches else ([pattern] if os.path.exists(pattern) else []))
    paths = sorted(dict.fromkeys(paths))
    if not paths:
        print("no scenario files matched", file=sys.stderr)
        return 2

    out = Path(args.out)
    jobs = [(p, str(out / Path(p).stem), args.force) for p in paths]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_batch_worker, jobs))
    else:
        rows = [_batch_worker(j) for j in jobs]

    header = f"{'scenario':<16} {'event':<10} {'t_f':>12} {'t_star':>12} {'cert':>6}"
    print(header)
    print("-" * len(header))
    for row in rows:
        t_f = f"{row['t_f']:.6g}" if row["t_f"] is not None else "-"
        ts = f"{row['t_star']:.6g}" if row.get("t_star") is not None else "-"
        cert = {True: "pass", False: "FAIL", None: "-"}[row.get("certificate_ok")]
        print(f"{row['scenario']:<16} {row['event']:<10} {t_f:>12} {ts:>12} {cert:>6}")

    out.mkdir(parents=True, exist_ok=True)
    import csv

    with open(out / "batch_summary.csv", "w", encoding="utf-8", newline="") as fh:
        w = csv.DictWriter(
            fh,
            fieldnames=["scenario", "path", "event", "converged", "t_f",
                        "t_star", "certificate_ok", "failure"],
            lineterminator="\n",
        )
        w.writeheader()
        w.writerows(rows)
    return 0 if all(r["converged"] for r in rows) else 1


def cmd_certify(args) -> int:
    sc = load_scenario(args.scenario)
    spec = TargetSpec.from_degrees(sc.target_angles_deg)
    record = output.read_trajectory_csv(args.trajectory, sc.sim.convergence_tol)
    try:
        report = certify(record, spec)
    except NotConverged as exc:
        print(f"FAIL not converged: {exc}")
        return 1
    lines = [
        ("finite-time bound", report.time_ok,
         f"t_f {report.t_f:.6g} <= V0/kappa {report.time_bound:.6g}"),
        ("displacement bound", report.displacement_ok,
         f"max displacement {report.max_displacement:.6g} <= "
         f"2 V0/kappa {report.displacement_bound:.6g}"),
        ("collision-safe horizon", report.horizon_ok,
         f"t_f {report.t_f:.6g} < t_star {report.t_star:.6g}"),
    ]
    print(
        f"constants: gamma={report.gamma:.6g} beta={report.beta:.6g} "
        f"lambda2={report.lambda2:.6g} kappa={report.kappa:.6g} V0={report.v0:.6g}"
    )
    for name, ok, detail in lines:
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    return 0 if report.all_ok else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="ringform",
        description="Simulate sign-controlled angle-constrained ring formations.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", help="check a scenario file without running it")
    v.add_argument("scenario")
    v.set_defaults(fn=cmd_validate)

    r = sub.add_parser("run", help="simulate one scenario and write outputs")
    r.add_argument("scenario")
    r.add_argument("--out", required=True, help="output directory")
    r.add_argument("--force", action="store_true",
                   help="run even if feasibility checks fail")
    r.set_defaults(fn=cmd_run)

    b = sub.add_parser("batch", help="run many scenarios")
    b.add_argument("scenarios", nargs="+", help="scenario files or glob patterns")
    b.add_argument("--out", required=True, help="output directory root")
    b.add_argument("--jobs", type=int, default=1, help="parallel workers")
    b.add_argument("--force", action="store_true")
    b.set_defaults(fn=cmd_batch)

    c = sub.add_parser("certify", help="recheck certificates from a trajectory CSV")
    c.add_argument("trajectory")
    c.add_argument("scenario")
    c.set_defaults(fn=cmd_certify)
    return p


def main(argv=None) -> int:
    _configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except RingformError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
