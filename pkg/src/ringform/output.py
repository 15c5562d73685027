"""Delimited trajectory output, summary JSON, and per-figure plot data.

The trajectory CSV column layout is fixed: t, then the vehicle
coordinates z1x, z1y, ..., znx, zny, then eps1..epsn, then V and d_min.
Floats are written with 17 significant digits so values round-trip
bit-exactly and reruns of the same scenario produce byte-identical
files.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict

import numpy as np

from .analysis import angle_sum_series
from .errors import ScenarioError
from .simulator import TrajectoryRecord

_FLOAT_FMT = "%.17g"


def trajectory_header(n: int) -> list[str]:
    cols = ["t"]
    for i in range(1, n + 1):
        cols += [f"z{i}x", f"z{i}y"]
    cols += [f"eps{i}" for i in range(1, n + 1)]
    cols += ["V", "d_min"]
    return cols


def _fmt(v: float) -> str:
    return _FLOAT_FMT % v


def write_trajectory_csv(path, record: TrajectoryRecord):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(trajectory_header(record.n))
        for k in range(record.t.size):
            row = [
                record.t[k],
                *record.positions[k].ravel(),
                *record.errors[k],
                record.lyapunov[k],
                record.min_distance[k],
            ]
            w.writerow([_fmt(v) for v in row])


def read_trajectory_csv(path, convergence_tol: float) -> TrajectoryRecord:
    """Rebuild a trajectory record from its CSV serialization.

    Stopping metadata is reconstructed from the samples: the freeze time
    is the start of the longest exactly-constant tail of positions (17
    significant digits make the frozen floats survive the round trip),
    and the run counts as converged when that tail spans at least two
    samples with the Lyapunov value at or below ``convergence_tol``.
    Speeds are recovered by finite differences, so they are approximate.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ScenarioError(f"{path}: empty trajectory file") from None
        rows = [r for r in reader if r]
    ncols = len(header)
    if (ncols - 3) % 3 != 0 or ncols < 12:
        raise ScenarioError(f"{path}: unexpected column count {ncols}")
    n = (ncols - 3) // 3
    if header != trajectory_header(n):
        raise ScenarioError(f"{path}: unexpected header {header[:4]}...")
    data = np.array([[float(v) for v in r] for r in rows])
    if data.ndim != 2 or data.shape[0] < 1:
        raise ScenarioError(f"{path}: no samples")

    t = data[:, 0]
    z = data[:, 1 : 1 + 2 * n].reshape(-1, n, 2)
    eps = data[:, 1 + 2 * n : 1 + 3 * n]
    V = data[:, 1 + 3 * n]
    dmin = data[:, 2 + 3 * n]

    m = t.size
    frozen = np.all(z == z[-1], axis=(1, 2))
    i_frz = m - 1
    while i_frz > 0 and frozen[i_frz - 1]:
        i_frz -= 1
    tail = m - i_frz
    converged = tail >= 2 and V[-1] <= convergence_tol

    spd = np.zeros((m, n))
    if m > 1:
        dts = np.diff(t)[:, None]
        spd[:-1] = np.linalg.norm(np.diff(z, axis=0), axis=2) / dts

    below = np.nonzero(V <= convergence_tol)[0]
    d2 = ((z[0][:, None, :] - z[0][None, :, :]) ** 2).sum(-1)
    d2[np.diag_indices(n)] = np.inf
    d0 = float(np.sqrt(d2.min()))
    return TrajectoryRecord(
        t=t,
        positions=z,
        errors=eps,
        lyapunov=V,
        min_distance=dmin,
        speeds=spd,
        converged=bool(converged),
        t_f=float(t[i_frz]) if converged else None,
        first_below_tol=float(t[below[0]]) if below.size else None,
        t_star=float(d0 / 4.0),
        collision_floor=float(1e-3 * d0),
        event="converged" if converged else "unknown",
    )


def write_plotdata(directory, record: TrajectoryRecord):
    """Per-figure CSV data: vehicle paths and error curves."""
    directory.mkdir(parents=True, exist_ok=True)
    with open(directory / "trajectory_paths.csv", "w", encoding="utf-8",
              newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t"] + [f"z{i}{c}" for i in range(1, record.n + 1) for c in "xy"])
        for k in range(record.t.size):
            w.writerow([_fmt(record.t[k])] + [_fmt(v) for v in record.positions[k].ravel()])
    with open(directory / "error_curves.csv", "w", encoding="utf-8",
              newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t"] + [f"eps{i}" for i in range(1, record.n + 1)] + ["V"])
        for k in range(record.t.size):
            w.writerow(
                [_fmt(record.t[k])]
                + [_fmt(v) for v in record.errors[k]]
                + [_fmt(record.lyapunov[k])]
            )


def summary_payload(scenario, record=None, certificate=None, feasibility=None,
                    failure=None) -> dict:
    """Assemble the summary.json contents for one scenario run."""
    payload = {
        "scenario": {
            "name": scenario.name,
            "n": scenario.n,
            "target_angles_deg": list(scenario.target_angles_deg),
            "dt": scenario.sim.dt,
            "deadband": scenario.sim.deadband,
            "convergence_tol": scenario.sim.convergence_tol,
        },
        "run": None,
        "feasibility": None,
        "certificate": None,
        "failure": failure,
    }
    if feasibility is not None:
        payload["feasibility"] = asdict(feasibility) | {"ok": feasibility.ok}
    if record is not None:
        drift = angle_sum_series(record)
        payload["run"] = {
            "event": record.event,
            "converged": record.converged,
            "t_f": record.t_f,
            "first_below_tol": record.first_below_tol,
            "t_star": record.t_star,
            "collision_floor": record.collision_floor,
            "samples": int(record.t.size),
            "t_end": float(record.t[-1]),
            "final_lyapunov": float(record.lyapunov[-1]),
            "final_min_distance": float(record.min_distance[-1]),
            "min_distance_overall": float(record.min_distance.min()),
            "max_speed": float(record.speeds.max()),
            "angle_sum_drift": float(np.abs(drift - drift[0]).max()),
        }
    if certificate is not None:
        payload["certificate"] = asdict(certificate) | {"all_ok": certificate.all_ok}
    return payload


def write_summary_json(path, payload: dict):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
