"""UTF-8 CSV readers and writers for samples, trajectories and aggregates."""

from __future__ import annotations

import csv
import math
from collections import defaultdict
from pathlib import Path

import numpy as np

from .dynamics import Trajectory

__all__ = [
    "write_sample_csv",
    "read_sample_csv",
    "write_trajectory_csv",
    "read_trajectory_csv",
    "write_diagnostics_csv",
    "write_heatmap_csv",
    "write_curve_csv",
    "read_curve_csv",
]


def _open(path, mode="w"):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    return open(path, mode, newline="", encoding="utf-8")


def _fmt(v: float) -> str:
    return repr(float(v))


def write_sample_csv(path, positions, C: float = math.nan) -> None:
    x = np.atleast_2d(np.asarray(positions, dtype=float))
    with _open(path) as fh:
        w = csv.writer(fh)
        w.writerow([f"x{j + 1}" for j in range(x.shape[1])] + ["C"])
        for row in x:
            w.writerow([_fmt(v) for v in row] + [_fmt(C)])


def read_sample_csv(path):
    """Return ``(positions, C)``; ``C`` is NaN when the file carries none."""
    with open(path, newline="", encoding="utf-8") as fh:
        r = csv.DictReader(fh)
        xcols = [c for c in r.fieldnames or () if c.startswith("x")]
        if not xcols:
            raise ValueError(f"{path}: no x1..xd columns")
        rows = list(r)
    x = np.array([[float(row[c]) for c in xcols] for row in rows])
    C = float(rows[0]["C"]) if rows and "C" in rows[0] and rows[0]["C"] else math.nan
    return x, C


def write_trajectory_csv(path, traj: Trajectory) -> None:
    """Long format: one row per (snapshot, particle).

    Columns ``run, t, particle, x1..xd, C, U, min_u`` where ``min_u`` is the
    particle's running minimum energy.
    """
    S, n, d = traj.positions.shape
    with _open(path) as fh:
        w = csv.writer(fh)
        w.writerow(["run", "t", "particle"] + [f"x{j + 1}" for j in range(d)] + ["C", "U", "min_u"])
        for s in range(S):
            t, C = _fmt(traj.times[s]), _fmt(traj.C[s])
            for i in range(n):
                w.writerow(
                    [traj.run_index, t, i]
                    + [_fmt(v) for v in traj.positions[s, i]]
                    + [C, _fmt(traj.energies[s, i]), _fmt(traj.running_min_u[s, i])]
                )


def read_trajectory_csv(path) -> list[Trajectory]:
    """Inverse of :func:`write_trajectory_csv` (diagnostic columns come back as NaN)."""
    runs: dict[int, list] = defaultdict(list)
    with open(path, newline="", encoding="utf-8") as fh:
        r = csv.DictReader(fh)
        xcols = [c for c in r.fieldnames or () if c.startswith("x")]
        for row in r:
            runs[int(row["run"])].append(row)
    out = []
    for run, rows in sorted(runs.items()):
        times = sorted({float(row["t"]) for row in rows})
        t_index = {t: k for k, t in enumerate(times)}
        n = 1 + max(int(row["particle"]) for row in rows)
        S, d = len(times), len(xcols)
        pos = np.full((S, n, d), math.nan)
        C = np.full(S, math.nan)
        U = np.full((S, n), math.nan)
        mins = np.full((S, n), math.nan)
        for row in rows:
            s, i = t_index[float(row["t"])], int(row["particle"])
            pos[s, i] = [float(row[c]) for c in xcols]
            C[s] = float(row["C"])
            U[s, i] = float(row["U"])
            mins[s, i] = float(row["min_u"])
        nan = np.full(S, math.nan)
        out.append(
            Trajectory(
                times=np.array(times), positions=pos, C=C, plan_cost=nan, ess=nan.copy(),
                energies=U, running_min_u=mins, c_residual=nan.copy(), run_index=run,
            )
        )
    return out


def write_diagnostics_csv(path, trajectories) -> None:
    """Per-run, per-snapshot scalars: ``C``, its fit residual, plan cost, ESS, best energy."""
    with _open(path) as fh:
        w = csv.writer(fh)
        w.writerow(["run", "t", "C", "c_residual", "plan_cost", "ess", "min_u"])
        for tr in trajectories:
            best = tr.min_u_curve()
            for s in range(len(tr.times)):
                w.writerow(
                    [tr.run_index, _fmt(tr.times[s]), _fmt(tr.C[s]), _fmt(tr.c_residual[s]),
                     _fmt(tr.plan_cost[s]), _fmt(tr.ess[s]), _fmt(best[s])]
                )


def write_heatmap_csv(path, heatmap) -> None:
    """Rows are time bins; the header names each space bin by its edges ``lo:hi``."""
    xe = heatmap.x_edges
    with _open(path) as fh:
        w = csv.writer(fh)
        w.writerow(["t_start", "t_end", "t_snapshot"] + [f"{xe[j]:.6g}:{xe[j + 1]:.6g}" for j in range(len(xe) - 1)])
        for row in range(heatmap.counts.shape[0]):
            w.writerow(
                [_fmt(heatmap.t_edges[row]), _fmt(heatmap.t_edges[row + 1]), _fmt(heatmap.snapshot_times[row])]
                + [int(c) for c in heatmap.counts[row]]
            )


def write_curve_csv(path, times, values, name: str = "median_min_u") -> None:
    with _open(path) as fh:
        w = csv.writer(fh)
        w.writerow(["t", name])
        for t, v in zip(times, values):
            w.writerow([_fmt(t), _fmt(v)])


def read_curve_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        r = csv.reader(fh)
        next(r)
        rows = [(float(a), float(b)) for a, b in r]
    arr = np.array(rows)
    return arr[:, 0], arr[:, 1]
