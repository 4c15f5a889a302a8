"""Experiment orchestration and aggregation.

A configuration describes ``n_runs`` independent runs. Each run gets its own
Philox streams derived from ``(seed, run_index)``, so results do not depend
on how runs are spread over worker processes. With
``init.reference_size > 0`` a single reference sample is drawn once (from
``init.reference_seed``) and each run evolves a random subset of it.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .config import RunConfig
from .density import DensityParams
from .dynamics import (
    Ensemble,
    Trajectory,
    init_langevin,
    init_mixture,
    init_uncontrolled_swarm,
    init_uniform,
    make_rng,
    simulate,
)
from .normalization import estimate_C_from_energies
from .potentials import get_potential
from .schedule import beta

__all__ = [
    "Heatmap",
    "derive_seed",
    "draw_initial",
    "reference_ensemble",
    "run_single",
    "run_experiment",
    "resolve_workers",
    "aggregate_heatmap",
    "median_min_u_curve",
]

log = logging.getLogger(__name__)

WORKERS_ENV = "SWARM_ANNEAL_WORKERS"


def derive_seed(seed: int, *key: int) -> int:
    return int(np.random.SeedSequence(seed, spawn_key=tuple(key)).generate_state(1, np.uint64)[0])


def resolve_workers(requested: int | None) -> int:
    """Requested worker count, capped by ``SWARM_ANNEAL_WORKERS`` when set."""
    workers = requested if requested else 1
    cap = os.environ.get(WORKERS_ENV)
    if cap:
        workers = min(workers, max(1, int(cap)))
    return max(1, workers)


def draw_initial(cfg: RunConfig, n: int, seed: int) -> Ensemble:
    pot = get_potential(cfg.potential)
    init = cfg.init
    b0 = beta(cfg.schedule, 0.0)
    if init.kind == "swarm":
        return init_uncontrolled_swarm(
            pot, cfg.m, b0, n, init.burn_in_steps, init.burn_in_dt, seed,
            kappa=cfg.kappa, noise_factor=cfg.noise_factor, c_tol=cfg.c_tol,
        )
    if init.kind == "langevin":
        return init_langevin(pot, b0, n, init.burn_in_steps, init.burn_in_dt, seed)
    if init.kind == "mixture":
        return init_mixture(init.centers, init.cov_scale, n, seed)
    if init.kind == "uniform":
        return init_uniform(pot, n, seed)
    if init.kind == "file":
        from .outputs import read_sample_csv

        x, C = read_sample_csv(init.path)
        if x.shape[0] < n:
            raise ValueError(f"{init.path} holds {x.shape[0]} points, need {n}")
        return Ensemble(x, C=C)
    raise ValueError(f"unknown init kind {init.kind!r}")


def _fit_C0(cfg: RunConfig, e: Ensemble) -> float | None:
    """Empirical ``C`` of a sample at ``beta(0)``; ``None`` for Gibbs methods."""
    if cfg.method not in ("csg", "uncontrolled_swarm"):
        return None
    pot = get_potential(cfg.potential)
    p0 = DensityParams(cfg.m, beta(cfg.schedule, 0.0), 0.0, cfg.kappa)
    return estimate_C_from_energies(pot.value(e.positions), p0, tol=cfg.c_tol, expansions=cfg.c_bracket_expansions).C


def reference_ensemble(cfg: RunConfig) -> Ensemble:
    """The shared sample of the subset protocol, with ``C`` fitted on all of it."""
    e = draw_initial(cfg, cfg.init.reference_size, cfg.init.reference_seed)
    C0 = _fit_C0(cfg, e)
    e.C = math.nan if C0 is None else C0
    return e


def run_single(cfg: RunConfig, run_index: int, reference: Ensemble | None = None) -> Trajectory:
    pot = get_potential(cfg.potential)
    if reference is not None:
        pick = make_rng(cfg.seed, run_index, 1)
        idx = pick.choice(reference.n, size=cfg.n_particles, replace=False)
        positions = reference.positions[idx]
        C0 = None if math.isnan(reference.C) else reference.C
    else:
        e0 = draw_initial(cfg, cfg.n_particles, derive_seed(cfg.seed, run_index, 2))
        positions = e0.positions[: cfg.n_particles]
        # a sample that carries its own fitted C keeps it; otherwise simulate fits one
        swarm = cfg.method in ("csg", "uncontrolled_swarm")
        C0 = e0.C if swarm and math.isfinite(e0.C) else None
    traj = simulate(
        pot,
        cfg.schedule,
        cfg.integrator(),
        positions,
        m=cfg.m,
        kappa=cfg.kappa,
        C0=C0,
        rng=make_rng(cfg.seed, run_index, 0),
        seed=cfg.seed,
        record_every=cfg.record_every,
        c_tol=cfg.c_tol,
        c_expansions=cfg.c_bracket_expansions,
        ot_tol=cfg.ot_tolerance,
        run_index=run_index,
        control=cfg.control,
    )
    return traj


def _run_star(args) -> Trajectory:
    return run_single(*args)


def run_experiment(cfg: RunConfig, workers: int | None = 1, runs=None) -> list[Trajectory]:
    """Execute runs (all of them by default) and return trajectories in run order."""
    runs = list(range(cfg.n_runs)) if runs is None else list(runs)
    reference = reference_ensemble(cfg) if cfg.init.reference_size else None
    jobs = [(cfg, r, reference) for r in runs]
    workers = resolve_workers(workers)
    if workers == 1 or len(jobs) == 1:
        return [_run_star(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_star, jobs))


# ------------------------------------------------------------------ aggregates


@dataclass
class Heatmap:
    """Counts per (time bin, space bin), summed over runs."""

    counts: np.ndarray
    t_edges: np.ndarray
    x_edges: np.ndarray
    snapshot_times: np.ndarray


def _snapshot_grid(trajectories) -> np.ndarray:
    times = trajectories[0].times
    for tr in trajectories[1:]:
        if tr.times.shape != times.shape or not np.allclose(tr.times, times):
            raise ValueError("trajectories do not share a snapshot grid")
    return times


def aggregate_heatmap(trajectories, axis: int = 0, t_bins: int | None = None, x_bins=50, x_range=None) -> Heatmap:
    """Histogram one coordinate of all particles over time.

    Each time bin is represented by the single snapshot closest to its
    center, so every row counts each particle of each run exactly once.
    Values outside ``x_range`` are clipped into the edge bins.
    """
    trajectories = list(trajectories)
    if not trajectories:
        raise ValueError("no trajectories")
    dim = trajectories[0].positions.shape[2]
    if not 0 <= axis < dim:
        raise ValueError(f"axis {axis} out of range for dimension {dim}")
    times = _snapshot_grid(trajectories)
    if t_bins is None or t_bins >= len(times):
        picks = np.arange(len(times))
        if len(times) > 1:
            mids = 0.5 * (times[1:] + times[:-1])
            t_edges = np.concatenate([[times[0]], mids, [times[-1]]])
        else:
            t_edges = np.array([times[0], times[0]])
    else:
        t_edges = np.linspace(times[0], times[-1], t_bins + 1)
        centers = 0.5 * (t_edges[1:] + t_edges[:-1])
        picks = np.abs(times[None, :] - centers[:, None]).argmin(axis=1)
    values = np.stack([tr.positions[picks, :, axis] for tr in trajectories], axis=1)  # (T, runs, n)
    values = values.reshape(len(picks), -1)
    if np.ndim(x_bins) == 0:
        lo, hi = x_range if x_range is not None else (values.min(), values.max())
        if hi <= lo:
            hi = lo + 1.0
        x_edges = np.linspace(lo, hi, int(x_bins) + 1)
    else:
        x_edges = np.asarray(x_bins, dtype=float)
    nb = len(x_edges) - 1
    idx = np.clip(np.searchsorted(x_edges, values, side="right") - 1, 0, nb - 1)
    counts = np.zeros((len(picks), nb), dtype=np.int64)
    for row in range(len(picks)):
        counts[row] = np.bincount(idx[row], minlength=nb)
    return Heatmap(counts=counts, t_edges=t_edges, x_edges=x_edges, snapshot_times=times[picks])


def median_min_u_curve(trajectories, subset_size: int | None = None):
    """Across-runs median of the best energy any of the first ``subset_size`` particles reached.

    Returns ``(times, median)``; the curve is nonincreasing because each run
    contributes a running minimum.
    """
    trajectories = list(trajectories)
    times = _snapshot_grid(trajectories)
    n = trajectories[0].n_particles
    if subset_size is not None and subset_size > n:
        raise ValueError(f"subset_size {subset_size} exceeds {n} particles")
    curves = np.stack([tr.min_u_curve(subset_size) for tr in trajectories])
    return times, np.median(curves, axis=0)
