"""Particle integrators.

Controlled swarm gradient (``csg``) follows the explicit density curve: the
normalization constant is refitted after every fine step, and the control
velocity is re-estimated by optimal transport every ``k`` fine steps and held
fixed in between. Controlled simulated annealing (``csa``) does the same
against the Gibbs curve. ``uncontrolled_swarm`` and ``langevin`` drop the
control; they are also used, at fixed temperature, to draw initial samples.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.spatial.distance import cdist

from .density import DensityParams, alpha_mod, rho
from .normalization import coarse_C_derivative, estimate_C_from_energies, predict_C
from .potentials import Potential
from .schedule import CoolingSchedule, beta
from .transport import (
    barycentric_velocity,
    effective_sample_size,
    gibbs_importance_weights,
    importance_weights_from_energies,
    solve_discrete_ot,
)

__all__ = [
    "METHODS",
    "Ensemble",
    "IntegratorSpec",
    "Trajectory",
    "IntegrationError",
    "DegenerateESSWarning",
    "make_rng",
    "csg_fine_step",
    "csa_fine_step",
    "refresh_velocity",
    "simulate",
    "kde_silverman",
    "init_uncontrolled_swarm",
    "init_langevin",
    "init_mixture",
    "init_uniform",
]

log = logging.getLogger(__name__)

METHODS = ("csg", "csa", "uncontrolled_swarm", "langevin")


class IntegrationError(RuntimeError):
    pass


class DegenerateESSWarning(UserWarning):
    """Importance weights collapsed onto fewer than two effective particles."""


def make_rng(seed: int, *key: int) -> np.random.Generator:
    """Counter-based (Philox) stream identified by ``seed`` and a spawn key."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=tuple(key))))


@dataclass
class Ensemble:
    positions: np.ndarray
    velocities: np.ndarray | None = None
    C: float = 0.0
    t: float = 0.0
    seed: int = 0
    step_index: int = 0
    energies: np.ndarray | None = None
    plan_cost: float = math.nan
    ess: float = math.nan
    c_residual: float = math.nan

    def __post_init__(self) -> None:
        x = np.asarray(self.positions, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        self.positions = x
        if self.velocities is None:
            self.velocities = np.zeros_like(x)

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    @property
    def dim(self) -> int:
        return self.positions.shape[1]


@dataclass(frozen=True)
class IntegratorSpec:
    """Two time scales: fine step ``dt`` and velocity refresh every ``k`` steps."""

    dt: float
    k: int = 1
    T: float = 1.0
    noise_factor: float = 2.0
    method: str = "csg"

    def __post_init__(self) -> None:
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if int(self.k) != self.k or self.k < 1:
            raise ValueError("k must be a positive integer")
        if self.T < 0:
            raise ValueError("T must be nonnegative")
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if abs(self.T / self.dt - round(self.T / self.dt)) > 1e-6:
            raise ValueError(f"T={self.T} is not a whole number of steps dt={self.dt}")

    @property
    def h(self) -> float:
        return self.k * self.dt

    @property
    def n_steps(self) -> int:
        return int(round(self.T / self.dt))

    @property
    def controlled(self) -> bool:
        return self.method in ("csg", "csa")


@dataclass
class Trajectory:
    """Snapshots of one run.

    ``running_min_u[s, i]`` is the smallest energy particle ``i`` has visited
    (over every fine step) up to snapshot ``s``.
    """

    times: np.ndarray
    positions: np.ndarray
    C: np.ndarray
    plan_cost: np.ndarray
    ess: np.ndarray
    energies: np.ndarray
    running_min_u: np.ndarray
    c_residual: np.ndarray
    run_index: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def n_particles(self) -> int:
        return self.positions.shape[1]

    def min_u_curve(self, subset_size: int | None = None) -> np.ndarray:
        cols = self.running_min_u if subset_size is None else self.running_min_u[:, :subset_size]
        return cols.min(axis=1)


def _check_finite(x: np.ndarray, e: Ensemble) -> None:
    if not np.all(np.isfinite(x)):
        bad = np.flatnonzero(~np.all(np.isfinite(x), axis=1))
        raise IntegrationError(
            f"non-finite positions at step {e.step_index + 1} (t={e.t:.4g}), particles {bad[:10].tolist()}"
        )


def _energies(e: Ensemble, pot: Potential) -> np.ndarray:
    if e.energies is None:
        e.energies = pot.value(e.positions)
    return e.energies


def csg_fine_step(
    e: Ensemble,
    pot: Potential,
    p: DensityParams,
    spec: IntegratorSpec,
    noise: np.ndarray,
    *,
    beta_next: float,
    c_tol: float = 1e-8,
    c_expansions: int = 60,
) -> Ensemble:
    """One Euler-Maruyama step of the controlled swarm SDE, then refit ``C``.

    ``p`` holds ``m``, ``kappa`` and the current ``beta`` and ``C``; the noise
    amplitude is ``sqrt(noise_factor / beta * alpha(rho(X_i)) * dt)``.
    """
    x = e.positions
    r = rho(p, _energies(e, pot))
    amp = np.sqrt(spec.noise_factor / p.beta * alpha_mod(r, p.m) * spec.dt)
    new = x + spec.dt * (e.velocities - pot.gradient(x)) + amp[:, None] * noise
    _check_finite(new, e)
    u_new = pot.value(new)
    cs = estimate_C_from_energies(u_new, p.with_beta(beta_next), tol=c_tol, expansions=c_expansions, guess=p.C)
    step = e.step_index + 1
    return replace(
        e, positions=new, energies=u_new, C=cs.C, c_residual=cs.residual, t=step * spec.dt, step_index=step
    )


def csa_fine_step(
    e: Ensemble, pot: Potential, beta_now: float, spec: IntegratorSpec, noise: np.ndarray
) -> Ensemble:
    """Euler-Maruyama step with drift ``V - grad U`` and diffusion ``sqrt(2 / beta)``."""
    if not beta_now > 0:
        raise ValueError("beta must be positive to integrate")
    x = e.positions
    new = x + spec.dt * (e.velocities - pot.gradient(x)) + math.sqrt(2.0 / beta_now * spec.dt) * noise
    _check_finite(new, e)
    step = e.step_index + 1
    return replace(e, positions=new, energies=pot.value(new), t=step * spec.dt, step_index=step)


def refresh_velocity(
    e: Ensemble,
    pot: Potential,
    p_now: DensityParams | None,
    s: CoolingSchedule,
    spec: IntegratorSpec,
    ot_tol: float = 1e-9,
) -> Ensemble:
    """Re-estimate the control field over one coarse step ``h = k dt``.

    ``csg``: predict ``C`` at ``t + h`` from the empirical derivative, weight
    particles by the density ratio, transport. ``csa``: Gibbs ratios, no ``C``.
    Uncontrolled methods get zero velocities.
    """
    if not spec.controlled:
        return replace(e, velocities=np.zeros_like(e.positions))
    h = spec.h
    u = _energies(e, pot)
    if spec.method == "csa":
        w = gibbs_importance_weights(u, beta(s, e.t), beta(s, e.t + h))
    else:
        if p_now is None:
            raise ValueError("csg needs the current density parameters")
        cprime = coarse_C_derivative(u, p_now, s, e.t)
        c_next = predict_C(e.C, cprime, h)
        p_next = DensityParams(p_now.m, beta(s, e.t + h), c_next, p_now.kappa)
        w = importance_weights_from_energies(u, p_now, p_next)
    ess = effective_sample_size(w)
    if e.n >= 2 and ess < 2:
        warnings.warn(
            f"effective sample size {ess:.3g} < 2 at t={e.t:.4g}", DegenerateESSWarning, stacklevel=2
        )
    plan = solve_discrete_ot(e.positions, w, tol=ot_tol)
    v = barycentric_velocity(plan, e.positions, h)
    return replace(e, velocities=v, plan_cost=plan.cost, ess=ess)


def _density_params(m: float, kappa: int, b: float, C: float) -> DensityParams:
    return DensityParams(m=m, beta=b, C=C, kappa=kappa)


def simulate(
    pot: Potential,
    schedule: CoolingSchedule,
    spec: IntegratorSpec,
    positions,
    *,
    m: float = 2.0,
    kappa: int = 1,
    C0: float | None = None,
    rng: np.random.Generator | None = None,
    seed: int = 0,
    record_every: int = 1,
    c_tol: float = 1e-8,
    c_expansions: int = 60,
    ot_tol: float = 1e-9,
    run_index: int = 0,
    control: bool = True,
    check_velocity_hold: bool = False,
) -> Trajectory:
    """Integrate one ensemble from ``t = 0`` to ``spec.T``.

    ``uncontrolled_swarm`` integrates the swarm SDE along the schedule with
    the explicit density (refitting ``C``) but no control; ``langevin`` is the
    annealed Langevin diffusion. ``control=False`` zeroes the velocity of a
    controlled method. Snapshots are taken at ``t = 0`` and every
    ``record_every`` fine steps.
    """
    if record_every < 1:
        raise ValueError("record_every must be >= 1")
    rng = rng if rng is not None else make_rng(seed)
    swarm = spec.method in ("csg", "uncontrolled_swarm")
    e = Ensemble(np.array(positions, dtype=float, copy=True), seed=seed)
    u0 = _energies(e, pot)
    if swarm:
        if C0 is None:
            p0 = _density_params(m, kappa, beta(schedule, 0.0), 0.0)
            cs = estimate_C_from_energies(u0, p0, tol=c_tol, expansions=c_expansions)
            e.C, e.c_residual = cs.C, cs.residual
        else:
            e.C = float(C0)
    else:
        e.C = math.nan

    n_steps = spec.n_steps
    n_snap = 1 + n_steps // record_every
    n, d = e.n, e.dim
    times = np.empty(n_snap)
    pos = np.empty((n_snap, n, d))
    Cs = np.empty(n_snap)
    costs = np.full(n_snap, math.nan)
    esss = np.full(n_snap, math.nan)
    energies = np.empty((n_snap, n))
    run_min = np.empty((n_snap, n))
    resid = np.full(n_snap, math.nan)
    running = u0.copy()

    def record(slot: int) -> None:
        times[slot] = e.t
        pos[slot] = e.positions
        Cs[slot] = e.C
        costs[slot] = e.plan_cost
        esss[slot] = e.ess
        energies[slot] = e.energies
        run_min[slot] = running
        resid[slot] = e.c_residual

    record(0)
    slot = 1
    held = None
    for step in range(n_steps):
        b_now = beta(schedule, e.t)
        p_now = _density_params(m, kappa, b_now, e.C) if swarm else None
        if step % spec.k == 0:
            if control:
                e = refresh_velocity(e, pot, p_now, schedule, spec, ot_tol=ot_tol)
            else:
                e = replace(e, velocities=np.zeros_like(e.positions))
            held = e.velocities.copy() if check_velocity_hold else None
        elif held is not None and not np.array_equal(held, e.velocities):
            raise IntegrationError(f"velocity changed between refreshes at step {step}")
        noise = rng.standard_normal((n, d))
        b_next = beta(schedule, (step + 1) * spec.dt)
        if swarm:
            e = csg_fine_step(e, pot, p_now, spec, noise, beta_next=b_next, c_tol=c_tol, c_expansions=c_expansions)
        else:
            e = csa_fine_step(e, pot, b_now, spec, noise)
        np.minimum(running, e.energies, out=running)
        if (step + 1) % record_every == 0:
            record(slot)
            slot += 1

    return Trajectory(
        times=times,
        positions=pos,
        C=Cs,
        plan_cost=costs,
        ess=esss,
        energies=energies,
        running_min_u=run_min,
        c_residual=resid,
        run_index=run_index,
        meta={"method": spec.method, "m": m, "kappa": kappa, "potential": pot.name},
    )


# ---------------------------------------------------------------- initializers


def kde_silverman(x: np.ndarray) -> np.ndarray:
    """Gaussian product-kernel density estimate at the sample points themselves.

    Per-dimension Silverman bandwidth ``sigma * (4 / ((d + 2) n))**(1 / (d + 4))``;
    a degenerate coordinate (zero spread, e.g. ``n = 1``) falls back to bandwidth 1.
    """
    x = np.asarray(x, dtype=float)
    n, d = x.shape
    sigma = x.std(axis=0, ddof=1) if n > 1 else np.zeros(d)
    bw = sigma * (4.0 / ((d + 2.0) * n)) ** (1.0 / (d + 4.0))
    bw = np.where(bw > 0, bw, 1.0)
    z = x / bw
    k = cdist(z, z, "sqeuclidean")
    k *= -0.5
    np.exp(k, out=k)
    norm = n * np.prod(bw) * (2.0 * math.pi) ** (d / 2.0)
    return k.sum(axis=1) / norm


def _box_uniform(pot: Potential, n: int, rng: np.random.Generator) -> np.ndarray:
    lo = np.array([b[0] for b in pot.domain_box])
    hi = np.array([b[1] for b in pot.domain_box])
    return lo + (hi - lo) * rng.random((n, pot.dim))


def init_uniform(pot: Potential, n: int, seed: int) -> Ensemble:
    """Uniform draw over the potential's box."""
    rng = make_rng(seed, 3)
    return Ensemble(_box_uniform(pot, n, rng), seed=seed)


def init_uncontrolled_swarm(
    pot: Potential,
    m: float,
    beta0: float,
    n: int,
    burn_in_steps: int = 10_000,
    dt: float = 0.002,
    seed: int = 0,
    *,
    kappa: int = 1,
    noise_factor: float = 2.0,
    start=None,
    c_tol: float = 1e-8,
) -> Ensemble:
    """Sample the fixed-temperature swarm density by running its SDE.

    The law-dependent noise uses a Gaussian KDE of the current ensemble in
    place of the true marginal. Starts uniform on the box unless ``start`` is
    given; the returned ``C`` is the empirical fit on the final sample.
    """
    if not beta0 > 0:
        raise ValueError("beta0 must be positive")
    rng = make_rng(seed, 1)
    x = _box_uniform(pot, n, rng) if start is None else np.array(start, dtype=float).reshape(n, pot.dim)
    scale = noise_factor / beta0 * dt
    for _ in range(burn_in_steps):
        amp = np.sqrt(scale * alpha_mod(kde_silverman(x), m))
        x = x - dt * pot.gradient(x) + amp[:, None] * rng.standard_normal(x.shape)
        if not np.all(np.isfinite(x)):
            raise IntegrationError("non-finite positions during swarm burn-in")
    u = pot.value(x)
    cs = estimate_C_from_energies(u, DensityParams(m, beta0, 0.0, kappa), tol=c_tol)
    return Ensemble(x, C=cs.C, seed=seed, energies=u, c_residual=cs.residual)


def init_langevin(
    pot: Potential,
    beta0: float,
    n: int,
    burn_in_steps: int = 10_000,
    dt: float = 0.002,
    seed: int = 0,
    *,
    start=None,
) -> Ensemble:
    """Sample the Gibbs density ``exp(-beta0 U)`` by Euler-Maruyama Langevin."""
    if not beta0 > 0:
        raise ValueError("beta0 must be positive")
    rng = make_rng(seed, 2)
    x = _box_uniform(pot, n, rng) if start is None else np.array(start, dtype=float).reshape(n, pot.dim)
    amp = math.sqrt(2.0 / beta0 * dt)
    for _ in range(burn_in_steps):
        x = x - dt * pot.gradient(x) + amp * rng.standard_normal(x.shape)
        if not np.all(np.isfinite(x)):
            raise IntegrationError("non-finite positions during Langevin burn-in")
    return Ensemble(x, C=math.nan, seed=seed, energies=pot.value(x))


def init_mixture(centers, cov_scale: float, n: int, seed: int = 0) -> Ensemble:
    """Equal-weight Gaussian mixture with covariance ``cov_scale * I``."""
    if not cov_scale > 0:
        raise ValueError("cov_scale must be positive")
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    rng = make_rng(seed, 4)
    comp = rng.integers(0, centers.shape[0], size=n)
    x = centers[comp] + math.sqrt(cov_scale) * rng.standard_normal((n, centers.shape[1]))
    return Ensemble(x, C=math.nan, seed=seed)
