"""Numerical checks of the library against independent references.

Each suite returns a list of :class:`Check` records with the measured value
and the threshold it was compared against. ``acceptance`` runs the
experiment-level criteria (minutes); everything else takes seconds.
"""

from __future__ import annotations

import itertools
import time
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .config import InitSpec, RunConfig
from .density import DensityParams, log_rho, rho
from .dynamics import Ensemble, IntegratorSpec, refresh_velocity
from .experiments import median_min_u_curve, run_experiment
from .normalization import C_derivative_quadrature, fit_C_quadrature, quadrature_grid
from .potentials import DOUBLE_WELL
from .scalar_math import lambert_w0, lambert_w0_exp
from .schedule import CoolingSchedule, beta
from .transport import solve_discrete_ot, squared_distances

__all__ = ["Check", "SUITES", "run_suite", "vertex_enumeration_ot", "format_report"]


@dataclass
class Check:
    name: str
    passed: bool
    measured: object
    threshold: str
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name}: measured={_short(self.measured)} required {self.threshold} ({self.seconds:.1f}s)"


def _short(v) -> str:
    if isinstance(v, float):
        return f"{v:.6g}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_short(x) for x in v) + "]"
    if isinstance(v, dict):
        return "{" + ", ".join(f"{k}: {_short(x)}" for k, x in v.items()) + "}"
    return str(v)


def _quiet(kind, beta0, rate=0.0, exponent=1) -> CoolingSchedule:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return CoolingSchedule(kind, beta0, rate, exponent)


def _timed(fn):
    def wrapper(*args, **kwargs):
        t0 = time.perf_counter()
        checks = fn(*args, **kwargs)
        dt = time.perf_counter() - t0
        for c in checks:
            c.seconds = c.seconds or dt / len(checks)
        return checks

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


# ---------------------------------------------------------------------- lambert


@_timed
def suite_lambert() -> list[Check]:
    x = 10.0 ** np.arange(-8, 9)
    w = lambert_w0(x)
    resid = np.abs(w * np.exp(w) - x) / np.maximum(1.0, x)
    z = np.linspace(-700.0, 700.0, 14001)
    we = lambert_w0_exp(z)
    ok = z < 709.0
    ref = lambert_w0(np.exp(z[ok]))
    pos = ref > 0
    rel = np.abs(we[ok][pos] - ref[pos]) / ref[pos]
    return [
        Check("lambert residual on 10^-8..10^8", bool(resid.max() <= 1e-12), float(resid.max()), "<= 1e-12"),
        Check("W0(e^z) vs W0 of e^z on [-700,700]", bool(rel.max() <= 1e-10), float(rel.max()), "<= 1e-10"),
        Check("W0(e^z) strictly increasing", bool(np.all(np.diff(we) > 0)), bool(np.all(np.diff(we) > 0)), "True"),
    ]


# ------------------------------------------------------------- weak convergence


def log_mass_fraction(p: DensityParams, select, n_points: int) -> float:
    """``log`` of the normalized trapezoid mass of the grid points where ``select`` holds.

    Done in log space because the tails fall below the smallest double long
    before the criterion stops being interesting.
    """
    axes, points = quadrature_grid(DOUBLE_WELL, n_points)
    x = axes[0]
    logw = np.full(x.size, np.log(x[1] - x[0]))
    logw[[0, -1]] -= np.log(2.0)
    lr = log_rho(p, DOUBLE_WELL.value(points)) + logw
    mask = select(x)
    if not mask.any():
        return -np.inf
    return float(logsumexp(lr[mask]) - logsumexp(lr))


@_timed
def suite_weak_convergence(m: float = 2.0) -> list[Check]:
    """Mass of the normalized density away from the global minimizer as beta grows."""
    betas = (10.0, 100.0, 1000.0)
    grids = (20_001, 200_001)
    outside = {g: [] for g in grids}
    local = []
    for b in betas:
        for g in grids:
            cs = fit_C_quadrature(DOUBLE_WELL, DensityParams(m, b), n_points=g)
            p = DensityParams(m, b, cs.C)
            outside[g].append(log_mass_fraction(p, lambda x: (x < 3.0) | (x > 5.0), g))
            if g == grids[-1]:
                local.append(log_mass_fraction(p, lambda x: (x >= -4.0) & (x <= -2.0), g))
    fine = outside[grids[-1]]
    refine = max(abs(np.exp(a) - np.exp(b)) for a, b in zip(outside[grids[0]], fine))
    log10 = [v / np.log(10) for v in fine]
    local10 = [v / np.log(10) for v in local]
    return [
        Check("log10 mass outside [3,5] strictly decreasing in beta", bool(fine[0] > fine[1] > fine[2]), log10, "decreasing"),
        Check("mass outside [3,5] at beta=1000", bool(np.exp(fine[2]) < 0.01), float(np.exp(fine[2])), "< 0.01"),
        Check("grid refinement agreement", bool(refine <= 1e-3), refine, "<= 1e-3"),
        Check("log10 mass in [-4,-2] (local min) decreasing, < 1e-3", bool(local[0] > local[1] > local[2] and local[2] < np.log(1e-3)), local10, "decreasing, < -3"),
    ]


# ---------------------------------------------------------------------- c-prime


@_timed
def suite_c_prime(m: float = 2.0, delta: float = 1e-3, n_points: int = 100_001) -> list[Check]:
    """Quadrature C'(t) against central differences of the quadrature C(t)."""
    s = _quiet("quadratic", 0.25, 25.0)
    checks = []
    for t in (0.2, 0.5, 0.8):
        def C_at(tt):
            return fit_C_quadrature(DOUBLE_WELL, DensityParams(m, beta(s, tt)), n_points=n_points).C

        C_t = C_at(t)
        fd = (C_at(t + delta) - C_at(t - delta)) / (2 * delta)
        est = C_derivative_quadrature(DOUBLE_WELL, DensityParams(m, beta(s, t), C_t), s, t, n_points=n_points)
        rel = abs(est - fd) / abs(fd)
        checks.append(Check(f"C'(t) vs finite difference at t={t}", bool(rel <= 0.01), rel, "relative error <= 0.01"))
    return checks


# ------------------------------------------------------------------ gibbs-limit


def gibbs_limit_errors(eps=(1e-2, 1e-3, 1e-4), beta_: float = 1.0, C: float = 0.0, u_max: float = 10.0):
    u = np.linspace(0.0, u_max, 100)
    target = np.exp(-beta_ * (u - C))
    return [float(np.max(np.abs(rho(DensityParams(1.0 + e, beta_, C, kappa=2), u) - target))) for e in eps]


@_timed
def suite_gibbs_limit() -> list[Check]:
    err = gibbs_limit_errors()
    return [
        Check("sup error decreasing over eps = 1e-2, 1e-3, 1e-4", bool(err[0] > err[1] > err[2]), err, "decreasing"),
        Check("sup error at eps = 1e-4", bool(err[2] < 5e-3), err[2], "< 5e-3"),
    ]


# -------------------------------------------------------------------- transport


def vertex_enumeration_ot(points, weights):
    """Minimum cost over every vertex of ``{G >= 0 : G 1 = 1, G^T 1 = n w}``.

    Each vertex is a basic feasible solution: pick ``2n - 1`` of the ``n^2``
    variables, solve the (full-rank) equality system on them, keep it if
    nonnegative. Exponential; meant for ``n <= 4``.
    """
    x = np.asarray(points, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    n = x.shape[0]
    cost = squared_distances(x).ravel()
    A = np.zeros((2 * n, n * n))
    for i in range(n):
        A[i, i * n:(i + 1) * n] = 1.0
        A[n + i, i::n] = 1.0
    b = np.concatenate([np.ones(n), n * np.asarray(weights, dtype=float)])
    A, b = A[:-1], b[:-1]  # one redundant equation
    k = 2 * n - 1
    combos = np.array(list(itertools.combinations(range(n * n), k)))
    mats = A[:, combos].transpose(1, 0, 2)  # (ncombo, k, k)
    det = np.linalg.det(mats)
    ok = np.abs(det) > 1e-9
    sols = np.linalg.solve(mats[ok], np.broadcast_to(b, (ok.sum(), k))[..., None])[..., 0]
    feasible = np.all(sols >= -1e-12, axis=1)
    costs = np.einsum("ij,ij->i", sols[feasible], cost[combos[ok][feasible]])
    return float(costs.min())


def _random_instance(rng, n, d):
    pts = rng.normal(size=(n, d))
    # rational weights with small denominators keep degenerate vertices in play
    num = rng.integers(0, 5, size=n)
    if num.sum() == 0:
        num[rng.integers(n)] = 1
    return pts, num / num.sum()


@_timed
def suite_transport(n_small: int = 200, large_sizes=(10, 100, 500, 2000), seed: int = 7) -> list[Check]:
    rng = np.random.default_rng(seed)
    worst_gap = 0.0
    worst_small_feas = 0.0
    for _ in range(n_small):
        n = int(rng.integers(1, 5))
        d = int(rng.integers(1, 3))
        pts, w = _random_instance(rng, n, d)
        plan = solve_discrete_ot(pts, w)
        worst_gap = max(worst_gap, abs(plan.cost - vertex_enumeration_ot(pts, w)))
        worst_small_feas = max(worst_small_feas, _feasibility(plan.G, w))
    worst_feas = worst_small_feas
    for n in large_sizes:
        pts = rng.normal(size=(n, 2))
        w = rng.random(n)
        w /= w.sum()
        worst_feas = max(worst_feas, _feasibility(solve_discrete_ot(pts, w).G, w))
    return [
        Check(f"exact plan cost = vertex enumeration on {n_small} instances", bool(worst_gap <= 1e-9), worst_gap, "<= 1e-9"),
        Check(f"marginal feasibility up to n={max(large_sizes)}", bool(worst_feas <= 1e-9), worst_feas, "<= 1e-9"),
    ]


def _feasibility(G, w) -> float:
    n = G.shape[0]
    return float(max(np.abs(G.sum(axis=1) - 1.0).max(), np.abs(G.sum(axis=0) - n * w).max(), max(0.0, -G.min())))


# ------------------------------------------------------------------ fixed point


def _traj_equal(a, b) -> bool:
    return all(
        np.array_equal(getattr(x, f), getattr(y, f), equal_nan=True)
        for x, y in zip(a, b)
        for f in ("times", "positions", "C", "plan_cost", "ess", "energies", "running_min_u")
    )


@_timed
def suite_fixed_point(workers=(1, 4)) -> list[Check]:
    rng = np.random.default_rng(3)
    x = rng.uniform(-6, 6, size=(50, 1))
    sched = _quiet("constant", 2.0)
    worst = 0.0
    for method in ("csg", "csa"):
        spec = IntegratorSpec(dt=0.002, k=5, T=0.01, method=method)
        e = Ensemble(x, C=1.0)
        p = DensityParams(2.0, 2.0, 1.0) if method == "csg" else None
        v = refresh_velocity(e, DOUBLE_WELL, p, sched, spec).velocities
        worst = max(worst, float(np.abs(v).max()))
    cfg = RunConfig(
        method="csg", potential="double_well", schedule=_quiet("quadratic", 0.25, 25.0), n_particles=20,
        n_runs=4, T=0.1, dt=0.002, k=10, record_every=5, seed=11,
        init=InitSpec(kind="swarm", burn_in_steps=200),
    )
    results = [run_experiment(cfg, workers=w) for w in workers]
    same = all(_traj_equal(results[0], r) for r in results[1:])
    return [
        Check("constant schedule gives zero velocities (csg, csa)", bool(worst == 0.0), worst, "== 0"),
        Check(f"bit-identical trajectories for workers {list(workers)}", bool(same), same, "True"),
    ]


# ------------------------------------------------------------ experiment level


def dw_csg_config(**kw) -> RunConfig:
    """Double-well heatmap setting: quadratic schedule, 100 particles, dt 0.002, h 0.04."""
    base = dict(
        method="csg", potential="double_well", schedule=_quiet("quadratic", 0.25, 25.0), m=2.0,
        n_particles=100, n_runs=20, dt=0.002, k=20, T=1.0, noise_factor=2.0, seed=2024, record_every=25,
        init=InitSpec(kind="swarm", burn_in_steps=10_000, burn_in_dt=0.002),
    )
    base.update(kw)
    return RunConfig(**base)


def small_sample_config(method: str, potential: str, schedule: CoolingSchedule, m: float = 2.0, k: int = 20,
                        n_runs: int = 200, **kw) -> RunConfig:
    """Subset protocol: a 1000-point reference sample, 5 particles per run."""
    if potential == "double_well":
        init = InitSpec(kind="swarm" if method == "csg" else "langevin", burn_in_steps=4000, burn_in_dt=0.005,
                        reference_size=1000, reference_seed=99)
    else:
        init = InitSpec(kind="mixture", centers=((2.0, -1.0), (-2.0, 1.0)), cov_scale=0.005,
                        reference_size=1000, reference_seed=99)
    base = dict(
        method=method, potential=potential, schedule=schedule, m=m, n_particles=5, n_runs=n_runs, dt=0.002,
        k=k, T=1.0, seed=31, record_every=25, init=init,
    )
    base.update(kw)
    return RunConfig(**base)


def criterion_a1(n_runs: int = 20, workers: int = 1) -> list[Check]:
    t0 = time.perf_counter()
    trajs = run_experiment(dw_csg_config(n_runs=n_runs), workers=workers)
    final = np.concatenate([tr.positions[-1, :, 0] for tr in trajs])
    frac = float(np.mean((final >= 3.0) & (final <= 5.0)))
    med = float(np.median([tr.positions[-1, :, 0].mean() for tr in trajs]))
    dt = time.perf_counter() - t0
    return [
        Check("A1 fraction of particles in [3,5] at t=1", frac >= 0.8, frac, ">= 0.8", dt / 2),
        Check("A1 median ensemble mean within 0.5 of 4", abs(med - 4.0) <= 0.5, med, "|x - 4| <= 0.5", dt / 2),
    ]


def _final_median(cfg: RunConfig, workers: int) -> tuple[float, float]:
    t0 = time.perf_counter()
    trajs = run_experiment(cfg, workers=workers)
    _, curve = median_min_u_curve(trajs, 5)
    return float(curve[-1]), time.perf_counter() - t0


def criterion_a2(n_runs: int = 200, workers: int = 1) -> list[Check]:
    s = _quiet("quadratic", 0.25, 25.0)
    out = []
    for label, cfg, bound in (
        ("CSA", small_sample_config("csa", "double_well", s, n_runs=n_runs), 0.2),
        ("CSG m=2", small_sample_config("csg", "double_well", s, m=2.0, n_runs=n_runs), 0.2),
        ("CSG m=6 (h=0.02)", small_sample_config("csg", "double_well", s, m=6.0, k=10, n_runs=n_runs), 1.0),
    ):
        val, dt = _final_median(cfg, workers)
        out.append(Check(f"A2 double-well {label} final median min-U", val < bound, val, f"< {bound}", dt))
    return out


def criterion_a3(n_runs: int = 200, workers: int = 1) -> list[Check]:
    s25 = _quiet("linear", 0.25, 25.0)
    s50 = _quiet("linear", 0.25, 50.0)
    out = []
    for label, cfg, bound in (
        ("CSA beta=0.25+25t", small_sample_config("csa", "six_hump_camel", s25, n_runs=n_runs), 0.3),
        ("CSG m=2 beta=0.25+25t", small_sample_config("csg", "six_hump_camel", s25, n_runs=n_runs), 0.3),
        ("CSG m=2 beta=0.25+50t", small_sample_config("csg", "six_hump_camel", s50, n_runs=n_runs), 0.3),
        ("CSA beta=0.25+50t (recorded only)", small_sample_config("csa", "six_hump_camel", s50, n_runs=n_runs), None),
    ):
        val, dt = _final_median(cfg, workers)
        if bound is None:
            out.append(Check(f"A3 camel {label} final median min-U", True, val, "reported, not asserted", dt))
        else:
            out.append(Check(f"A3 camel {label} final median min-U", val < bound, val, f"< {bound}", dt))
    return out


def suite_acceptance(workers: int = 1) -> list[Check]:
    checks = []
    checks += criterion_a1(workers=workers)
    checks += criterion_a2(workers=workers)
    checks += criterion_a3(workers=workers)
    checks += suite_weak_convergence()
    checks += suite_c_prime()
    checks += suite_gibbs_limit()
    checks += suite_transport()
    checks += suite_fixed_point()
    return checks


SUITES = {
    "lambert": suite_lambert,
    "weak-convergence": suite_weak_convergence,
    "c-prime": suite_c_prime,
    "gibbs-limit": suite_gibbs_limit,
    "transport": suite_transport,
    "fixed-point": suite_fixed_point,
    "acceptance": suite_acceptance,
}


def run_suite(name: str, **kwargs) -> list[Check]:
    if name == "all":
        return [c for key, fn in SUITES.items() if key != "acceptance" for c in fn()]
    try:
        fn = SUITES[name]
    except KeyError:
        raise ValueError(f"unknown suite {name!r}; expected one of {sorted(SUITES) + ['all']}") from None
    return fn(**kwargs)


def format_report(checks) -> str:
    lines = [c.line() for c in checks]
    n_fail = sum(not c.passed for c in checks)
    lines.append(f"{len(checks) - n_fail}/{len(checks)} checks passed")
    return "\n".join(lines)
