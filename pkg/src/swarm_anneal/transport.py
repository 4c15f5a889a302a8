"""Velocity field estimation by reweighting and exact discrete transport.

A sample of the current density is reweighted towards the density one
coarse step ahead, the squared-Euclidean optimal plan from the uniform
empirical measure to the reweighted one is computed exactly, and each
particle moves towards the barycenter of the mass it sends.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .density import DensityParams, log_gibbs, log_rho
from .potentials import Potential

# POT probes every array backend on import; none of them are needed here
for _key in ("PYTORCH", "JAX", "CUPY", "TENSORFLOW"):
    os.environ.setdefault(f"POT_BACKEND_DISABLE_{_key}", "1")
import ot  # noqa: E402

__all__ = [
    "WeightedSample",
    "TransportPlan",
    "DegenerateWeightsError",
    "TransportError",
    "importance_weights",
    "importance_weights_from_energies",
    "gibbs_importance_weights",
    "solve_discrete_ot",
    "barycentric_velocity",
    "effective_sample_size",
    "squared_distances",
]

MAX_SIMPLEX_ITER = 50_000_000


class DegenerateWeightsError(RuntimeError):
    pass


class TransportError(RuntimeError):
    pass


@dataclass(frozen=True)
class WeightedSample:
    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self) -> None:
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        w = np.asarray(self.weights, dtype=float).ravel()
        if pts.shape[0] < 1 or pts.shape[0] != w.size:
            raise ValueError("points and weights must be nonempty and of equal length")
        if not np.all(np.isfinite(pts)):
            raise ValueError("points must be finite")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("weights must be nonnegative and sum to 1")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)


@dataclass(frozen=True)
class TransportPlan:
    """Coupling with unit row sums and column sums ``n * w``."""

    G: np.ndarray
    cost: float


def _normalize_log_weights(logw: np.ndarray) -> np.ndarray:
    logw = np.asarray(logw, dtype=float)
    w = np.exp(logw - logw.max())
    total = w.sum()
    if not np.isfinite(total) or total <= 0:
        raise DegenerateWeightsError("importance weights vanished after max-shift")
    return w / total


def importance_weights_from_energies(u, p_now: DensityParams, p_next: DensityParams) -> np.ndarray:
    """Self-normalized ratios ``rho_next(u_i) / rho_now(u_i)``."""
    if p_now.m != p_next.m or p_now.kappa != p_next.kappa:
        raise ValueError("both densities must share m and kappa")
    u = np.asarray(u, dtype=float).ravel()
    if u.size == 0:
        raise ValueError("no particles")
    return _normalize_log_weights(log_rho(p_next, u) - log_rho(p_now, u))


def importance_weights(particles, pot: Potential, p_now: DensityParams, p_next: DensityParams) -> np.ndarray:
    u = np.atleast_1d(pot(np.asarray(particles, dtype=float)))
    return importance_weights_from_energies(u, p_now, p_next)


def gibbs_importance_weights(u, beta_now: float, beta_next: float) -> np.ndarray:
    """Gibbs ratios ``exp(-(beta_next - beta_now) u_i)``; no normalization constant needed."""
    u = np.asarray(u, dtype=float).ravel()
    return _normalize_log_weights(log_gibbs(beta_next, u) - log_gibbs(beta_now, u))


def _as_points(points) -> np.ndarray:
    x = np.asarray(points, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    return x


def squared_distances(points) -> np.ndarray:
    """Cost matrix ``|X_i - X_j|^2``; 1D input is read as ``n`` scalar points."""
    x = _as_points(points)
    diff = x[:, None, :] - x[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def solve_discrete_ot(source_points, target_weights, tol: float = 1e-9) -> TransportPlan:
    """Exact plan minimizing ``<|X_i - X_j|^2, G>`` subject to ``G 1 = 1``, ``G^T 1 = n w``.

    Solved with a network simplex (POT's ``emd``), which returns a vertex of
    the transportation polytope deterministically for given inputs.

    Raises
    ------
    ValueError
        Weights of the wrong length, negative, or not summing to 1 within ``tol``.
    TransportError
        The simplex did not reach optimality.
    """
    x = _as_points(source_points)
    w = np.asarray(target_weights, dtype=float).ravel()
    n = x.shape[0]
    if w.size != n:
        raise ValueError(f"{n} points but {w.size} weights")
    if np.any(w < 0) or abs(w.sum() - 1.0) > tol:
        raise ValueError(f"target weights must be a probability vector (sum={w.sum()!r})")
    if n == 1:
        return TransportPlan(G=np.ones((1, 1)), cost=0.0)
    M = np.ascontiguousarray(squared_distances(x))
    a = np.full(n, 1.0 / n)
    b = w / w.sum()
    plan, info = ot.emd(a, b, M, numItermax=MAX_SIMPLEX_ITER, log=True)
    if info.get("result_code", 1) != 1:
        raise TransportError(f"network simplex failed: {info.get('warning')}")
    G = n * np.asarray(plan)
    return TransportPlan(G=G, cost=float(np.sum(G * M)))


def barycentric_velocity(plan: TransportPlan, points, h: float) -> np.ndarray:
    """``V_i = (sum_j G_ij X_j - X_i) / h``."""
    if not h > 0:
        raise ValueError(f"h must be positive, got {h}")
    x = _as_points(points)
    return (plan.G @ x - x) / h


def effective_sample_size(weights) -> float:
    w = np.asarray(weights, dtype=float)
    return float(1.0 / np.sum(w * w))
