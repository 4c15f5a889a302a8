"""Normalization constant ``C(t)`` of the swarm density.

Two estimators are provided. The empirical one is what the particle scheme
uses: the root in ``C`` of ``mean_i rho(U(X_i); C) - 1``. The quadrature one
integrates the density on a tensor grid over the potential's box and is used
as a reference in tests and validation.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .density import DensityParams, log_rho, rho, weight_a
from .potentials import Potential
from .scalar_math import BracketedFn, find_root, lambert_w0_exp
from .schedule import CoolingSchedule, beta, beta_prime

__all__ = [
    "CState",
    "NegativePredictionWarning",
    "normalization_defect",
    "estimate_C_empirical",
    "estimate_C_from_energies",
    "fit_C_quadrature",
    "quadrature_grid",
    "coarse_C_derivative",
    "C_derivative_quadrature",
    "predict_C",
]

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-8
DEFAULT_EXPANSIONS = 60


class NegativePredictionWarning(UserWarning):
    """A coarse prediction of ``C`` went negative and was clamped to zero."""


@dataclass(frozen=True)
class CState:
    C: float
    t: float
    method: str
    residual: float


def normalization_defect(u, p: DensityParams, C: float, weights=None) -> float:
    """``sum_i w_i rho(u_i; C) - 1`` with ``w_i = 1/n`` by default."""
    with np.errstate(over="ignore"):
        r = rho(p.with_C(C), u)
    if weights is None:
        return float(np.mean(r)) - 1.0
    return float(np.dot(weights, r)) - 1.0


def estimate_C_from_energies(
    u,
    p: DensityParams,
    tol: float = DEFAULT_TOL,
    t: float = 0.0,
    weights=None,
    expansions: int = DEFAULT_EXPANSIONS,
    guess: float | None = None,
) -> CState:
    """Empirical ``C`` from precomputed energies ``u_i = U(X_i)``.

    ``weights`` (summing to anything) replaces the uniform ``1/n``; a uniform
    grid weighted by its cell width turns the estimator into a Riemann sum.
    With ``guess`` (the previous step's ``C``) a warm-started Newton iteration
    runs first; bracketed Brent is the fallback and the default.
    """
    u = np.asarray(u, dtype=float).ravel()
    if u.size == 0:
        raise ValueError("need at least one particle to estimate C")
    if tol <= 0:
        raise ValueError("tol must be positive")
    # rho <= 1 wherever u >= C, so the root is >= min(u) when all weights are 1/n;
    # the extra unit keeps rounding in rho(C) = 1 from erasing the sign change
    lo = min(0.0, float(u.min())) - 1.0
    hi = float(u.max()) + 1.0

    def f(C: float) -> float:
        return normalization_defect(u, p, C, weights)

    C = None if guess is None else _newton_C(u, p, float(guess), tol, weights)
    if C is None:
        C = find_root(BracketedFn(f, lo, hi, tol), expansions=expansions, downward=weights is not None)
    return CState(C=C, t=t, method="empirical", residual=f(C))


def _newton_C(u, p: DensityParams, C: float, tol: float, weights, max_iter: int = 40):
    """Safeguarded Newton for the empirical root, warm-started at ``C``.

    Uses ``d rho / dC = kappa beta a rho``. The defect is increasing in ``C``
    (and convex for ``m <= 2``); a step leaving the known sign bracket is
    replaced by bisection. Returns ``None`` if it does not settle, so the
    caller can fall back to bracketing.
    """
    wts = np.full(u.size, 1.0 / u.size) if weights is None else np.asarray(weights, dtype=float)
    ln_m = math.log(p.m)
    k = p.kappa * (p.m - 1.0) * p.beta
    lo, hi = -math.inf, math.inf
    for _ in range(max_iter):
        z = ln_m + p.m - k * (u - C)
        w = lambert_w0_exp(z)
        with np.errstate(over="ignore"):
            r = np.exp((z - w - ln_m) / (p.m - 1.0))
        f = float(wts @ r) - 1.0
        df = p.kappa * p.beta * float(wts @ (r / (1.0 + w)))
        if not (math.isfinite(f) and math.isfinite(df)) or df <= 0:
            return None
        if f == 0.0:
            return C
        if f < 0:
            lo = C
        else:
            hi = C
        nxt = C - f / df
        if not lo < nxt < hi:
            if not (math.isfinite(lo) and math.isfinite(hi)):
                return None
            nxt = 0.5 * (lo + hi)
        if abs(nxt - C) <= tol:
            return nxt
        C = nxt
    return None


def estimate_C_empirical(
    particles,
    pot: Potential,
    p: DensityParams,
    tol: float = DEFAULT_TOL,
    t: float = 0.0,
    weights=None,
    expansions: int = DEFAULT_EXPANSIONS,
) -> CState:
    """Empirical normalization constant for a particle cloud; ``p.C`` is ignored."""
    u = np.atleast_1d(pot(np.asarray(particles, dtype=float)))
    return estimate_C_from_energies(u, p, tol=tol, t=t, weights=weights, expansions=expansions)


def quadrature_grid(pot: Potential, n_points=None):
    """Tensor grid over ``pot.domain_box``.

    Returns ``(axes, points)`` where ``axes`` is the list of 1D node arrays
    and ``points`` the ``(N, d)`` array of all nodes in C order.
    """
    if n_points is None:
        n_points = 100_001 if pot.dim == 1 else (601, 401)
    if np.ndim(n_points) == 0:
        n_points = (int(n_points),) * pot.dim
    if len(n_points) != pot.dim or pot.dim > 2:
        raise ValueError("quadrature grids support dimensions 1 and 2 only")
    axes = [np.linspace(lo, hi, n) for (lo, hi), n in zip(pot.domain_box, n_points)]
    mesh = np.meshgrid(*axes, indexing="ij")
    points = np.stack([m.ravel() for m in mesh], axis=1)
    return axes, points


def _trapezoid(values: np.ndarray, axes) -> float:
    v = values.reshape([len(a) for a in axes])
    for ax in reversed(axes):
        v = np.trapezoid(v, ax, axis=-1)
    return float(v)


def fit_C_quadrature(
    pot: Potential,
    p: DensityParams,
    n_points=None,
    tol: float = 1e-12,
    t: float = 0.0,
    expansions: int = DEFAULT_EXPANSIONS,
) -> CState:
    """``C`` such that the trapezoid integral of ``rho`` over the box equals 1.

    The root may be negative: at small ``beta`` on a large box the density with
    ``C = 0`` already carries more than unit mass.
    """
    axes, points = quadrature_grid(pot, n_points)
    u = pot.value(points)

    def f(C: float) -> float:
        return _trapezoid(rho(p.with_C(C), u), axes) - 1.0

    lo, hi = float(u.min()) - 1.0, float(u.max()) + 1.0
    C = find_root(BracketedFn(f, lo, hi, tol), expansions=expansions, downward=True)
    return CState(C=C, t=t, method="quadrature", residual=f(C))


def quadrature_mass(pot: Potential, p: DensityParams, mask_fn=None, n_points=None) -> float:
    """Trapezoid integral of ``rho`` (times an optional indicator) over the box."""
    axes, points = quadrature_grid(pot, n_points)
    vals = rho(p, pot.value(points))
    if mask_fn is not None:
        vals = vals * mask_fn(points)
    return _trapezoid(vals, axes)


def coarse_C_derivative(u, p: DensityParams, s: CoolingSchedule, t: float, weights=None) -> float:
    """Estimate of ``C'(t)`` from energies of particles at time ``t``.

    ``(beta'/beta) * sum_i (u_i - C) a_i / sum_i a_i`` with ``a`` from
    :func:`weight_a`; ``weights`` multiplies each term (quadrature use).
    """
    bp = beta_prime(s, t)
    if bp == 0.0:
        return 0.0
    u = np.asarray(u, dtype=float).ravel()
    a = weight_a(p, u)
    if weights is not None:
        a = a * weights
    return float(bp / beta(s, t) * np.dot(u - p.C, a) / a.sum())


def C_derivative_quadrature(
    pot: Potential, p: DensityParams, s: CoolingSchedule, t: float, n_points=None
) -> float:
    """``C'(t)`` as the ratio of trapezoid integrals of ``(U - C) a rho`` and ``a rho``."""
    bp = beta_prime(s, t)
    if bp == 0.0:
        return 0.0
    axes, points = quadrature_grid(pot, n_points)
    u = pot.value(points)
    ar = weight_a(p, u) * np.exp(log_rho(p, u))
    return bp / beta(s, t) * _trapezoid((u - p.C) * ar, axes) / _trapezoid(ar, axes)


def predict_C(C: float, cprime: float, h: float) -> float:
    """First-order prediction ``C + h C'``, clamped at zero."""
    if h < 0:
        raise ValueError("h must be nonnegative")
    out = C + h * cprime
    if out < 0:
        warnings.warn(
            f"predicted C={out:.3g} is negative; clamped to 0",
            NegativePredictionWarning,
            stacklevel=2,
        )
        return 0.0
    return out
