"""Explicit invariant density of the swarm dynamics and related weights.

The swarm density at inverse temperature ``beta`` with normalization
constant ``C`` is

    rho(u) = (W0(g(u)) / m) ** (1 / (m - 1)),
    g(u)   = m * e**m * exp(-kappa * (m - 1) * beta * (u - C)),

with ``u = U(x)``. ``g`` overflows long before the experiments end, so
everything is computed from ``log g`` through :func:`lambert_w0_exp`.
``kappa = 1`` is the density of the dynamics; ``kappa = 2`` is the variant
whose ``m -> 1`` limit is exactly ``exp(-beta * (u - C))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .scalar_math import lambert_w0_exp

__all__ = [
    "DensityParams",
    "log_g",
    "log_rho",
    "rho",
    "weight_a",
    "alpha_mod",
    "gibbs_unnormalized",
    "log_gibbs",
]


@dataclass(frozen=True)
class DensityParams:
    m: float
    beta: float
    C: float = 0.0
    kappa: int = 1

    def __post_init__(self) -> None:
        if not self.m > 1:
            raise ValueError(f"m must exceed 1, got {self.m}")
        if not self.beta > 0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if self.kappa not in (1, 2):
            raise ValueError(f"kappa must be 1 or 2, got {self.kappa}")

    def with_C(self, C: float) -> "DensityParams":
        return replace(self, C=float(C))

    def with_beta(self, beta: float) -> "DensityParams":
        return replace(self, beta=float(beta))


def log_g(p: DensityParams, u):
    """``ln m + m - kappa (m - 1) beta (u - C)``."""
    return math.log(p.m) + p.m - p.kappa * (p.m - 1.0) * p.beta * (np.asarray(u, dtype=float) - p.C)


def _w_and_log_rho(p: DensityParams, u):
    z = log_g(p, u)
    w = lambert_w0_exp(z)
    # ln W0(e^z) = z - W0(e^z) exactly, so no log of an underflowed w
    return w, (z - w - math.log(p.m)) / (p.m - 1.0)


def log_rho(p: DensityParams, u):
    return _w_and_log_rho(p, u)[1]


def rho(p: DensityParams, u):
    """Unnormalized swarm density as a function of the energy ``u``.

    Equals 1 exactly where ``u == C``; strictly decreasing in ``u``.
    """
    return np.exp(log_rho(p, u))


def weight_a(p: DensityParams, u):
    """``1 / (1 + W0(g))``, the weight entering the derivative of ``C``."""
    w = lambert_w0_exp(log_g(p, u))
    return 1.0 / (1.0 + w)


def alpha_mod(r, m: float):
    """Diffusion modulation ``1 + r**(m - 1)``."""
    return 1.0 + np.power(np.asarray(r, dtype=float), m - 1.0)


def log_gibbs(beta: float, u):
    return -beta * np.asarray(u, dtype=float)


def gibbs_unnormalized(beta: float, u):
    """``exp(-beta u)``, flushed to exactly 0 once the exponent drops below -700."""
    e = log_gibbs(beta, u)
    return np.where(e < -700.0, 0.0, np.exp(np.maximum(e, -700.0)))
