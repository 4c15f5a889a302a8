"""Benchmark objectives with analytic gradients.

Both builtins are shifted so that their global minimum value is 0.
Points are passed as arrays of shape ``(n, d)`` (or ``(d,)`` for one point).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = [
    "Potential",
    "DOUBLE_WELL",
    "SIX_HUMP_CAMEL",
    "POTENTIALS",
    "double_well_1d",
    "double_well_1d_grad",
    "six_hump_camel",
    "six_hump_camel_grad",
    "get_potential",
    "grad",
]

CAMEL_SHIFT = 1.0316


def double_well_1d(x):
    """Piecewise double-well: global minimum 0 at x=4, local minimum 2 at x=-3."""
    x = np.asarray(x, dtype=float)
    return np.select(
        [x <= -6, x < -2, x <= 2, x <= 6],
        [-12.0 * x - 52.0, 2.0 * (x + 3.0) ** 2 + 2.0, 8.0 - x**2, (x - 4.0) ** 2],
        default=4.0 * x - 20.0,
    )


def double_well_1d_grad(x):
    # same branch conditions as the value, so knots take the closed-side branch
    x = np.asarray(x, dtype=float)
    return np.select(
        [x <= -6, x < -2, x <= 2, x <= 6],
        [np.full_like(x, -12.0), 4.0 * (x + 3.0), -2.0 * x, 2.0 * (x - 4.0)],
        default=4.0,
    )


def six_hump_camel(x1, x2):
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    return (
        (4.0 - 2.1 * x1**2 + x1**4 / 3.0) * x1**2
        + x1 * x2
        + (4.0 * x2**2 - 4.0) * x2**2
        + CAMEL_SHIFT
    )


def six_hump_camel_grad(x1, x2):
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    d1 = 8.0 * x1 - 8.4 * x1**3 + 2.0 * x1**5 + x2
    d2 = x1 - 8.0 * x2 + 16.0 * x2**3
    return d1, d2


@dataclass(frozen=True)
class Potential:
    """An objective ``U`` on R^d with its gradient and reference metadata.

    ``value`` maps an ``(n, d)`` array to ``(n,)``; ``gradient`` maps it to
    ``(n, d)``.
    """

    name: str
    dim: int
    value: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    gradient: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    global_minima: tuple = ()
    domain_box: tuple = ()
    knots: tuple = ()

    def _points(self, x) -> tuple[np.ndarray, bool]:
        x = np.asarray(x, dtype=float)
        single = x.ndim <= 1 and (x.ndim == 0 or x.shape[0] == self.dim)
        if x.ndim == 0:
            x = x.reshape(1, 1)
        elif x.ndim == 1:
            x = x.reshape(1, -1) if single else x.reshape(-1, 1)
        if x.shape[1] != self.dim:
            raise ValueError(f"{self.name} expects points of dimension {self.dim}, got {x.shape}")
        return x, single

    def __call__(self, x):
        pts, single = self._points(x)
        u = self.value(pts)
        return float(u[0]) if single else u

    def grad(self, x):
        pts, single = self._points(x)
        g = self.gradient(pts)
        return g[0] if single else g

    @property
    def min_value(self) -> float:
        return min(v for _, v in self.global_minima)


def _dw_value(x: np.ndarray) -> np.ndarray:
    return double_well_1d(x[:, 0])


def _dw_grad(x: np.ndarray) -> np.ndarray:
    return double_well_1d_grad(x[:, 0])[:, None]


def _camel_value(x: np.ndarray) -> np.ndarray:
    return six_hump_camel(x[:, 0], x[:, 1])


def _camel_grad(x: np.ndarray) -> np.ndarray:
    return np.stack(six_hump_camel_grad(x[:, 0], x[:, 1]), axis=1)


DOUBLE_WELL = Potential(
    name="double_well",
    dim=1,
    value=_dw_value,
    gradient=_dw_grad,
    global_minima=(((4.0,), 0.0),),
    domain_box=((-8.0, 8.0),),
    knots=(-6.0, -2.0, 2.0, 6.0),
)

SIX_HUMP_CAMEL = Potential(
    name="six_hump_camel",
    dim=2,
    value=_camel_value,
    gradient=_camel_grad,
    global_minima=(((0.0898, -0.7126), 0.0), ((-0.0898, 0.7126), 0.0)),
    domain_box=((-3.0, 3.0), (-2.0, 2.0)),
)

POTENTIALS = {p.name: p for p in (DOUBLE_WELL, SIX_HUMP_CAMEL)}


def get_potential(name: str) -> Potential:
    try:
        return POTENTIALS[name]
    except KeyError:
        raise ValueError(f"unknown potential {name!r}; expected one of {sorted(POTENTIALS)}") from None


def grad(p: Potential, x):
    return p.grad(x)
