"""Scalar special functions and bracketed root finding.

The Lambert function is only ever needed on its principal branch and on
nonnegative arguments. Densities route through :func:`lambert_w0_exp`, which
takes the logarithm of the argument so that ``W0(exp(z))`` can be evaluated
for ``z`` far outside the range where ``exp(z)`` is representable.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import brentq
from scipy.special import wrightomega

__all__ = [
    "BracketError",
    "BracketedFn",
    "find_root",
    "lambert_w0",
    "lambert_w0_exp",
]

# below this log-argument W0(e^z) = e^z to double precision
_SMALL_Z = -40.0


class BracketError(ValueError):
    """Raised when a bracket does not enclose a sign change."""


def _as_output(w: np.ndarray, shape: tuple):
    return float(w[0]) if shape == () else w.reshape(shape)


def lambert_w0_exp(z):
    """Evaluate ``W0(exp(z))``, i.e. the positive solution of ``w + ln(w) = z``.

    This is the Wright omega function restricted to the real line. Works for
    any finite ``z``; for ``z <= -40`` the answer is ``exp(z)`` to machine
    precision and is returned directly.

    Parameters
    ----------
    z : float or array_like
        Log of the Lambert argument.

    Returns
    -------
    float or ndarray
        ``w > 0`` (underflows to 0 only when ``z < -745``).
    """
    shape = np.shape(z)
    z = np.asarray(z, dtype=float).ravel()
    if not np.all(np.isfinite(z)):
        raise ValueError("lambert_w0_exp requires finite input")
    w = np.exp(np.minimum(z, _SMALL_Z))
    big = z > _SMALL_Z
    w[big] = wrightomega(z[big]).real
    return _as_output(w, shape)


def lambert_w0(x):
    """Principal branch of the Lambert function for ``x >= 0``.

    ``lambert_w0(x) * exp(lambert_w0(x)) == x``; ``lambert_w0(0) == 0``.
    """
    shape = np.shape(x)
    x = np.asarray(x, dtype=float).ravel()
    if np.any(np.isnan(x)) or np.any(x < 0):
        raise ValueError("lambert_w0 is only defined here for x >= 0")
    if np.any(np.isinf(x)):
        raise ValueError("lambert_w0 requires finite input")
    w = np.zeros_like(x)
    pos = x > 0
    if np.any(pos):
        w[pos] = lambert_w0_exp(np.log(x[pos]))
    return _as_output(w, shape)


@dataclass(frozen=True)
class BracketedFn:
    """A scalar function together with a bracket ``[lo, hi]`` and tolerance."""

    f: Callable[[float], float]
    lo: float
    hi: float
    tol: float

    def __post_init__(self) -> None:
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if not self.hi > self.lo:
            raise ValueError(f"empty bracket [{self.lo}, {self.hi}]")


def _expand(bf: BracketedFn, expansions: int, downward: bool):
    lo, hi = bf.lo, bf.hi
    flo, fhi = bf.f(lo), bf.f(hi)
    for _ in range(expansions):
        if flo * fhi <= 0:
            break
        width = hi - lo
        hi += width
        fhi = bf.f(hi)
        if downward:
            lo -= width
            flo = bf.f(lo)
    return lo, hi, flo, fhi


def find_root(bf: BracketedFn, expansions: int = 0, downward: bool = False) -> float:
    """Brent root of ``bf.f`` inside its bracket.

    If the bracket has no sign change, its width is doubled up to
    ``expansions`` times (upper end only, or both ends if ``downward``) before giving up.

    Raises
    ------
    BracketError
        No sign change found.
    """
    lo, hi, flo, fhi = _expand(bf, expansions, downward)
    if flo == 0.0:
        return float(lo)
    if fhi == 0.0:
        return float(hi)
    if flo * fhi > 0:
        raise BracketError(
            f"no sign change on [{lo:.6g}, {hi:.6g}]: f(lo)={flo:.3g}, f(hi)={fhi:.3g}"
        )
    return float(brentq(bf.f, lo, hi, xtol=bf.tol, maxiter=500))
