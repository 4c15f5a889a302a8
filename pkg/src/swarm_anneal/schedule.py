"""Polynomial cooling schedules with exact derivatives."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

__all__ = ["CoolingSchedule", "ColdStartWarning", "beta", "beta_prime"]

KINDS = ("constant", "linear", "quadratic", "polynomial")


class ColdStartWarning(UserWarning):
    """The schedule starts below an inverse temperature of 1."""


@dataclass(frozen=True)
class CoolingSchedule:
    """``beta(t) = beta0 + rate * t**exponent``.

    ``linear`` and ``quadratic`` fix the exponent to 1 and 2; ``polynomial``
    uses the given ``exponent``; ``constant`` ignores ``rate``.
    """

    kind: str
    beta0: float
    rate: float = 0.0
    exponent: int = 1

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown schedule kind {self.kind!r}; expected one of {KINDS}")
        if self.beta0 < 0 or self.rate < 0:
            raise ValueError("beta0 and rate must be nonnegative")
        if self.kind == "linear":
            object.__setattr__(self, "exponent", 1)
        elif self.kind == "quadratic":
            object.__setattr__(self, "exponent", 2)
        elif self.kind == "constant":
            object.__setattr__(self, "rate", 0.0)
        if int(self.exponent) != self.exponent or self.exponent < 1:
            raise ValueError(f"exponent must be a positive integer, got {self.exponent}")
        object.__setattr__(self, "exponent", int(self.exponent))
        if self.beta0 < 1:
            warnings.warn(
                f"schedule starts at beta0={self.beta0} < 1; the convergence theory "
                "assumes beta >= 1",
                ColdStartWarning,
                stacklevel=3,
            )

    @classmethod
    def constant(cls, beta0: float) -> "CoolingSchedule":
        return cls("constant", beta0)

    @classmethod
    def linear(cls, beta0: float, rate: float) -> "CoolingSchedule":
        return cls("linear", beta0, rate)

    @classmethod
    def quadratic(cls, beta0: float, rate: float) -> "CoolingSchedule":
        return cls("quadratic", beta0, rate)

    @classmethod
    def from_dict(cls, d: dict) -> "CoolingSchedule":
        return cls(
            kind=d["kind"],
            beta0=float(d["beta0"]),
            rate=float(d.get("rate", 0.0)),
            exponent=int(d.get("exponent", 1)),
        )

    def to_dict(self) -> dict:
        return {"kind": self.kind, "beta0": self.beta0, "rate": self.rate, "exponent": self.exponent}

    def __call__(self, t: float) -> float:
        return beta(self, t)

    def derivative(self, t: float) -> float:
        return beta_prime(self, t)


def _check_time(t: float) -> None:
    if t < 0:
        raise ValueError(f"time must be nonnegative, got {t}")


def beta(s: CoolingSchedule, t: float) -> float:
    _check_time(t)
    if s.kind == "constant":
        return s.beta0
    return s.beta0 + s.rate * t**s.exponent


def beta_prime(s: CoolingSchedule, t: float) -> float:
    _check_time(t)
    if s.kind == "constant" or s.rate == 0.0:
        return 0.0
    if s.exponent == 1:
        return s.rate
    return s.exponent * s.rate * t ** (s.exponent - 1)
