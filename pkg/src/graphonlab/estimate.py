from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class Estimate:
    """A numeric value with its standard error and the budget that produced it.

    ``method`` is one of ``"monte-carlo"``, ``"quadrature"``, ``"exact-step"``
    or ``"exact"``.  Arithmetic combines standard errors in quadrature, which
    is valid for independently produced estimates.
    """

    value: float
    stderr: float = 0.0
    budget: int = 0
    method: str = "exact"

    def __post_init__(self):
        if not self.stderr >= 0:
            raise ValueError("stderr must be non-negative")
        if self.method == "exact-step" and self.stderr != 0:
            raise ValueError("exact-step estimates carry no standard error")

    @classmethod
    def const(cls, value: float) -> "Estimate":
        return cls(float(value), 0.0, 0, "exact")

    def _combine(self, other: "Estimate", value: float, stderr: float) -> "Estimate":
        methods = {self.method, other.method} - {"exact"}
        method = methods.pop() if len(methods) == 1 else ("mixed" if methods else "exact")
        return Estimate(value, stderr, self.budget + other.budget, method)

    def __add__(self, other):
        other = _as_estimate(other)
        return self._combine(other, self.value + other.value, math.hypot(self.stderr, other.stderr))

    __radd__ = __add__

    def __neg__(self):
        return Estimate(-self.value, self.stderr, self.budget, self.method)

    def __sub__(self, other):
        return self + (-_as_estimate(other))

    def __rsub__(self, other):
        return _as_estimate(other) - self

    def __mul__(self, other):
        other = _as_estimate(other)
        a, b = self.value, other.value
        sa, sb = self.stderr, other.stderr
        var = (b * sa) ** 2 + (a * sb) ** 2 + (sa * sb) ** 2
        return self._combine(other, a * b, math.sqrt(var))

    __rmul__ = __mul__

    def __abs__(self):
        return Estimate(abs(self.value), self.stderr, self.budget, self.method)

    def within(self, target: float, sigmas: float = 3.0, tol: float = 0.0) -> bool:
        return abs(self.value - target) <= max(tol, sigmas * self.stderr)

    def __format__(self, spec):
        return f"{format(self.value, spec)} ± {format(self.stderr, spec)}"


def _as_estimate(x) -> Estimate:
    return x if isinstance(x, Estimate) else Estimate.const(x)
