"""Severity cost model and expected-cost evaluation.

The cost of ordering Q against realized demand x is polynomial in the gap:
C_e (Q-x)^m on the excess side (x <= Q) and C_s (x-Q)^m on the shortage side.
m = 1 is the classical newsvendor cost.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .demand import DemandModel

__all__ = [
    "SeverityCost",
    "SingularCriticalRatioError",
    "cost",
    "expected_cost",
    "empirical_expected_cost",
]

MAX_SEVERITY = 10


class SingularCriticalRatioError(ValueError):
    """Raised when k_m is undefined: even severity with equal unit costs."""


@dataclass(frozen=True)
class SeverityCost:
    """Severity degree m with per-unit excess and shortage costs.

    lambda (excess-to-shortage ratio) is always derived from c_e/c_s, never
    stored, so the three can not drift apart. Equal costs are accepted here;
    operations that need the critical ratio reject the even-m singular case.
    """

    m: int
    c_e: float
    c_s: float

    def __post_init__(self):
        if not isinstance(self.m, (int, np.integer)) or not 1 <= self.m <= MAX_SEVERITY:
            raise ValueError(f"severity degree must be an integer in 1..{MAX_SEVERITY}, got {self.m!r}")
        if not (0 < self.c_e < math.inf and 0 < self.c_s < math.inf):
            raise ValueError(f"unit costs must be positive and finite, got c_e={self.c_e}, c_s={self.c_s}")

    @property
    def cost_ratio(self) -> float:
        return self.c_e / self.c_s

    @property
    def odd(self) -> bool:
        return self.m % 2 == 1

    def critical_ratio(self) -> float:
        """k_m = C_s / (C_e + (-1)^(m-1) C_s).

        Lies in (0, 1) for odd m. For even m the denominator is C_e - C_s,
        so the value can take either sign and blows up as the costs approach
        each other.
        """
        denom = self.c_e + self.sign * self.c_s
        if denom == 0:
            raise SingularCriticalRatioError(
                f"critical ratio undefined for even m={self.m} with c_e == c_s == {self.c_e}"
            )
        return self.c_s / denom

    @property
    def sign(self) -> float:
        # (-1)^(m-1): +1 for odd m, -1 for even m
        return 1.0 if self.odd else -1.0


def cost(sc: SeverityCost, q: float, x) -> float:
    """Pointwise cost of order quantity q against demand x (scalar or array)."""
    x = np.asarray(x, dtype=float)
    if q < 0 or np.any(x < 0):
        raise ValueError("order quantity and demand must be nonnegative")
    gap = q - x
    out = np.where(x <= q, sc.c_e * gap**sc.m, sc.c_s * (-gap) ** sc.m)
    return float(out) if out.ndim == 0 else out


def expected_cost(model: DemandModel, sc: SeverityCost, q: float) -> float:
    """E[C_m(q, X)] under the demand model.

    Evaluated by binomial expansion into truncated and full raw moments, which
    is exact given exact moments (no quadrature in the library path):

        C_e * sum_k C(m,k) q^(m-k) (-1)^k delta_k(q)
      + C_s * sum_k C(m,k) (-1)^(m-k) q^(m-k) (mu'_k - delta_k(q))
    """
    if q < 0:
        raise ValueError(f"order quantity must be nonnegative, got {q}")
    m = sc.m
    terms = []
    for k in range(m + 1):
        c = math.comb(m, k)
        qpow = q ** (m - k)
        dk = model.partial_raw_moment(k, q)
        mk = model.raw_moment(k)
        terms.append(sc.c_e * c * qpow * (-1.0) ** k * dk)
        terms.append(sc.c_s * c * qpow * (-1.0) ** (m - k) * (mk - dk))
    return math.fsum(terms)


def empirical_expected_cost(sample, sc: SeverityCost, q: float) -> float:
    """Sample-average cost (1/n) sum_i C_m(q, x_i); the SAA objective."""
    xs = np.asarray(sample, dtype=float)
    if xs.size == 0:
        raise ValueError("sample must be non-empty")
    return float(np.mean(cost(sc, q, xs)))
