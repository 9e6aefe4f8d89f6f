"""Demand distributions: sampling, CDF/quantile, raw and truncated raw moments.

Three demand models are supported. Uniform and Exponential are the parametric
models used in the simulation studies; Empirical wraps an observed sample and
is the entry point for estimation from data. All models expose the same small
surface:

``raw_moment(j)``
    The j-th raw moment E[X^j].
``partial_raw_moment(j, q)``
    The j-th truncated raw moment, integrating x^j over demand values below q.
``cdf(x)`` / ``quantile(p)``
    Distribution function and its (left-continuous) inverse.
``sample(n, seed)``
    n independent draws, reproducible from the seed (parametric models only).

Sampling goes through the inverse CDF applied to PCG64 uniforms so that a
given (model, n, seed) triple always yields the same vector.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "DemandModel",
    "UniformDemand",
    "ExponentialDemand",
    "EmpiricalDemand",
    "load_demand_csv",
]


def _rng(seed) -> np.random.Generator:
    # Accepts a plain integer or a numpy SeedSequence (used by the Monte-Carlo
    # driver to hand out independent streams).
    return np.random.Generator(np.random.PCG64(seed))


def _check_order(j: int) -> None:
    if not isinstance(j, (int, np.integer)) or j < 0:
        raise ValueError(f"moment order must be a nonnegative integer, got {j!r}")


def _as_points(q):
    # truncation points may come in as a scalar or a vector; both are served
    arr = np.asarray(q, dtype=float)
    if np.any(arr < 0):
        raise ValueError("truncation point must be nonnegative")
    return arr, arr.ndim == 0


class DemandModel:
    """Common interface for demand distributions."""

    def raw_moment(self, j: int) -> float:
        raise NotImplementedError

    def partial_raw_moment(self, j: int, q: float) -> float:
        raise NotImplementedError

    def cdf(self, x: float) -> float:
        raise NotImplementedError

    def quantile(self, p: float) -> float:
        raise NotImplementedError

    def sample(self, n: int, seed) -> np.ndarray:
        raise NotImplementedError

    def _check_truncation(self, q: float) -> None:
        if q < 0:
            raise ValueError(f"truncation point must be nonnegative, got {q}")

    def _check_prob(self, p: float) -> None:
        if not 0 < p < 1:
            raise ValueError(f"quantile level must lie in (0, 1), got {p}")

    def _check_sample_size(self, n: int) -> None:
        if n < 1:
            raise ValueError(f"sample size must be at least 1, got {n}")


@dataclass(frozen=True)
class UniformDemand(DemandModel):
    """Uniform demand on [lower, upper], 0 <= lower < upper."""

    lower: float = 0.0
    upper: float = 1.0

    def __post_init__(self):
        if not 0 <= self.lower < self.upper:
            raise ValueError(
                f"uniform support needs 0 <= lower < upper, got [{self.lower}, {self.upper}]"
            )

    def raw_moment(self, j: int) -> float:
        _check_order(j)
        a, b = self.lower, self.upper
        return (b ** (j + 1) - a ** (j + 1)) / ((b - a) * (j + 1))

    def partial_raw_moment(self, j: int, q):
        _check_order(j)
        qs, scalar = _as_points(q)
        a, b = self.lower, self.upper
        qc = np.clip(qs, a, b)
        out = (qc ** (j + 1) - a ** (j + 1)) / ((b - a) * (j + 1))
        return float(out) if scalar else out

    def cdf(self, x: float) -> float:
        if x < 0:
            raise ValueError(f"demand values are nonnegative, got {x}")
        if x <= self.lower:
            return 0.0
        if x >= self.upper:
            return 1.0
        return (x - self.lower) / (self.upper - self.lower)

    def quantile(self, p: float) -> float:
        self._check_prob(p)
        return self.lower + p * (self.upper - self.lower)

    def sample(self, n: int, seed) -> np.ndarray:
        self._check_sample_size(n)
        u = _rng(seed).random(n)
        return self.lower + (self.upper - self.lower) * u


@dataclass(frozen=True)
class ExponentialDemand(DemandModel):
    """Exponential demand with the given rate (mean 1/rate)."""

    rate: float = 1.0

    def __post_init__(self):
        if not self.rate > 0:
            raise ValueError(f"rate must be positive, got {self.rate}")

    def raw_moment(self, j: int) -> float:
        _check_order(j)
        return math.factorial(j) / self.rate**j

    def partial_raw_moment(self, j: int, q):
        """Truncated moment via the finite incomplete-gamma sum.

        For integer j the regularized lower incomplete gamma P(j+1, z),
        z = rate*q, is a finite Poisson tail. The complement form
        1 - e^{-z} sum_{i<=j} z^i/i! is exact for z beyond j+1 but cancels
        catastrophically near zero, so small z switches to the direct tail
        series sum_{i>j} e^{-z} z^i/i!. Result clipped to [0, mu'_j].
        """
        _check_order(j)
        qs, scalar = _as_points(q)
        z = self.rate * qs
        full = self.raw_moment(j)

        head = np.zeros_like(z)
        term = np.ones_like(z)
        for i in range(j + 1):
            if i > 0:
                term = term * z / i
            head = head + term
        complement = 1.0 - np.exp(-z) * head

        # first tail term e^{-z} z^(j+1)/(j+1)! in log space; z = 0 masked out
        t = np.exp(
            -z + (j + 1) * np.log(np.where(z > 0.0, z, 1.0)) - math.lgamma(j + 2)
        )
        t = np.where(z > 0.0, t, 0.0)
        tail = np.zeros_like(z)
        i = j + 1
        for _ in range(90):  # geometric decay once i exceeds z; z <= j+1 here
            tail = tail + t
            i += 1
            t = t * z / i

        prob = np.where(z > j + 1.0, complement, tail)
        out = np.clip(full * prob, 0.0, full)
        return float(out) if scalar else out

    def cdf(self, x: float) -> float:
        if x < 0:
            raise ValueError(f"demand values are nonnegative, got {x}")
        return -math.expm1(-self.rate * x)

    def quantile(self, p: float) -> float:
        self._check_prob(p)
        return -math.log1p(-p) / self.rate

    def sample(self, n: int, seed) -> np.ndarray:
        self._check_sample_size(n)
        u = _rng(seed).random(n)
        return -np.log1p(-u) / self.rate


@dataclass(frozen=True)
class EmpiricalDemand(DemandModel):
    """Empirical demand supported on an observed sample.

    Values are sorted on construction and kept as given otherwise; ties are
    allowed and never deduplicated. Moments are plain sample averages and the
    quantile is the left-continuous inverse of the empirical CDF.
    """

    values: np.ndarray = field(default_factory=lambda: np.array([]))

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=float)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("empirical demand needs a non-empty 1-d value vector")
        if not np.all(np.isfinite(arr)):
            raise ValueError("empirical demand values must be finite")
        if np.any(arr < 0):
            raise ValueError("empirical demand values must be nonnegative")
        object.__setattr__(self, "values", np.sort(arr))

    @property
    def n(self) -> int:
        return int(self.values.size)

    def raw_moment(self, j: int) -> float:
        _check_order(j)
        return float(np.mean(self.values**j))

    def partial_raw_moment(self, j: int, q):
        _check_order(j)
        qs, scalar = _as_points(q)
        # inclusive at q, matching X <= Q
        counts = np.searchsorted(self.values, qs, side="right")
        prefix = np.concatenate(([0.0], np.cumsum(self.values**j)))
        out = prefix[counts] / self.n
        return float(out) if scalar else out

    def cdf(self, x: float) -> float:
        if x < 0:
            raise ValueError(f"demand values are nonnegative, got {x}")
        return float(np.searchsorted(self.values, x, side="right")) / self.n

    def quantile(self, p: float) -> float:
        self._check_prob(p)
        # smallest observed value whose empirical CDF reaches p
        idx = max(int(math.ceil(p * self.n)) - 1, 0)
        return float(self.values[idx])

    def sample(self, n: int, seed) -> np.ndarray:
        raise NotImplementedError(
            "sampling is defined for parametric demand only; resample the data directly if needed"
        )


def load_demand_csv(path) -> EmpiricalDemand:
    """Read demand observations from a one-column CSV file.

    The file must have a header row naming the column ``demand``; every
    following row must hold one nonnegative decimal value. Any malformed
    row aborts the load with its line number.
    """
    values = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["demand"]:
            raise ValueError(f"{path}: expected a single-column header 'demand', got {header}")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != 1:
                raise ValueError(f"{path}: line {lineno}: expected one value per row, got {row}")
            try:
                v = float(row[0])
            except ValueError:
                raise ValueError(f"{path}: line {lineno}: not a number: {row[0]!r}") from None
            if not math.isfinite(v) or v < 0:
                raise ValueError(f"{path}: line {lineno}: demand must be finite and nonnegative, got {v}")
            values.append(v)
    if not values:
        raise ValueError(f"{path}: no demand rows found")
    return EmpiricalDemand(np.asarray(values))
