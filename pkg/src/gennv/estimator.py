"""Non-parametric estimation of the optimal order quantity.

The sample first-order condition T_1n(Q) = k_m T_2n(Q) becomes, between
consecutive order statistics, a polynomial with frozen coefficients

    sum_{j=0}^{m-1} (-1)^j beta_hat_j Q^(m-1-j) = 0,
    beta_hat_j = C(m-1,j) [d_j - (-1)^(m-1) k_m m'_j],

because the truncated sample moments d_j are constant on each segment
[X_(i), X_(i+1)) of the order statistics (X_(0) = 0, X_(n+1) = +inf). The
estimator solves each segment's polynomial inside its own interval, pools
the roots, and selects the largest (the consistency result covers exactly
this rule); an alternative rule picks the root with the smallest
sample-average cost.

Most segments provably contain no root, so a vectorized screen evaluates
the whole derivative chain of every segment polynomial at both segment ends
first. If every derivative order is single-signed across a segment the
polynomial cannot cross zero inside it and the segment is skipped; the
polynomial root search only runs on the survivors. The screen is
conservative: endpoint values within a rounding band of zero mark the
segment as a candidate rather than risking a false skip.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cost import SeverityCost, empirical_expected_cost
from .demand import DemandModel
from .foc import FocCoefficients, check_existence, theta_moment
from .polyroot import DegeneratePolynomialError, Poly, roots_in_interval

__all__ = [
    "SampleStats",
    "SegmentCoefficients",
    "EstimationResult",
    "SingularVarianceError",
    "t_statistics",
    "sample_moments",
    "segment_coefficients",
    "estimate_optimal_q",
    "asymptotic_variance",
    "t_covariance",
]

ROOT_TOL = 1e-10
_SIGN_BAND = 64.0 * np.finfo(float).eps


class SingularVarianceError(ValueError):
    """theta_{2,m-1} vanishes at the requested point; the ratio has no variance."""


@dataclass(frozen=True)
class SampleStats:
    t1: float
    t2: float
    at_q: float
    n: int

    def ratio(self) -> float:
        if self.t2 == 0.0:
            raise ZeroDivisionError("T_2n is zero at this point; use the polynomial form")
        return self.t1 / self.t2


@dataclass(frozen=True)
class SegmentCoefficients:
    """Frozen polynomial coefficients on one order-statistic segment."""

    segment_index: int
    lo: float
    hi: float
    betas_hat: tuple

    def poly_coeffs(self) -> tuple:
        # descending powers: (-1)^j beta_hat_j multiplies Q^(m-1-j)
        return tuple((-1.0) ** j * b for j, b in enumerate(self.betas_hat))


@dataclass(frozen=True)
class EstimationResult:
    exists: bool
    all_roots: tuple  # of (root, segment_index, extrapolated)
    selected: float | None
    estimated_cost: float | None
    k_m: float
    n: int
    diagnostics: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "exists": self.exists,
            "selected": self.selected,
            "roots": [
                {"root": r, "segment": s, "extrapolated": e} for r, s, e in self.all_roots
            ],
            "estimated_cost": self.estimated_cost,
            "k_m": self.k_m,
            "n": self.n,
        }


def _as_sample(sample) -> np.ndarray:
    xs = np.asarray(sample, dtype=float)
    if xs.ndim != 1 or xs.size == 0:
        raise ValueError("sample must be a non-empty 1-d vector")
    if not np.all(np.isfinite(xs)) or np.any(xs < 0):
        raise ValueError("sample values must be finite and nonnegative")
    return xs


def t_statistics(sample, sc: SeverityCost, q: float) -> SampleStats:
    """T_1n = (1/n) sum (q-x_i)^(m-1) 1{x_i <= q},  T_2n = (1/n) sum (x_i-q)^(m-1).

    The indicator is inclusive at x_i = q and 0^0 counts as 1 there, so the
    m = 1 statistics are the empirical CDF and the constant 1.
    """
    xs = _as_sample(sample)
    if q < 0:
        raise ValueError(f"evaluation point must be nonnegative, got {q}")
    e = sc.m - 1
    below = xs <= q
    t1 = float(np.sum(np.where(below, (q - xs) ** e, 0.0))) / xs.size
    t2 = float(np.mean((xs - q) ** e))
    return SampleStats(t1=t1, t2=t2, at_q=q, n=xs.size)


def sample_moments(sample, j: int, q: float):
    """(d_j, m'_j): truncated and full sample raw moments of order j."""
    xs = _as_sample(sample)
    if j < 0:
        raise ValueError(f"moment order must be nonnegative, got {j}")
    if q < 0:
        raise ValueError(f"truncation point must be nonnegative, got {q}")
    pj = xs**j
    d = float(np.sum(pj[xs <= q])) / xs.size
    return d, float(np.mean(pj))


def _cumulative_moments(xs_sorted: np.ndarray, m: int) -> np.ndarray:
    # d[j, i] = (1/n) sum of the i smallest x^j values, i = 0..n
    n = xs_sorted.size
    d = np.zeros((m, n + 1))
    for j in range(m):
        d[j, 1:] = np.cumsum(xs_sorted**j) / n
    return d


def segment_coefficients(sample, sc: SeverityCost) -> list[SegmentCoefficients]:
    """All n+1 segments with their frozen beta_hat vectors (ties not collapsed)."""
    xs = np.sort(_as_sample(sample))
    k = sc.critical_ratio()
    d = _cumulative_moments(xs, sc.m)
    mp = d[:, -1]
    binom = np.array([math.comb(sc.m - 1, j) for j in range(sc.m)])
    b = binom[:, None] * (d - sc.sign * k * mp[:, None])
    lo = np.concatenate(([0.0], xs))
    hi = np.concatenate((xs, [math.inf]))
    return [
        SegmentCoefficients(
            segment_index=i, lo=float(lo[i]), hi=float(hi[i]), betas_hat=tuple(b[:, i])
        )
        for i in range(xs.size + 1)
    ]


def _band_sign(values: np.ndarray, scale: np.ndarray) -> np.ndarray:
    # -1/0/+1 with a rounding band: |v| below the band is treated as zero,
    # which forces the segment into the candidate set (never a false skip)
    band = _SIGN_BAND * scale
    return np.where(values > band, 1, np.where(values < -band, -1, 0))


def _screen_candidates(coeffs: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Boolean mask of segments that may contain a root of their polynomial.

    coeffs is (m, s) descending-power columns; lo/hi are finite segment ends.
    A segment is skipped only when the whole derivative chain of its
    polynomial is single-signed on it: the top derivative is constant, and
    each level below is then monotone, so same-sign nonzero endpoint values
    rule out any interior zero.
    """
    m, s = coeffs.shape
    deg = m - 1
    hmax = np.maximum(1.0, np.abs(hi))
    single = None
    for r in range(deg, -1, -1):
        # descending coefficients of the r-th derivative, length deg-r+1
        t = np.arange(deg - r + 1)
        ff = np.array([math.perm(deg - i, r) for i in t], dtype=float)
        cr = coeffs[: deg - r + 1] * ff[:, None]
        vlo = np.zeros(s)
        vhi = np.zeros(s)
        for row in cr:  # Horner along the coefficient axis
            vlo = vlo * lo + row
            vhi = vhi * hi + row
        scale = np.sum(np.abs(cr), axis=0) * hmax ** (deg - r)
        slo = _band_sign(vlo, scale)
        shi = _band_sign(vhi, scale)
        same = (slo == shi) & (slo != 0)
        single = same if single is None else (single & same)
    return ~single


def _estimate_m1(xs: np.ndarray, sc: SeverityCost, select: str):
    # the m=1 "polynomial" is the step function d_0 - k_1, nondecreasing in
    # the segment index with a jump of 1/n at each order statistic; the
    # first segment at or above zero starts at the estimate, which is the
    # left-continuous empirical k_1-quantile
    n = xs.size
    k = sc.critical_ratio()
    i_star = int(math.ceil(n * k - 1e-12))
    i_star = max(i_star, 1)
    root = float(xs[i_star - 1])
    seg = int(np.searchsorted(xs, root, side="right"))
    degenerate = abs(i_star / n - k) <= 1e-12
    return [(root, seg, False)], {"m1_degenerate_segment": degenerate}


def estimate_optimal_q(sample, sc: SeverityCost, select: str = "max", tol: float = ROOT_TOL) -> EstimationResult:
    """Solve the segment-wise random polynomial and select the estimate.

    Every reported root lies in its own segment's half-open interval and in
    (0, inf). Roots beyond the largest observation are legitimate solutions
    of the last segment's polynomial but are flagged as extrapolated.
    """
    if select not in ("max", "cost-min"):
        raise ValueError(f"unknown selection rule {select!r}")
    xs = np.sort(_as_sample(sample))
    k = sc.critical_ratio()
    n = xs.size
    diagnostics: dict = {}

    if sc.m == 1:
        found, diagnostics = _estimate_m1(xs, sc, select)
    else:
        d = _cumulative_moments(xs, sc.m)
        mp = d[:, -1]
        binom = np.array([math.comb(sc.m - 1, j) for j in range(sc.m)])
        b = binom[:, None] * (d - sc.sign * k * mp[:, None])
        coeffs = b * ((-1.0) ** np.arange(sc.m))[:, None]
        lo = np.concatenate(([0.0], xs))
        hi = np.concatenate((xs, [math.inf]))
        width_ok = lo < hi  # ties collapse segments; zero-width ones are dead

        interior = width_ok.copy()
        interior[-1] = False
        cand = np.zeros(n + 1, dtype=bool)
        cand[interior] = _screen_candidates(
            coeffs[:, interior], lo[interior], hi[interior]
        )
        cand[-1] = True  # unbounded segment: no finite endpoint to screen with

        found = []
        verdicts = {}
        for i in np.flatnonzero(cand):
            c = coeffs[:, i]
            try:
                poly = Poly(tuple(c))
            except DegeneratePolynomialError:
                # identically-zero polynomial: whole segment solves the FOC,
                # same left-endpoint convention as the m=1 step case
                if lo[i] > 0:
                    found.append((float(lo[i]), int(i), False))
                diagnostics["degenerate_segments"] = diagnostics.get("degenerate_segments", []) + [int(i)]
                continue
            verdicts[int(i)] = check_existence(sc, FocCoefficients(betas=tuple(b[:, i]), at_q=float(lo[i])))
            for r in roots_in_interval(poly, float(lo[i]), float(hi[i]), tol):
                if r > 0.0:
                    found.append((float(r), int(i), bool(r > xs[-1])))
        diagnostics["segment_verdicts"] = verdicts
        diagnostics["candidate_segments"] = int(cand.sum())

    if not found:
        return EstimationResult(
            exists=False, all_roots=(), selected=None, estimated_cost=None,
            k_m=k, n=n, diagnostics=diagnostics,
        )

    found.sort()
    if select == "cost-min":
        selected = min(found, key=lambda t: empirical_expected_cost(xs, sc, t[0]))[0]
    else:
        selected = found[-1][0]
    stats = t_statistics(xs, sc, selected)
    diagnostics["ratio_residual"] = (
        abs(stats.ratio() - k) if stats.t2 != 0.0 else None
    )
    return EstimationResult(
        exists=True,
        all_roots=tuple(found),
        selected=selected,
        estimated_cost=empirical_expected_cost(xs, sc, selected),
        k_m=k,
        n=n,
        diagnostics=diagnostics,
    )


def asymptotic_variance(model: DemandModel, sc: SeverityCost, q: float) -> float:
    """Large-sample value of n Var(h(T_n; q)) from the delta method.

    h = theta_{1,m-1}/theta_{2,m-1}; the displayed form is
    h^2 [ theta_{1,2m-2}/theta_{1,m-1}^2 + theta_{2,2m-2}/theta_{2,m-1}^2
          + 2 (-1)^m theta_{1,2m-2}/(theta_{1,m-1} theta_{2,m-1}) ].
    """
    m = sc.m
    t1 = theta_moment(model, 1, m - 1, q)
    t2 = theta_moment(model, 2, m - 1, q)
    if t2 == 0.0:
        raise SingularVarianceError(f"theta_(2,{m-1}) is zero at q={q}")
    if not t1 > 0.0:
        raise SingularVarianceError(f"theta_(1,{m-1}) must be positive at q={q}, got {t1}")
    t1_hi = theta_moment(model, 1, 2 * m - 2, q)
    t2_hi = theta_moment(model, 2, 2 * m - 2, q)
    h = t1 / t2
    return h * h * (
        t1_hi / (t1 * t1) + t2_hi / (t2 * t2) + 2.0 * (-1.0) ** m * t1_hi / (t1 * t2)
    )


def t_covariance(model: DemandModel, sc: SeverityCost, q: float, n: int) -> float:
    """Cov(T_1n, T_2n) = (1/n) [ (-1)^(m-1) theta_{1,2m-2} - theta_{1,m-1} theta_{2,m-1} ]."""
    if n < 1:
        raise ValueError(f"sample size must be at least 1, got {n}")
    m = sc.m
    return (
        sc.sign * theta_moment(model, 1, 2 * m - 2, q)
        - theta_moment(model, 1, m - 1, q) * theta_moment(model, 2, m - 1, q)
    ) / n
