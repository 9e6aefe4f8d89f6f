"""Population first-order condition and exact optimal order quantities.

The derivative of the expected severity cost factors as

    dE[C_m]/dQ = m (C_e + (-1)^(m-1) C_s) g(Q),
    g(Q) = theta_{1,m-1}(Q) - k_m theta_{2,m-1}(Q),

where theta_{1,i}(Q) integrates (Q-x)^i below Q and theta_{2,i}(Q) = E(X-Q)^i.
Optimal order quantities are the zeros of g where the expected cost is locally
minimal. g is written through the beta coefficients of the polynomial form so
the population and sample paths share one convention.

Note the prefactor sign: for even m with c_e < c_s it is negative, so cost
minima sit where g crosses downward. Root reports therefore carry a local-min
flag from an expected-cost comparison rather than trusting the crossing side.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cost import SeverityCost, expected_cost
from .demand import DemandModel, EmpiricalDemand, ExponentialDemand, UniformDemand

__all__ = [
    "FocCoefficients",
    "RootReport",
    "beta_coefficients",
    "foc_residual",
    "check_existence",
    "solve_population_foc",
    "uniform_closed_form",
    "exp_foc_residual",
    "exp_solve",
    "theta_moment",
]

DEFAULT_GRID = 4096
DEFAULT_TOL = 1e-10
RESIDUAL_ACCEPT = 1e-8
TAIL_MASS = 1e-12  # q_max for unbounded support leaves at most this much tail


@dataclass(frozen=True)
class FocCoefficients:
    """Vector beta_0..beta_{m-1} evaluated at a fixed truncation point."""

    betas: tuple
    at_q: float

    @property
    def m(self) -> int:
        return len(self.betas)


@dataclass(frozen=True)
class RootReport:
    """Outcome of a root search over (0, q_max].

    roots holds every accepted zero in ascending order. selected follows the
    active selection rule; max_root and cost_min_root record both rules so
    callers can compare. residual is the scaled g-value at selected.
    """

    roots: tuple
    selected: float | None
    residual: float | None
    exists: bool
    reason: str
    max_root: float | None = None
    cost_min_root: float | None = None
    diagnostics: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "exists": self.exists,
            "reason": self.reason,
            "selected": self.selected,
            "roots": list(self.roots),
            "residual": self.residual,
            "max_root": self.max_root,
            "cost_min_root": self.cost_min_root,
        }


def theta_moment(model: DemandModel, side: int, i: int, q: float) -> float:
    """theta_{side,i}(q): side 1 truncates below q, side 2 is the full E(X-q)^i."""
    if side == 1:
        return math.fsum(
            math.comb(i, l) * q ** (i - l) * (-1.0) ** l * model.partial_raw_moment(l, q)
            for l in range(i + 1)
        )
    if side == 2:
        return math.fsum(
            math.comb(i, l) * (-1.0) ** (i - l) * q ** (i - l) * model.raw_moment(l)
            for l in range(i + 1)
        )
    raise ValueError(f"side must be 1 or 2, got {side}")


def beta_coefficients(model: DemandModel, sc: SeverityCost, q: float) -> FocCoefficients:
    """beta_j = C(m-1,j) [delta_j(q) - (-1)^(m-1) k_m mu'_j], j = 0..m-1."""
    k = sc.critical_ratio()
    betas = tuple(
        math.comb(sc.m - 1, j)
        * (model.partial_raw_moment(j, q) - sc.sign * k * model.raw_moment(j))
        for j in range(sc.m)
    )
    return FocCoefficients(betas=betas, at_q=q)


def foc_residual(model: DemandModel, sc: SeverityCost, q):
    """g(q) = sum_j (-1)^j beta_j(q) q^(m-1-j); zero at every optimum.

    Accepts a scalar order quantity or a vector of them.
    """
    qs = np.asarray(q, dtype=float)
    if np.any(qs < 0):
        raise ValueError("order quantity must be nonnegative")
    k = sc.critical_ratio()
    g = np.zeros_like(qs)
    for j in range(sc.m):
        beta = math.comb(sc.m - 1, j) * (
            model.partial_raw_moment(j, qs) - sc.sign * k * model.raw_moment(j)
        )
        g = g + (-1.0) ** j * beta * qs ** (sc.m - 1 - j)
    return float(g) if qs.ndim == 0 else g


def check_existence(sc: SeverityCost, fc: FocCoefficients) -> str:
    """Root-existence verdict from the beta signs at fc's evaluation point.

    Odd m always admits a positive solution. For even m a same-sign pair of
    consecutive betas is sufficient (not necessary), so the verdict is about
    this condition only.
    """
    if sc.odd:
        return "guaranteed"
    for a, b in zip(fc.betas, fc.betas[1:]):
        if (a > 0 and b > 0) or (a < 0 and b < 0):
            return "conditional-satisfied"
    return "conditional-violated"


def uniform_closed_form(m: int, lam: float) -> float:
    """Q* = 1/(1 + lambda^(1/m)) for Uniform(0,1) demand."""
    if lam <= 0:
        raise ValueError(f"cost ratio must be positive, got {lam}")
    if m < 1:
        raise ValueError(f"severity degree must be at least 1, got {m}")
    return 1.0 / (1.0 + lam ** (1.0 / m))


def _reject_unit_ratio(sc: SeverityCost) -> None:
    # population solving assumes c_e != c_s for every m, not only where k_m
    # is singular; the even-m case raises through critical_ratio anyway
    if sc.c_e == sc.c_s:
        raise ValueError("cost ratio 1 is excluded (model assumes c_e != c_s)")


def _default_q_max(model: DemandModel) -> float:
    if isinstance(model, UniformDemand):
        return model.upper
    if isinstance(model, ExponentialDemand):
        return model.quantile(1.0 - TAIL_MASS)
    raise ValueError("population solving needs a parametric demand model (uniform or exponential)")


def _scan_grid(q_max: float, points: int) -> np.ndarray:
    # geometric spacing near zero catches roots of small magnitude, the
    # linear half covers the bulk; both ends always included
    half = max(points // 2, 8)
    geo = np.geomspace(q_max * 1e-9, q_max, half)
    lin = np.linspace(0.0, q_max, half + 1)[1:]
    return np.unique(np.concatenate(([0.0], geo, lin)))


def _bracketed_roots(fn, grid, tol_at) -> list[float]:
    """Sign-change scan over grid followed by bisection on each bracket."""
    vals = np.asarray(fn(grid), dtype=float)
    roots = []
    for i in range(len(grid) - 1):
        a, b, fa, fb = grid[i], grid[i + 1], vals[i], vals[i + 1]
        if fa == 0.0:
            if a > 0:
                roots.append(a)
            continue
        if fb == 0.0 or (fa < 0) == (fb < 0):
            continue
        neg = fa < 0
        for _ in range(200):
            if b - a < tol_at(0.5 * (a + b)):
                break
            mid = 0.5 * (a + b)
            fm = fn(mid)
            if fm == 0.0:
                a = b = mid
                break
            if (fm < 0) == neg:
                a = mid
            else:
                b = mid
        roots.append(0.5 * (a + b))
    if vals[-1] == 0.0:
        roots.append(float(grid[-1]))
    return roots


def _build_report(fn, roots, sc, model, select, scale) -> RootReport:
    accepted = []
    for r in roots:
        if abs(fn(r)) / scale <= RESIDUAL_ACCEPT:
            accepted.append(r)
    accepted.sort()
    if not accepted:
        reason = "guaranteed" if sc.odd else "no-root-in-range"
        return RootReport(roots=(), selected=None, residual=None, exists=False, reason=reason)

    costs = {r: expected_cost(model, sc, r) for r in accepted}
    max_root = accepted[-1]
    cost_min_root = min(accepted, key=lambda r: costs[r])
    selected = cost_min_root if select == "cost-min" else max_root
    # at eps = 10 tol the quadratic cost increment sits below float
    # evaluation noise, so "local minimum" means not measurably above
    eps = 10.0 * DEFAULT_TOL
    slack = 16.0 * math.ulp(max(1.0, abs(costs[selected])))
    local_min = (
        costs[selected] <= expected_cost(model, sc, selected + eps) + slack
        and costs[selected] <= expected_cost(model, sc, max(selected - eps, 0.0)) + slack
    )
    return RootReport(
        roots=tuple(accepted),
        selected=selected,
        residual=fn(selected) / scale,
        exists=True,
        reason="guaranteed" if sc.odd else "root-found",
        max_root=max_root,
        cost_min_root=cost_min_root,
        diagnostics={"local_min": local_min, "expected_cost": costs[selected]},
    )


def solve_population_foc(
    model: DemandModel,
    sc: SeverityCost,
    q_max: float | None = None,
    tol: float = DEFAULT_TOL,
    grid: int = DEFAULT_GRID,
    select: str = "max",
) -> RootReport:
    """Locate every zero of g on (0, q_max] and select the optimum.

    The scan grid is geometric near zero and linear elsewhere; each sign
    change is bisected to |dQ| < tol (relative in Q for unbounded support).
    Roots are kept only when the scaled residual g/(1+|g(0)|+|g(q_max)|)
    is below 1e-8.
    """
    if isinstance(model, EmpiricalDemand):
        raise ValueError("population solving needs a parametric demand model (uniform or exponential)")
    _reject_unit_ratio(sc)
    if select not in ("max", "cost-min"):
        raise ValueError(f"unknown selection rule {select!r}")
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")
    if q_max is None:
        q_max = _default_q_max(model)
    if not q_max > 0:
        raise ValueError(f"q_max must be positive, got {q_max}")

    fn = lambda q: foc_residual(model, sc, q)
    tol_at = (
        (lambda q: tol * (1.0 + q))
        if isinstance(model, ExponentialDemand)
        else (lambda q: tol)
    )
    scale = 1.0 + abs(fn(0.0)) + abs(fn(q_max))
    roots = _bracketed_roots(fn, _scan_grid(q_max, grid), tol_at)
    return _build_report(fn, roots, sc, model, select, scale)


def exp_foc_residual(sc: SeverityCost, q):
    """Residual of the Exponential(1) display equation.

    LHS - RHS with LHS = sum_{j=0}^{m-1} (-1)^j q^(m-1-j)/(m-1-j)! and
    RHS = e^(-q) (C_s/C_e - (-1)^m). For Exp(1) demand the generic residual
    factors exactly as g(q) = (m-1)! C_e/(C_e + (-1)^(m-1) C_s) times this
    quantity, so the two share one zero set (the constant can be negative
    for even m, flipping crossing directions but not the roots).
    """
    qs = np.asarray(q, dtype=float)
    if np.any(qs < 0):
        raise ValueError("order quantity must be nonnegative")
    m = sc.m
    lhs = np.zeros_like(qs)
    for j in range(m):
        lhs = lhs + (-1.0) ** j * qs ** (m - 1 - j) / math.factorial(m - 1 - j)
    rhs = np.exp(-qs) * (sc.c_s / sc.c_e - (-1.0) ** m)
    out = lhs - rhs
    return float(out) if qs.ndim == 0 else out


def exp_solve(sc: SeverityCost, tol: float = DEFAULT_TOL, q_max: float | None = None) -> RootReport:
    """Solve the Exponential(1) display equation by scan and bisection."""
    _reject_unit_ratio(sc)
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")
    model = ExponentialDemand(1.0)
    if q_max is None:
        q_max = _default_q_max(model)
    fn = lambda q: exp_foc_residual(sc, q)
    scale = 1.0 + abs(fn(0.0)) + abs(fn(q_max))
    roots = _bracketed_roots(fn, _scan_grid(q_max, DEFAULT_GRID), lambda q: tol * (1.0 + q))
    return _build_report(fn, roots, sc, model, select="max", scale=scale)
