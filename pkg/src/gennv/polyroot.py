"""Real roots of fixed-coefficient polynomials on an interval.

Isolation follows Descartes' rule on shifted/scaled coefficients: an interval
whose transformed coefficient sequence shows 0 sign variations holds no root,
one variation holds exactly one root (odd multiplicity, so a sign change), and
anything else is bisected and retried. Isolated brackets are polished by plain
bisection. Even-multiplicity touch points never produce a sign variation count
of 1 on their own interval, so a second screen looks at sign-change roots of
the derivative and accepts them as roots wherever the polynomial's value is
below a coefficient-scaled residual bound.

Degrees here never exceed 9 (severity is capped at 10), so the O(d^2) Taylor
shifts are immaterial and robustness is the only design pressure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Poly",
    "DegeneratePolynomialError",
    "roots_in_interval",
    "positive_roots",
    "cauchy_bound",
    "sign_variations",
]

_MAX_BISECT = 200


class DegeneratePolynomialError(ValueError):
    """All coefficients are zero; every point is a root."""


@dataclass(frozen=True)
class Poly:
    """Polynomial with real coefficients ordered by descending power."""

    coeffs: tuple = field(default_factory=tuple)

    def __post_init__(self):
        c = [float(v) for v in self.coeffs]
        # trim leading zeros; an all-zero vector has no well-defined root set
        while c and c[0] == 0.0:
            c.pop(0)
        if not c:
            raise DegeneratePolynomialError("polynomial has no nonzero coefficients")
        object.__setattr__(self, "coeffs", tuple(c))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, x: float) -> float:
        acc = 0.0
        for c in self.coeffs:  # Horner, descending
            acc = acc * x + c
        return acc

    def derivative(self) -> "Poly":
        d = self.degree
        if d == 0:
            raise DegeneratePolynomialError("derivative of a constant is the zero polynomial")
        return Poly(tuple(c * (d - i) for i, c in enumerate(self.coeffs[:-1])))

    def residual_bound(self, x: float, tol: float) -> float:
        # acceptance threshold tol * sum|c_i| * max(1,|x|)^degree
        return tol * sum(abs(c) for c in self.coeffs) * max(1.0, abs(x)) ** self.degree


def sign_variations(coeffs) -> int:
    """Descartes sign-variation count, zeros skipped."""
    count = 0
    prev = 0.0
    for c in coeffs:
        if c == 0.0:
            continue
        if prev != 0.0 and (c < 0.0) != (prev < 0.0):
            count += 1
        prev = c
    return count


def cauchy_bound(p: Poly) -> float:
    """1 + max|c_i|/|c_lead|; every root lies inside [-bound, bound]."""
    lead = abs(p.coeffs[0])
    rest = [abs(c) for c in p.coeffs[1:]]
    return 1.0 + (max(rest) / lead if rest else 0.0)


def _taylor_shift(asc, a):
    # coefficients (ascending) of p(x + a) via Ruffini-Horner
    c = list(asc)
    d = len(c) - 1
    for i in range(d):
        for j in range(d - 1, i - 1, -1):
            c[j] += a * c[j + 1]
    return c


def _variations_on(asc, a, b) -> int:
    """Sign variations bounding the root count of p inside the open (a, b).

    Maps (a, b) to (0, inf) by x = a + (b-a) t followed by t -> 1/(1+t):
    shift to a, scale by b-a, reverse, shift by 1.
    """
    s = b - a
    shifted = _taylor_shift(asc, a)
    scaled = [c * s**i for i, c in enumerate(shifted)]
    scaled.reverse()
    return sign_variations(_taylor_shift(scaled, 1.0))


def _bisect(p: Poly, a: float, b: float, tol: float) -> float:
    # endpoints are open-interval boundaries; an exact zero there belongs to a
    # neighbouring interval, so step inside before reading the sign
    fa = p(a)
    while fa == 0.0 and a < b:
        a = math.nextafter(a, b)
        fa = p(a)
    fb = p(b)
    while fb == 0.0 and b > a:
        b = math.nextafter(b, a)
        fb = p(b)
    if a >= b or (fa < 0.0) == (fb < 0.0):
        return 0.5 * (a + b)  # float-resolution dust; residual filter decides
    neg = fa < 0.0
    # refine well past the reporting tolerance so the residual check cannot
    # reject a genuine simple root on slope alone
    width = tol * 1e-3
    for _ in range(_MAX_BISECT):
        if b - a < width:
            break
        mid = 0.5 * (a + b)
        if mid <= a or mid >= b:
            break  # interval exhausted at float resolution
        fm = p(mid)
        if fm == 0.0:
            return mid
        if (fm < 0.0) == neg:
            a = mid
        else:
            b = mid
    return 0.5 * (a + b)


def _isolate(p: Poly, asc, a: float, b: float, tol: float, out: list):
    """Collect roots of p inside the open interval (a, b)."""
    if b - a <= 0:
        return
    v = _variations_on(asc, a, b)
    if v == 0:
        return
    if v == 1:
        out.append(_bisect(p, a, b, tol))
        return
    width_floor = tol * max(1.0, abs(a), abs(b))
    mid = 0.5 * (a + b)
    if b - a < width_floor or mid <= a or mid >= b:
        # unresolved cluster at tolerance width: collapse to one reported root
        # if the value is genuinely small there, else it was a near-miss pair
        if abs(p(mid)) <= p.residual_bound(mid, tol):
            out.append(mid)
        return
    if p(mid) == 0.0:
        out.append(mid)
    _isolate(p, asc, a, mid, tol, out)
    _isolate(p, asc, mid, b, tol, out)


def roots_in_interval(p: Poly, lo: float, hi: float, tol: float = 1e-12):
    """All real roots of p in the half-open [lo, hi), multiplicity-collapsed.

    hi may be +inf; the search is then capped at the Cauchy bound, beyond
    which no root can lie. Each root is located to |dx| < tol and verified
    against the residual bound, so no spurious roots are reported.
    """
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")
    if not lo < hi:
        raise ValueError(f"need lo < hi, got [{lo}, {hi})")
    if p.degree == 0:
        return []  # nonzero constant
    bound = cauchy_bound(p)
    a = max(lo, -bound)
    b = min(hi, bound + 1.0)
    if not a < b:
        return []

    boundary: list[float] = []
    if p(a) == 0.0:
        boundary.append(a)
    direct: list[float] = []
    asc = list(reversed(p.coeffs))
    _isolate(p, asc, a, b, tol, direct)
    found = [(r, 0) for r in boundary + direct]

    # touch-point screen: a multiplicity-k root of p is a simple (hence
    # cleanly bisectable) root of the (k-1)-th derivative, so collect every
    # stationary point of every order at which p itself vanishes; the depth
    # tag marks how far down the chain the candidate was pinned
    dq = p
    for depth in range(1, max(p.degree, 1)):
        dq = dq.derivative()
        stationary: list[float] = []
        _isolate(dq, list(reversed(dq.coeffs)), a, b, tol, stationary)
        for r in stationary:
            if abs(p(r)) <= p.residual_bound(r, tol):
                found.append((r, depth))

    found.sort(key=lambda t: t[0])
    eligible = [
        (r, depth)
        for r, depth in found
        if lo <= r < hi and abs(p(r)) <= p.residual_bound(r, max(tol, 1e-12))
    ]

    # A multiple root never crosses zero cleanly: inside its basin the value
    # sits at the evaluation-noise floor and sign flips are jitter, so the
    # isolator can hand back several candidates for the one true root. Any
    # run of candidates whose gaps never rise above the Horner noise bound
    # is therefore a single root. The deepest chain anchor represents it
    # (its bisection saw a clean sign change); ties go to the smallest |p|.
    noise_tol = 8.0 * (p.degree + 1) * math.ulp(1.0)
    clusters: list[list[tuple[float, int]]] = []
    for r, depth in eligible:
        if clusters and (
            r - clusters[-1][-1][0] < tol * max(1.0, abs(r))
            or _noise_bridged(p, clusters[-1][-1][0], r, noise_tol)
        ):
            clusters[-1].append((r, depth))
        else:
            clusters.append([(r, depth)])
    return [
        max(c, key=lambda t: (t[1], -abs(p(t[0]))))[0] for c in clusters
    ]


def _noise_bridged(p: Poly, a: float, b: float, noise_tol: float) -> bool:
    # true when |p| stays below the evaluation-noise floor across (a, b)
    for t in np.linspace(a, b, 9)[1:-1]:
        if abs(p(float(t))) > p.residual_bound(float(t), noise_tol):
            return False
    return True


def positive_roots(p: Poly, tol: float = 1e-12):
    """Roots on (0, inf): the interval search with an explicit upper bracket."""
    return [r for r in roots_in_interval(p, 0.0, math.inf, tol) if r > 0.0]
