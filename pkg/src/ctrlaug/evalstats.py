"""Statistics helpers for run evaluation and aggregation.

Implements the one-sided Welch unequal-variance t-test and Student-t
confidence half-widths on top of a self-contained regularized incomplete
beta function, so the runtime has no statistics dependency.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

_BETA_TOL = 1e-10
_MAX_ITER = 500


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta function (modified Lentz)."""
    tiny = 1e-300
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, _MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _BETA_TOL:
            return h
    raise RuntimeError(f"incomplete beta did not converge for a={a}, b={b}, x={x}")


def betai(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function I_x(a, b)."""
    if a <= 0.0 or b <= 0.0:
        raise ValueError(f"shape parameters must be positive, got a={a}, b={b}")
    if x < 0.0 or x > 1.0:
        raise ValueError(f"x must be in [0, 1], got {x}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def student_sf(t: float, df: float) -> float:
    """Upper tail P(T > t) of Student's t with df degrees of freedom."""
    if df <= 0.0:
        raise ValueError(f"degrees of freedom must be positive, got {df}")
    if t == 0.0:
        return 0.5
    tail = 0.5 * betai(df / 2.0, 0.5, df / (df + t * t))
    return tail if t > 0.0 else 1.0 - tail


@dataclass(frozen=True)
class WelchResult:
    t: float
    df: float
    p_value: float


def welch_one_sided(a: list[float], b: list[float]) -> WelchResult:
    """Welch's unequal-variance t-test of H1: mean(a) > mean(b).

    Returns the one-sided p-value; t = 0 gives exactly 0.5 and the test is
    symmetric, p(a, b) + p(b, a) = 1.  When both samples have zero variance
    the statistic is degenerate: equal means give 0.5, otherwise the p-value
    is 0 or 1 according to the direction of the difference.
    """
    na, nb = len(a), len(b)
    if na < 2 or nb < 2:
        raise ValueError(f"need at least two observations per sample, got {na} and {nb}")
    mean_a = sum(a) / na
    mean_b = sum(b) / nb
    var_a = sum((x - mean_a) ** 2 for x in a) / (na - 1)
    var_b = sum((x - mean_b) ** 2 for x in b) / (nb - 1)
    sa = var_a / na
    sb = var_b / nb
    if sa + sb == 0.0:
        if mean_a == mean_b:
            return WelchResult(0.0, float(na + nb - 2), 0.5)
        return WelchResult(math.copysign(math.inf, mean_a - mean_b), float(na + nb - 2), 0.0 if mean_a > mean_b else 1.0)
    t = (mean_a - mean_b) / math.sqrt(sa + sb)
    df = (sa + sb) ** 2 / (sa * sa / (na - 1) + sb * sb / (nb - 1))
    return WelchResult(t, df, student_sf(t, df))


def t_quantile(p: float, df: float) -> float:
    """Inverse CDF of Student's t by bisection on the tail probability."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must be in (0, 1), got {p}")
    if df <= 0.0:
        raise ValueError(f"degrees of freedom must be positive, got {df}")
    if p == 0.5:
        return 0.0
    if p < 0.5:
        return -t_quantile(1.0 - p, df)
    lo, hi = 0.0, 1e3
    target = 1.0 - p  # upper tail mass
    while student_sf(hi, df) > target:
        hi *= 2.0
        if hi > 1e9:
            raise RuntimeError("t quantile out of range")
    for _ in range(200):
        mid = (lo + hi) / 2.0
        if student_sf(mid, df) > target:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-12 * max(1.0, hi):
            break
    return (lo + hi) / 2.0


def mean_ci95(xs: list[float]) -> tuple[float, float]:
    """Sample mean and 95% Student-t confidence half-width.

    A single observation has no spread estimate; its half-width is 0.
    """
    n = len(xs)
    if n == 0:
        raise ValueError("cannot aggregate an empty sample")
    mean = sum(xs) / n
    if n == 1:
        return mean, 0.0
    var = sum((x - mean) ** 2 for x in xs) / (n - 1)
    half = t_quantile(0.975, n - 1) * math.sqrt(var / n)
    return mean, half
