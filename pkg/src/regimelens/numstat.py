"""Descriptive statistics and Student-t tail probabilities.

The t tail is computed through the regularized incomplete beta function,
evaluated with a modified-Lentz continued fraction.  ``log_beta`` uses
Stirling-series corrections for large arguments so that tails stay accurate
for degrees of freedom up to about 1e6.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, InsufficientDataError, ValidationError

_LN_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
_CF_EPS = 1e-15
_CF_TINY = 1e-300
_CF_MAX_ITER = 50_000


@dataclass(frozen=True)
class DescriptiveStats:
    minimum: float
    median: float
    maximum: float
    mean: float
    std_dev: float
    skewness: float
    kurtosis: float
    n: int
    degenerate: bool = False

    def as_dict(self) -> dict:
        return asdict(self)


def describe(values, convention: str = "moment") -> DescriptiveStats:
    """Summary statistics of one column.

    ``std_dev`` always uses the n-1 denominator. With ``convention="moment"``
    skewness is m3/m2**1.5 and kurtosis m4/m2**2 (non-excess, n-denominator
    central moments). ``convention="sample"`` applies the usual small-sample
    bias corrections instead (kurtosis is still reported non-excess).

    A constant column has undefined shape moments: they come back as NaN and
    ``degenerate`` is set.
    """
    x = np.asarray(values, dtype=float).ravel()
    if x.size < 2:
        raise InsufficientDataError("describe needs at least 2 values")
    if not np.all(np.isfinite(x)):
        raise ValidationError("describe: non-finite value in input")
    if convention not in ("moment", "sample"):
        raise ValueError(f"unknown convention {convention!r}")
    n = x.size
    mean = float(np.mean(x))
    dev = x - mean
    m2 = float(np.mean(dev**2))
    std = float(np.std(x, ddof=1))
    degenerate = m2 <= (np.finfo(float).eps * max(abs(mean), 1.0)) ** 2
    if degenerate:
        skew = kurt = math.nan
        std = 0.0 if np.ptp(x) == 0 else std
    else:
        m3 = float(np.mean(dev**3))
        m4 = float(np.mean(dev**4))
        skew = m3 / m2**1.5
        kurt = m4 / m2**2
        if convention == "sample":
            if n < 4:
                raise InsufficientDataError("sample convention needs at least 4 values")
            skew = skew * math.sqrt(n * (n - 1)) / (n - 2)
            excess = ((n + 1) * (kurt - 3.0) + 6.0) * (n - 1) / ((n - 2) * (n - 3))
            kurt = excess + 3.0
    return DescriptiveStats(
        minimum=float(np.min(x)),
        median=float(np.median(x)),
        maximum=float(np.max(x)),
        mean=mean,
        std_dev=std,
        skewness=skew,
        kurtosis=kurt,
        n=n,
        degenerate=bool(degenerate),
    )


def _stirling_tail(x: float) -> float:
    # lgamma(x) - [(x - 1/2) log x - x + log sqrt(2 pi)], valid for x >= 10
    x2 = 1.0 / (x * x)
    return (
        1.0 / 12.0
        - x2 * (1.0 / 360.0 - x2 * (1.0 / 1260.0 - x2 * (1.0 / 1680.0 - x2 / 1188.0)))
    ) / x


def log_beta(a: float, b: float) -> float:
    p, q = min(a, b), max(a, b)
    if p <= 0:
        raise DomainError("log_beta requires positive arguments")
    if p >= 10.0:
        corr = _stirling_tail(p) + _stirling_tail(q) - _stirling_tail(p + q)
        return (
            -0.5 * math.log(q) + _LN_SQRT_2PI + corr
            + (p - 0.5) * math.log(p / (p + q)) + q * math.log1p(-p / (p + q))
        )
    if q >= 10.0:
        corr = _stirling_tail(q) - _stirling_tail(p + q)
        return (
            math.lgamma(p) + corr + p - p * math.log(p + q)
            + (q - 0.5) * math.log1p(-p / (p + q))
        )
    return math.lgamma(p) + math.lgamma(q) - math.lgamma(p + q)


def _beta_cf(a: float, b: float, x: float) -> float:
    """Continued fraction for I_x(a, b), modified Lentz."""
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _CF_TINY:
        d = _CF_TINY
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def betainc(a: float, b: float, x: float, y: float | None = None) -> float:
    """Regularized incomplete beta I_x(a, b).

    Pass ``y = 1 - x`` when it is known more accurately than ``1 - x``.
    """
    if a <= 0 or b <= 0:
        raise DomainError("betainc requires a, b > 0")
    if y is None:
        y = 1.0 - x
    if not (0.0 <= x <= 1.0):
        raise DomainError(f"betainc requires 0 <= x <= 1, got {x}")
    if x == 0.0:
        return 0.0
    if y == 0.0:
        return 1.0
    log_front = a * math.log(x) + b * math.log(y) - log_beta(a, b)
    if x < (a + 1.0) / (a + b + 2.0):
        return math.exp(log_front) * _beta_cf(a, b, x) / a
    return 1.0 - math.exp(log_front) * _beta_cf(b, a, y) / b


def student_t_sf(t: float, df: float) -> float:
    """Two-sided tail probability P(|T| >= |t|) for T ~ Student-t(df)."""
    if not df > 0:
        raise DomainError(f"degrees of freedom must be positive, got {df}")
    if math.isnan(t):
        raise DomainError("t is NaN")
    if math.isinf(t):
        return 0.0
    t2 = t * t
    if t2 == 0.0:
        return 1.0
    denom = df + t2
    return min(1.0, betainc(0.5 * df, 0.5, df / denom, t2 / denom))


def t_critical(alpha: float, df: float) -> float:
    """Positive t* with ``student_t_sf(t*, df) == alpha`` (two-sided)."""
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    if not df > 0:
        raise DomainError(f"degrees of freedom must be positive, got {df}")
    hi = 2.0
    while student_t_sf(hi, df) > alpha:
        hi *= 2.0
        if hi > 1e300:
            raise DomainError(f"alpha {alpha} too small to invert for df={df}")
    lo = hi / 2.0 if hi > 2.0 else 0.0
    return brentq(
        lambda t: student_t_sf(t, df) - alpha, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps,
        maxiter=500,
    )


def significance_band(p: float, thresholds=(0.001, 0.01, 0.05, 0.1)) -> int:
    """Index of the half-open interval ``[s_k, s_{k+1})`` holding ``p``.

    0 is the most significant band; ``len(thresholds)`` the least.
    NaN maps to the least significant band.
    """
    if math.isnan(p):
        return len(thresholds)
    for k, s in enumerate(thresholds):
        if p < s:
            return k
    return len(thresholds)
