"""Bisquare IRLS regression and externally studentized outlier tests."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dataset import AuctionMonth, ModelSpec
from .errors import DegenerateFitError, InsufficientDataError
from .linmodel import FitResult, fit_ols, qr_solve
from .numstat import student_t_sf, t_critical

TUNE = 4.685
MAD_CONSISTENCY = 0.6745
MEAN_ABS_CONSISTENCY = math.sqrt(math.pi / 2)


@dataclass(frozen=True)
class RobustFitResult:
    terms: tuple
    params: np.ndarray
    bse: np.ndarray
    conf_int: np.ndarray
    weights: np.ndarray
    residuals: np.ndarray
    scale: float
    iterations: int
    converged: bool
    level: float = 0.95
    months: tuple[AuctionMonth, ...] | None = None

    @property
    def coefficients(self) -> dict:
        return dict(zip(self.terms, self.params.tolist()))

    @property
    def std_errors(self) -> dict:
        return dict(zip(self.terms, self.bse.tolist()))

    @property
    def conf_intervals(self) -> dict:
        return {t: (lo, hi) for t, (lo, hi) in zip(self.terms, self.conf_int.tolist())}

    def to_dict(self) -> dict:
        half = (self.conf_int[:, 1] - self.conf_int[:, 0]) / 2
        return {
            "iterations": self.iterations,
            "converged": self.converged,
            "scale": self.scale,
            "level": self.level,
            "terms": [
                {
                    "term": str(t),
                    "estimate": float(self.params[k]),
                    "std_error": float(self.bse[k]),
                    "ci_half_width": float(half[k]),
                }
                for k, t in enumerate(self.terms)
            ],
            "weights": [
                {"month": str(m) if m is not None else None, "weight": float(w)}
                for m, w in zip(self.months or [None] * len(self.weights), self.weights)
            ],
        }

    def to_table(self) -> str:
        half = (self.conf_int[:, 1] - self.conf_int[:, 0]) / 2
        pct = round(self.level * 100)
        lines = [f"{'term':<16}{'estimate':>14}{f'+/- ({pct}% CI)':>18}{'std.err':>12}"]
        for k, t in enumerate(self.terms):
            lines.append(f"{str(t):<16}{self.params[k]:>14.4f}{half[k]:>18.4f}{self.bse[k]:>12.4f}")
        lines.append(f"iterations = {self.iterations}  converged = {self.converged}")
        lines.append("")
        lines.append(f"{'month':<10}{'weight':>10}")
        labels = self.months or [str(i) for i in range(len(self.weights))]
        for m, w in zip(labels, self.weights):
            lines.append(f"{str(m):<10}{w:>10.4f}")
        return "\n".join(lines)


def bisquare(u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    return np.where(np.abs(u) < 1.0, (1.0 - u**2) ** 2, 0.0)


def robust_scale(resid: np.ndarray) -> float:
    """Median absolute residual over 0.6745, falling back to a mean-absolute
    scale when more than half the residuals are zero.

    The median is taken about zero, not about the residual median: a cluster
    of residuals sharing a common offset must not shrink the scale below
    their own size.
    """
    mad = float(np.median(np.abs(resid)))
    if mad > 0:
        return mad / MAD_CONSISTENCY
    return float(np.mean(np.abs(resid))) * MEAN_ABS_CONSISTENCY


def _wls(X, y, w, terms):
    sw = np.sqrt(w)
    keep = sw > 0
    if not np.any(keep):
        raise DegenerateFitError("all IRLS weights are zero")
    Xw = X[keep] * sw[keep, None]
    yw = y[keep] * sw[keep]
    if Xw.shape[0] < X.shape[1]:
        raise DegenerateFitError("too few observations with positive weight")
    return qr_solve(Xw, yw, terms)


def irls_step(X, y, beta, tune: float = TUNE, terms: Sequence = ()):
    """One reweighting pass from ``beta``; returns ``(new_beta, weights, scale)``.

    ``scale`` is 0 when the current fit is exact, in which case weights are
    all one and ``beta`` is returned unchanged.
    """
    resid = _denoise(y - X @ beta, y, X @ beta)
    s = robust_scale(resid)
    if s == 0:
        return beta, np.ones_like(y), 0.0
    w = bisquare(resid / (tune * s))
    new_beta, _ = _wls(X, y, w, terms)
    return new_beta, w, s


def _denoise(resid, y, fitted):
    # residuals indistinguishable from rounding error count as exact zeros
    noise = 64 * np.finfo(float).eps * (np.max(np.abs(y)) + np.max(np.abs(fitted)))
    return np.where(np.abs(resid) <= noise, 0.0, resid)


def _rel_change(new, old):
    floor = 1e-8 * max(float(np.max(np.abs(old))), np.finfo(float).tiny)
    return float(np.max(np.abs(new - old) / np.maximum(np.abs(old), floor)))


def fit_irls(
    X,
    y,
    spec: ModelSpec | Sequence | None = None,
    tune: float = TUNE,
    tol: float = 1e-8,
    max_iter: int = 200,
    level: float = 0.95,
    months: Sequence[AuctionMonth] | None = None,
) -> RobustFitResult:
    """Robust linear fit by iteratively reweighted least squares (Tukey bisquare).

    Starts from OLS; each pass recomputes the MAD scale of the residuals,
    reweights, and solves the weighted problem by QR. Stops when the largest
    relative coefficient change is at most ``tol`` or after ``max_iter``
    passes. Standard errors use the weighted covariance of the last pass,
    ``s_w^2 (X'WX)^-1`` with ``s_w^2 = sum(w r^2) / (n - k)``.
    """
    ols = fit_ols(X, y, spec)
    X, y, terms = ols.X, ols.y, ols.terms
    n, k = X.shape
    beta = ols.params
    w = np.ones(n)
    iterations = 0
    converged = False
    exact = robust_scale(_denoise(ols.residuals, y, ols.fitted)) == 0
    if exact:
        converged = True
    while not converged and iterations < max_iter:
        new_beta, w, s = irls_step(X, y, beta, tune, terms)
        iterations += 1
        change = _rel_change(new_beta, beta)
        beta = new_beta
        if s == 0 or change <= tol:
            converged = True

    if exact:
        # exact fit: nothing to downweight, report the OLS inference
        return RobustFitResult(
            terms, ols.params, ols.bse, ols.conf_int, np.ones(n), ols.residuals,
            0.0, 0, True, level, tuple(months) if months is not None else None,
        )

    resid = y - X @ beta
    # weights that produced the final beta
    s = robust_scale(_denoise(resid, y, X @ beta))
    _, Rinv = _wls(X, y, w, terms)
    sigma2 = float(np.sum(w * resid**2)) / (n - k)
    bse = np.sqrt(sigma2 * np.sum(Rinv**2, axis=1))
    tcrit = t_critical(1.0 - level, n - k)
    ci = np.column_stack([beta - tcrit * bse, beta + tcrit * bse])
    return RobustFitResult(
        terms=tuple(terms),
        params=beta,
        bse=bse,
        conf_int=ci,
        weights=w,
        residuals=resid,
        scale=s,
        iterations=iterations,
        converged=converged,
        level=level,
        months=tuple(months) if months is not None else None,
    )


# ---------------------------------------------------------------------------
# outliers


@dataclass(frozen=True)
class Outlier:
    index: int
    month: AuctionMonth | None
    studentized_residual: float
    p_value: float


@dataclass(frozen=True)
class OutlierReport:
    flagged: tuple[Outlier, ...]
    alpha: float
    bonferroni: bool
    studentized: np.ndarray = field(repr=False)
    p_values: np.ndarray = field(repr=False)

    @property
    def months(self) -> list:
        return [o.month for o in self.flagged]

    @property
    def indices(self) -> list[int]:
        return [o.index for o in self.flagged]

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "bonferroni": self.bonferroni,
            "flagged": [
                {
                    "index": o.index,
                    "month": str(o.month) if o.month is not None else None,
                    "studentized_residual": o.studentized_residual,
                    "p_value": o.p_value,
                }
                for o in self.flagged
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_table(self) -> str:
        corr = ", Bonferroni" if self.bonferroni else ""
        lines = [f"outliers at alpha={self.alpha}{corr}: {len(self.flagged)}",
                 f"{'month':<10}{'stud.resid':>12}{'p':>12}"]
        for o in self.flagged:
            label = str(o.month) if o.month is not None else str(o.index)
            lines.append(f"{label:<10}{o.studentized_residual:>12.3f}{o.p_value:>12.3g}")
        return "\n".join(lines)


def leverages(X: np.ndarray) -> np.ndarray:
    Q, _ = np.linalg.qr(X)
    return np.sum(Q**2, axis=1)


def studentized_residuals(fit: FitResult) -> np.ndarray:
    """Externally studentized residuals r_i / (s_(i) sqrt(1 - h_ii)).

    Residuals at the level of floating-point noise are treated as exact
    zeros, so an exact fit yields all-zero statistics instead of ratios of
    rounding errors.
    """
    X, r = fit.X, fit.residuals
    n, k = X.shape
    df = fit.df_resid
    h = leverages(X)
    noise = 64 * np.finfo(float).eps * (np.max(np.abs(fit.y)) + np.max(np.abs(fit.fitted)))
    r = _denoise(r, fit.y, fit.fitted)
    rss = float(r @ r)
    out = np.zeros(n)
    for i in range(n):
        one_minus_h = 1.0 - h[i]
        if one_minus_h <= 1e-12:
            out[i] = math.nan
            continue
        if r[i] == 0.0:
            continue
        s2_i = max(rss - r[i] ** 2 / one_minus_h, 0.0) / (df - 1)
        if s2_i <= noise**2:
            out[i] = math.copysign(math.inf, r[i])
        else:
            out[i] = r[i] / math.sqrt(s2_i * one_minus_h)
    return out


def detect_outliers(fit: FitResult, alpha: float = 0.05, bonferroni: bool = False) -> OutlierReport:
    """Flag observations whose externally studentized residual is significant.

    Each residual is tested two-sided against Student-t with ``df_resid - 1``
    degrees of freedom. With ``bonferroni=True`` the per-observation level
    is ``alpha / n``.
    """
    if fit.df_resid < 2:
        raise InsufficientDataError("outlier test needs df_resid >= 2")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    stud = studentized_residuals(fit)
    df = fit.df_resid - 1
    pv = np.array([student_t_sf(t, df) if not math.isnan(t) else math.nan for t in stud])
    cut = alpha / fit.n_obs if bonferroni else alpha
    flagged = []
    for i, p in enumerate(pv):
        if p < cut:
            month = fit.months[i] if fit.months else None
            flagged.append(Outlier(i, month, float(stud[i]), float(p)))
    return OutlierReport(tuple(flagged), alpha, bonferroni, stud, pv)
