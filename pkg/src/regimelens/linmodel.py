"""Ordinary least squares with classical inference.

Coefficients come from a Householder QR factorization of the
column-equilibrated design, never from the normal equations.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dataset import AuctionMonth, ModelSpec, MonthlySeries, Term, design_matrix
from .errors import InsufficientDataError, SingularMatrixError
from .numstat import student_t_sf, t_critical

RANK_TOL = 1e-10
STARS = ((0.001, "***"), (0.01, "**"), (0.1, "*"))


def stars(p: float) -> str:
    """Significance marker: *** below 0.001, ** below 0.01, * below 0.1."""
    for cut, mark in STARS:
        if p < cut:
            return mark
    return ""


@dataclass(frozen=True)
class FitResult:
    terms: tuple
    params: np.ndarray
    bse: np.ndarray
    tvalues: np.ndarray
    pvalues: np.ndarray
    conf_int: np.ndarray  # shape (k, 2)
    r_squared: float
    residuals: np.ndarray
    n_obs: int
    df_resid: int
    level: float
    rss: float
    X: np.ndarray = field(repr=False)
    y: np.ndarray = field(repr=False)
    spec: ModelSpec | None = None
    months: tuple[AuctionMonth, ...] | None = None

    @property
    def coefficients(self) -> dict:
        return dict(zip(self.terms, self.params.tolist()))

    @property
    def std_errors(self) -> dict:
        return dict(zip(self.terms, self.bse.tolist()))

    @property
    def t_stats(self) -> dict:
        return dict(zip(self.terms, self.tvalues.tolist()))

    @property
    def p_values(self) -> dict:
        return dict(zip(self.terms, self.pvalues.tolist()))

    @property
    def conf_intervals(self) -> dict:
        return {t: (lo, hi) for t, (lo, hi) in zip(self.terms, self.conf_int.tolist())}

    @property
    def fitted(self) -> np.ndarray:
        return self.y - self.residuals

    @property
    def scale(self) -> float:
        """Residual variance estimate RSS / df_resid."""
        return self.rss / self.df_resid

    def predict(self, row) -> float:
        return float(np.dot(np.asarray(row, dtype=float), self.params))

    def to_dict(self) -> dict:
        out = {
            "model": self.spec.name if self.spec is not None else None,
            "n_obs": self.n_obs,
            "df_resid": self.df_resid,
            "r_squared": self.r_squared,
            "level": self.level,
            "first_month": str(self.months[0]) if self.months else None,
            "last_month": str(self.months[-1]) if self.months else None,
            "terms": [],
        }
        for k, term in enumerate(self.terms):
            out["terms"].append(
                {
                    "term": str(term),
                    "estimate": float(self.params[k]),
                    "std_error": float(self.bse[k]),
                    "t": float(self.tvalues[k]),
                    "p_value": float(self.pvalues[k]),
                    "ci_low": float(self.conf_int[k, 0]),
                    "ci_high": float(self.conf_int[k, 1]),
                    "stars": stars(self.pvalues[k]),
                }
            )
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, allow_nan=True)

    def to_table(self) -> str:
        """Aligned text table, one row per term, with significance stars."""
        head = f"{'term':<16}{'estimate':>14}{'std.err':>12}{'t':>10}{'p':>11}  "
        lines = [head, "-" * len(head)]
        for k, term in enumerate(self.terms):
            lines.append(
                f"{str(term):<16}{_num(self.params[k]):>14}{_num(self.bse[k]):>12}"
                f"{self.tvalues[k]:>10.3f}{self.pvalues[k]:>11.4g}  {stars(self.pvalues[k])}"
            )
        lines.append("-" * len(head))
        lines.append(f"R^2 = {self.r_squared:.3f}   n = {self.n_obs}   df_resid = {self.df_resid}")
        if self.months:
            lines.append(f"sample {self.months[0]} .. {self.months[-1]}")
        lines.append("*** p<0.001  ** p<0.01  * p<0.1")
        return "\n".join(lines)


def _num(x: float) -> str:
    ax = abs(x)
    if ax >= 100:
        return f"{x:.1f}"
    return f"{x:.4g}"


def _has_intercept(X: np.ndarray, terms: Sequence) -> bool:
    if Term.intercept() in terms:
        return True
    return any(np.all(X[:, j] == X[0, j]) and X[0, j] != 0 for j in range(X.shape[1]))


def qr_solve(X: np.ndarray, y: np.ndarray, terms: Sequence = ()) -> tuple[np.ndarray, np.ndarray]:
    """Least-squares coefficients and the inverse triangular factor.

    Returns ``(beta, Rinv)`` with ``(X'X)^-1 == Rinv @ Rinv.T``.
    Raises :class:`SingularMatrixError` naming the first dependent column.
    """
    n, k = X.shape
    names = list(terms) if len(terms) == k else [f"x{j}" for j in range(k)]
    norms = np.linalg.norm(X, axis=0)
    for j in range(k):
        if norms[j] == 0:
            raise SingularMatrixError(f"column {names[j]} is identically zero", names[j])
    Q, R = np.linalg.qr(X / norms)
    diag = np.abs(np.diag(R))
    cutoff = RANK_TOL * diag.max()
    for j in range(k):
        if diag[j] < cutoff:
            raise SingularMatrixError(
                f"design matrix is rank deficient at column {names[j]}", names[j]
            )
    beta_s = np.linalg.solve(R, Q.T @ y) if k else np.zeros(0)
    Rinv = np.linalg.solve(R, np.eye(k))
    return beta_s / norms, Rinv / norms[:, None]


def fit_ols(
    X,
    y,
    spec: ModelSpec | Sequence | None = None,
    level: float = 0.95,
    months: Sequence[AuctionMonth] | None = None,
) -> FitResult:
    """Ordinary least squares with t-based inference.

    ``spec`` supplies the term keys; it may be a :class:`ModelSpec`, a plain
    sequence of names, or ``None`` (columns become ``x0, x1, ...``).
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if X.ndim != 2 or X.shape[0] != y.size:
        raise ValueError("X must be 2-D with one row per element of y")
    n, k = X.shape
    if isinstance(spec, ModelSpec):
        terms = spec.terms
        model = spec
    elif spec is None:
        terms = tuple(f"x{j}" for j in range(k))
        model = None
    else:
        terms = tuple(spec)
        model = None
    if len(terms) != k:
        raise ValueError(f"{len(terms)} term names for {k} columns")
    if n <= k:
        raise InsufficientDataError(f"{n} observations cannot identify {k} coefficients")

    beta, Rinv = qr_solve(X, y, terms)
    resid = y - X @ beta
    df_resid = n - k
    rss = float(resid @ resid)
    s2 = rss / df_resid
    bse = np.sqrt(s2 * np.sum(Rinv**2, axis=1))
    with np.errstate(divide="ignore", invalid="ignore"):
        tvals = beta / bse
    pvals = np.array([student_t_sf(t, df_resid) if not math.isnan(t) else math.nan for t in tvals])
    tcrit = t_critical(1.0 - level, df_resid)
    ci = np.column_stack([beta - tcrit * bse, beta + tcrit * bse])

    if _has_intercept(X, terms):
        tss = float(np.sum((y - y.mean()) ** 2))
    else:
        tss = float(y @ y)
    r2 = 1.0 - rss / tss if tss > 0 else 1.0
    return FitResult(
        terms=tuple(terms),
        params=beta,
        bse=bse,
        tvalues=tvals,
        pvalues=pvals,
        conf_int=ci,
        r_squared=r2,
        residuals=resid,
        n_obs=n,
        df_resid=df_resid,
        level=level,
        rss=rss,
        X=X,
        y=y,
        spec=model,
        months=tuple(months) if months is not None else None,
    )


def fit_model(
    series: MonthlySeries,
    spec: ModelSpec,
    start: int = 0,
    stop: int | None = None,
    level: float = 0.95,
) -> FitResult:
    """Build the design for events ``[start, stop)`` and fit it by OLS.

    A dummy that is constant over the sample makes the model singular and
    raises :class:`SingularMatrixError` naming that dummy.
    """
    dm = design_matrix(series, spec, start, stop)
    if dm.singular_dummies:
        bad = dm.singular_dummies[0]
        raise SingularMatrixError(
            f"dummy {bad} is constant over {dm.months[0]}..{dm.months[-1]}; the model is singular",
            bad,
        )
    return fit_ols(dm.X, dm.y, spec, level=level, months=dm.months)
