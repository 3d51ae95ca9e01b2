"""Moving-window calibration and per-window significance bands."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

from .dataset import AuctionMonth, ModelSpec, MonthlySeries, Term
from .errors import InsufficientDataError, SingularMatrixError
from .linmodel import FitResult, fit_model
from .numstat import significance_band

DEFAULT_BANDS = (0.001, 0.01, 0.05, 0.1)
NOT_IN_MODEL = -1  # band recorded for a dummy dropped from a window


def window_bounds(t: int, size: int) -> tuple[int, int]:
    """Half-open event range ``[t - size, t)`` calibrating the forecast of ``t``."""
    return t - size, t


def usable_window(series: MonthlySeries, spec: ModelSpec, start: int, stop: int) -> tuple[int, int]:
    return max(start, spec.max_lag), stop


def dummy_is_interior(event: AuctionMonth, first: AuctionMonth, last: AuctionMonth) -> bool:
    """True when ``event`` falls strictly between the window's first and last month."""
    return first < event < last


def filter_dummies(
    series: MonthlySeries, spec: ModelSpec, start: int, stop: int
) -> tuple[ModelSpec, tuple[Term, ...]]:
    """Drop dummies whose event is not strictly inside the window.

    A dummy on the first usable month is collinear with the intercept, one
    outside the window is constant, and one on the last month would absorb
    that observation exactly; all three are removed.
    """
    first, stop = usable_window(series, spec, start, stop)
    if first >= stop:
        raise InsufficientDataError(f"window [{start}, {stop}) has no usable rows")
    lo, hi = series.months[first], series.months[stop - 1]
    dropped = tuple(d for d in spec.dummies if not dummy_is_interior(d.event, lo, hi))
    return (spec.without(*dropped) if dropped else spec), dropped


@dataclass(frozen=True)
class WindowConfig:
    size: int
    spec: ModelSpec
    significance_bands: tuple[float, ...] = DEFAULT_BANDS

    def __post_init__(self):
        object.__setattr__(self, "significance_bands", tuple(self.significance_bands))
        need = len(self.spec) + self.spec.max_lag + 2
        if self.size < need:
            raise ValueError(f"window size {self.size} too small for this spec (need >= {need})")
        if list(self.significance_bands) != sorted(self.significance_bands):
            raise ValueError("significance bands must be increasing")


@dataclass(frozen=True)
class Window:
    target: int  # event index being forecast
    target_month: AuctionMonth
    start_month: AuctionMonth
    end_month: AuctionMonth  # last calibration month
    fit: FitResult | None
    dropped_dummies: tuple[Term, ...] = ()
    error: str | None = None

    @property
    def singular(self) -> bool:
        return self.fit is None


@dataclass(frozen=True)
class WindowScanResult:
    config: WindowConfig
    windows: tuple[Window, ...]
    band_series: dict = field(repr=False)

    @property
    def terms(self) -> tuple[Term, ...]:
        return self.config.spec.terms

    def to_csv(self) -> str:
        """Long format: one row per (window, term)."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["target_month", "end_month", "term", "estimate", "std_error", "p_value", "band"])
        for k, win in enumerate(self.windows):
            coefs = win.fit.coefficients if win.fit else {}
            ses = win.fit.std_errors if win.fit else {}
            ps = win.fit.p_values if win.fit else {}
            for term in self.terms:
                band = self.band_series[term][k]
                if term in coefs:
                    row = [repr(coefs[term]), repr(ses[term]), repr(ps[term])]
                else:
                    row = ["", "", ""]
                w.writerow([win.target_month, win.end_month, term.label, *row,
                            "" if band is None else band])
        return buf.getvalue()


def fit_window(series: MonthlySeries, spec: ModelSpec, t: int, size: int) -> Window:
    """Calibrate ``spec`` on the ``size`` events before ``t``."""
    start, stop = window_bounds(t, size)
    if start < 0 or t >= len(series):
        raise InsufficientDataError(f"event {t} has no full window of {size} events")
    local, dropped = filter_dummies(series, spec, start, stop)
    first, _ = usable_window(series, spec, start, stop)
    kwargs = dict(
        target=t,
        target_month=series.months[t],
        start_month=series.months[first],
        end_month=series.months[stop - 1],
        dropped_dummies=dropped,
    )
    try:
        fit = fit_model(series, local, start, stop)
    except (SingularMatrixError, InsufficientDataError) as exc:
        return Window(fit=None, error=str(exc), **kwargs)
    return Window(fit=fit, **kwargs)


def scan(series: MonthlySeries, config: WindowConfig) -> WindowScanResult:
    """Fit every full window and classify each term's p-value into bands.

    Window ``k`` calibrates on events ``[k, k + S)`` and targets event
    ``k + S``, so a series of length n yields n - S windows.
    """
    size = config.size
    if len(series) < size + 1:
        raise InsufficientDataError(
            f"series of {len(series)} events is too short for window size {size}"
        )
    windows = tuple(fit_window(series, config.spec, t, size) for t in range(size, len(series)))
    bands: dict[Term, list] = {term: [] for term in config.spec.terms}
    for win in windows:
        ps = win.fit.p_values if win.fit else {}
        for term in config.spec.terms:
            if term in win.dropped_dummies:
                bands[term].append(NOT_IN_MODEL)
            elif win.fit is None:
                bands[term].append(None)
            else:
                bands[term].append(significance_band(ps[term], config.significance_bands))
    return WindowScanResult(config, windows, bands)


def coefficient_traces(result: WindowScanResult, terms) -> dict:
    """Per-window estimates for each requested term; NaN where it was not fitted."""
    out = {}
    for term in terms:
        if term not in result.terms:
            raise KeyError(f"term {term} is not in the scanned model")
        trace = []
        for win in result.windows:
            value = win.fit.coefficients.get(term, math.nan) if win.fit else math.nan
            trace.append((win.target_month, value))
        out[term] = trace
    return out
