"""Regression and regime-change analysis of monthly auction price series."""

__version__ = "0.1.0"

from .dataset import (
    AuctionMonth,
    ModelSpec,
    MonthlyRecord,
    MonthlySeries,
    Term,
    design_matrix,
    parse_csv,
    to_csv,
)
from .forecast import backtest, partition_months, predict_one
from .linmodel import FitResult, fit_model, fit_ols
from .models import get_spec
from .numstat import describe, student_t_sf, t_critical
from .robustfit import detect_outliers, fit_irls
from .rolling import WindowConfig, coefficient_traces, scan
from .synth import GeneratorConfig, synthesize_series

__all__ = [
    "AuctionMonth", "ModelSpec", "MonthlyRecord", "MonthlySeries", "Term",
    "design_matrix", "parse_csv", "to_csv", "backtest", "partition_months",
    "predict_one", "FitResult", "fit_model", "fit_ols", "get_spec", "describe",
    "student_t_sf", "t_critical", "detect_outliers", "fit_irls",
    "WindowConfig", "coefficient_traces", "scan", "GeneratorConfig",
    "synthesize_series",
]
