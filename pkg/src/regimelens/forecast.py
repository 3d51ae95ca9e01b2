"""One-step-ahead out-of-sample prediction and mean-absolute-error tables."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .dataset import AuctionMonth, ModelSpec, MonthlySeries, design_row
from .errors import InsufficientDataError
from .models import D2004, DEBATE, REFORM, get_spec
from .rolling import fit_window

log = logging.getLogger(__name__)

# a model rule picks the spec to calibrate on events [start, stop)
ModelRule = Callable[[MonthlySeries, int, int], ModelSpec]

FAILURE_MONTHS = (AuctionMonth(2008, 1), AuctionMonth(2008, 3))
PARTITION_LABELS = ("A", "B", "B1", "B2")


@dataclass(frozen=True)
class PredictionRecord:
    month: AuctionMonth
    predicted: float
    actual: float
    delta_p: float
    model_id: str
    window_size: int
    skipped: bool = False
    reason: str | None = None
    spec_name: str = ""


def _interior(series: MonthlySeries, event: AuctionMonth, start: int, stop: int, max_lag: int) -> bool:
    first = max(start, max_lag)
    return series.months[first] < event < series.months[stop - 1]


def fixed_rule(model_id: str) -> ModelRule:
    spec = get_spec(model_id)
    return lambda series, start, stop: spec


def mixed_rule(series: MonthlySeries, start: int, stop: int) -> ModelSpec:
    """Reform model when the reform month is inside the window, else the
    debate-dummy model when the debate month is inside, else the plain
    lagged-price model. Both dummies are used if both are interior."""
    m4 = get_spec("m4")
    if _interior(series, REFORM, start, stop, m4.max_lag):
        if _interior(series, DEBATE, start, stop, m4.max_lag):
            log.info("window %s..%s contains both shocks", series.months[start], series.months[stop - 1])
            return ModelSpec(m4.terms + (D2004,), name="m4+d2004")
        return m4
    m5 = get_spec("m5")
    if _interior(series, DEBATE, start, stop, m5.max_lag):
        return m5
    return get_spec("m6")


COMPARISON_RULES: dict[str, ModelRule] = {
    "mixed": mixed_rule,
    "m2": fixed_rule("m2"),
    "m6": fixed_rule("m6"),
}


def resolve_rule(model_id: str) -> ModelRule:
    if model_id == "mixed":
        return mixed_rule
    return fixed_rule(model_id)


def predict_one(
    series: MonthlySeries,
    spec: ModelSpec | ModelRule,
    t: int,
    size: int,
    model_id: str = "",
) -> PredictionRecord:
    """Calibrate on events ``[t - size, t)`` and predict the response at ``t``.

    Regressors at ``t`` come from observed data only (same-month quota is
    known before the auction). A singular window yields a record with
    ``skipped=True`` and NaN prediction.
    """
    if t - size < 0 or t >= len(series):
        raise InsufficientDataError(f"event {t} has no full window of {size} events")
    chosen = spec(series, t - size, t) if callable(spec) else spec
    model_id = model_id or chosen.name
    actual = float(series.column(chosen.response)[t])
    win = fit_window(series, chosen, t, size)
    if win.fit is None:
        return PredictionRecord(series.months[t], math.nan, actual, math.nan, model_id, size,
                                skipped=True, reason=win.error, spec_name=chosen.name)
    predicted = win.fit.predict(design_row(series, win.fit.spec, t))
    name = chosen.name + "".join(f" -{d.label}" for d in win.dropped_dummies)
    return PredictionRecord(series.months[t], predicted, actual, predicted - actual, model_id,
                            size, spec_name=name)


# ---------------------------------------------------------------------------
# partitions


@dataclass(frozen=True)
class SamplePartition:
    label: str
    months: tuple[AuctionMonth, ...]

    @property
    def empty(self) -> bool:
        return not self.months

    def __len__(self) -> int:
        return len(self.months)

    def __contains__(self, month) -> bool:
        return month in self.months


def partition_months(
    series: MonthlySeries,
    size: int,
    excluded: Sequence[AuctionMonth] = FAILURE_MONTHS,
    split: AuctionMonth = REFORM,
) -> dict[str, SamplePartition]:
    """Evaluation samples for window size ``size``.

    A holds every month with a full preceding window (event ``size`` onward);
    B drops the ``excluded`` months; B1 is B before ``split`` and B2 the rest.
    """
    a = tuple(series.months[size:])
    b = tuple(m for m in a if m not in excluded)
    b1 = tuple(m for m in b if m < split)
    b2 = tuple(m for m in b if m >= split)
    parts = {
        "A": SamplePartition("A", a),
        "B": SamplePartition("B", b),
        "B1": SamplePartition("B1", b1),
        "B2": SamplePartition("B2", b2),
    }
    for p in parts.values():
        if p.empty:
            log.warning("sample %s is empty for window size %d", p.label, size)
    return parts


# ---------------------------------------------------------------------------
# error table


@dataclass(frozen=True)
class ErrorTable:
    rows: dict  # (model_id, window_size) -> {label: mean |dP|}
    counts: dict = field(default_factory=dict)  # same keys -> {label: n used}

    def cell(self, model_id: str, size: int, label: str) -> float:
        return self.rows[(model_id, size)][label]

    def to_dict(self) -> dict:
        out = []
        for (model_id, size), cells in self.rows.items():
            out.append({
                "model": model_id,
                "window": size,
                "mean_abs_dp": {k: (None if math.isnan(v) else v) for k, v in cells.items()},
                "n": self.counts.get((model_id, size), {}),
            })
        return {"rows": out}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_table(self) -> str:
        sizes = sorted({s for _, s in self.rows})
        models = list(dict.fromkeys(m for m, _ in self.rows))
        head = f"{'model':<10}" + "".join(
            f"| S={s:<3}" + "".join(f"{lab:>8}" for lab in PARTITION_LABELS) + " " for s in sizes
        )
        lines = [head, "-" * len(head)]
        for m in models:
            line = f"{m:<10}"
            for s in sizes:
                cells = self.rows.get((m, s))
                line += "|      "
                for lab in PARTITION_LABELS:
                    v = cells[lab] if cells else math.nan
                    line += f"{'-' if math.isnan(v) else str(round(v)):>8}"
                line += " "
            lines.append(line)
        return "\n".join(lines)


def error_table(records: Sequence[PredictionRecord], partitions: dict[int, dict[str, SamplePartition]]) -> ErrorTable:
    """Mean |dP| per (model, window) and partition, skipping singular months."""
    grouped: dict[tuple[str, int], list[PredictionRecord]] = {}
    for r in records:
        grouped.setdefault((r.model_id, r.window_size), []).append(r)
    rows, counts = {}, {}
    for key, recs in grouped.items():
        parts = partitions[key[1]]
        by_month = {r.month: r for r in recs if not r.skipped}
        cells, ns = {}, {}
        for lab in PARTITION_LABELS:
            vals = [abs(by_month[m].delta_p) for m in parts[lab].months if m in by_month]
            cells[lab] = math.fsum(vals) / len(vals) if vals else math.nan
            ns[lab] = len(vals)
        rows[key], counts[key] = cells, ns
    return ErrorTable(rows, counts)


def backtest(
    series: MonthlySeries,
    models: Sequence[tuple[str, ModelSpec | ModelRule]] | None = None,
    window_sizes: Sequence[int] = (24, 36),
) -> tuple[list[PredictionRecord], ErrorTable]:
    """Predict every eligible month for each model and window size.

    ``models`` defaults to the three comparison rules (mixed, m2, m6).
    """
    if models is None:
        models = list(COMPARISON_RULES.items())
    if not window_sizes:
        raise ValueError("no window sizes given")
    if len(series) <= max(window_sizes):
        raise InsufficientDataError(
            f"series of {len(series)} events is too short for window size {max(window_sizes)}"
        )
    records = []
    partitions = {}
    for size in window_sizes:
        partitions[size] = partition_months(series, size)
        for model_id, rule in models:
            for t in range(size, len(series)):
                records.append(predict_one(series, rule, t, size, model_id))
    return records, error_table(records, partitions)


def records_to_csv(records: Sequence[PredictionRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["month", "model", "window", "predicted", "actual", "delta_p", "spec", "skipped"])
    for r in records:
        w.writerow([
            r.month, r.model_id, r.window_size,
            "" if r.skipped else repr(r.predicted), repr(r.actual),
            "" if r.skipped else repr(r.delta_p), r.spec_name, int(r.skipped),
        ])
    return buf.getvalue()

