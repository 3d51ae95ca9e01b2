"""Monthly auction series: ingestion, validation, and design-matrix assembly.

Lags are counted in auction events (positions in the series), never in
calendar months, so the record after a skipped month is lagged onto the
record before the gap.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DuplicateDateError,
    InsufficientDataError,
    ParseError,
    SchemaError,
    ValidationError,
)

COLUMNS = ("date", "p_mean", "p_min", "n_quota", "n_bidder")
VARIABLES = ("p_mean", "p_min", "n_quota", "n_bidder")


@dataclass(frozen=True, order=True)
class AuctionMonth:
    year: int
    month: int

    def __post_init__(self):
        if not 1 <= self.month <= 12:
            raise ValueError(f"month out of range: {self.month}")

    @classmethod
    def parse(cls, text: str) -> AuctionMonth:
        """Parse ``YYYY-MM``."""
        parts = text.strip().split("-")
        if len(parts) != 2 or len(parts[0]) != 4 or len(parts[1]) != 2:
            raise ValueError(f"expected YYYY-MM, got {text!r}")
        try:
            return cls(int(parts[0]), int(parts[1]))
        except ValueError as exc:
            raise ValueError(f"expected YYYY-MM, got {text!r}") from exc

    def __str__(self) -> str:
        return f"{self.year:04d}-{self.month:02d}"

    @property
    def ordinal(self) -> int:
        return self.year * 12 + self.month - 1

    def shift(self, months: int) -> AuctionMonth:
        y, m = divmod(self.ordinal + months, 12)
        return AuctionMonth(y, m + 1)


def _month(value: AuctionMonth | str) -> AuctionMonth:
    return value if isinstance(value, AuctionMonth) else AuctionMonth.parse(value)


@dataclass(frozen=True)
class MonthlyRecord:
    date: AuctionMonth
    p_mean: float
    p_min: float
    n_quota: int
    n_bidder: int

    def validate(self) -> None:
        for name in VARIABLES:
            value = getattr(self, name)
            if not math.isfinite(value) or value <= 0:
                raise ValidationError(f"{self.date}: {name} must be positive, got {value}")
        if self.p_mean < self.p_min:
            raise ValidationError(
                f"{self.date}: p_mean {self.p_mean} is below p_min {self.p_min}"
            )


@dataclass(frozen=True)
class MonthlySeries:
    """Immutable, strictly date-ordered sequence of auction records."""

    records: tuple[MonthlyRecord, ...]

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        for prev, cur in zip(self.records, self.records[1:]):
            if cur.date == prev.date:
                raise DuplicateDateError(f"duplicate date {cur.date}")
            if cur.date < prev.date:
                raise ValidationError(f"records out of order at {cur.date}")
        for rec in self.records:
            rec.validate()

    def __len__(self) -> int:
        return len(self.records)

    def __getitem__(self, item):
        if isinstance(item, slice):
            return MonthlySeries(self.records[item])
        return self.records[item]

    def __iter__(self):
        return iter(self.records)

    @cached_property
    def months(self) -> tuple[AuctionMonth, ...]:
        return tuple(r.date for r in self.records)

    @cached_property
    def _columns(self) -> dict[str, np.ndarray]:
        cols = {}
        for name in VARIABLES:
            arr = np.array([getattr(r, name) for r in self.records], dtype=float)
            arr.setflags(write=False)
            cols[name] = arr
        return cols

    def column(self, name: str) -> np.ndarray:
        try:
            return self._columns[name]
        except KeyError:
            raise KeyError(f"unknown variable {name!r}") from None

    @property
    def gaps(self) -> list[AuctionMonth]:
        """Calendar months absent between the first and last record."""
        missing = []
        for prev, cur in zip(self.months, self.months[1:]):
            missing.extend(prev.shift(k) for k in range(1, cur.ordinal - prev.ordinal))
        return missing

    def index_of(self, month: AuctionMonth | str) -> int:
        month = _month(month)
        try:
            return self.months.index(month)
        except ValueError:
            raise KeyError(f"no auction in {month}") from None

    def replace(self, index: int, **changes) -> MonthlySeries:
        """Copy with one record's fields replaced."""
        records = list(self.records)
        fields = {name: getattr(records[index], name) for name in COLUMNS}
        fields.update(changes)
        records[index] = MonthlyRecord(**fields)
        return MonthlySeries(tuple(records))


def _parse_count(text: str, name: str, line: int) -> int:
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"{name}: not a number: {text!r}", line) from None
    if not math.isfinite(value) or value != int(value):
        raise ParseError(f"{name}: expected an integer count, got {text!r}", line)
    return int(value)


def _parse_price(text: str, name: str, line: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"{name}: not a number: {text!r}", line) from None
    if not math.isfinite(value):
        raise ParseError(f"{name}: non-finite value {text!r}", line)
    return value


def parse_csv(text: str | io.TextIOBase) -> MonthlySeries:
    """Read ``date,p_mean,p_min,n_quota,n_bidder`` rows into a validated series.

    Rows may appear in any order; the result is sorted by date.
    """
    if not isinstance(text, str):
        text = text.read()
    if not text.strip():
        raise ParseError("empty input")
    reader = csv.reader(io.StringIO(text))
    header = [h.strip() for h in next(reader)]
    missing = [c for c in COLUMNS if c not in header]
    if missing:
        raise SchemaError(f"missing column(s): {', '.join(missing)}", 1)
    extra = [h for h in header if h not in COLUMNS]
    if extra:
        raise SchemaError(f"unexpected column(s): {', '.join(extra)}", 1)
    pos = {name: header.index(name) for name in COLUMNS}

    seen: dict[AuctionMonth, int] = {}
    records = []
    for row in reader:
        line = reader.line_num
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} fields, got {len(row)}", line)
        try:
            date = AuctionMonth.parse(row[pos["date"]])
        except ValueError as exc:
            raise ParseError(str(exc), line) from None
        if date in seen:
            raise DuplicateDateError(f"duplicate date {date} (first on line {seen[date]})", line)
        seen[date] = line
        rec = MonthlyRecord(
            date=date,
            p_mean=_parse_price(row[pos["p_mean"]], "p_mean", line),
            p_min=_parse_price(row[pos["p_min"]], "p_min", line),
            n_quota=_parse_count(row[pos["n_quota"]], "n_quota", line),
            n_bidder=_parse_count(row[pos["n_bidder"]], "n_bidder", line),
        )
        try:
            rec.validate()
        except ValidationError as exc:
            raise ValidationError(f"line {line}: {exc}") from None
        records.append(rec)
    if not records:
        raise ParseError("no data rows")
    records.sort(key=lambda r: r.date)
    return MonthlySeries(tuple(records))


def _format_number(value: float) -> str:
    if float(value).is_integer():
        return str(int(value))
    return repr(float(value))


def to_csv(series: MonthlySeries) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS)
    for r in series:
        writer.writerow(
            [str(r.date), _format_number(r.p_mean), _format_number(r.p_min), r.n_quota, r.n_bidder]
        )
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Regression terms


@dataclass(frozen=True)
class Term:
    """One regressor column.

    ``kind`` is ``"intercept"``, ``"lagged"``, ``"dummy"`` or ``"delta_quota"``.
    Build instances with the classmethods rather than the constructor.
    """

    kind: str
    variable: str | None = None
    lag: int = 0
    event: AuctionMonth | None = None

    @classmethod
    def intercept(cls) -> Term:
        return cls("intercept")

    @classmethod
    def lagged(cls, variable: str, lag: int = 0) -> Term:
        if variable not in VARIABLES:
            raise ValueError(f"unknown variable {variable!r}")
        if lag < 0:
            raise ValueError("lag must be non-negative")
        return cls("lagged", variable, lag)

    @classmethod
    def dummy(cls, event: AuctionMonth | str) -> Term:
        return cls("dummy", event=_month(event))

    @classmethod
    def delta_quota(cls) -> Term:
        return cls("delta_quota")

    @property
    def max_lag(self) -> int:
        if self.kind == "lagged":
            return self.lag
        if self.kind == "delta_quota":
            return 1
        return 0

    @property
    def label(self) -> str:
        if self.kind == "intercept":
            return "intercept"
        if self.kind == "lagged":
            return f"{self.variable}[t-{self.lag}]" if self.lag else f"{self.variable}[t]"
        if self.kind == "dummy":
            return f"D[{self.event}]"
        return "delta_n_quota"

    def __str__(self) -> str:
        return self.label

    @classmethod
    def parse(cls, label: str) -> Term:
        """Inverse of :attr:`label`."""
        label = label.strip()
        if label == "intercept":
            return cls.intercept()
        if label == "delta_n_quota":
            return cls.delta_quota()
        if label.startswith("D[") and label.endswith("]"):
            return cls.dummy(label[2:-1])
        if label.endswith("]") and "[t" in label:
            var, _, rest = label.partition("[t")
            rest = rest[:-1]
            if rest == "":
                return cls.lagged(var, 0)
            if rest.startswith("-") and rest[1:].isdigit():
                return cls.lagged(var, int(rest[1:]))
        raise ValueError(f"unrecognised term label {label!r}")

    def values(self, series: MonthlySeries, rows: np.ndarray) -> np.ndarray:
        """Column of this term at the given event indices."""
        rows = np.asarray(rows, dtype=int)
        if self.kind == "intercept":
            return np.ones(len(rows))
        if self.kind == "lagged":
            return series.column(self.variable)[rows - self.lag]
        if self.kind == "dummy":
            ords = np.array([series.months[i].ordinal for i in rows], dtype=int)
            return (ords >= self.event.ordinal).astype(float)
        quota = series.column("n_quota")
        return quota[rows] - quota[rows - 1]


@dataclass(frozen=True)
class ModelSpec:
    terms: tuple[Term, ...]
    response: str = "p_mean"
    name: str = field(default="", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        if len(set(self.terms)) != len(self.terms):
            raise ValueError("duplicate terms in model spec")
        if not self.terms:
            raise ValueError("model spec needs at least one term")
        if self.response not in VARIABLES:
            raise ValueError(f"unknown response {self.response!r}")

    @property
    def max_lag(self) -> int:
        return max(t.max_lag for t in self.terms)

    @property
    def has_intercept(self) -> bool:
        return Term.intercept() in self.terms

    @property
    def dummies(self) -> tuple[Term, ...]:
        return tuple(t for t in self.terms if t.kind == "dummy")

    def without(self, *drop: Term) -> ModelSpec:
        return ModelSpec(tuple(t for t in self.terms if t not in drop), self.response, self.name)

    def __len__(self) -> int:
        return len(self.terms)


@dataclass(frozen=True)
class DesignMatrix:
    X: np.ndarray
    y: np.ndarray
    months: tuple[AuctionMonth, ...]
    rows: np.ndarray
    spec: ModelSpec
    singular_dummies: tuple[Term, ...] = ()

    def __iter__(self):
        # allows ``X, y, months = design_matrix(...)``
        return iter((self.X, self.y, self.months))


def _check_range(series: MonthlySeries, start: int, stop: int | None) -> tuple[int, int]:
    n = len(series)
    stop = n if stop is None else stop
    if not 0 <= start <= stop <= n:
        raise IndexError(f"range [{start}, {stop}) outside series of length {n}")
    return start, stop


def design_matrix(
    series: MonthlySeries, spec: ModelSpec, start: int = 0, stop: int | None = None
) -> DesignMatrix:
    """Regressor matrix and response for events ``start <= i < stop``.

    Rows whose lags would reach before the first event are dropped. Dummy
    columns that are constant over the usable rows are reported in
    ``singular_dummies``; the matrix still contains them.
    """
    start, stop = _check_range(series, start, stop)
    first = max(start, spec.max_lag)
    if first >= stop:
        raise InsufficientDataError(
            f"range [{start}, {stop}) has no rows once lag {spec.max_lag} is applied"
        )
    rows = np.arange(first, stop)
    X = np.column_stack([t.values(series, rows) for t in spec.terms])
    y = series.column(spec.response)[rows].copy()
    singular = tuple(
        t for j, t in enumerate(spec.terms) if t.kind == "dummy" and np.ptp(X[:, j]) == 0
    )
    months = tuple(series.months[i] for i in rows)
    return DesignMatrix(X, y, months, rows, spec, singular)


def design_row(series: MonthlySeries, spec: ModelSpec, index: int) -> np.ndarray:
    """Regressor values at one event; never touches that event's response."""
    if not spec.max_lag <= index < len(series):
        raise InsufficientDataError(f"event {index} lacks lag history for this spec")
    rows = np.array([index])
    return np.array([t.values(series, rows)[0] for t in spec.terms])


def make_series(records: Iterable[Sequence]) -> MonthlySeries:
    """Convenience builder from ``(date, p_mean, p_min, n_quota, n_bidder)`` tuples."""
    out = []
    for date, p_mean, p_min, n_quota, n_bidder in records:
        out.append(MonthlyRecord(_month(date), float(p_mean), float(p_min), int(n_quota), int(n_bidder)))
    return MonthlySeries(tuple(out))
