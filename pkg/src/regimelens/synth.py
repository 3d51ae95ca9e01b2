"""Synthetic auction series drawn from a known linear model.

The response follows ``p_mean(t) = sum_j coef_j(t) * term_j(t) + noise``
where a coefficient may shift permanently at configured break months.
Quotas and bidder counts are exogenous integer processes.  Unless the
same-month minimal price is itself a regressor, ``p_min(t)`` is derived
from ``p_mean(t)`` by a random markdown, which keeps ``p_min <= p_mean``
without disturbing the model.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataset import AuctionMonth, ModelSpec, MonthlyRecord, MonthlySeries, Term
from .errors import ConfigError
from .models import REFERENCE_COEFFICIENTS, get_spec

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Break:
    at: AuctionMonth
    term: Term
    shift: float


@dataclass(frozen=True)
class GeneratorConfig:
    length: int = 95
    spec: ModelSpec = field(default_factory=lambda: get_spec("m2"))
    coefficients: dict = field(default_factory=dict)
    noise_sd: float = 0.0
    start: AuctionMonth = AuctionMonth(2002, 1)
    skip: tuple[AuctionMonth, ...] = (AuctionMonth(2008, 2),)
    breaks: tuple[Break, ...] = ()
    initial_level: float = 30000.0
    markdown: float = 0.1  # p_min(t) = p_mean(t) * (1 - markdown * U(0, 1))
    quota_mean: float = 5600.0
    quota_sd: float = 1500.0
    seed: int = 0

    def __post_init__(self):
        if self.length <= 0:
            raise ConfigError(f"length must be positive, got {self.length}")
        if self.noise_sd < 0:
            raise ConfigError("noise_sd must be non-negative")
        if not 0 <= self.markdown < 1:
            raise ConfigError("markdown must lie in [0, 1)")
        coefs = dict(self.coefficients)
        if not coefs and self.spec.name in REFERENCE_COEFFICIENTS:
            coefs = dict(REFERENCE_COEFFICIENTS[self.spec.name])
        missing = [t.label for t in self.spec.terms if t not in coefs]
        if missing:
            raise ConfigError(f"no coefficient for term(s): {', '.join(missing)}")
        extra = [t.label for t in coefs if t not in self.spec.terms]
        if extra:
            raise ConfigError(f"coefficient(s) for terms not in the model: {', '.join(extra)}")
        object.__setattr__(self, "coefficients", coefs)
        for b in self.breaks:
            if b.term not in self.spec.terms:
                raise ConfigError(f"break on {b.term} which is not in the model")
        if self.spec.response != "p_mean":
            raise ConfigError("the generator only models p_mean")
        if any(t.kind == "lagged" and t.variable == "p_mean" and t.lag == 0 for t in self.spec.terms):
            raise ConfigError("p_mean cannot be its own same-month regressor")

    @classmethod
    def from_dict(cls, data: dict) -> GeneratorConfig:
        data = dict(data)
        known = {"length", "model", "terms", "coefficients", "noise_sd", "start", "skip",
                 "breaks", "initial_level", "markdown", "quota_mean", "quota_sd", "seed"}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config key(s): {', '.join(sorted(unknown))}")
        try:
            kwargs = {}
            if "terms" in data:
                spec = ModelSpec(tuple(Term.parse(s) for s in data["terms"]),
                                 name=data.get("model", "custom"))
            else:
                spec = get_spec(data.get("model", "m2"))
            kwargs["spec"] = spec
            if "coefficients" in data:
                kwargs["coefficients"] = {Term.parse(k): float(v) for k, v in data["coefficients"].items()}
            if "start" in data:
                kwargs["start"] = AuctionMonth.parse(data["start"])
            if "skip" in data:
                kwargs["skip"] = tuple(AuctionMonth.parse(s) for s in data["skip"])
            if "breaks" in data:
                kwargs["breaks"] = tuple(
                    Break(AuctionMonth.parse(b["at"]), Term.parse(b["term"]), float(b["shift"]))
                    for b in data["breaks"]
                )
            for key in ("initial_level", "markdown", "quota_mean", "quota_sd", "noise_sd"):
                if key in data:
                    kwargs[key] = float(data[key])
            for key in ("length", "seed"):
                if key in data:
                    if isinstance(data[key], bool) or int(data[key]) != data[key]:
                        raise ConfigError(f"{key} must be an integer")
                    kwargs[key] = int(data[key])
        except ConfigError:
            raise
        except (KeyError, ValueError, TypeError) as exc:
            raise ConfigError(f"invalid generator config: {exc}") from None
        return cls(**kwargs)

    @classmethod
    def load(cls, path: str | Path) -> GeneratorConfig:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not valid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: expected a JSON object")
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return {
            "length": self.length,
            "model": self.spec.name,
            "terms": [t.label for t in self.spec.terms],
            "coefficients": {t.label: v for t, v in self.coefficients.items()},
            "noise_sd": self.noise_sd,
            "start": str(self.start),
            "skip": [str(m) for m in self.skip],
            "breaks": [{"at": str(b.at), "term": b.term.label, "shift": b.shift} for b in self.breaks],
            "initial_level": self.initial_level,
            "markdown": self.markdown,
            "quota_mean": self.quota_mean,
            "quota_sd": self.quota_sd,
            "seed": self.seed,
        }


def calendar(start: AuctionMonth, length: int, skip=()) -> list[AuctionMonth]:
    """``length`` consecutive auction months from ``start``, omitting ``skip``."""
    skip = set(skip)
    out, month = [], start
    while len(out) < length:
        if month not in skip:
            out.append(month)
        month = month.shift(1)
    return out


def synthesize_series(config: GeneratorConfig, seed: int | None = None) -> MonthlySeries:
    seed = config.seed if seed is None else seed
    rng = np.random.default_rng(seed)
    n = config.length
    months = calendar(config.start, n, config.skip)
    spec = config.spec

    # all random draws happen up front so noise_sd does not change the stream
    season = np.array([math.sin(2 * math.pi * (m.month - 3) / 12) for m in months])
    quota = np.maximum(
        np.rint(config.quota_mean * (1 + 0.25 * season) + config.quota_sd * rng.standard_normal(n)),
        100,
    ).astype(int)
    bidder = np.maximum(np.rint(quota * rng.uniform(1.2, 3.0, n)), 1).astype(int)
    noise = rng.standard_normal(n)
    markdown = rng.uniform(0.0, 1.0, n)
    warmup = rng.standard_normal(n)
    walk = np.cumsum(rng.standard_normal(n))

    exogenous_pmin = any(t.kind == "lagged" and t.variable == "p_min" and t.lag == 0 for t in spec.terms)
    p_mean = np.zeros(n)
    if exogenous_pmin:
        p_min = np.maximum(config.initial_level + 0.05 * config.initial_level * walk, 100.0)
    else:
        p_min = np.zeros(n)
    cols = {"p_mean": p_mean, "p_min": p_min, "n_quota": quota.astype(float),
            "n_bidder": bidder.astype(float)}

    def value(term: Term, i: int) -> float:
        if term.kind == "intercept":
            return 1.0
        if term.kind == "lagged":
            return cols[term.variable][i - term.lag]
        if term.kind == "dummy":
            return 1.0 if months[i] >= term.event else 0.0
        return cols["n_quota"][i] - cols["n_quota"][i - 1]

    clamped = 0
    for i in range(n):
        if i < spec.max_lag:
            level = config.initial_level * (1 + 0.02 * warmup[i])
        else:
            level = 0.0
            for term in spec.terms:
                coef = config.coefficients[term] + sum(
                    b.shift for b in config.breaks if b.term == term and months[i] >= b.at
                )
                level += coef * value(term, i)
        level += config.noise_sd * noise[i]
        if exogenous_pmin:
            if level < p_min[i]:
                clamped += 1
                level = p_min[i]
        elif level <= 0:
            clamped += 1
            level = 1.0
        p_mean[i] = level
        if not exogenous_pmin:
            p_min[i] = level * (1.0 - config.markdown * markdown[i])
    if clamped:
        log.warning("%d generated prices were clamped; the model no longer holds exactly there", clamped)
    records = tuple(
        MonthlyRecord(months[i], float(p_mean[i]), float(p_min[i]), int(quota[i]), int(bidder[i]))
        for i in range(n)
    )
    return MonthlySeries(records)


def reference_calendar() -> list[AuctionMonth]:
    """January 2002 to December 2009 without February 2008: 95 auctions."""
    return calendar(AuctionMonth(2002, 1), 95, (AuctionMonth(2008, 2),))
