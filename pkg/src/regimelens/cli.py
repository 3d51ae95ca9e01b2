"""Command-line entry point: ``regimelens stats|fit|scan|backtest|synth``."""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
from pathlib import Path

from . import __version__
from .dataset import VARIABLES, AuctionMonth, MonthlySeries, design_matrix, parse_csv, to_csv
from .errors import RegimeLensError
from .forecast import COMPARISON_RULES, backtest, records_to_csv, resolve_rule
from .linmodel import fit_model
from .models import MODEL_IDS, get_spec
from .numstat import describe
from .robustfit import detect_outliers, fit_irls
from .rolling import WindowConfig, scan
from .synth import GeneratorConfig, synthesize_series

BACKTEST_MODELS = ("mixed",) + tuple(m for m in MODEL_IDS if m.startswith("m"))
STAT_FIELDS = ("minimum", "median", "maximum", "mean", "std_dev", "skewness", "kurtosis")


class UsageError(RegimeLensError):
    pass


def _read_series(path: str) -> MonthlySeries:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    if not text.strip():
        raise UsageError(f"{path}: input file is empty")
    try:
        return parse_csv(text)
    except RegimeLensError as exc:
        raise RegimeLensError(f"{path}: {exc}") from None


def _parse_range(text: str | None, series: MonthlySeries) -> tuple[int, int]:
    if not text:
        return 0, len(series)
    lo_s, sep, hi_s = text.partition(":")
    if not sep:
        raise UsageError(f"--range must look like FROM:TO, got {text!r}")
    try:
        lo = AuctionMonth.parse(lo_s) if lo_s else series.months[0]
        hi = AuctionMonth.parse(hi_s) if hi_s else series.months[-1]
    except ValueError as exc:
        raise UsageError(f"--range: {exc}") from None
    idx = [i for i, m in enumerate(series.months) if lo <= m <= hi]
    if not idx:
        raise UsageError(f"--range {text} selects no auctions")
    return idx[0], idx[-1] + 1


def _int_list(text: str) -> list[int]:
    try:
        out = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from None
    if not out or any(v <= 0 for v in out):
        raise UsageError(f"window sizes must be positive integers, got {text!r}")
    return out


def _fmt(v: float) -> str:
    if isinstance(v, float) and math.isnan(v):
        return "nan"
    if abs(v) >= 100:
        return f"{v:.0f}"
    return f"{v:.3f}"


# ---------------------------------------------------------------------------
# commands


def cmd_stats(args) -> str:
    series = _read_series(args.input)
    rows = {}
    for var in VARIABLES:
        try:
            rows[var] = describe(series.column(var), convention=args.convention)
        except RegimeLensError as exc:
            raise RegimeLensError(f"{args.input}: column {var}: {exc}") from None
    if args.format == "json":
        return json.dumps({v: _jsonable(s.as_dict()) for v, s in rows.items()}, indent=2)
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("variable",) + STAT_FIELDS)
        for var, s in rows.items():
            w.writerow([var] + [repr(getattr(s, f)) for f in STAT_FIELDS])
        return buf.getvalue().rstrip("\n")
    head = f"{'variable':<10}" + "".join(f"{f:>11}" for f in STAT_FIELDS)
    lines = [head, "-" * len(head)]
    for var, s in rows.items():
        lines.append(f"{var:<10}" + "".join(f"{_fmt(getattr(s, f)):>11}" for f in STAT_FIELDS))
    return "\n".join(lines)


def _jsonable(d: dict) -> dict:
    return {k: (None if isinstance(v, float) and math.isnan(v) else v) for k, v in d.items()}


def cmd_fit(args) -> str:
    series = _read_series(args.input)
    start, stop = _parse_range(args.range, series)
    spec = get_spec(args.model)
    if args.model == "robust-simple":
        dm = design_matrix(series, spec, start, stop)
        res = fit_irls(dm.X, dm.y, spec, level=args.level, months=dm.months)
        if args.format == "json":
            return json.dumps(res.to_dict(), indent=2)
        return res.to_table()
    fit = fit_model(series, spec, start, stop, level=args.level)
    outliers = detect_outliers(fit, args.alpha, bonferroni=args.bonferroni) if fit.df_resid >= 2 else None
    if args.format == "json":
        out = fit.to_dict()
        if outliers is not None:
            out["outliers"] = outliers.to_dict()
        return json.dumps(out, indent=2)
    text = f"model {args.model}\n" + fit.to_table()
    if outliers is not None and args.model == "simple":
        text += "\n\n" + outliers.to_table()
    return text


def cmd_scan(args) -> str:
    series = _read_series(args.input)
    spec = get_spec(args.model)
    try:
        config = WindowConfig(args.window, spec)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    result = scan(series, config)
    if args.format == "json":
        rows = list(csv.DictReader(io.StringIO(result.to_csv())))
        return json.dumps(rows, indent=2)
    if args.format == "table":
        terms = result.terms
        head = f"{'month':<9}" + "".join(f"{t.label[:14]:>15}" for t in terms)
        lines = [head]
        for k, win in enumerate(result.windows):
            cells = []
            for t in terms:
                band = result.band_series[t][k]
                cells.append(f"{'x' if band is None else band:>15}")
            lines.append(f"{str(win.target_month):<9}" + "".join(cells))
        lines.append("band: 0 p<0.001, 1 p<0.01, 2 p<0.05, 3 p<0.1, 4 p>=0.1, -1 not in model")
        return "\n".join(lines)
    return result.to_csv().rstrip("\n")


def cmd_backtest(args) -> str:
    series = _read_series(args.input)
    ids = [m.strip() for m in args.models.split(",") if m.strip()]
    bad = [m for m in ids if m not in BACKTEST_MODELS]
    if bad or not ids:
        raise UsageError(
            f"unknown model id(s) {', '.join(bad) or '(none)'}; valid ids: {', '.join(BACKTEST_MODELS)}"
        )
    windows = _int_list(args.windows)
    models = [(m, COMPARISON_RULES.get(m) or resolve_rule(m)) for m in ids]
    records, table = backtest(series, models, windows)
    if args.deltas_out:
        Path(args.deltas_out).write_text(records_to_csv(records), encoding="utf-8")
    if args.format == "json":
        return table.to_json()
    if args.format == "csv":
        return records_to_csv(records).rstrip("\n")
    return "mean |dP| (RMB)\n" + table.to_table()


def cmd_synth(args) -> str:
    config = GeneratorConfig.load(args.config)
    return to_csv(synthesize_series(config, args.seed)).rstrip("\n")


COMMANDS = {
    "stats": cmd_stats,
    "fit": cmd_fit,
    "scan": cmd_scan,
    "backtest": cmd_backtest,
    "synth": cmd_synth,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="regimelens", description=__doc__)
    parser.add_argument("--version", action="version", version=f"regimelens {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, formats=("table", "json", "csv"), default="table"):
        p.add_argument("--format", choices=formats, default=default)
        p.add_argument("--output", "-o", help="write data here instead of standard output")
        p.add_argument("--manifest-out", help="write a JSON run manifest to this path")

    p = sub.add_parser("stats", help="descriptive statistics per column")
    p.add_argument("--input", "-i", required=True)
    p.add_argument("--convention", choices=("moment", "sample"), default="moment")
    common(p)

    p = sub.add_parser("fit", help="full-sample OLS (or IRLS) calibration")
    p.add_argument("--input", "-i", required=True)
    p.add_argument("--model", "-m", required=True, choices=MODEL_IDS)
    p.add_argument("--range", help="FROM:TO in YYYY-MM, inclusive")
    p.add_argument("--alpha", type=float, default=0.05, help="outlier test level")
    p.add_argument("--bonferroni", action="store_true")
    p.add_argument("--level", type=float, default=0.95, help="confidence level")
    common(p, ("table", "json"))

    p = sub.add_parser("scan", help="rolling-window significance bands and coefficients")
    p.add_argument("--input", "-i", required=True)
    p.add_argument("--model", "-m", default="m3", choices=MODEL_IDS)
    p.add_argument("--window", "-w", type=int, required=True)
    common(p, default="csv")

    p = sub.add_parser("backtest", help="one-step-ahead prediction errors")
    p.add_argument("--input", "-i", required=True)
    p.add_argument("--models", default="mixed,m2,m6")
    p.add_argument("--windows", default="24,36")
    p.add_argument("--deltas-out", help="write per-month dP CSV here")
    common(p)

    p = sub.add_parser("synth", help="generate a synthetic series as CSV")
    p.add_argument("--config", "-c", required=True)
    p.add_argument("--seed", type=int, default=None)
    common(p, ("csv",), "csv")
    return parser


def _sha256(path: str) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _manifest(args, argv, outputs) -> dict:
    inputs = [p for p in (getattr(args, "input", None), getattr(args, "config", None)) if p]
    return {
        "tool": "regimelens",
        "version": __version__,
        "command": args.command,
        "argv": list(argv),
        "inputs": [{"path": p, "sha256": _sha256(p)} for p in inputs],
        "model": getattr(args, "model", None) or getattr(args, "models", None),
        "windows": getattr(args, "window", None) or getattr(args, "windows", None),
        "seed": getattr(args, "seed", None),
        "outputs": [{"path": p, "sha256": _sha256(p)} for p in outputs],
    }


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        text = COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"regimelens {args.command}: usage error: {exc}", file=sys.stderr)
        return 2
    except (RegimeLensError, KeyError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"regimelens {args.command}: error: {msg}", file=sys.stderr)
        return 1
    outputs = []
    if args.output:
        Path(args.output).write_text(text + "\n", encoding="utf-8")
        outputs.append(args.output)
    else:
        sys.stdout.write(text + "\n")
    if getattr(args, "deltas_out", None):
        outputs.append(args.deltas_out)
    if args.manifest_out:
        Path(args.manifest_out).write_text(
            json.dumps(_manifest(args, argv, outputs), indent=2) + "\n", encoding="utf-8"
        )
    return 0


if __name__ == "__main__":
    sys.exit(main())
