"""Summary tables over per-event outcomes, split concave vs non-concave.

Quantiles use linear interpolation between order statistics (Hyndman-Fan
type 7, numpy's default). Difference columns are always left column minus
right column; for the group tables that is concave minus non-concave.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import UnknownMetric
from .strategies import ConcavityFilter, StrategyOutcome

METRICS = (
    "impmove_straddle",
    "impmove_strangle",
    "straddle_return",
    "strangle_return",
    "price_return",
    "convexest",
    "lambda_used",
)
STATS = ("mean", "min", "25%", "50%", "75%", "max")
RESULT_COLUMNS = (
    "ticker",
    "quarter",
    "is_concave",
    "label",
    "convexest",
    "impmove_straddle",
    "impmove_strangle",
    "straddle_return",
    "strangle_return",
    "price_return",
    "lambda_used",
    "modality",
)
NA = "NA"
QUANTILE_RULE = "linear interpolation between order statistics (type 7)"


@dataclass(frozen=True)
class SummaryTable:
    name: str  # file-name slug
    title: str
    columns: tuple[str, str, str]
    counts: tuple[int, int]
    rows: tuple[tuple[str, tuple[float | None, float | None, float | None]], ...]

    def value(self, stat: str, column: int) -> float | None:
        return dict(self.rows)[stat][column]


def describe(values: Sequence[float]) -> dict[str, float] | None:
    """Mean, min, quartiles and max; ``None`` for an empty sample."""
    if len(values) == 0:
        return None
    v = np.sort(np.asarray(values, dtype=float))
    q = np.quantile(v, [0.25, 0.5, 0.75], method="linear")
    return {
        "mean": float(np.mean(v)),
        "min": float(v[0]),
        "25%": float(q[0]),
        "50%": float(q[1]),
        "75%": float(q[2]),
        "max": float(v[-1]),
    }


def _metric_values(outcomes: Iterable[StrategyOutcome], metric: str) -> list[float]:
    if metric not in METRICS:
        raise UnknownMetric(metric)
    return [float(getattr(o, metric)) for o in outcomes]


def _table(name, title, columns, left, right) -> SummaryTable:
    a, b = describe(left), describe(right)
    rows = []
    for stat in STATS:
        x = None if a is None else a[stat]
        y = None if b is None else b[stat]
        diff = None if x is None or y is None else x - y
        rows.append((stat, (x, y, diff)))
    return SummaryTable(name, title, columns, (len(left), len(right)), tuple(rows))


def split_groups(
    outcomes: Iterable[StrategyOutcome], mode: ConcavityFilter = ConcavityFilter.DEFINITION
) -> tuple[list[StrategyOutcome], list[StrategyOutcome]]:
    ordered = sorted(outcomes, key=lambda o: o.key)
    concave = [o for o in ordered if o.in_concave_group(mode)]
    other = [o for o in ordered if not o.in_concave_group(mode)]
    return concave, other


def summarize(
    outcomes: Sequence[StrategyOutcome],
    metric: str,
    mode: ConcavityFilter = ConcavityFilter.DEFINITION,
) -> SummaryTable:
    """Concave / non-concave / difference statistics for one metric."""
    concave, other = split_groups(outcomes, mode)
    return _table(
        metric,
        f"{metric}: concave vs non-concave",
        ("concave", "non-concave", "difference"),
        _metric_values(concave, metric),
        _metric_values(other, metric),
    )


def compare_metrics(
    outcomes: Sequence[StrategyOutcome],
    left: str,
    right: str,
    group: str,
    mode: ConcavityFilter = ConcavityFilter.DEFINITION,
) -> SummaryTable:
    """Two metrics side by side within one group (``concave``, ``non-concave`` or ``all``)."""
    concave, other = split_groups(outcomes, mode)
    members = {"concave": concave, "non-concave": other, "all": concave + other}[group]
    slug = group.replace("-", "_")
    return _table(
        f"{left}_vs_{right}_{slug}",
        f"{left} vs {right} ({group})",
        (left, right, "difference"),
        _metric_values(members, left),
        _metric_values(members, right),
    )


def standard_tables(
    outcomes: Sequence[StrategyOutcome], mode: ConcavityFilter = ConcavityFilter.DEFINITION
) -> list[SummaryTable]:
    tables = [
        summarize(outcomes, m, mode)
        for m in (
            "impmove_straddle",
            "impmove_strangle",
            "straddle_return",
            "strangle_return",
            "price_return",
        )
    ]
    for group in ("concave", "non-concave"):
        tables.append(compare_metrics(outcomes, "impmove_straddle", "price_return", group, mode))
        tables.append(compare_metrics(outcomes, "impmove_strangle", "price_return", group, mode))
        tables.append(compare_metrics(outcomes, "straddle_return", "strangle_return", group, mode))
    return tables


def fmt(x: float | None, digits: int = 10) -> str:
    return NA if x is None else f"{x:.{digits}f}"


def table_csv(table: SummaryTable) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["stat", *table.columns])
    for stat, values in table.rows:
        writer.writerow([stat, *(fmt(v) for v in values)])
    writer.writerow(["count", table.counts[0], table.counts[1], NA])
    return buf.getvalue()


def results_csv(outcomes: Iterable[StrategyOutcome]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(RESULT_COLUMNS)
    for o in sorted(outcomes, key=lambda o: o.key):
        row = []
        for col in RESULT_COLUMNS:
            v = getattr(o, col)
            if isinstance(v, bool):
                v = int(v)
            elif isinstance(v, float):
                v = repr(v)
            elif hasattr(v, "value"):
                v = v.value
            row.append(v)
        writer.writerow(row)
    return buf.getvalue()


def _markdown_table(table: SummaryTable) -> str:
    lines = [
        f"### {table.title}",
        "",
        f"n = {table.counts[0]} / {table.counts[1]}",
        "",
        "| | " + " | ".join(table.columns) + " |",
        "|---|" + "---:|" * len(table.columns),
    ]
    for stat, values in table.rows:
        lines.append(f"| {stat} | " + " | ".join(fmt(v, 6) for v in values) + " |")
    return "\n".join(lines)


def _outcome_dict(o: StrategyOutcome) -> dict:
    return {
        "ticker": o.ticker,
        "quarter": o.quarter,
        "is_concave": o.is_concave,
        "label": o.label.value,
        "convexest": o.convexest,
        "impmove_straddle": o.impmove_straddle,
        "impmove_strangle": o.impmove_strangle,
        "straddle_return": o.straddle_return,
        "strangle_return": o.strangle_return,
        "price_return": o.price_return,
        "lambda_used": o.lambda_used,
        "modality": o.modality,
        "arbitrage_free": o.arbitrage_free,
        "flags": list(o.flags),
    }


def render_report(
    tables: Sequence[SummaryTable],
    outcomes: Sequence[StrategyOutcome],
    fmt_name: str,
    mode: ConcavityFilter = ConcavityFilter.DEFINITION,
) -> dict[str, str]:
    """Render to ``{file name: contents}``.

    ``csv`` yields one ``summary_<table>.csv`` per table, ``json`` yields
    ``report.json`` and ``markdown`` yields ``report.md``. Output depends only on
    the inputs; outcomes are emitted in (ticker, quarter) order.
    """
    ordered = sorted(outcomes, key=lambda o: o.key)
    concave, other = split_groups(ordered, mode)
    if fmt_name == "csv":
        return {f"summary_{t.name}.csv": table_csv(t) for t in tables}
    if fmt_name == "json":
        doc = {
            "conventions": {
                "quantiles": QUANTILE_RULE,
                "difference": "left column minus right column",
                "concavity_filter": ConcavityFilter(mode).value,
            },
            "counts": {"events": len(ordered), "concave": len(concave), "non_concave": len(other)},
            "tables": [
                {
                    "name": t.name,
                    "title": t.title,
                    "columns": list(t.columns),
                    "counts": list(t.counts),
                    "rows": {stat: list(values) for stat, values in t.rows},
                }
                for t in tables
            ],
            "events": [_outcome_dict(o) for o in ordered],
        }
        return {"report.json": json.dumps(doc, indent=2) + "\n"}
    if fmt_name == "markdown":
        parts = [
            "# Earnings-event smile report",
            "",
            f"Events: {len(ordered)} (concave {len(concave)}, non-concave {len(other)}); "
            f"concavity filter: {ConcavityFilter(mode).value}.",
            "",
            f"Quantiles: {QUANTILE_RULE}. Difference = left column minus right column.",
            "",
        ]
        if not ordered:
            parts += ["**No events.** All statistics below are NA.", ""]
        for t in tables:
            parts += [_markdown_table(t), ""]
        return {"report.md": "\n".join(parts)}
    raise ValueError(f"unknown report format {fmt_name!r}")


def write_report(
    out_dir: str | Path,
    tables: Sequence[SummaryTable],
    outcomes: Sequence[StrategyOutcome],
    mode: ConcavityFilter = ConcavityFilter.DEFINITION,
) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    docs = {"results.csv": results_csv(outcomes)}
    for name in ("csv", "json", "markdown"):
        docs.update(render_report(tables, outcomes, name, mode))
    written = []
    for fname in sorted(docs):
        path = out / fname
        path.write_text(docs[fname], encoding="utf-8")
        written.append(path)
    return written
