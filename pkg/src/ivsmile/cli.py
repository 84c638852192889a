"""Command-line entry point: ``ivsmile fit | analyze | plot``.

Exit codes: 0 success, 1 hard error, 2 finished but at least one fit could not
be made arbitrage-free before λ hit its floor.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import logging
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Callable, Iterable, Sequence

from .density import DEFAULT_PROMINENCE, density_rows, extract_density
from .errors import DegenerateDensity, IvSmileError
from .fit import FitConfig, fit_smile, smile_rows
from .grid import DEFAULT_STEP
from .ingest import ChainSnapshot, group_event_studies, parse_snapshot_file
from .plot import render_svg
from .report import standard_tables, write_report
from .shape import classify_shape
from .strategies import (
    ConcavityFilter,
    StrategyConfig,
    StrategyOutcome,
    StrangleWeighting,
    evaluate_event,
)

log = logging.getLogger("ivsmile")

EXIT_OK, EXIT_ERROR, EXIT_WARN = 0, 1, 2
SMILE_COLUMNS = ("moneyness", "iv_fitted", "observed", "iv_observed", "residual")
DENSITY_COLUMNS = ("moneyness", "strike", "raw_g", "probability", "is_mode")


@dataclass(frozen=True)
class RunConfig:
    inputs: tuple[Path, ...] = ()
    out: Path = Path("out")
    lam: float = 0.01
    lambda_floor: float = 1e-8
    reduction_factor: float = 0.5
    density_tolerance: float = 0.0
    step: float = DEFAULT_STEP
    padding: int = 0
    prominence: float = DEFAULT_PROMINENCE
    convexest_offset: float | None = None
    strangle_width: int = 2
    strangle_weighting: StrangleWeighting = StrangleWeighting.EQUAL_DOLLAR
    quantile: str = "linear"
    filter: ConcavityFilter = ConcavityFilter.DEFINITION
    rate: float = 0.0
    jobs: int = 1

    def __post_init__(self) -> None:
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")
        if not 0 <= self.prominence < 1:
            raise ValueError("prominence must lie in [0, 1)")
        if self.strangle_width < 1:
            raise ValueError("strangle width must be >= 1 grid step")
        if self.padding < 0:
            raise ValueError("padding must be >= 0")
        if self.quantile != "linear":
            raise ValueError("only the 'linear' (type 7) quantile rule is supported")
        # FitConfig validates the λ schedule
        self.fit_config()

    def fit_config(self) -> FitConfig:
        return FitConfig(
            lam=self.lam,
            lambda_floor=self.lambda_floor,
            reduction_factor=self.reduction_factor,
            density_tolerance=self.density_tolerance,
            step=self.step,
            padding=self.padding,
        )

    def strategy_config(self) -> StrategyConfig:
        return StrategyConfig(
            fit=self.fit_config(),
            prominence=self.prominence,
            convexest_offset=self.convexest_offset,
            strangle_width=self.strangle_width,
            strangle_weighting=self.strangle_weighting,
        )


# config-file key -> (RunConfig field, converter)
_CONVERTERS: dict[str, tuple[str, Callable]] = {
    "out": ("out", Path),
    "lambda": ("lam", float),
    "lambda_floor": ("lambda_floor", float),
    "reduction_factor": ("reduction_factor", float),
    "density_tolerance": ("density_tolerance", float),
    "step": ("step", float),
    "padding": ("padding", int),
    "prominence": ("prominence", float),
    "convexest_offset": ("convexest_offset", float),
    "strangle_width": ("strangle_width", int),
    "strangle_weighting": ("strangle_weighting", StrangleWeighting),
    "quantile": ("quantile", str),
    "filter": ("filter", ConcavityFilter),
    "rate": ("rate", float),
    "jobs": ("jobs", int),
}


def read_config_file(path: str | Path) -> dict:
    """``key = value`` lines, optionally under INI/TOML-style section headers."""
    text = Path(path).read_text(encoding="utf-8")
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    parser.read_string("[__top__]\n" + text)
    values = {}
    for section in parser.sections():
        for key, raw in parser.items(section):
            key = key.strip().replace("-", "_")
            if key not in _CONVERTERS:
                raise ValueError(f"{path}: unknown config key {key!r}")
            name, conv = _CONVERTERS[key]
            values[name] = conv(raw.strip().strip('"').strip("'"))
    return values


def build_run_config(args: argparse.Namespace) -> RunConfig:
    values = read_config_file(args.config) if args.config else {}
    for key, (name, conv) in _CONVERTERS.items():
        flag = getattr(args, key, None)
        if flag is not None:
            values[name] = conv(flag)
    values["inputs"] = tuple(Path(p) for p in args.inputs)
    return RunConfig(**values)


def _load_snapshots(config: RunConfig) -> list[ChainSnapshot]:
    snapshots = []
    for path in config.inputs:
        snapshots.extend(parse_snapshot_file(path, default_rate=config.rate))
    return snapshots


def _pmap(func, items: Sequence, jobs: int) -> list:
    """Ordered map, optionally across worker processes."""
    if jobs <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(func, items))


def _csv_text(columns: Iterable[str], rows: Iterable[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow(
            ["" if row[c] is None else repr(row[c]) if isinstance(row[c], float) else row[c] for c in columns]
        )
    return buf.getvalue()


@dataclass
class FitProducts:
    stem: str
    files: dict[str, str] = field(default_factory=dict)
    arbitrage_free: bool = True


def _fit_products(job: tuple[ChainSnapshot, RunConfig]) -> FitProducts:
    snap, config = job
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        smile = fit_smile(snap, config=config.fit_config())
    density = None
    if smile.arbitrage_free:
        try:
            density = extract_density(smile, snap.spot, snap.rate, snap.tau, config.prominence)
        except DegenerateDensity:
            density = None
    try:
        shape = classify_shape(smile, convexest_offset=config.convexest_offset)
        shape_doc = {
            "is_concave": shape.is_concave,
            "label": shape.label.value,
            "convexest": shape.convexest,
            "atm_second_diff": shape.atm_second_diff,
        }
    except IvSmileError:
        shape_doc = None

    stem = snap.stem
    products = FitProducts(stem, arbitrage_free=smile.arbitrage_free)
    products.files[f"{stem}_smile.csv"] = _csv_text(SMILE_COLUMNS, smile_rows(smile))
    if density is not None:
        products.files[f"{stem}_density.csv"] = _csv_text(DENSITY_COLUMNS, density_rows(density))
    sidecar = {
        "ticker": snap.ticker,
        "snapshot_date": snap.snapshot_date.isoformat(),
        "ead_date": snap.ead_date.isoformat(),
        "phase": snap.phase.value,
        "expiry_days": snap.expiry_days,
        "spot": snap.spot,
        "rate": snap.rate,
        "grid": {
            "m0": smile.grid.m0,
            "step": smile.grid.step,
            "count": smile.grid.count,
            "atm_index": smile.grid.atm_index,
        },
        "lambda_used": smile.lambda_used,
        "lambda_path": list(smile.lambda_path),
        "foc_residual_norm": smile.foc_residual_norm,
        "arbitrage_free": smile.arbitrage_free,
        "min_raw_density": smile.min_raw_density,
        "density_file": f"{stem}_density.csv" if density is not None else None,
        "modality": density.modality if density is not None else None,
        "shape": shape_doc,
    }
    products.files[f"{stem}_smile.json"] = json.dumps(sidecar, indent=2) + "\n"
    return products


def cmd_fit(config: RunConfig) -> int:
    snapshots = _load_snapshots(config)
    results = _pmap(_fit_products, [(s, config) for s in snapshots], config.jobs)
    config.out.mkdir(parents=True, exist_ok=True)
    status = EXIT_OK
    for products in sorted(results, key=lambda p: p.stem):
        for name in sorted(products.files):
            (config.out / name).write_text(products.files[name], encoding="utf-8")
        if not products.arbitrage_free:
            log.warning("%s: no arbitrage-free fit above the lambda floor", products.stem)
            status = EXIT_WARN
    log.info("fitted %d snapshot(s) into %s", len(results), config.out)
    return status


def _evaluate(job: tuple) -> StrategyOutcome:
    study, strategy_config = job
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return evaluate_event(study, strategy_config)


def run_analysis(config: RunConfig) -> list[StrategyOutcome]:
    grouping = group_event_studies(_load_snapshots(config))
    for inc in grouping.incomplete:
        log.warning(
            "%s EAD %s: skipped, missing %s snapshot(s)",
            inc.ticker,
            inc.ead_date,
            "/".join(p.value for p in inc.missing),
        )
    if not grouping.studies:
        raise IvSmileError("no complete before/after event studies in the input")
    strategy_config = config.strategy_config()
    jobs = [(s, strategy_config) for s in sorted(grouping.studies, key=lambda s: s.sort_key)]
    return _pmap(_evaluate, jobs, config.jobs)


def cmd_analyze(config: RunConfig) -> int:
    outcomes = run_analysis(config)
    tables = standard_tables(outcomes, config.filter)
    write_report(config.out, tables, outcomes, config.filter)
    for o in outcomes:
        if o.flags:
            log.warning("%s %s: %s", o.ticker, o.quarter, ", ".join(o.flags))
    log.info("analyzed %d event(s) into %s", len(outcomes), config.out)
    return EXIT_OK if all(o.arbitrage_free for o in outcomes) else EXIT_WARN


def _read_csv(path: Path) -> list[dict]:
    with path.open(newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def _plot_sources(config: RunConfig) -> list[Path]:
    """Resolve inputs to fitted-smile sidecars, fitting raw snapshot CSVs first."""
    sidecars: list[Path] = []
    raw: list[Path] = []
    for path in config.inputs:
        if path.is_dir():
            sidecars.extend(sorted(path.glob("*_smile.json")))
        elif path.name.endswith("_smile.json"):
            sidecars.append(path)
        elif path.name.endswith("_smile.csv"):
            sidecars.append(path.with_name(path.name[: -len(".csv")] + ".json"))
        else:
            raw.append(path)
    if raw:
        status = cmd_fit(replace(config, inputs=tuple(raw)))
        if status == EXIT_ERROR:
            raise IvSmileError("fitting plot inputs failed")
        stems = {s.stem for p in raw for s in parse_snapshot_file(p, config.rate)}
        sidecars.extend(config.out / f"{stem}_smile.json" for stem in sorted(stems))
    return sidecars


def cmd_plot(config: RunConfig) -> int:
    sources = _plot_sources(config)
    if not sources:
        raise IvSmileError("no fitted smiles found to plot")
    config.out.mkdir(parents=True, exist_ok=True)
    for sidecar_path in sources:
        meta = json.loads(sidecar_path.read_text(encoding="utf-8"))
        base = sidecar_path.name[: -len("_smile.json")]
        smile = _read_csv(sidecar_path.with_name(f"{base}_smile.csv"))
        density = []
        if meta.get("density_file"):
            for row in _read_csv(sidecar_path.with_name(meta["density_file"])):
                density.append(
                    (float(row["moneyness"]), float(row["probability"]), row["is_mode"] == "1")
                )
        label = (meta.get("shape") or {}).get("label", "")
        title = (
            f"{meta['ticker']} {meta['snapshot_date']} ({meta['phase']}, "
            f"{meta['expiry_days']}d) {label}"
        ).strip()
        svg = render_svg(
            title,
            [float(r["moneyness"]) for r in smile],
            [float(r["iv_fitted"]) for r in smile],
            [(float(r["moneyness"]), float(r["iv_observed"])) for r in smile if r["observed"] == "1"],
            density,
        )
        (config.out / f"{base}.svg").write_text(svg, encoding="utf-8")
    log.info("wrote %d figure(s) into %s", len(sources), config.out)
    return EXIT_OK


COMMANDS = {"fit": cmd_fit, "analyze": cmd_analyze, "plot": cmd_plot}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ivsmile",
        description="Fit arbitrage-free IV smiles, extract risk-neutral densities and "
        "evaluate straddles/strangles around earnings announcements.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "fit": "fit smiles; write fitted-smile CSV, JSON sidecar and density CSV per snapshot",
        "analyze": "evaluate event studies; write results.csv and summary reports",
        "plot": "write one SVG per fitted smile (fit output dir, sidecars or snapshot CSVs)",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text, description=text)
        p.add_argument("inputs", nargs="+", help="input files or directories")
        p.add_argument("--config", help="key = value config file; flags override it")
        p.add_argument("--out", help="output directory (default: out)")
        p.add_argument("--lambda", dest="lambda", type=float, help="starting λ (default 0.01)")
        p.add_argument("--lambda-floor", dest="lambda_floor", type=float)
        p.add_argument("--reduction-factor", dest="reduction_factor", type=float)
        p.add_argument("--density-tolerance", dest="density_tolerance", type=float)
        p.add_argument("--step", type=float, help="grid spacing in moneyness (default 0.025)")
        p.add_argument("--padding", type=int, help="extra grid nodes per side (default 0)")
        p.add_argument("--prominence", type=float, help="mode prominence threshold (default 0.05)")
        p.add_argument("--convexest-offset", dest="convexest_offset", type=float,
                       help="CONVEXEST offset in moneyness (default: one grid step)")
        p.add_argument("--strangle-width", dest="strangle_width", type=int,
                       help="strangle distance from ATM in grid steps (default 2)")
        p.add_argument("--strangle-weighting", dest="strangle_weighting",
                       choices=[w.value for w in StrangleWeighting])
        p.add_argument("--quantile", choices=["linear"], help="quantile rule (type 7)")
        p.add_argument("--filter", choices=[f.value for f in ConcavityFilter],
                       help="concave grouping: full definition or CONVEXEST < 0")
        p.add_argument("--rate", type=float, help="rate for rows without one (default 0)")
        p.add_argument("--jobs", type=int, help="worker processes (default 1)")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        config = build_run_config(args)
        return COMMANDS[args.command](config)
    except (IvSmileError, OSError, ValueError) as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
