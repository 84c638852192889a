"""Arbitrage-free implied-volatility smiles, risk-neutral densities and
earnings-announcement option strategies."""

from .density import RiskNeutralDensity, extract_density
from .fit import FitConfig, FittedSmile, fit_smile
from .grid import MoneynessGrid, build_grid
from .ingest import ChainSnapshot, EventStudy, IvObservation, Phase, parse_snapshot_file
from .shape import ShapeLabel, classify_shape, convexest
from .strategies import StrategyConfig, evaluate_event

__all__ = [
    "ChainSnapshot",
    "EventStudy",
    "FitConfig",
    "FittedSmile",
    "IvObservation",
    "MoneynessGrid",
    "Phase",
    "RiskNeutralDensity",
    "ShapeLabel",
    "StrategyConfig",
    "build_grid",
    "classify_shape",
    "convexest",
    "evaluate_event",
    "extract_density",
    "fit_smile",
    "parse_snapshot_file",
]

__version__ = "0.1.0"
