"""Uniform moneyness grid on which smiles are fitted and densities evaluated."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import CollisionError, GridTooSmall, InvariantViolation, StepTooCoarse

DEFAULT_STEP = 0.025
MIN_NODES = 5  # width of the pentadiagonal stencil


@dataclass(frozen=True)
class MoneynessGrid:
    """Nodes ``m0 + j * step`` for ``j = 0 .. count - 1``."""

    m0: float
    step: float
    count: int

    def __post_init__(self) -> None:
        if not self.step > 0:
            raise InvariantViolation(f"grid step must be > 0, got {self.step!r}")
        if self.count < MIN_NODES:
            raise GridTooSmall(f"grid needs >= {MIN_NODES} nodes, got {self.count}")

    @cached_property
    def nodes(self) -> np.ndarray:
        nodes = self.m0 + self.step * np.arange(self.count)
        nodes.flags.writeable = False
        return nodes

    @property
    def atm_index(self) -> int:
        """Node nearest moneyness 1.0; ties go to the lower index."""
        return int(np.argmin(np.abs(self.nodes - 1.0)))

    @property
    def last(self) -> int:
        return self.count - 1

    def nearest(self, moneyness: float) -> int:
        """Index of the node within half a step of ``moneyness``."""
        return _nearest(self.m0, self.step, self.count, moneyness)

    def index_observations(self, moneyness: Sequence[float]) -> list[int]:
        """Map each observed moneyness to its node; no two may share a node."""
        return _snap(self.m0, self.step, self.count, moneyness)


def _nearest(m0: float, step: float, count: int, moneyness: float) -> int:
    j = int(np.clip(round((moneyness - m0) / step), 0, count - 1))
    # relative slack keeps an exact half-step offset from failing on rounding noise
    if abs(moneyness - (m0 + step * j)) > 0.5 * step * (1 + 1e-9):
        raise StepTooCoarse(
            f"moneyness {moneyness!r} is farther than step/2 from every grid node"
        )
    return j


def _snap(m0: float, step: float, count: int, moneyness: Sequence[float]) -> list[int]:
    index = [_nearest(m0, step, count, m) for m in moneyness]
    seen: dict[int, float] = {}
    for m, j in zip(moneyness, index):
        if j in seen:
            raise CollisionError(
                f"observations {seen[j]!r} and {m!r} both map to node {j} "
                f"(moneyness {m0 + step * j:.6g})"
            )
        seen[j] = m
    return index


def build_grid(
    moneyness: Sequence[float], step: float = DEFAULT_STEP, padding: int = 0
) -> tuple[MoneynessGrid, list[int]]:
    """Build a grid covering the observations plus ``padding`` nodes per side.

    Parameters
    ----------
    moneyness : sequence of float
        Observed moneyness values, ascending. ``IvObservation`` objects are also
        accepted.
    step : float
        Grid spacing.
    padding : int
        Extra nodes added below the lowest and above the highest observation.

    Returns
    -------
    grid : MoneynessGrid
    index : list of int
        Node index assigned to each observation.
    """
    ms = [float(getattr(m, "moneyness", m)) for m in moneyness]
    if not ms:
        raise InvariantViolation("at least one observation is required")
    if not step > 0:
        raise InvariantViolation(f"grid step must be > 0, got {step!r}")
    if padding < 0:
        raise InvariantViolation("padding must be >= 0")
    lo = min(ms) - padding * step
    hi = max(ms) + padding * step
    count = int(round((hi - lo) / step)) + 1
    # collisions are reported before the size check so the caller sees the real cause
    index = _snap(lo, step, count, ms)
    grid = MoneynessGrid(m0=lo, step=step, count=count)
    return grid, index
