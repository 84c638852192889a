"""Concavity classification of fitted smiles and the CONVEXEST statistic."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .errors import OffGridOffset, TooFewObservations
from .fit import FittedSmile


class ShapeLabel(str, Enum):
    INVERSE_U = "InverseU"
    W_SHAPE = "WShape"
    CONVEX = "Convex"
    INDETERMINATE = "Indeterminate"


@dataclass(frozen=True)
class ShapeReport:
    is_concave: bool
    label: ShapeLabel
    convexest: float
    atm_second_diff: float
    concave_window: tuple[int, int] | None  # inclusive node range with D < 0 around ATM


def second_differences(sigma: Sequence[float]) -> np.ndarray:
    """Raw ``s[j-1] - 2 s[j] + s[j+1]``; element ``k`` belongs to node ``k + 1``."""
    s = np.asarray(sigma, dtype=float)
    return s[:-2] - 2.0 * s[1:-1] + s[2:]


def count_local_maxima(values: Sequence[float], lo: int, hi: int) -> int:
    """Local maxima strictly between nodes ``lo`` and ``hi``; plateaus count once."""
    v = np.asarray(values, dtype=float)
    count = 0
    i = lo + 1
    while i < hi:
        j = i
        while j + 1 < hi and v[j + 1] == v[i]:
            j += 1
        if v[i - 1] < v[i] and v[j + 1] < v[i]:
            count += 1
        i = j + 1
    return count


def _negative_run(d: np.ndarray, node: int) -> tuple[int, int] | None:
    k = node - 1
    if not (0 <= k < len(d)) or not d[k] < 0:
        return None
    a = k
    while a - 1 >= 0 and d[a - 1] < 0:
        a -= 1
    b = k
    while b + 1 < len(d) and d[b + 1] < 0:
        b += 1
    return (a + 1, b + 1)


def convexest(smile: FittedSmile, x: float | None = None) -> float:
    """``IV(ATM - x) + IV(ATM + x) - 2 IV(ATM)``; ``x`` defaults to one grid step."""
    grid = smile.grid
    x = grid.step if x is None else x
    k = round(x / grid.step)
    if k < 1 or abs(k * grid.step - x) > 1e-9 * grid.step:
        raise OffGridOffset(f"offset {x!r} is not a positive multiple of {grid.step!r}")
    atm = grid.atm_index
    if atm - k < 0 or atm + k > grid.count - 1:
        raise OffGridOffset(f"ATM +/- {x!r} falls off the grid")
    s = smile.sigma
    # same evaluation order as second_differences, so k = 1 reproduces D at ATM bit for bit
    return float(s[atm - k] - 2.0 * s[atm] + s[atm + k])


def classify_shape(
    smile: FittedSmile,
    observed_nodes: Sequence[int] | None = None,
    convexest_offset: float | None = None,
) -> ShapeReport:
    """Decide whether the smile is concave near ATM and label its shape.

    Concave means the raw second difference is negative at ATM - 1, ATM and
    ATM + 1, and those three nodes lie strictly between the second-lowest and
    second-highest observed nodes. Concave smiles are labelled by the number of
    local maxima of the fitted curve between the outermost observed nodes: one
    is an inverse U, two a W shape.
    """
    nodes = sorted(smile.observed_index if observed_nodes is None else observed_nodes)
    if len(nodes) < 4:
        raise TooFewObservations(f"need >= 4 observed nodes, got {len(nodes)}")
    d = second_differences(smile.sigma)
    atm = smile.grid.atm_index
    atm_d = float(d[atm - 1]) if 1 <= atm <= smile.grid.count - 2 else float("nan")

    window = (atm - 1, atm + 1)
    inside = nodes[1] < window[0] and window[1] < nodes[-2]
    curved = inside and all(d[j - 1] < 0 for j in range(window[0], window[1] + 1))

    if curved:
        peaks = count_local_maxima(smile.sigma, nodes[0], nodes[-1])
        label = {1: ShapeLabel.INVERSE_U, 2: ShapeLabel.W_SHAPE}.get(
            peaks, ShapeLabel.INDETERMINATE
        )
    else:
        label = ShapeLabel.CONVEX
    return ShapeReport(
        is_concave=curved,
        label=label,
        convexest=convexest(smile, convexest_offset),
        atm_second_diff=atm_d,
        concave_window=_negative_run(d, atm),
    )
