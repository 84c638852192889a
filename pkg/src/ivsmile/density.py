"""Risk-neutral density from a fitted smile via Breeden-Litzenberger differences.

Calls are priced at every grid strike ``K_j = m_j * spot`` with the fitted IVs;
the discounted centred second difference in strike gives the raw density at
the interior nodes, which is then normalised by its sum. Endpoint nodes carry
no probability.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Sequence

import numpy as np

from .errors import DegenerateDensity
from .grid import MoneynessGrid
from .pricing import bs_call

if TYPE_CHECKING:
    from .fit import FittedSmile

DEFAULT_PROMINENCE = 0.05


@dataclass(frozen=True)
class Mode:
    node: int  # grid node index
    probability: float
    prominence: float  # fraction of the maximum probability


@dataclass(frozen=True, eq=False)
class RiskNeutralDensity:
    grid: MoneynessGrid
    spot: float
    raw: np.ndarray  # interior nodes 1..J-1, units 1/currency
    probabilities: np.ndarray
    modes: tuple[Mode, ...] = field(default=())

    @property
    def nodes(self) -> np.ndarray:
        """Grid node indices carrying probability."""
        return np.arange(1, self.grid.count - 1)

    @property
    def moneyness(self) -> np.ndarray:
        return self.grid.nodes[1:-1]

    @property
    def strikes(self) -> np.ndarray:
        return self.moneyness * self.spot

    @property
    def modality(self) -> int:
        return len(self.modes)

    @property
    def min_raw(self) -> float:
        return float(self.raw.min())


def breeden_litzenberger(
    calls: Sequence[float], strike_step: float, rate: float, tau: float
) -> np.ndarray:
    """``e^{r tau} (C[j-1] + C[j+1] - 2 C[j]) / dK^2`` for each interior j."""
    c = np.asarray(calls, dtype=float)
    return np.exp(rate * tau) * (c[:-2] + c[2:] - 2.0 * c[1:-1]) / strike_step**2


def raw_density(
    grid: MoneynessGrid, sigma: Sequence[float], spot: float, rate: float, tau: float
) -> np.ndarray:
    """Un-normalised density at the interior nodes for IVs ``sigma`` on ``grid``."""
    strikes = grid.nodes * spot
    calls = bs_call(spot, strikes, np.asarray(sigma, dtype=float), tau, rate)
    return breeden_litzenberger(calls, grid.step * spot, rate, tau)


def roundoff_floor(spot: float, strike_step: float, rate: float, tau: float) -> float:
    """Magnitude of rounding noise in a raw density value.

    Call prices near intrinsic carry absolute errors of a few ulps of the spot;
    the second difference divided by ``dK^2`` amplifies them to this level.
    """
    return 8.0 * np.finfo(float).eps * spot * np.exp(rate * tau) / strike_step**2


def normalize(raw: Sequence[float]) -> np.ndarray:
    """Divide by the sum; negative entries are kept as they are."""
    raw = np.asarray(raw, dtype=float)
    total = raw.sum()
    if not total > 0:
        raise DegenerateDensity(f"sum of raw density values is {total!r}")
    return raw / total


def find_modes(
    values: Sequence[float], prominence: float = DEFAULT_PROMINENCE
) -> list[tuple[int, float, float]]:
    """Prominent interior local maxima of ``values``.

    A maximum is a run of equal values (reported at its left edge) whose
    neighbours on both sides are lower. Its prominence is its height above the
    higher of the lowest points reached when walking outwards on either side
    until the series rises above the peak or ends, divided by ``max(values)``.

    Returns ``(index, value, prominence)`` triples sorted by index.
    """
    p = np.asarray(values, dtype=float)
    n = len(p)
    if n < 3:
        return []
    top = p.max()
    if not top > 0:
        return []
    modes = []
    i = 0
    while i < n:
        j = i
        while j + 1 < n and p[j + 1] == p[i]:
            j += 1
        v = p[i]
        if i > 0 and j < n - 1 and p[i - 1] < v and p[j + 1] < v:
            left = v
            k = i - 1
            while k >= 0 and p[k] <= v:
                left = min(left, p[k])
                k -= 1
            right = v
            k = j + 1
            while k < n and p[k] <= v:
                right = min(right, p[k])
                k += 1
            prom = (v - max(left, right)) / top
            if prom >= prominence:
                modes.append((i, float(v), float(prom)))
        i = j + 1
    return modes


def detect_modes(
    density: RiskNeutralDensity, prominence: float = DEFAULT_PROMINENCE
) -> list[Mode]:
    return [
        Mode(node=i + 1, probability=v, prominence=prom)
        for i, v, prom in find_modes(density.probabilities, prominence)
    ]


def extract_density(
    smile: FittedSmile,
    spot: float,
    rate: float,
    tau: float,
    prominence: float = DEFAULT_PROMINENCE,
) -> RiskNeutralDensity:
    """Price calls across the fitted smile and turn them into probabilities."""
    raw = raw_density(smile.grid, smile.sigma, spot, rate, tau)
    probs = normalize(raw)
    dens = RiskNeutralDensity(smile.grid, spot, raw, probs)
    return RiskNeutralDensity(
        smile.grid, spot, raw, probs, tuple(detect_modes(dens, prominence))
    )


def density_rows(density: RiskNeutralDensity) -> list[dict]:
    """Rows for the density CSV: moneyness, strike, raw_g, probability, is_mode."""
    mode_nodes = {m.node for m in density.modes}
    return [
        {
            "moneyness": float(m),
            "strike": float(k),
            "raw_g": float(g),
            "probability": float(p),
            "is_mode": int(j in mode_nodes),
        }
        for j, m, k, g, p in zip(
            density.nodes, density.moneyness, density.strikes, density.raw, density.probabilities
        )
    ]
