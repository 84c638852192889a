"""Penalised least-squares smile fitter solved through its first-order conditions.

With ``D_j = s[j-1] - 2 s[j] + s[j+1]`` the curvature/fit objective is

    Δ⁴/(2(J+1)) · Σ_j D_j²  +  λ/(2I) · Σ_i (s_i - s̄_i)²

over ``J + 1`` grid nodes and ``I`` observed nodes. Its stationarity
conditions give one pentadiagonal row per node: the stencil
``(1, -4, 6, -4, 1)`` with zero right-hand side where nothing is observed, and
the same stencil with ``w = λ(J+1)/(IΔ⁴)`` added on the diagonal and
``w · s̄_j`` on the right where an IV is observed. Values outside the grid are
clamped to the end values (``s[-2] = s[-1] = s[0]``, ``s[J+1] = s[J+2] = s[J]``),
which folds the overhanging stencil weights back onto the end columns.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
import scipy.linalg

from .density import raw_density, roundoff_floor
from .errors import (
    GridTooSmall,
    InvariantViolation,
    NoArbitrageFreeFit,
    SingularSystem,
)
from .grid import DEFAULT_STEP, MIN_NODES, MoneynessGrid, build_grid
from .ingest import ChainSnapshot

STENCIL = (1.0, -4.0, 6.0, -4.0, 1.0)
BANDS = (2, 2)  # lower, upper


@dataclass(frozen=True)
class FitConfig:
    lam: float = 0.01
    lambda_floor: float = 1e-8
    reduction_factor: float = 0.5
    density_tolerance: float = 0.0
    step: float = DEFAULT_STEP
    padding: int = 0

    def __post_init__(self) -> None:
        if not (0 < self.lambda_floor <= self.lam):
            raise InvariantViolation("need 0 < lambda_floor <= lambda")
        if not (0 < self.reduction_factor < 1):
            raise InvariantViolation("reduction_factor must lie in (0, 1)")
        if self.density_tolerance < 0:
            raise InvariantViolation("density_tolerance must be >= 0")

    def max_reductions(self) -> int:
        return math.ceil(
            math.log(self.lam / self.lambda_floor) / math.log(1 / self.reduction_factor)
        )


@dataclass(frozen=True, eq=False)
class FocSystem:
    """Pentadiagonal system in LAPACK banded storage (``ab[2 + i - j, j] = A[i, j]``)."""

    ab: np.ndarray
    rhs: np.ndarray

    @property
    def size(self) -> int:
        return self.ab.shape[1]

    def dense(self) -> np.ndarray:
        n = self.size
        a = np.zeros((n, n))
        for i in range(n):
            for j in range(max(0, i - 2), min(n, i + 3)):
                a[i, j] = self.ab[2 + i - j, j]
        return a

    @classmethod
    def from_dense(cls, a: np.ndarray, rhs: Sequence[float]) -> FocSystem:
        a = np.asarray(a, dtype=float)
        n = a.shape[0]
        if np.any(np.triu(a, 3)) or np.any(np.tril(a, -3)):
            raise InvariantViolation("matrix is not pentadiagonal")
        ab = np.zeros((5, n))
        for i in range(n):
            for j in range(max(0, i - 2), min(n, i + 3)):
                ab[2 + i - j, j] = a[i, j]
        return cls(ab, np.asarray(rhs, dtype=float).copy())

    def residual(self, x: np.ndarray) -> np.ndarray:
        """``A x - b`` computed from the banded storage."""
        n = self.size
        out = -self.rhs.copy()
        for off in range(-2, 3):
            # diagonal with offset `off` (column - row)
            diag = self.ab[2 - off, max(0, off) : n + min(0, off)]
            if off >= 0:
                out[: n - off] += diag * x[off:]
            else:
                out[-off:] += diag * x[: n + off]
        return out

    def normalized_residual(self, x: np.ndarray) -> float:
        """Max FOC residual with each equation scaled by its diagonal coefficient."""
        return float(np.max(np.abs(self.residual(x) / self.ab[2])))


def penalty_weight(lam: float, count: int, n_observed: int, step: float) -> float:
    """Diagonal weight ``λ(J+1)/(IΔ⁴)`` added at observed nodes."""
    return lam * count / (n_observed * step**4)


def assemble_foc_system(
    grid: MoneynessGrid, observed: Mapping[int, float], lam: float
) -> FocSystem:
    """First-order conditions of the smile objective for one value of λ."""
    n = grid.count
    if n < MIN_NODES:
        raise GridTooSmall(f"need >= {MIN_NODES} nodes, got {n}")
    if not observed:
        raise InvariantViolation("at least one observed node is required")
    if not lam > 0:
        raise InvariantViolation("lambda must be > 0")
    ab = np.zeros((5, n))
    for row in range(n):
        for k, coef in zip(range(row - 2, row + 3), STENCIL):
            col = min(max(k, 0), n - 1)
            ab[2 + row - col, col] += coef
    w = penalty_weight(lam, n, len(observed), grid.step)
    rhs = np.zeros(n)
    for j, iv in observed.items():
        ab[2, j] += w
        rhs[j] = w * iv
    return FocSystem(ab, rhs)


def solve_banded(system: FocSystem) -> np.ndarray:
    """Solve with every row divided by its diagonal entry first.

    On fine grids the observed rows carry a weight many orders of magnitude
    above the stencil rows; without the row scaling the pivoting mixes the two
    scales and the solution loses digits.
    """
    n = system.size
    diag = system.ab[2].copy()
    diag[diag == 0] = 1.0
    rows = np.arange(n)[None, :] + np.arange(5)[:, None] - 2
    scale = 1.0 / diag[np.clip(rows, 0, n - 1)]
    try:
        x = scipy.linalg.solve_banded(
            BANDS, system.ab * scale, system.rhs / diag, check_finite=True
        )
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(str(exc)) from None
    if not np.all(np.isfinite(x)):
        raise SingularSystem("non-finite solution")
    return x


@dataclass(frozen=True, eq=False)
class FittedSmile:
    grid: MoneynessGrid
    sigma: np.ndarray
    lambda_used: float
    observed_index: tuple[int, ...]
    observed_iv: tuple[float, ...]
    foc_residual_norm: float
    arbitrage_free: bool = True
    lambda_path: tuple[float, ...] = field(default=())
    min_raw_density: float = float("nan")

    @property
    def residuals(self) -> np.ndarray:
        """Fitted minus observed IV at each observed node."""
        return self.sigma[list(self.observed_index)] - np.asarray(self.observed_iv)

    @property
    def atm_index(self) -> int:
        return self.grid.atm_index

    def iv_at(self, moneyness: float | np.ndarray) -> float | np.ndarray:
        """Linear interpolation in moneyness, flat beyond the grid ends."""
        return np.interp(moneyness, self.grid.nodes, self.sigma)


def solve_smile(
    grid: MoneynessGrid, index: Sequence[int], ivs: Sequence[float], lam: float
) -> tuple[np.ndarray, float]:
    """Fitted IVs for one λ plus the normalised FOC residual.

    Constants are annihilated by the clamped stencil, so the system is solved
    for the deviation from the mean observation; a flat input comes back
    exactly flat.
    """
    level = float(np.mean(ivs))
    centred = assemble_foc_system(grid, {j: iv - level for j, iv in zip(index, ivs)}, lam)
    sigma = level + solve_banded(centred)
    system = assemble_foc_system(grid, dict(zip(index, ivs)), lam)
    return sigma, system.normalized_residual(sigma)


def fit_smile(
    snapshot: ChainSnapshot,
    grid: MoneynessGrid | None = None,
    config: FitConfig | None = None,
) -> FittedSmile:
    """Fit the snapshot's smile, shrinking λ until the density is nonnegative.

    Starts at ``config.lam`` and multiplies by ``config.reduction_factor``
    (clamped at ``config.lambda_floor``) while any raw density value is below
    ``-config.density_tolerance`` minus the pricing round-off floor. If the floor is reached without success the
    floor fit is returned with ``arbitrage_free=False`` and a
    :class:`NoArbitrageFreeFit` warning is issued.
    """
    config = config or FitConfig()
    if grid is None:
        grid, index = build_grid(snapshot.moneyness, config.step, config.padding)
    else:
        index = grid.index_observations(snapshot.moneyness)
    ivs = snapshot.ivs

    # rounding noise in deep-wing call prices must not count as a negative density
    floor = config.density_tolerance + roundoff_floor(
        snapshot.spot, grid.step * snapshot.spot, snapshot.rate, snapshot.tau
    )
    lam = config.lam
    path = []
    while True:
        path.append(lam)
        sigma, foc_norm = solve_smile(grid, index, ivs, lam)
        if not np.all(sigma > 0):
            raise InvariantViolation(
                f"{snapshot.key_label}: fitted IV not positive at lambda={lam:g}"
            )
        raw = raw_density(grid, sigma, snapshot.spot, snapshot.rate, snapshot.tau)
        ok = bool(raw.min() >= -floor)
        if ok or lam <= config.lambda_floor:
            break
        lam = max(lam * config.reduction_factor, config.lambda_floor)

    if not ok:
        warnings.warn(
            NoArbitrageFreeFit(
                f"{snapshot.key_label}: density still negative (min {raw.min():.3g}) "
                f"at lambda floor {lam:g}"
            ),
            stacklevel=2,
        )
    return FittedSmile(
        grid=grid,
        sigma=sigma,
        lambda_used=lam,
        observed_index=tuple(index),
        observed_iv=tuple(ivs),
        foc_residual_norm=foc_norm,
        arbitrage_free=ok,
        lambda_path=tuple(path),
        min_raw_density=float(raw.min()),
    )


def smile_rows(smile: FittedSmile) -> list[dict]:
    """Rows for the fitted-smile CSV."""
    observed = dict(zip(smile.observed_index, smile.observed_iv))
    rows = []
    for j, (m, s) in enumerate(zip(smile.grid.nodes, smile.sigma)):
        iv_obs = observed.get(j)
        rows.append(
            {
                "moneyness": float(m),
                "iv_fitted": float(s),
                "observed": int(iv_obs is not None),
                "iv_observed": iv_obs,
                "residual": None if iv_obs is None else float(s) - iv_obs,
            }
        )
    return rows
