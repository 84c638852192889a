from __future__ import annotations

import datetime as dt
import sys
from pathlib import Path

import numpy as np
import pytest

from ivsmile.fit import FittedSmile
from ivsmile.grid import MoneynessGrid
from ivsmile.ingest import ChainSnapshot, IvObservation, Phase

TESTS = Path(__file__).parent
DATA = TESTS / "data"
GOLDEN = TESTS / "golden"
sys.path.insert(0, str(TESTS))

NINE = tuple(round(0.90 + 0.05 * i, 2) for i in range(9))
EAD = dt.date(2022, 4, 26)

# accumulated by the acceptance module, echoed after the run
ACCEPTANCE_LINES: list[str] = []


def make_snapshot(
    ivs,
    moneyness=NINE,
    *,
    ticker="TST",
    phase=Phase.BEFORE,
    expiry_days=7,
    spot=100.0,
    rate=0.0,
    ead=EAD,
) -> ChainSnapshot:
    offset = {Phase.BEFORE: -1, Phase.ON: 0, Phase.AFTER: 1}[phase]
    return ChainSnapshot(
        ticker=ticker,
        snapshot_date=ead + dt.timedelta(days=offset),
        ead_date=ead,
        phase=phase,
        expiry_days=expiry_days,
        spot=spot,
        rate=rate,
        observations=tuple(IvObservation(float(m), float(v)) for m, v in zip(moneyness, ivs)),
    )


def smile_from_sigma(sigma, m0=0.9, step=0.025, observed=None) -> FittedSmile:
    """Wrap a hand-made curve as a fitted smile (observed every other node by default)."""
    sigma = np.asarray(sigma, dtype=float)
    grid = MoneynessGrid(m0, step, sigma.size)
    idx = tuple(range(0, sigma.size, 2)) if observed is None else tuple(observed)
    return FittedSmile(
        grid=grid,
        sigma=sigma,
        lambda_used=0.01,
        observed_index=idx,
        observed_iv=tuple(float(sigma[j]) for j in idx),
        foc_residual_norm=0.0,
    )


def w_shape(m):
    """Two humps: one on the ATM node, a second further out, with a dip between."""
    m = np.asarray(m, dtype=float)
    return 0.3 + 0.3 * np.exp(-(((m - 1.0) / 0.04) ** 2)) + 0.25 * np.exp(-(((m - 1.15) / 0.04) ** 2))


@pytest.fixture
def nine():
    return NINE


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
