"""Deterministic synthetic earnings-event chains for tests and demos.

Each event has before/on/after snapshots with nine observations at
moneyness 0.80, 0.85, ..., 1.20. Concave events carry an inverse-U smile
before the announcement; the rest carry a convex, skewed smile. After the
announcement every smile is convex with lower IV and the spot has jumped.

    python -m ivsmile.synthetic events.csv --tickers 7 --quarters 7
"""

from __future__ import annotations

import argparse
import datetime as dt
import math

import numpy as np

from .ingest import ChainSnapshot, IvObservation, Phase, write_snapshot_file

OBS_MONEYNESS = tuple(round(0.80 + 0.05 * i, 2) for i in range(9))
TICKERS = ("AAA", "BBB", "CCC", "DDD", "EEE", "FFF", "GGG", "HHH", "III", "JJJ")


def _smile(kind: str, rng: np.random.Generator) -> list[float]:
    x = np.asarray(OBS_MONEYNESS) - 1.0
    if kind == "concave":
        level = rng.uniform(0.8, 1.6)
        curv = rng.uniform(4.0, 14.0)
        sigma = level - curv * x**2 + rng.uniform(-0.2, 0.2) * x
    elif kind == "convex":
        level = rng.uniform(0.25, 0.7)
        sigma = level + rng.uniform(0.8, 3.0) * x**2 + rng.uniform(-0.6, 0.0) * x
    else:  # post-announcement: crushed and convex
        level = rng.uniform(0.18, 0.45)
        sigma = level + rng.uniform(0.5, 2.0) * x**2 + rng.uniform(-0.4, 0.0) * x
    sigma = sigma + rng.normal(0.0, 0.002, size=x.size)
    return [round(float(s), 6) for s in sigma]


def make_events(
    n_tickers: int = 7, n_quarters: int = 7, seed: int = 20221218, concave_share: float = 0.4
) -> list[ChainSnapshot]:
    rng = np.random.default_rng(seed)
    snapshots = []
    for t in range(n_tickers):
        ticker = TICKERS[t % len(TICKERS)] + ("" if t < len(TICKERS) else str(t))
        spot = round(float(rng.uniform(40, 500)), 2)
        for q in range(n_quarters):
            year, quarter = 2021 + (q + 1) // 4, (q + 1) % 4 + 1
            ead = dt.date(year, 3 * quarter - 1, 10 + int(rng.integers(0, 15)))
            if ead.weekday() >= 4:  # keep EAD-1 and EAD+1 on plain weekdays
                ead -= dt.timedelta(days=ead.weekday() - 2)
            concave = rng.random() < concave_share
            before_kind = "concave" if concave else "convex"
            jump = rng.normal(0.0, 0.06 if concave else 0.02)
            after_spot = round(spot * math.exp(jump), 2)
            on_spot = round(spot * math.exp(0.3 * jump), 2)
            for phase, day, expiry, s, kind in (
                (Phase.BEFORE, -1, 3, spot, before_kind),
                (Phase.ON, 0, 2, on_spot, before_kind),
                (Phase.AFTER, 1, 1, after_spot, "after"),
            ):
                snapshots.append(
                    ChainSnapshot(
                        ticker=ticker,
                        snapshot_date=ead + dt.timedelta(days=day),
                        ead_date=ead,
                        phase=phase,
                        expiry_days=expiry,
                        spot=s,
                        rate=0.0,
                        observations=tuple(
                            IvObservation(m, iv)
                            for m, iv in zip(OBS_MONEYNESS, _smile(kind, rng))
                        ),
                    )
                )
            spot = after_spot
    return snapshots


def main(argv: list[str] | None = None) -> None:
    parser = argparse.ArgumentParser(description="Write a synthetic earnings-event chain CSV.")
    parser.add_argument("output")
    parser.add_argument("--tickers", type=int, default=7)
    parser.add_argument("--quarters", type=int, default=7)
    parser.add_argument("--seed", type=int, default=20221218)
    args = parser.parse_args(argv)
    write_snapshot_file(make_events(args.tickers, args.quarters, args.seed), args.output)


if __name__ == "__main__":
    main()
