"""Delta-neutral straddles and OTM strangles formed before an earnings day.

Positions are opened at the before-EAD snapshot using fitted IVs and closed at
the after-EAD snapshot, repriced off that day's fitted smile at the same strikes.
Returns are simple holding-period returns of long positions.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple

from .density import DEFAULT_PROMINENCE, extract_density
from .errors import (
    ContractMismatch,
    DegenerateDensity,
    ExpiredBeforeExit,
    GridTooNarrow,
    InvariantViolation,
    MissingPhase,
    ZeroPrice,
)
from .fit import FitConfig, FittedSmile, fit_smile
from .ingest import ChainSnapshot, EventStudy
from .pricing import (
    PricingInputs,
    call_delta,
    call_price,
    intrinsic_call,
    intrinsic_put,
    put_delta,
    put_price,
)
from .shape import ShapeLabel, classify_shape


class StrangleWeighting(str, Enum):
    EQUAL_DOLLAR = "equal-dollar"
    DELTA_NEUTRAL = "delta-neutral"


class ConcavityFilter(str, Enum):
    DEFINITION = "definition"
    CONVEXEST = "convexest"


def straddle_weight(call_delta: float, put_delta: float, call: float, put: float) -> float:
    """Call weight making ``w·Δc/C + (1-w)·Δp/P`` vanish."""
    if not (call > 0 and put > 0):
        raise ZeroPrice(f"entry prices must be > 0 (call={call!r}, put={put!r})")
    c_ratio = call_delta / call
    p_ratio = put_delta / put
    return -p_ratio / (c_ratio - p_ratio)


def _leg_return(entry: float, exit_: float) -> float:
    if not entry > 0:
        raise ZeroPrice(f"entry price must be > 0, got {entry!r}")
    return exit_ / entry - 1.0


@dataclass(frozen=True)
class StraddlePosition:
    spot: float
    strike: float
    sigma: float
    w: float
    call_entry: float
    put_entry: float
    call_delta: float
    put_delta: float

    @property
    def impmove(self) -> float:
        """Fractional move that pays for the symmetric straddle, ``(C + P) / S``."""
        return (self.call_entry + self.put_entry) / self.spot


@dataclass(frozen=True)
class StranglePosition:
    spot: float
    put_strike: float
    call_strike: float
    put_sigma: float
    call_sigma: float
    put_entry: float
    call_entry: float
    put_delta: float
    call_delta: float

    @property
    def cost_ratio(self) -> float:
        return (self.call_entry + self.put_entry) / self.spot


def form_straddle(before: ChainSnapshot, smile: FittedSmile) -> StraddlePosition:
    atm = smile.grid.atm_index
    sigma = float(smile.sigma[atm])
    if not sigma > 0:
        raise InvariantViolation("ATM fitted IV must be > 0")
    inputs = PricingInputs(
        spot=before.spot,
        strike=float(smile.grid.nodes[atm]) * before.spot,
        sigma=sigma,
        tau=before.tau,
        rate=before.rate,
    )
    c, p = call_price(inputs), put_price(inputs)
    if not (c > 0 and p > 0):
        raise ZeroPrice(f"{before.key_label}: ATM entry price is zero")
    dc, dp = call_delta(inputs), put_delta(inputs)
    return StraddlePosition(
        spot=before.spot,
        strike=inputs.strike,
        sigma=sigma,
        w=straddle_weight(dc, dp, c, p),
        call_entry=c,
        put_entry=p,
        call_delta=dc,
        put_delta=dp,
    )


def straddle_return(position: StraddlePosition, exit_call: float, exit_put: float) -> float:
    """``w·Rc + (1 - w)·Rp``."""
    rc = _leg_return(position.call_entry, exit_call)
    rp = _leg_return(position.put_entry, exit_put)
    return position.w * rc + (1.0 - position.w) * rp


def form_strangle(
    before: ChainSnapshot, smile: FittedSmile, width: int = 2
) -> StranglePosition:
    """OTM put and call ``width`` grid steps below and above the ATM node."""
    atm = smile.grid.atm_index
    lo, hi = atm - width, atm + width
    if width < 1 or lo < 0 or hi > smile.grid.count - 1:
        raise GridTooNarrow(
            f"need {width} nodes on each side of ATM node {atm} (grid has {smile.grid.count})"
        )
    tau = before.tau
    put_in = PricingInputs(
        before.spot, float(smile.grid.nodes[lo]) * before.spot, float(smile.sigma[lo]), tau, before.rate
    )
    call_in = PricingInputs(
        before.spot, float(smile.grid.nodes[hi]) * before.spot, float(smile.sigma[hi]), tau, before.rate
    )
    p, c = put_price(put_in), call_price(call_in)
    if not (c > 0 and p > 0):
        raise ZeroPrice(f"{before.key_label}: OTM entry price is zero")
    return StranglePosition(
        spot=before.spot,
        put_strike=put_in.strike,
        call_strike=call_in.strike,
        put_sigma=put_in.sigma,
        call_sigma=call_in.sigma,
        put_entry=p,
        call_entry=c,
        put_delta=put_delta(put_in),
        call_delta=call_delta(call_in),
    )


def strangle_return(
    position: StranglePosition,
    exit_call: float,
    exit_put: float,
    weighting: StrangleWeighting = StrangleWeighting.EQUAL_DOLLAR,
) -> float:
    """Long strangle return; equal-dollar legs unless delta-neutral weighting is asked for."""
    rc = _leg_return(position.call_entry, exit_call)
    rp = _leg_return(position.put_entry, exit_put)
    if StrangleWeighting(weighting) is StrangleWeighting.EQUAL_DOLLAR:
        w = 0.5
    else:
        w = straddle_weight(
            position.call_delta, position.put_delta, position.call_entry, position.put_entry
        )
    return w * rc + (1.0 - w) * rp


@dataclass(frozen=True)
class StrategyConfig:
    fit: FitConfig = field(default_factory=FitConfig)
    prominence: float = DEFAULT_PROMINENCE
    convexest_offset: float | None = None  # None: one grid step
    strangle_width: int = 2
    strangle_weighting: StrangleWeighting = StrangleWeighting.EQUAL_DOLLAR


@dataclass(frozen=True)
class StrategyOutcome:
    ticker: str
    quarter: str
    is_concave: bool
    label: ShapeLabel
    convexest: float
    impmove_straddle: float
    impmove_strangle: float
    straddle_return: float
    strangle_return: float
    price_return: float
    lambda_used: float
    modality: int
    arbitrage_free: bool = True
    flags: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        for name in (
            "convexest",
            "impmove_straddle",
            "impmove_strangle",
            "straddle_return",
            "strangle_return",
            "price_return",
        ):
            if not math.isfinite(getattr(self, name)):
                raise InvariantViolation(f"{self.ticker} {self.quarter}: {name} is not finite")

    @property
    def key(self) -> tuple[str, int, int]:
        """(ticker, year, quarter): chronological within a ticker."""
        q, _, year = self.quarter.partition("-")
        return (self.ticker, int(year), int(q.lstrip("Q")))

    def in_concave_group(self, mode: ConcavityFilter = ConcavityFilter.DEFINITION) -> bool:
        if ConcavityFilter(mode) is ConcavityFilter.CONVEXEST:
            return self.convexest < 0
        return self.is_concave


class ExitQuote(NamedTuple):
    call: float
    put: float


def _exit_prices(
    after: ChainSnapshot,
    after_smile: FittedSmile,
    call_strike: float,
    put_strike: float,
    expired: bool,
) -> ExitQuote:
    if expired:
        return ExitQuote(
            intrinsic_call(after.spot, call_strike), intrinsic_put(after.spot, put_strike)
        )
    tau = after.tau
    call_sigma = float(after_smile.iv_at(call_strike / after.spot))
    put_sigma = float(after_smile.iv_at(put_strike / after.spot))
    return ExitQuote(
        call_price(PricingInputs(after.spot, call_strike, call_sigma, tau, after.rate)),
        put_price(PricingInputs(after.spot, put_strike, put_sigma, tau, after.rate)),
    )


def evaluate_event(study: EventStudy, config: StrategyConfig | None = None) -> StrategyOutcome:
    """Open both strategies before the EAD and close them at the after snapshot.

    Exit options are repriced with the after-day fitted smile, linearly
    interpolated in moneyness at the entry strikes, and the after snapshot's
    time to expiry. If the entry contract has no days left at the exit date the
    legs are settled at intrinsic value and the outcome is flagged.
    """
    config = config or StrategyConfig()
    if study.before is None or study.after is None:
        raise MissingPhase(f"{study.ticker} {study.quarter}: need before and after snapshots")
    before, after = study.before, study.after
    flags: list[str] = []

    smile = fit_smile(before, config=config.fit)
    after_smile = fit_smile(after, config=config.fit)
    if not smile.arbitrage_free:
        flags.append("no_arbitrage_free_fit_before")
    if not after_smile.arbitrage_free:
        flags.append("no_arbitrage_free_fit_after")

    shape = classify_shape(smile, convexest_offset=config.convexest_offset)
    try:
        modality = extract_density(
            smile, before.spot, before.rate, before.tau, config.prominence
        ).modality
    except DegenerateDensity:
        modality = 0
        flags.append("degenerate_density")

    straddle = form_straddle(before, smile)
    strangle = form_strangle(before, smile, config.strangle_width)

    elapsed = (after.snapshot_date - before.snapshot_date).days
    remaining = before.expiry_days - elapsed
    expired = remaining <= 0
    if expired:
        flags.append("expired_before_exit")
        warnings.warn(
            ExpiredBeforeExit(
                f"{study.ticker} {study.quarter}: contract expired before exit; intrinsic values used"
            ),
            stacklevel=2,
        )
    elif after.expiry_days != remaining:
        flags.append("contract_mismatch")
        warnings.warn(
            ContractMismatch(
                f"{study.ticker} {study.quarter}: after.expiry_days={after.expiry_days} "
                f"but entry contract has {remaining} days left"
            ),
            stacklevel=2,
        )

    straddle_exit = _exit_prices(after, after_smile, straddle.strike, straddle.strike, expired)
    strangle_exit = _exit_prices(
        after, after_smile, strangle.call_strike, strangle.put_strike, expired
    )
    return StrategyOutcome(
        ticker=study.ticker,
        quarter=study.quarter,
        is_concave=shape.is_concave,
        label=shape.label,
        convexest=shape.convexest,
        impmove_straddle=straddle.impmove,
        impmove_strangle=strangle.cost_ratio,
        straddle_return=straddle_return(straddle, straddle_exit.call, straddle_exit.put),
        strangle_return=strangle_return(
            strangle, strangle_exit.call, strangle_exit.put, config.strangle_weighting
        ),
        price_return=math.log(after.spot / before.spot),
        lambda_used=smile.lambda_used,
        modality=modality,
        arbitrage_free=smile.arbitrage_free,
        flags=tuple(flags),
    )
