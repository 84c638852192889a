"""Black-Scholes European call/put prices and deltas (no dividends)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .errors import DomainError

DAYS_PER_YEAR = 365.0


def year_fraction(days: float) -> float:
    """Actual/365 day count."""
    return days / DAYS_PER_YEAR


@dataclass(frozen=True)
class PricingInputs:
    spot: float
    strike: float
    sigma: float
    tau: float
    rate: float = 0.0

    def __post_init__(self) -> None:
        _check_domain(self.spot, self.strike, self.sigma, self.tau)


def _check_domain(spot, strike, sigma, tau) -> None:
    if not np.all(np.asarray(spot) > 0):
        raise DomainError("spot must be > 0")
    if not np.all(np.asarray(strike) > 0):
        raise DomainError("strike must be > 0")
    if not np.all(np.asarray(tau) > 0):
        raise DomainError("tau must be > 0")
    if not np.all(np.asarray(sigma) >= 0):
        raise DomainError("sigma must be >= 0")


def _d1_d2(spot, strike, sigma, tau, rate):
    vol = sigma * np.sqrt(tau)
    with np.errstate(divide="ignore", invalid="ignore"):
        d1 = (np.log(spot / strike) + (rate + 0.5 * sigma * sigma) * tau) / vol
    return d1, d1 - vol


def bs_call(spot, strike, sigma, tau, rate=0.0):
    """Vectorised call price; ``sigma == 0`` gives the discounted intrinsic value."""
    _check_domain(spot, strike, sigma, tau)
    spot, strike, sigma = np.broadcast_arrays(
        np.asarray(spot, float), np.asarray(strike, float), np.asarray(sigma, float)
    )
    disc_k = strike * np.exp(-rate * tau)
    d1, d2 = _d1_d2(spot, strike, sigma, tau, rate)
    price = spot * ndtr(d1) - disc_k * ndtr(d2)
    price = np.where(sigma > 0, price, np.maximum(spot - disc_k, 0.0))
    return price[()] if price.ndim == 0 else price


def bs_put(spot, strike, sigma, tau, rate=0.0):
    _check_domain(spot, strike, sigma, tau)
    spot, strike, sigma = np.broadcast_arrays(
        np.asarray(spot, float), np.asarray(strike, float), np.asarray(sigma, float)
    )
    disc_k = strike * np.exp(-rate * tau)
    d1, d2 = _d1_d2(spot, strike, sigma, tau, rate)
    price = disc_k * ndtr(-d2) - spot * ndtr(-d1)
    price = np.where(sigma > 0, price, np.maximum(disc_k - spot, 0.0))
    return price[()] if price.ndim == 0 else price


def call_price(inputs: PricingInputs) -> float:
    return float(bs_call(inputs.spot, inputs.strike, inputs.sigma, inputs.tau, inputs.rate))


def put_price(inputs: PricingInputs) -> float:
    return float(bs_put(inputs.spot, inputs.strike, inputs.sigma, inputs.tau, inputs.rate))


def _delta_d1(inputs: PricingInputs) -> float:
    if not inputs.sigma > 0:
        raise DomainError("delta requires sigma > 0")
    d1, _ = _d1_d2(inputs.spot, inputs.strike, inputs.sigma, inputs.tau, inputs.rate)
    return float(d1)


def call_delta(inputs: PricingInputs) -> float:
    return float(ndtr(_delta_d1(inputs)))


def put_delta(inputs: PricingInputs) -> float:
    return -float(ndtr(-_delta_d1(inputs)))


def intrinsic_call(spot: float, strike: float) -> float:
    return max(spot - strike, 0.0)


def intrinsic_put(spot: float, strike: float) -> float:
    return max(strike - spot, 0.0)

