"""Black-Scholes kernel: European call/put prices, straddles, and greeks.

This is the integrand supplier for the replication strips, so everything is
vectorized over strikes. The Gaussian cdf goes through scipy's erf-based
``ndtr`` (absolute error below 1e-15); the density is computed directly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

# Beyond |d1| = 40 the cdf is 0/1 to double precision; clamp to avoid
# spurious inf*0 products at the far ends of a strike grid.
_D_CLAMP = 40.0


def norm_cdf(x):
    x = np.clip(x, -_D_CLAMP, _D_CLAMP)
    return ndtr(x)


def norm_pdf(x):
    return np.exp(-0.5 * np.square(x)) / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class BsQuote:
    """Price and sensitivities of a European option at a single point."""

    price: float
    delta: float
    gamma: float
    theta: float
    vega: float
    vanna: float
    volga: float
    d1: float
    d2: float


def _validate(spot, strike, vol, tau):
    if np.any(np.asarray(spot) <= 0.0):
        raise ValueError("spot must be positive")
    if np.any(np.asarray(strike) <= 0.0):
        raise ValueError("strike must be positive")
    if np.any(np.asarray(vol) < 0.0):
        raise ValueError("vol must be nonnegative")
    if np.any(np.asarray(tau) < 0.0):
        raise ValueError("time to expiry must be nonnegative")


def _d12(spot, strike, vol, rate, tau):
    srt = vol * np.sqrt(tau)
    d1 = (np.log(spot / strike) + (rate + 0.5 * vol * vol) * tau) / srt
    return d1, d1 - srt


def bs_price(spot, strike, vol, rate, tau, kind: str = "call"):
    """European option price; degenerates to discounted forward intrinsic
    value when vol or tau is zero.

    ``kind`` is "call" or "put". Scalar or ndarray inputs (broadcast).
    """
    _validate(spot, strike, vol, tau)
    if kind not in ("call", "put"):
        raise ValueError(f"kind must be 'call' or 'put', got {kind!r}")
    spot = np.asarray(spot, dtype=float)
    strike = np.asarray(strike, dtype=float)
    vol = np.asarray(vol, dtype=float)
    tau = np.asarray(tau, dtype=float)

    df = np.exp(-rate * tau)
    fwd = spot / df
    sign = 1.0 if kind == "call" else -1.0
    intrinsic = df * np.maximum(sign * (fwd - strike), 0.0)

    degenerate = (vol * np.sqrt(tau)) == 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        d1, d2 = _d12(spot, strike, np.where(degenerate, 1.0, vol), rate,
                      np.where(degenerate, 1.0, tau))
        live = sign * (spot * norm_cdf(sign * d1) - strike * df * norm_cdf(sign * d2))
    out = np.where(degenerate, intrinsic, live)
    return float(out) if out.ndim == 0 else out


def bs_greeks(spot, strike, vol, rate, tau, kind: str = "call") -> BsQuote:
    """Price and greeks at a single (scalar) point.

    Requires vol > 0 and tau > 0; at the boundary the second-order greeks
    are not defined and the call is rejected.
    """
    _validate(spot, strike, vol, tau)
    if vol <= 0.0 or tau <= 0.0:
        raise ValueError("greeks require vol > 0 and tau > 0")
    if kind not in ("call", "put"):
        raise ValueError(f"kind must be 'call' or 'put', got {kind!r}")

    d1, d2 = _d12(spot, strike, vol, rate, tau)
    df = math.exp(-rate * tau)
    pdf1 = float(norm_pdf(d1))
    sqt = math.sqrt(tau)

    if kind == "call":
        price = spot * float(norm_cdf(d1)) - strike * df * float(norm_cdf(d2))
        delta = float(norm_cdf(d1))
        theta = -spot * pdf1 * vol / (2.0 * sqt) - rate * strike * df * float(norm_cdf(d2))
    else:
        price = strike * df * float(norm_cdf(-d2)) - spot * float(norm_cdf(-d1))
        delta = float(norm_cdf(d1)) - 1.0
        theta = -spot * pdf1 * vol / (2.0 * sqt) + rate * strike * df * float(norm_cdf(-d2))

    gamma = pdf1 / (spot * vol * sqt)
    vega = spot * pdf1 * sqt
    vanna = -pdf1 * d2 / vol
    volga = vega * d1 * d2 / vol
    return BsQuote(price=price, delta=delta, gamma=gamma, theta=theta,
                   vega=vega, vanna=vanna, volga=volga, d1=float(d1), d2=float(d2))


def straddle_price(spot, strike, vol, rate, tau):
    """Long call plus long put at the same strike and expiry."""
    return bs_price(spot, strike, vol, rate, tau, "call") + bs_price(
        spot, strike, vol, rate, tau, "put"
    )
