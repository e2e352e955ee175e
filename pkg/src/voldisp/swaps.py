"""Variance and gamma swap fair strikes, mark-to-market, and greeks.

Strikes come from static replication: a log-strike Simpson quadrature over a
put strip below a threshold and a call strip above it, weighted 1/K^2 for
variance swaps and 1/K for gamma swaps. Everything is quoted in variance
units (vol squared); realized legs follow the contract conventions in
:mod:`voldisp.market`.

Greek conventions
-----------------
``var_swap_greeks`` returns the spot/vol/time profile of the replication
portfolio with financing stripped: rates enter only through the threshold
choice. That is the mark whose finite differences the greeks reproduce, see
``var_swap_replication_value``. For gamma swaps the profile keeps the
``exp(2 r tau)`` growth of the strip mark (``gamma_swap_strip_value``); the
vega of that mark at inception is ``2 vol exp(2 r T)``, which a finite
difference of the strip confirms. Mark-to-market values are discounted
uniformly with ``exp(-r tau)`` for both products.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .black_scholes import bs_price
from .market import AssetParams, RateEnv, SwapContract, SwapKind

DEFAULT_NUM_POINTS = 2048
DEFAULT_WIDTH = 8.0  # grid half-width in units of vol * sqrt(T), in log-strike
DEFAULT_TAIL_TOL = 1e-6


@dataclass(frozen=True)
class ReplicationGrid:
    """Log-uniform strike grid split at a threshold strike.

    ``num_points`` is the total number of Simpson intervals, half per side;
    it must be even and at least 16. ``threshold`` is the put/call switch:
    the liquidity threshold S_* for variance swaps, the at-the-money forward
    for gamma swaps.
    """

    low_strike: float
    high_strike: float
    threshold: float
    num_points: int = DEFAULT_NUM_POINTS

    def __post_init__(self):
        if self.low_strike <= 0.0:
            raise ValueError("low_strike must be positive")
        if not self.low_strike < self.threshold < self.high_strike:
            raise ValueError("grid must satisfy low_strike < threshold < high_strike")
        if self.num_points < 16:
            raise ValueError("num_points must be at least 16")
        if self.num_points % 2:
            raise ValueError("num_points must be even (composite Simpson)")

    @classmethod
    def for_asset(cls, spot: float, vol: float, rate: float, maturity: float,
                  num_points: int = DEFAULT_NUM_POINTS, width: float = DEFAULT_WIDTH,
                  threshold: float | None = None) -> "ReplicationGrid":
        """Grid centered on the forward, spanning +/- width vol sqrt(T) in log-strike."""
        if vol <= 0.0:
            raise ValueError("grid construction needs vol > 0")
        fwd = spot * math.exp(rate * maturity)
        if threshold is None:
            threshold = fwd
        half = width * vol * math.sqrt(maturity)
        low = min(fwd * math.exp(-half), threshold * 0.999)
        high = max(fwd * math.exp(half), threshold * 1.001)
        return cls(low_strike=low, high_strike=high, threshold=threshold,
                   num_points=num_points)


@lru_cache(maxsize=128)
def _strip_nodes(grid: ReplicationGrid):
    """Simpson nodes/weights for both legs; weights absorb the dK = K du jacobian."""

    def leg(a: float, b: float, n: int):
        if n % 2:
            n += 1
        u = np.linspace(math.log(a), math.log(b), n + 1)
        strikes = np.exp(u)
        h = (u[-1] - u[0]) / n
        w = np.ones(n + 1)
        w[1:-1:2] = 4.0
        w[2:-1:2] = 2.0
        w *= h / 3.0
        return strikes, w * strikes

    n_side = grid.num_points // 2
    put_k, put_w = leg(grid.low_strike, grid.threshold, n_side)
    call_k, call_w = leg(grid.threshold, grid.high_strike, n_side)
    return put_k, put_w, call_k, call_w


def _strip_integral(spot, vol, rate, tau, grid: ReplicationGrid, power: int,
                    tail_tol: float | None = None) -> float:
    """integral P(K)/K^power below the threshold plus C(K)/K^power above it.

    When ``tail_tol`` is given, the outermost Simpson panel on each side is
    used as a truncation estimate and the integral is rejected if that mass
    exceeds ``tail_tol`` of the total.
    """
    put_k, put_w, call_k, call_w = _strip_nodes(grid)
    put_vals = bs_price(spot, put_k, vol, rate, tau, "put") / put_k**power
    call_vals = bs_price(spot, call_k, vol, rate, tau, "call") / call_k**power
    total = float(np.dot(put_w, put_vals) + np.dot(call_w, call_vals))

    if tail_tol is not None:
        # One Simpson panel spans two intervals -> three nodes.
        h_put = put_w[0] / put_k[0]  # recover h/3 from the jacobian-weighted end node
        h_call = call_w[-1] / call_k[-1]
        tail_low = h_put * (put_vals[0] * put_k[0] + 4.0 * put_vals[1] * put_k[1]
                            + put_vals[2] * put_k[2])
        tail_high = h_call * (call_vals[-1] * call_k[-1] + 4.0 * call_vals[-2] * call_k[-2]
                              + call_vals[-3] * call_k[-3])
        tail = abs(tail_low) + abs(tail_high)
        if tail > tail_tol * max(abs(total), 1e-300):
            raise ValueError(
                f"strike grid too narrow: estimated tail mass {tail:.3e} exceeds "
                f"{tail_tol:.1e} of the strip value {total:.6e}"
            )
    return total


def var_strike_replication(asset: AssetParams, rates: RateEnv, maturity: float,
                           grid: ReplicationGrid | None = None,
                           tail_tol: float = DEFAULT_TAIL_TOL) -> float:
    """Fair variance-swap strike from the 1/K^2 option strip, variance units.

    With the threshold at the forward this is the bare strip value scaled by
    2 exp(rT)/T; a general threshold S_* adds the log-contract correction
    2r - (2/T)((S0 exp(rT)/S_* - 1) + ln(S_*/S0)).
    """
    if maturity <= 0.0:
        raise ValueError("maturity must be positive")
    if asset.vol == 0.0:
        return 0.0
    r = rates.rate
    if grid is None:
        grid = ReplicationGrid.for_asset(asset.spot, asset.vol, r, maturity)
    strip = _strip_integral(asset.spot, asset.vol, r, maturity, grid, power=2,
                            tail_tol=tail_tol)
    s_star = grid.threshold
    correction = 2.0 * r - (2.0 / maturity) * (
        (asset.spot * math.exp(r * maturity) / s_star - 1.0)
        + math.log(s_star / asset.spot)
    )
    return correction + 2.0 * math.exp(r * maturity) / maturity * strip


def gamma_strike_replication(asset: AssetParams, rates: RateEnv, maturity: float,
                             grid: ReplicationGrid | None = None,
                             tail_tol: float = DEFAULT_TAIL_TOL) -> float:
    """Fair gamma-swap strike from the 1/K strip, variance units.

    The strip is split at the at-the-money forward. Annualization carries
    the average forward growth (exp(rT) - 1)/(rT) of the price-weighted leg:
    this equals the strip plus the financing leg of the rolled futures
    position valued under the flat vol, and reduces to 2/(T S0) at r = 0.
    Under flat vol the result is vol^2 (exp(rT) - 1)/(rT).
    """
    if maturity <= 0.0:
        raise ValueError("maturity must be positive")
    if asset.vol == 0.0:
        return 0.0
    r = rates.rate
    if grid is None:
        grid = ReplicationGrid.for_asset(asset.spot, asset.vol, r, maturity)
    strip = _strip_integral(asset.spot, asset.vol, r, maturity, grid, power=1,
                            tail_tol=tail_tol)
    x = r * maturity
    growth = math.expm1(x) / x if x != 0.0 else 1.0
    return 2.0 * growth / (maturity * asset.spot) * strip


def var_strike_mtm(contract: SwapContract, fresh_strike: float, rates: RateEnv) -> float:
    """Mark-to-market of a variance swap given the strike for the residual leg.

    Per unit of variance notional times the contract notional:
    exp(-r tau) (accrued/T - K_0 + (tau/T) K_fresh).
    """
    if contract.kind is not SwapKind.VARIANCE:
        raise ValueError("contract is not a variance swap")
    tau = contract.time_to_maturity
    t_frac = contract.accrued / contract.maturity
    value = t_frac - contract.strike + (tau / contract.maturity) * fresh_strike
    return contract.notional * math.exp(-rates.rate * tau) * value


def gamma_strike_mtm(contract: SwapContract, fresh_strike: float, spot_ratio: float,
                     rates: RateEnv) -> float:
    """Mark-to-market of a gamma swap; the residual leg scales with S_t/S_0.

    exp(-r tau) (accrued/T + (tau/T)(S_t/S_0) K_fresh - K_0), times notional.
    """
    if contract.kind is not SwapKind.GAMMA:
        raise ValueError("contract is not a gamma swap")
    if spot_ratio <= 0.0:
        raise ValueError("spot ratio must be positive")
    tau = contract.time_to_maturity
    value = (contract.accrued / contract.maturity
             + (tau / contract.maturity) * spot_ratio * fresh_strike
             - contract.strike)
    return contract.notional * math.exp(-rates.rate * tau) * value


@dataclass(frozen=True)
class SwapGreeks:
    """Sensitivities of a swap's replication mark, per unit variance notional.

    ``var_vega`` is the derivative with respect to variance (vol squared);
    ``d_gamma_d_spot`` and ``d_var_vega_d_tau`` are the higher-order terms
    used by hedging diagnostics.
    """

    delta: float
    gamma: float
    theta: float
    vega: float
    var_vega: float
    vanna: float
    volga: float
    d_gamma_d_spot: float
    d_var_vega_d_tau: float


def var_swap_greeks(contract: SwapContract, asset: AssetParams, rates: RateEnv,
                    threshold: float | None = None) -> SwapGreeks:
    """Variance swap greeks; vanna is identically zero.

    ``threshold`` is the strike split of the hedge strip; by default the
    forward of the current spot over the full maturity (the inception
    convention when the spot has not moved).
    """
    tau = contract.time_to_maturity
    if tau <= 0.0:
        raise ValueError("greeks are not defined at expiry (tau = 0)")
    if contract.kind is not SwapKind.VARIANCE:
        raise ValueError("contract is not a variance swap")
    T = contract.maturity
    spot, vol = asset.spot, asset.vol
    s_star = spot * math.exp(rates.rate * T) if threshold is None else threshold
    return SwapGreeks(
        delta=2.0 / T * (1.0 / s_star - 1.0 / spot),
        gamma=2.0 / (T * spot * spot),
        theta=-vol * vol / T,
        vega=2.0 * vol * tau / T,
        var_vega=tau / T,
        vanna=0.0,
        volga=2.0 * tau / T,
        d_gamma_d_spot=-4.0 / (T * spot**3),
        d_var_vega_d_tau=1.0 / T,
    )


def gamma_swap_greeks(contract: SwapContract, asset: AssetParams, spot_ratio: float,
                      rates: RateEnv) -> SwapGreeks:
    """Gamma swap greeks in the exp(2 r tau) convention of the strip mark.

    ``spot_ratio`` is S_t/S_0. The delta refers to a strip with strikes
    split at the inception forward S_0 exp(rT); gamma, vega, vanna and volga
    do not depend on that choice. Theta is the gamma break-even rate
    -0.5 Gamma vol^2 S^2, the same convention as the variance swap.
    """
    tau = contract.time_to_maturity
    if tau <= 0.0:
        raise ValueError("greeks are not defined at expiry (tau = 0)")
    if contract.kind is not SwapKind.GAMMA:
        raise ValueError("contract is not a gamma swap")
    if spot_ratio <= 0.0:
        raise ValueError("spot ratio must be positive")
    T = contract.maturity
    spot, vol = asset.spot, asset.vol
    r = rates.rate
    s0 = spot / spot_ratio
    kappa = s0 * math.exp(r * T)
    e2 = math.exp(2.0 * r * tau)
    pref = 2.0 * e2 / (T * s0)
    return SwapGreeks(
        delta=pref * (math.log(spot * math.exp(r * tau) / kappa) + 0.5 * vol * vol * tau),
        gamma=pref / spot,
        theta=-vol * vol * spot_ratio * e2 / T,
        vega=2.0 * vol * e2 * (tau / T) * spot_ratio,
        var_vega=e2 * (tau / T) * spot_ratio,
        vanna=2.0 * vol * e2 * tau / (T * s0),
        volga=2.0 * e2 * (tau / T) * spot_ratio,
        d_gamma_d_spot=-pref / (spot * spot),
        d_var_vega_d_tau=e2 * (1.0 + 2.0 * r * tau) * spot_ratio / T,
    )


def var_swap_replication_value(spot: float, vol: float, tau: float, maturity: float,
                               grid: ReplicationGrid) -> float:
    """Spot/vol/time mark of the variance-swap hedge strip, (2/T)-scaled.

    The strip is priced at zero rate over fixed strikes, which is the
    financing-stripped profile whose derivatives are the Appendix-style
    greeks: rates only move the threshold. Useful as a finite-difference
    target; constant terms of the full mark (realized leg, strike) drop out
    of any derivative and are omitted.
    """
    if tau <= 0.0:
        raise ValueError("tau must be positive")
    strip = _strip_integral(spot, vol, 0.0, tau, grid, power=2)
    return 2.0 / maturity * strip


def gamma_swap_strip_value(spot: float, vol: float, tau: float, maturity: float,
                           inception_spot: float, rates: RateEnv,
                           grid: ReplicationGrid) -> float:
    """Strip mark of a gamma swap: 2 exp(2 r tau)/(T S_0) times the 1/K strip.

    Options are priced at the market rate over fixed strikes. At inception
    (tau = T, spot = S_0) the sigma-derivative of this mark is
    2 vol exp(2 r T).
    """
    if tau <= 0.0:
        raise ValueError("tau must be positive")
    strip = _strip_integral(spot, vol, rates.rate, tau, grid, power=1)
    return 2.0 * math.exp(2.0 * rates.rate * tau) / (maturity * inception_spot) * strip
