"""Dispersion trades: weighting schemes, gamma P&L versus the correlation
spread, total P&L with the volatility terms, and the arbitrage bound.

All per-period formulas are written from the short-index, long-components
perspective; a trade held the other way negates every reported line. The
index leg of a period is implied by the component moves through the exact
basket relation dI/I = sum_i w_i dS_i/S_i.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .market import IndexBasket, RateEnv, SwapKind, weights
from .pnl import PeriodMove, PnlBreakdown


class TradeDirection(enum.Enum):
    SHORT_INDEX_LONG_COMPONENTS = "short-index-long-components"
    LONG_INDEX_SHORT_COMPONENTS = "long-index-short-components"


@dataclass(frozen=True)
class DispersionTrade:
    """A dispersion position: one index swap against component swaps.

    ``alphas`` are the component notionals as proportions of the index-leg
    notional, which is fixed to 1. All legs share the maturity.
    """

    basket: IndexBasket
    leg_kind: SwapKind
    alphas: tuple[float, ...]
    maturity: float
    direction: TradeDirection = TradeDirection.SHORT_INDEX_LONG_COMPONENTS
    index_notional: float = 1.0

    def __post_init__(self):
        alphas = tuple(float(a) for a in self.alphas)
        object.__setattr__(self, "alphas", alphas)
        if len(alphas) != self.basket.n_assets:
            raise ValueError("one alpha per basket component is required")
        if any(a < 0.0 for a in alphas):
            raise ValueError("alphas must be nonnegative")
        if self.maturity <= 0.0:
            raise ValueError("maturity must be positive")
        if self.index_notional <= 0.0:
            raise ValueError("index notional must be positive")
        if self.leg_kind is SwapKind.CORRELATION:
            raise ValueError("dispersion legs must be variance or gamma swaps")

    @property
    def sign(self) -> float:
        return 1.0 if self.direction is TradeDirection.SHORT_INDEX_LONG_COMPONENTS else -1.0

    @property
    def scale(self) -> float:
        """Signed notional applied to every reported P&L line."""
        return self.sign * self.index_notional


@dataclass(frozen=True)
class SpreadReport:
    """Gamma P&L of a dispersion trade split into pure correlation exposure
    and the weighting residual.

    gamma_pnl = beta (implied - realized) dt + approximation_error, exactly.
    ``beta`` is in variance units per year.
    """

    implied_corr: float
    realized_corr: float
    beta: float
    gamma_pnl: float
    approximation_error: float
    vol_pnl: float = 0.0


def weights_vega_flat(basket: IndexBasket) -> np.ndarray:
    """alpha_i = sigma_I w_i / sigma_i: component vega notionals sum to the
    index vega notional, allocated by index weight."""
    s = basket.vols
    if np.any(s <= 0.0):
        raise ValueError("vega-flat weights need positive component vols")
    return basket.implied_index_vol() * weights(basket) / s


def weights_vega_weighted_flat(basket: IndexBasket) -> np.ndarray:
    """alpha_i = w_i sigma_I^2 / (sigma_i sum_j w_j sigma_j).

    Satisfies sum_i alpha_i sigma_i^2 = sigma_I^2, the arbitrage-bound
    boundary (see :func:`arbitrage_bound_check`).
    """
    w = weights(basket)
    s = basket.vols
    if np.any(s <= 0.0):
        raise ValueError("vega-weighted-flat weights need positive component vols")
    avg_vol = float(np.dot(w, s))
    if avg_vol <= 0.0:
        raise ValueError("weighted average vol must be positive")
    sigma_i2 = basket.implied_index_vol() ** 2
    return w * sigma_i2 / (s * avg_vol)


def weights_naive_squared(basket: IndexBasket) -> np.ndarray:
    """alpha_i = w_i^2: the weighting that makes the gamma P&L pure
    correlation exposure, with zero approximation error."""
    w = weights(basket)
    return w * w


def weights_theta_gamma_flat(basket: IndexBasket, moves: Sequence[PeriodMove],
                             index_move: PeriodMove,
                             degenerate_tol: float = 1e-14) -> np.ndarray:
    """Period-dependent alpha that zeroes the dispersion gamma P&L.

    alpha = ((dI/I)^2 - sigma_I^2 dt) / sum_i ((dS_i/S_i)^2 - sigma_i^2 dt),
    the same value for every component. Rejected when the denominator is
    degenerate (all component moves at break-even).
    """
    if len(moves) != basket.n_assets:
        raise ValueError("one move per component is required")
    dt = index_move.dt
    if any(m.dt != dt for m in moves):
        raise ValueError("all moves must share the period length")
    s = basket.vols
    spots = basket.spots
    excess = [
        (m.d_spot / sp) ** 2 - vol * vol * dt
        for m, sp, vol in zip(moves, spots, s)
    ]
    denom = float(np.sum(excess))
    sI = basket.implied_index_vol()
    num = (index_move.d_spot / basket.index_level) ** 2 - sI * sI * dt
    if abs(denom) < degenerate_tol:
        raise ValueError(
            f"theta/gamma-flat weighting is degenerate for this period: "
            f"denominator {denom:.3e} (numerator {num:.3e})"
        )
    alpha = num / denom
    return np.full(basket.n_assets, alpha)


def beta_variance(wts: np.ndarray, vols: np.ndarray, maturity: float) -> float:
    """beta = T^-1 sum_{i != j} w_i w_j s_i s_j, variance units per year."""
    ws = np.asarray(wts) * np.asarray(vols)
    return float(np.sum(ws) ** 2 - np.sum(ws**2)) / maturity


def beta_gamma_swap(wts: np.ndarray, vols: np.ndarray, maturity: float,
                    index_ratio: float, rate: float, tau: float) -> float:
    """Gamma-swap analogue of beta, scaled by exp(2 r tau) I_t / I_0."""
    return math.exp(2.0 * rate * tau) * index_ratio * beta_variance(wts, vols, maturity)


def instantaneous_realized_corr(moves: Sequence[PeriodMove], wts: np.ndarray,
                                vols: np.ndarray, spots: np.ndarray) -> float:
    """One-period realized correlation: the cross products of returns
    normalized by the same w_i w_j s_i s_j weighting that defines beta."""
    w = np.asarray(wts, dtype=float)
    s = np.asarray(vols, dtype=float)
    rel = np.array([m.d_spot for m in moves]) / np.asarray(spots, dtype=float)
    dt = moves[0].dt
    wr = w * rel
    cross_real = float(np.sum(wr) ** 2 - np.sum(wr**2))
    ws = w * s
    cross_weight = float(np.sum(ws) ** 2 - np.sum(ws**2))
    if cross_weight <= 0.0:
        raise ValueError("cross-vol weight is zero; correlation is undefined")
    return cross_real / (cross_weight * dt)


def _check_moves(trade: DispersionTrade, moves: Sequence[PeriodMove]) -> float:
    if len(moves) != trade.basket.n_assets:
        raise ValueError("one period move per basket component is required")
    dt = moves[0].dt
    if any(m.dt != dt for m in moves):
        raise ValueError("all moves must share the period length")
    return dt


def gamma_pnl_dispersion(trade: DispersionTrade, moves: Sequence[PeriodMove],
                         implied_corr: float, realized_corr: float) -> SpreadReport:
    """Gamma P&L of a variance-swap dispersion trade over one period.

    gamma_pnl = (1/T) sum_i ((dS_i/S_i)^2 - s_i^2 dt)(alpha_i - w_i^2)
                + beta (implied - realized) dt

    With alpha_i = w_i^2 the residual coefficients vanish and the gamma
    P&L is exactly the correlation spread times beta.
    """
    if trade.leg_kind is not SwapKind.VARIANCE:
        raise ValueError("trade legs are not variance swaps")
    dt = _check_moves(trade, moves)
    basket = trade.basket
    w = weights(basket)
    s = basket.vols
    spots = basket.spots
    alphas = np.asarray(trade.alphas)
    T = trade.maturity

    rel = np.array([m.d_spot for m in moves]) / spots
    excess = rel * rel - s * s * dt
    residual = float(np.dot(excess, alphas - w * w)) / T
    beta = beta_variance(w, s, T)
    corr_term = beta * (implied_corr - realized_corr) * dt
    scale = trade.scale
    return SpreadReport(
        implied_corr=implied_corr,
        realized_corr=realized_corr,
        beta=beta,
        gamma_pnl=scale * (residual + corr_term),
        approximation_error=scale * residual,
    )


def gamma_pnl_dispersion_gammaswap(trade: DispersionTrade, moves: Sequence[PeriodMove],
                                   spot_ratios: np.ndarray, index_ratio: float,
                                   implied_corr: float, realized_corr: float,
                                   rates: RateEnv, tau: float) -> SpreadReport:
    """Gamma-swap dispersion analogue of :func:`gamma_pnl_dispersion`.

    The residual weights each leg by its performance since inception:

    gamma_pnl = (exp(2 r tau)/T) sum_i ((dS_i/S_i)^2 - s_i^2 dt)
                (alpha_i S_i/S_{i,0} - w_i^2 I_t/I_0)
                + beta_gamma (implied - realized) dt
    """
    if trade.leg_kind is not SwapKind.GAMMA:
        raise ValueError("trade legs are not gamma swaps")
    dt = _check_moves(trade, moves)
    basket = trade.basket
    w = weights(basket)
    s = basket.vols
    spots = basket.spots
    ratios = np.asarray(spot_ratios, dtype=float)
    if ratios.shape != w.shape:
        raise ValueError("one spot ratio per component is required")
    alphas = np.asarray(trade.alphas)
    T = trade.maturity

    rel = np.array([m.d_spot for m in moves]) / spots
    excess = rel * rel - s * s * dt
    growth = math.exp(2.0 * rates.rate * tau) / T
    residual = growth * float(np.dot(excess, alphas * ratios - w * w * index_ratio))
    beta = beta_gamma_swap(w, s, T, index_ratio, rates.rate, tau)
    corr_term = beta * (implied_corr - realized_corr) * dt
    scale = trade.scale
    return SpreadReport(
        implied_corr=implied_corr,
        realized_corr=realized_corr,
        beta=beta,
        gamma_pnl=scale * (residual + corr_term),
        approximation_error=scale * residual,
    )


def total_pnl_dispersion(trade: DispersionTrade, moves: Sequence[PeriodMove],
                         vols: np.ndarray, index_vol: float,
                         vol_of_vols: np.ndarray, index_vol_of_vol: float,
                         tau: float, d_index_vol: float | None = None) -> PnlBreakdown:
    """Full one-period P&L of a variance-swap dispersion trade.

    The gamma part is decomposed exactly into the correlation term (in
    ``correlation_term``) and the weighting residual (in ``gamma_term``).
    The volatility part uses the variance-swap greeks at the current state:

    vega:  2 (tau/T) (sum_i alpha_i s_i d_vol_i - sigma_I d_index_vol)
    volga: (tau/T) (sum_i alpha_i xi_i^2 s_i^2 - xi_I^2 sigma_I^2) dt
    vanna: 0 for variance swaps

    ``d_index_vol`` defaults to the weighted component move
    sum_i w_i d_vol_i, the index response under which the vega-flat scheme
    cancels identically; pass an explicit value to override.

    ``vols``/``index_vol`` are the current levels, which also set the
    gamma break-even; the implied correlation of the period is the one
    backed out of ``index_vol`` through the basket identity.
    """
    if trade.leg_kind is not SwapKind.VARIANCE:
        raise ValueError("total dispersion P&L is implemented for variance-swap legs")
    dt = _check_moves(trade, moves)
    basket = trade.basket
    w = weights(basket)
    s = np.asarray(vols, dtype=float)
    xi = np.asarray(vol_of_vols, dtype=float)
    if not (s.shape == w.shape == xi.shape):
        raise ValueError("vols and vol_of_vols must match the basket size")
    spots = basket.spots
    alphas = np.asarray(trade.alphas)
    T = trade.maturity

    # gamma leg, decomposed through the exact basket relation
    rel = np.array([m.d_spot for m in moves]) / spots
    excess = rel * rel - s * s * dt
    residual = float(np.dot(excess, alphas - w * w)) / T
    beta = beta_variance(w, s, T)
    ws = w * s
    cross = float(np.sum(ws) ** 2 - np.sum(ws**2))
    if cross <= 0.0:
        raise ValueError("cross-vol weight is zero; the decomposition is undefined")
    rho_implied = (index_vol**2 - float(np.sum(ws**2))) / cross
    rho_realized = instantaneous_realized_corr(moves, w, s, spots)
    corr_term = beta * (rho_implied - rho_realized) * dt

    # volatility legs
    d_vols = np.array([m.d_vol for m in moves])
    if d_index_vol is None:
        d_index_vol = float(np.dot(w, d_vols))
    vega_term = 2.0 * (tau / T) * (float(np.dot(alphas * s, d_vols)) - index_vol * d_index_vol)
    volga_term = (tau / T) * (float(np.dot(alphas * xi * xi, s * s))
                              - index_vol_of_vol**2 * index_vol**2) * dt

    scale = trade.scale
    return PnlBreakdown(
        gamma_term=scale * residual,
        vega_term=scale * vega_term,
        volga_term=scale * volga_term,
        vanna_term=0.0,
        correlation_term=scale * corr_term,
    )


def spread_identity(implied_vols: np.ndarray, realized_vols: np.ndarray,
                    wts: np.ndarray, implied_corr: float, realized_corr: float,
                    implied_index_vol: float | None = None,
                    realized_index_vol: float | None = None,
                    mode: str = "consistent") -> tuple[float, float]:
    """Both sides of the implied/realized decomposition of the index variance.

    mode "consistent" (default): squared index weights throughout,

      lhs = (hat s_I^2 - s_I^2) - sum_i w_i^2 (hat s_i^2 - s_i^2)
            - sum_{i != j} w_i w_j s_i s_j (hat rho - rho)
      rhs = hat rho sum_{i != j} w_i w_j (hat s_i hat s_j - s_i s_j)

    The sides agree identically whenever the index vols satisfy the
    w^2 basket identity at their respective correlations (the default when
    they are not supplied). The right side is the P&L of short dispersion
    plus long correlation swap.

    mode "as-stated" reproduces the first-power-weight variant for
    comparison; its sides do not close in general.
    """
    s = np.asarray(implied_vols, dtype=float)
    sh = np.asarray(realized_vols, dtype=float)
    w = np.asarray(wts, dtype=float)
    if not (s.shape == sh.shape == w.shape):
        raise ValueError("vols and weights must have matching lengths")

    def cross(a, b):
        return float(np.sum(w * a) * np.sum(w * b) - np.sum(w * w * a * b))

    if mode == "consistent":
        if implied_index_vol is None:
            var_i = float(np.sum((w * s) ** 2)) + implied_corr * cross(s, s)
        else:
            var_i = implied_index_vol**2
        if realized_index_vol is None:
            var_r = float(np.sum((w * sh) ** 2)) + realized_corr * cross(sh, sh)
        else:
            var_r = realized_index_vol**2
        lhs = ((var_r - var_i)
               - float(np.sum(w * w * (sh * sh - s * s)))
               - cross(s, s) * (realized_corr - implied_corr))
        rhs = realized_corr * (cross(sh, sh) - cross(s, s))
        return lhs, rhs

    if mode == "as-stated":
        if implied_index_vol is None:
            var_i = float(np.sum(w * s * s)) + implied_corr * cross(s, s)
        else:
            var_i = implied_index_vol**2
        if realized_index_vol is None:
            var_r = float(np.sum(w * sh * sh)) + realized_corr * cross(sh, sh)
        else:
            var_r = realized_index_vol**2
        lhs = (float(np.sum(w * w * (var_r - s * s))) - (var_r - var_i)
               - cross(s, s) * (realized_corr - implied_corr))
        rhs = realized_corr * float(np.sum(np.outer(sh, sh) - np.outer(s, s))
                                    - np.sum(sh * sh - s * s))
        return lhs, rhs

    raise ValueError(f"unknown mode {mode!r}")


@dataclass(frozen=True)
class ArbitrageBound:
    """Outcome of the no-arbitrage weighting check.

    A weighting with ratio = sum_i alpha_i s_i^2 / s_I^2 above 1 admits
    realized scenarios with guaranteed losses; the vega-weighted-flat
    scheme sits exactly on the boundary.
    """

    ratio: float
    is_boundary: bool
    violates_bound: bool


def arbitrage_bound_check(alphas: np.ndarray, basket: IndexBasket,
                          boundary_tol: float = 1e-9) -> ArbitrageBound:
    a = np.asarray(alphas, dtype=float)
    s = basket.vols
    if a.shape != s.shape:
        raise ValueError("one alpha per component is required")
    sI = basket.implied_index_vol()
    if sI <= 0.0:
        raise ValueError("index vol must be positive")
    ratio = float(np.dot(a, s * s)) / (sI * sI)
    return ArbitrageBound(ratio=ratio,
                          is_boundary=abs(ratio - 1.0) < boundary_tol,
                          violates_bound=ratio > 1.0 + boundary_tol)
