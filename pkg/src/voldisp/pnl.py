"""Per-period P&L attribution of delta-hedged option positions.

The period convention is left-endpoint (Ito): every dt-term is evaluated at
the state prevailing at the start of the period. The rate carry of the cash
account is absorbed through the pricing PDE and never shows up as a separate
line.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PeriodMove:
    """Market increment over one hedging period (t, t + dt)."""

    d_spot: float
    d_vol: float
    dt: float

    def __post_init__(self):
        if self.dt <= 0.0:
            raise ValueError("period length must be positive")

    def standardized(self, spot: float, vol: float) -> float:
        """n = d_spot / (spot vol sqrt(dt)); the break-even move is |n| = 1."""
        if vol <= 0.0:
            raise ValueError("standardized move needs vol > 0")
        return self.d_spot / (spot * vol * math.sqrt(self.dt))


@dataclass(frozen=True)
class PnlBreakdown:
    """Additive P&L attribution for one period.

    ``gamma_term`` nets realized convexity against the implied-vol theta
    break-even. ``theta_residual`` is the slot for carry not absorbed by
    that netting; it is zero under the PDE convention used here.
    ``correlation_term`` is only populated by dispersion-level aggregation.
    """

    gamma_term: float
    vega_term: float = 0.0
    volga_term: float = 0.0
    vanna_term: float = 0.0
    theta_residual: float = 0.0
    correlation_term: float = 0.0

    @property
    def total(self) -> float:
        return (self.gamma_term + self.vega_term + self.volga_term
                + self.vanna_term + self.theta_residual + self.correlation_term)


def pnl_constant_vol(gamma: float, spot: float, move: PeriodMove, vol: float) -> float:
    """Gamma/theta P&L of a delta-hedged option when vol never moves.

    0.5 Gamma S^2 ((dS/S)^2 - vol^2 dt); zero exactly on a break-even move.
    """
    rel = move.d_spot / spot
    return 0.5 * gamma * spot * spot * (rel * rel - vol * vol * move.dt)


def pnl_running_vol(gamma: float, vega: float, volga: float, vanna: float,
                    spot: float, move: PeriodMove, implied_vol: float,
                    vol_of_vol: float, spot_vol_corr: float) -> PnlBreakdown:
    """Delta-hedged P&L with a moving volatility, split by greek.

    gamma:  0.5 Gamma S^2 ((dS/S)^2 - implied_vol^2 dt)
    vega:   Vega d_vol
    volga:  0.5 Volga vol_of_vol^2 implied_vol^2 dt
    vanna:  Vanna implied_vol S spot_vol_corr vol_of_vol dt

    ``implied_vol`` is the hedging vol, used both for the gamma break-even
    and as the current level in the second-order dt terms. With
    vol_of_vol = 0 and d_vol = 0 this reduces exactly to
    :func:`pnl_constant_vol`.
    """
    if vol_of_vol < 0.0:
        raise ValueError("vol_of_vol must be nonnegative")
    gamma_term = pnl_constant_vol(gamma, spot, move, implied_vol)
    vega_term = vega * move.d_vol
    volga_term = 0.5 * volga * vol_of_vol**2 * implied_vol**2 * move.dt
    vanna_term = vanna * implied_vol * spot * spot_vol_corr * vol_of_vol * move.dt
    return PnlBreakdown(gamma_term=gamma_term, vega_term=vega_term,
                        volga_term=volga_term, vanna_term=vanna_term)


def index_pnl_decompose(theta_index: float, std_moves, wts, vols,
                        index_vol: float, equicorr: float) -> tuple[float, float]:
    """Split the index option's gamma/theta P&L into idiosyncratic and
    systematic parts.

    idiosyncratic: theta_I sum_i (w_i^2 s_i^2 / s_I^2) (n_i^2 - 1)
    systematic:    theta_I sum_{i != j} (s_i s_j / s_I^2) w_i w_j (n_i n_j - rho)

    When ``index_vol`` satisfies the basket identity at ``equicorr``, the two
    parts sum to theta_I (n_I^2 - 1) with n_I = sum_i w_i (s_i/s_I) n_i.
    """
    if index_vol == 0.0:
        raise ValueError("index vol must be nonzero")
    n = np.asarray(std_moves, dtype=float)
    w = np.asarray(wts, dtype=float)
    s = np.asarray(vols, dtype=float)
    if not (n.shape == w.shape == s.shape):
        raise ValueError("std_moves, weights and vols must have matching lengths")
    sI2 = index_vol * index_vol
    idio = theta_index * float(np.sum((w * s) ** 2 * (n * n - 1.0))) / sI2
    wsn = w * s * n
    cross_nn = float(np.sum(wsn) ** 2 - np.sum(wsn**2))
    ws = w * s
    cross_rho = equicorr * float(np.sum(ws) ** 2 - np.sum(ws**2))
    syst = theta_index * (cross_nn - cross_rho) / sI2
    return idio, syst


def dispersion_option_pnl(component_thetas, theta_index: float, std_moves,
                          index_std_move: float) -> float:
    """Trade-level gamma/theta P&L: sum_i theta_i (n_i^2 - 1) + theta_I (n_I^2 - 1).

    Long positions carry positive thetas, short positions negative ones.
    """
    th = np.asarray(component_thetas, dtype=float)
    n = np.asarray(std_moves, dtype=float)
    if th.shape != n.shape:
        raise ValueError("thetas and moves must have matching lengths")
    return float(np.dot(th, n * n - 1.0)) + theta_index * (index_std_move**2 - 1.0)
