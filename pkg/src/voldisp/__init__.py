"""Variance, gamma and correlation swap analytics with dispersion-trade
P&L attribution and a reproducible multi-asset stochastic-vol Monte Carlo."""

from .black_scholes import BsQuote, bs_greeks, bs_price, straddle_price
from .correlation import (
    CorrelationEstimate,
    bossu_proxy_corr,
    corr_swap_value,
    equicorr_index_vol,
    implied_corr,
    realized_corr_pairwise,
)
from .dispersion import (
    ArbitrageBound,
    DispersionTrade,
    SpreadReport,
    TradeDirection,
    arbitrage_bound_check,
    beta_gamma_swap,
    beta_variance,
    gamma_pnl_dispersion,
    gamma_pnl_dispersion_gammaswap,
    instantaneous_realized_corr,
    spread_identity,
    total_pnl_dispersion,
    weights_naive_squared,
    weights_theta_gamma_flat,
    weights_vega_flat,
    weights_vega_weighted_flat,
)
from .market import (
    AssetParams,
    IndexBasket,
    RateEnv,
    SwapContract,
    SwapKind,
    basket_vol,
    weights,
)
from .pnl import (
    PeriodMove,
    PnlBreakdown,
    dispersion_option_pnl,
    index_pnl_decompose,
    pnl_constant_vol,
    pnl_running_vol,
)
from .simulate import (
    ExperimentReport,
    RealizedStats,
    SimConfig,
    SimPath,
    build_driver_correlation,
    realized_stats,
    run_spread_experiment,
    simulate,
    volga_line_prediction,
)
from .swaps import (
    ReplicationGrid,
    SwapGreeks,
    gamma_strike_mtm,
    gamma_strike_replication,
    gamma_swap_greeks,
    gamma_swap_strip_value,
    var_strike_mtm,
    var_strike_replication,
    var_swap_greeks,
    var_swap_replication_value,
)

__version__ = "0.1.0"
