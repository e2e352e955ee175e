"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s`. The Monte Carlo criteria
share module-scoped experiment runs to stay inside the runtime budget.
"""
import math
import time

import numpy as np
import pytest

from voldisp import (
    AssetParams,
    DispersionTrade,
    IndexBasket,
    RateEnv,
    ReplicationGrid,
    SimConfig,
    SwapContract,
    SwapKind,
    beta_variance,
    gamma_pnl_dispersion,
    gamma_strike_replication,
    gamma_swap_strip_value,
    run_spread_experiment,
    spread_identity,
    var_strike_replication,
    var_swap_greeks,
    var_swap_replication_value,
    weights,
    weights_naive_squared,
    weights_vega_flat,
    weights_vega_weighted_flat,
)
from voldisp.cli import render_json
from voldisp.pnl import PeriodMove

SWEEP = [(vol, T, r) for vol in (0.1, 0.2, 0.4) for T in (0.25, 1.0, 2.0)
         for r in (0.0, 0.05)]


def report(num, name, ok, detail=""):
    line = f"ACCEPTANCE {num:02d} {name}: {'PASS' if ok else 'FAIL'}"
    if detail:
        line += f"  ({detail})"
    print(line)
    assert ok, line


def make_equal_basket(n, vol, vol_of_vol, rho):
    comps = tuple(AssetParams(spot=100.0, vol=vol, vol_of_vol=vol_of_vol)
                  for _ in range(n))
    return IndexBasket(components=comps, shares=(1.0,) * n, corr=rho)


def test_criterion_1_variance_strike_replication():
    start = time.perf_counter()
    worst = 0.0
    for vol, T, r in SWEEP:
        asset = AssetParams(spot=100.0, vol=vol)
        k = var_strike_replication(asset, RateEnv(r), T)
        worst = max(worst, abs(k / vol**2 - 1.0))
    elapsed = time.perf_counter() - start
    ok = worst < 1e-4 and elapsed < 1.0
    report(1, "variance strike replication accuracy", ok,
           f"max rel err {worst:.2e}, {elapsed:.2f}s")


def test_criterion_2_gamma_strike_replication():
    worst = 0.0
    for vol, T, r in SWEEP:
        asset = AssetParams(spot=100.0, vol=vol)
        k = gamma_strike_replication(asset, RateEnv(r), T)
        expected = vol**2 * (math.expm1(r * T) / (r * T) if r else 1.0)
        worst = max(worst, abs(k / expected - 1.0))
    ok = worst < 1e-4
    report(2, "gamma strike closed form", ok, f"max rel err {worst:.2e}")


def test_criterion_3_variance_swap_greeks_vs_finite_differences():
    worst = 0.0
    worst_vanna = 0.0
    for vol, T, r in SWEEP:
        spot0 = 100.0
        t = 0.3 * T
        tau = T - t
        spot = 103.0
        s_star = spot0 * math.exp(r * T)
        grid = ReplicationGrid.for_asset(spot0, vol, r, T)
        contract = SwapContract(kind=SwapKind.VARIANCE, strike=0.0, maturity=T,
                                valuation=t)
        g = var_swap_greeks(contract, AssetParams(spot=spot, vol=vol), RateEnv(r),
                            threshold=s_star)

        def value(s=spot, v=vol, tt=tau):
            return var_swap_replication_value(s, v, tt, T, grid)

        hs, hv, ht = 1e-4 * spot, 1e-5, 1e-5
        fd = {
            "delta": (value(s=spot + hs) - value(s=spot - hs)) / (2 * hs),
            "gamma": (value(s=spot + hs) - 2 * value() + value(s=spot - hs)) / hs**2,
            "theta": (value(tt=tau - ht) - value(tt=tau + ht)) / (2 * ht),
            "vega": (value(v=vol + hv) - value(v=vol - hv)) / (2 * hv),
        }
        dv = 1e-6
        fd["var_vega"] = (value(v=math.sqrt(vol**2 + dv))
                          - value(v=math.sqrt(vol**2 - dv))) / (2 * dv)
        for name in fd:
            worst = max(worst, abs(fd[name] / getattr(g, name) - 1.0))
        vanna_fd = (value(s=spot + hs, v=vol + hv) - value(s=spot + hs, v=vol - hv)
                    - value(s=spot - hs, v=vol + hv)
                    + value(s=spot - hs, v=vol - hv)) / (4 * hs * hv)
        worst_vanna = max(worst_vanna, abs(vanna_fd))
    ok = worst < 1e-3 and worst_vanna < 1e-8
    report(3, "variance swap greeks vs finite differences", ok,
           f"max rel err {worst:.2e}, |vanna| {worst_vanna:.2e}")


def test_criterion_4_gamma_swap_vega_derivation_value():
    worst = 0.0
    for vol, T, r in SWEEP:
        spot = 100.0
        grid = ReplicationGrid.for_asset(spot, vol, r, T)
        hv = 1e-5

        def value(v):
            return gamma_swap_strip_value(spot, v, T, T, spot, RateEnv(r), grid)

        vega_fd = (value(vol + hv) - value(vol - hv)) / (2 * hv)
        target = 2.0 * vol * math.exp(2.0 * r * T)
        worst = max(worst, abs(vega_fd / target - 1.0))
    ok = worst < 1e-3
    report(4, "gamma swap vega matches the strip derivation", ok,
           f"max rel err {worst:.2e}")


def test_criterion_5_squared_weights_make_gamma_pnl_pure_correlation():
    rng = np.random.default_rng(20240801)
    worst = 0.0
    for _ in range(1000):
        n = int(rng.integers(2, 11))
        comps = tuple(
            AssetParams(spot=float(rng.uniform(20, 300)), vol=float(rng.uniform(0.05, 0.8)))
            for _ in range(n))
        basket = IndexBasket(components=comps,
                             shares=tuple(rng.uniform(0.5, 3.0, size=n)),
                             corr=float(rng.uniform(0.0, 0.95)))
        trade = DispersionTrade(basket=basket, leg_kind=SwapKind.VARIANCE,
                                alphas=tuple(weights_naive_squared(basket)),
                                maturity=float(rng.uniform(0.25, 2.0)))
        dt = 1 / 252
        moves = [PeriodMove(d_spot=float(rng.normal(0, 2.0)), d_vol=0.0, dt=dt)
                 for _ in range(n)]
        rho = float(rng.uniform(0, 0.95))
        rho_hat = float(rng.uniform(-0.2, 1.0))
        rep = gamma_pnl_dispersion(trade, moves, rho, rho_hat)
        worst = max(worst, abs(rep.gamma_pnl - rep.beta * (rho - rho_hat) * dt))
    ok = worst < 1e-12
    report(5, "squared-weight dispersion gamma P&L is exactly the spread", ok,
           f"max |residual| {worst:.2e}")


def test_criterion_6_spread_identity_closes():
    rng = np.random.default_rng(20240802)
    worst = 0.0
    for _ in range(1000):
        n = int(rng.integers(2, 11))
        vols = rng.uniform(0.05, 0.6, size=n)
        hats = rng.uniform(0.05, 0.6, size=n)
        w = rng.uniform(0.05, 1.0, size=n)
        w /= w.sum()
        rho = float(rng.uniform(-0.1, 1.0))
        rho_hat = float(rng.uniform(-0.1, 1.0))
        lhs, rhs = spread_identity(vols, hats, w, rho, rho_hat)
        worst = max(worst, abs(lhs - rhs))
    ok = worst < 1e-10
    report(6, "implied/realized spread identity", ok, f"max |lhs-rhs| {worst:.2e}")


def test_criterion_7_vega_cancellation_and_arbitrage_boundary():
    rng = np.random.default_rng(20240803)
    worst_vega = 0.0
    worst_bound = 0.0
    from voldisp import total_pnl_dispersion
    for _ in range(100):
        n = int(rng.integers(2, 8))
        comps = tuple(
            AssetParams(spot=float(rng.uniform(20, 300)), vol=float(rng.uniform(0.1, 0.6)))
            for _ in range(n))
        basket = IndexBasket(components=comps, shares=(1.0,) * n,
                             corr=float(rng.uniform(0.1, 0.95)))
        trade = DispersionTrade(basket=basket, leg_kind=SwapKind.VARIANCE,
                                alphas=tuple(weights_vega_flat(basket)), maturity=1.0)
        moves = [PeriodMove(d_spot=float(rng.normal(0, 1.0)),
                            d_vol=float(rng.normal(0, 0.05)), dt=1 / 252)
                 for _ in range(n)]
        bd = total_pnl_dispersion(trade, moves, basket.vols, basket.implied_index_vol(),
                                  rng.uniform(0.0, 1.0, size=n), 0.4,
                                  tau=float(rng.uniform(0.1, 1.0)))
        worst_vega = max(worst_vega, abs(bd.vega_term))

        alpha = weights_vega_weighted_flat(basket)
        sI2 = basket.implied_index_vol() ** 2
        worst_bound = max(worst_bound, abs(float(np.dot(alpha, basket.vols**2)) / sI2 - 1.0))
    ok = worst_vega < 1e-12 and worst_bound < 1e-12
    report(7, "vega-flat cancellation and vega-weighted boundary", ok,
           f"|vega line| {worst_vega:.2e}, |ratio-1| {worst_bound:.2e}")


# --- Monte Carlo criteria -------------------------------------------------

N_PATHS = 50_000
MC_BASKET_N = 5


@pytest.fixture(scope="module")
def breakeven_run():
    basket = make_equal_basket(MC_BASKET_N, vol=0.2, vol_of_vol=0.0, rho=0.5)
    trade = DispersionTrade(basket=basket, leg_kind=SwapKind.VARIANCE,
                            alphas=tuple(weights_vega_flat(basket)), maturity=1.0)
    config = SimConfig(n_paths=N_PATHS, steps_per_year=252, horizon=1.0, seed=2024,
                       driver_corr=0.5)
    start = time.perf_counter()
    rep = run_spread_experiment(basket, RateEnv(0.0), trade, 0.5, config)
    return rep, time.perf_counter() - start


@pytest.fixture(scope="module")
def spread_run():
    # implied correlation quoted 5 points above the physical driver correlation
    basket = make_equal_basket(MC_BASKET_N, vol=0.2, vol_of_vol=0.0, rho=0.55)
    trade = DispersionTrade(basket=basket, leg_kind=SwapKind.VARIANCE,
                            alphas=tuple(weights_vega_flat(basket)), maturity=1.0)
    config = SimConfig(n_paths=N_PATHS, steps_per_year=252, horizon=1.0, seed=2025,
                       driver_corr=0.5)
    start = time.perf_counter()
    rep = run_spread_experiment(basket, RateEnv(0.0), trade, 0.5, config)
    return rep, time.perf_counter() - start


@pytest.fixture(scope="module")
def volga_run():
    # components carry vol-of-vol 0.5, the index is compensated at only 0.3;
    # vols share one driver so the swap and attribution correlation measures
    # agree, and the finer grid keeps the estimator gap inside the noise
    basket = make_equal_basket(MC_BASKET_N, vol=0.2, vol_of_vol=0.5, rho=0.5)
    trade = DispersionTrade(basket=basket, leg_kind=SwapKind.VARIANCE,
                            alphas=tuple(weights_vega_flat(basket)), maturity=1.0)
    config = SimConfig(n_paths=N_PATHS, steps_per_year=756, horizon=1.0, seed=2026,
                       driver_corr=0.5, vol_vol_corr=1.0, index_vol_of_vol=0.3)
    rep = run_spread_experiment(basket, RateEnv(0.0), trade, 0.5, config)
    return rep


def test_criterion_8_monte_carlo_breakeven(breakeven_run, spread_run):
    rep0, secs0 = breakeven_run
    rep5, secs5 = spread_run
    z_total = rep0.mean_total_pnl / rep0.se_total_pnl

    basket = make_equal_basket(MC_BASKET_N, vol=0.2, vol_of_vol=0.0, rho=0.55)
    beta = beta_variance(weights(basket), basket.vols, 1.0)
    target = beta * 0.05 * 1.0
    z_gamma = (rep5.mean_gamma_pnl - target) / rep5.se_gamma_pnl

    elapsed = secs0 + secs5
    ok = abs(z_total) <= 3.0 and abs(z_gamma) <= 3.0 and elapsed < 120.0
    report(8, "Monte Carlo break-even and correlation spread pickup", ok,
           f"z(total)={z_total:+.2f}, z(gamma-beta*0.05*T)={z_gamma:+.2f}, {elapsed:.0f}s")


def test_criterion_9_volga_explains_the_spread(volga_run):
    rep = volga_run
    z_volga = (rep.mean_vol_pnl - rep.volga_prediction) / rep.se_vol_pnl

    # implied correlation that zeroes total P&L vs the fair correlation
    # strike: the gap times the beta integral must be the volga P&L
    pp = rep.per_path
    rho0 = rep.params["implied_corr"]
    rho_star = rep.breakeven_implied_corr
    vol_at_star = pp["vol"] + (pp["slope"] - pp["beta_int"]) * (rho_star - rho0)
    z_paths = pp["beta_int"] * (rho_star - pp["realized_corr"]) + vol_at_star
    se = z_paths.std(ddof=1) / math.sqrt(z_paths.size)
    z_gap = z_paths.mean() / se

    ok = abs(z_volga) <= 3.0 and abs(z_gap) <= 3.0
    report(9, "volga term explains the correlation spread", ok,
           f"z(vol-prediction)={z_volga:+.2f}, z(gap*beta+volga)={z_gap:+.2f}, "
           f"gap={rep.corr_gap:+.4f}")


def test_criterion_10_bitwise_reproducibility_across_thread_counts():
    basket = make_equal_basket(3, vol=0.2, vol_of_vol=0.5, rho=0.5)
    trade = DispersionTrade(basket=basket, leg_kind=SwapKind.VARIANCE,
                            alphas=tuple(weights_vega_flat(basket)), maturity=1.0)
    kw = dict(n_paths=2000, steps_per_year=252, horizon=1.0, seed=7,
              driver_corr=0.5, vol_vol_corr=1.0, index_vol_of_vol=0.3, chunk_size=256)
    rep1 = run_spread_experiment(basket, RateEnv(0.0), trade, 0.5,
                                 SimConfig(n_jobs=1, **kw))
    rep4 = run_spread_experiment(basket, RateEnv(0.0), trade, 0.5,
                                 SimConfig(n_jobs=4, **kw))
    same_dict = rep1.to_dict() == rep4.to_dict()
    same_bytes = render_json([rep1.to_dict()]) == render_json([rep4.to_dict()])
    same_paths = all(np.array_equal(rep1.per_path[k], rep4.per_path[k])
                     for k in rep1.per_path)
    ok = same_dict and same_bytes and same_paths
    report(10, "bitwise-identical reports across thread counts", ok,
           f"dict={same_dict}, bytes={same_bytes}, paths={same_paths}")
