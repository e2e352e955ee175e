"""Command-line front end.

One command is one computation: load a TOML market file, run it, emit a
machine-readable table (JSON or CSV). Exit codes: 0 success, 2 schema or
usage problems, 3 numerical failures, 4 I/O errors. Errors print a single
parsable line on stderr.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

try:
    import tomllib  # Python >= 3.11
except ModuleNotFoundError:  # pragma: no cover - depends on interpreter
    import tomli as tomllib

import numpy as np

from .dispersion import (
    DispersionTrade,
    TradeDirection,
    spread_identity,
    weights_naive_squared,
    weights_theta_gamma_flat,
    weights_vega_flat,
    weights_vega_weighted_flat,
)
from .market import AssetParams, IndexBasket, RateEnv, SwapContract, SwapKind, weights
from .pnl import PeriodMove, index_pnl_decompose
from .simulate import SimConfig, run_spread_experiment
from .swaps import (
    ReplicationGrid,
    gamma_strike_replication,
    gamma_swap_greeks,
    var_strike_replication,
    var_swap_greeks,
)

JSON_DIGITS = 17
CSV_DIGITS = 12


class SchemaError(Exception):
    """Market file or override does not conform to the expected schema."""


def _fmt(value, digits: int) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value) or math.isinf(value):
            return "null"
        return format(value, f".{digits}g")
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return json.dumps(str(value))


def render_json(rows: list[dict]) -> str:
    out = ["["]
    for i, row in enumerate(rows):
        cells = []
        for key, val in row.items():
            if isinstance(val, (float, bool, int, np.integer)):
                cells.append(f"{json.dumps(key)}: {_fmt(val, JSON_DIGITS)}")
            else:
                cells.append(f"{json.dumps(key)}: {json.dumps(str(val))}")
        sep = "," if i + 1 < len(rows) else ""
        out.append("  {" + ", ".join(cells) + "}" + sep)
    out.append("]")
    return "\n".join(out) + "\n"


def render_csv(rows: list[dict]) -> str:
    if not rows:
        return ""
    buf = io.StringIO()
    writer = csv.writer(buf, quoting=csv.QUOTE_MINIMAL, lineterminator="\r\n")
    header = list(rows[0].keys())
    writer.writerow(header)
    for row in rows:
        rec = []
        for key in header:
            val = row.get(key, "")
            if isinstance(val, bool):
                rec.append("true" if val else "false")
            elif isinstance(val, float):
                rec.append(format(val, f".{CSV_DIGITS}g"))
            else:
                rec.append(val)
        writer.writerow(rec)
    return buf.getvalue()


def parse_overrides(pairs: list[str]) -> dict:
    out = {}
    for pair in pairs:
        if "=" not in pair:
            raise SchemaError(f"override {pair!r} is not of the form key=value")
        key, raw = pair.split("=", 1)
        key = key.strip()
        raw = raw.strip()
        if raw.lower() in ("true", "false"):
            out[key] = raw.lower() == "true"
            continue
        parts = raw.split(",")
        try:
            vals = [float(p) for p in parts if p != ""]
        except ValueError:
            out[key] = raw
            continue
        out[key] = vals if len(parts) > 1 else vals[0]
    return out


def load_market(path: str) -> dict:
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except OSError:
        raise
    except tomllib.TOMLDecodeError as exc:
        raise SchemaError(f"cannot parse market file: {exc}") from exc

    if "assets" not in doc or not doc["assets"]:
        raise SchemaError("market file needs at least one [[assets]] entry")
    try:
        assets = []
        shares = []
        names = []
        for i, spec in enumerate(doc["assets"]):
            assets.append(AssetParams(
                spot=float(spec["spot"]),
                vol=float(spec["vol"]),
                vol_of_vol=float(spec.get("vol_of_vol", 0.0)),
                spot_vol_corr=float(spec.get("spot_vol_corr", 0.0)),
                vol_drift=float(spec.get("vol_drift", 0.0)),
            ))
            shares.append(float(spec.get("shares", 1.0)))
            names.append(str(spec.get("name", f"asset{i}")))

        index = doc.get("index", {})
        if "corr_matrix" in index:
            corr = np.array(index["corr_matrix"], dtype=float)
        else:
            corr = float(index.get("equicorr", 0.0)) if len(assets) > 1 else 1.0
        basket = IndexBasket(components=tuple(assets), shares=tuple(shares),
                             corr=corr, index_vol=index.get("vol"))

        rates = RateEnv(rate=float(doc.get("rates", {}).get("rate", 0.0)))

        contracts = []
        for spec in doc.get("contracts", []):
            contracts.append(SwapContract(
                kind=SwapKind(spec["kind"]),
                strike=float(spec["strike"]),
                notional=float(spec.get("notional", 1.0)),
                maturity=float(spec.get("maturity", 1.0)),
                valuation=float(spec.get("valuation", 0.0)),
                accrued=float(spec.get("accrued", 0.0)),
            ))
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"invalid market file: {exc}") from exc

    return {"basket": basket, "rates": rates, "contracts": contracts, "names": names}


def _default_maturity(market: dict, overrides: dict) -> float:
    if "maturity" in overrides:
        return float(overrides["maturity"])
    if market["contracts"]:
        return market["contracts"][0].maturity
    return 1.0


def _grid_points(overrides: dict) -> int:
    return int(overrides.get("num_points", 2048))


def cmd_price(market: dict, args, overrides: dict) -> list[dict]:
    kind = SwapKind(args.kind or "variance")
    if kind is SwapKind.CORRELATION:
        raise SchemaError("price supports variance and gamma swaps")
    maturity = _default_maturity(market, overrides)
    rows = []
    for name, asset in zip(market["names"], market["basket"].components):
        grid = None
        if asset.vol > 0.0:
            grid = ReplicationGrid.for_asset(asset.spot, asset.vol, market["rates"].rate,
                                             maturity, num_points=_grid_points(overrides))
        if kind is SwapKind.VARIANCE:
            strike = var_strike_replication(asset, market["rates"], maturity, grid)
        else:
            strike = gamma_strike_replication(asset, market["rates"], maturity, grid)
        rows.append({
            "asset": name, "kind": kind.value, "maturity": maturity,
            "strike_variance": strike, "strike_vol": math.sqrt(max(strike, 0.0)),
        })
    return rows


def cmd_greeks(market: dict, args, overrides: dict) -> list[dict]:
    kind = SwapKind(args.kind or "variance")
    if kind is SwapKind.CORRELATION:
        raise SchemaError("greeks supports variance and gamma swaps")
    maturity = _default_maturity(market, overrides)
    valuation = float(overrides.get("valuation", 0.0))
    spot_ratio = float(overrides.get("spot_ratio", 1.0))
    rows = []
    for name, asset in zip(market["names"], market["basket"].components):
        contract = SwapContract(kind=kind, strike=0.0, maturity=maturity,
                                valuation=valuation,
                                accrued=float(overrides.get("accrued", 0.0)))
        if kind is SwapKind.VARIANCE:
            g = var_swap_greeks(contract, asset, market["rates"])
        else:
            g = gamma_swap_greeks(contract, asset, spot_ratio, market["rates"])
        rows.append({
            "asset": name, "kind": kind.value, "maturity": maturity,
            "valuation": valuation, "delta": g.delta, "gamma": g.gamma,
            "theta": g.theta, "vega": g.vega, "var_vega": g.var_vega,
            "vanna": g.vanna, "volga": g.volga,
            "d_gamma_d_spot": g.d_gamma_d_spot,
            "d_var_vega_d_tau": g.d_var_vega_d_tau,
        })
    return rows


def _scheme_weights(scheme: str, market: dict, overrides: dict) -> np.ndarray:
    basket = market["basket"]
    if scheme == "vega-flat":
        return weights_vega_flat(basket)
    if scheme == "vega-weighted-flat":
        return weights_vega_weighted_flat(basket)
    if scheme == "naive-w2":
        return weights_naive_squared(basket)
    if scheme == "theta-gamma-flat":
        for key in ("component_moves", "index_move", "dt"):
            if key not in overrides:
                raise SchemaError(f"theta-gamma-flat needs --set {key}=...")
        dt = float(overrides["dt"])
        raw = overrides["component_moves"]
        comp = [raw] if isinstance(raw, float) else list(raw)
        if len(comp) != basket.n_assets:
            raise SchemaError("component_moves must list one move per asset")
        moves = [PeriodMove(d_spot=m, d_vol=0.0, dt=dt) for m in comp]
        index_move = PeriodMove(d_spot=float(overrides["index_move"]), d_vol=0.0, dt=dt)
        return weights_theta_gamma_flat(basket, moves, index_move)
    raise SchemaError(f"unknown weighting scheme {scheme!r}")


def cmd_weights(market: dict, args, overrides: dict) -> list[dict]:
    scheme = args.scheme or "vega-flat"
    alphas = _scheme_weights(scheme, market, overrides)
    w = weights(market["basket"])
    return [
        {"asset": name, "scheme": scheme, "index_weight": float(wi), "alpha": float(ai)}
        for name, wi, ai in zip(market["names"], w, alphas)
    ]


def cmd_decompose(market: dict, args, overrides: dict) -> list[dict]:
    basket = market["basket"]
    if "std_moves" not in overrides:
        raise SchemaError("decompose needs --set std_moves=n1,n2,...")
    raw = overrides["std_moves"]
    moves = [raw] if isinstance(raw, float) else list(raw)
    if len(moves) != basket.n_assets:
        raise SchemaError("std_moves must list one move per asset")
    theta_index = float(overrides.get("theta_index", 1.0))
    rho = float(overrides.get("equicorr", _equicorr(basket)))
    index_vol = float(overrides.get("index_vol", basket.implied_index_vol()))
    idio, syst = index_pnl_decompose(theta_index, moves, weights(basket),
                                     basket.vols, index_vol, rho)
    return [{
        "theta_index": theta_index, "equicorr": rho, "index_vol": index_vol,
        "idiosyncratic": idio, "systematic": syst, "total": idio + syst,
    }]


def _equicorr(basket: IndexBasket) -> float:
    m = np.array(basket.corr)
    if basket.n_assets == 1:
        return 1.0
    return float(m[0, 1])


def cmd_identity(market: dict, args, overrides: dict) -> list[dict]:
    basket = market["basket"]
    if "realized_vols" not in overrides or "realized_corr" not in overrides:
        raise SchemaError("identity needs --set realized_vols=... and --set realized_corr=...")
    raw = overrides["realized_vols"]
    realized_vols = np.array([raw] if isinstance(raw, float) else list(raw))
    if realized_vols.shape[0] != basket.n_assets:
        raise SchemaError("realized_vols must list one vol per asset")
    realized_corr = float(overrides["realized_corr"])
    implied_corr = float(overrides.get("implied_corr", _equicorr(basket)))
    mode = str(overrides.get("mode", "consistent"))
    lhs, rhs = spread_identity(basket.vols, realized_vols, weights(basket),
                               implied_corr, realized_corr, mode=mode)
    return [{
        "mode": mode, "implied_corr": implied_corr, "realized_corr": realized_corr,
        "lhs": lhs, "rhs": rhs, "abs_diff": abs(lhs - rhs),
    }]


def cmd_simulate(market: dict, args, overrides: dict) -> list[dict]:
    basket = market["basket"]
    scheme = args.scheme or "vega-flat"
    alphas = _scheme_weights(scheme, market, overrides)
    direction = TradeDirection(str(overrides.get(
        "direction", "short-index-long-components")))
    trade = DispersionTrade(
        basket=basket, leg_kind=SwapKind.VARIANCE, alphas=tuple(alphas),
        maturity=float(overrides.get("maturity", overrides.get("horizon", 1.0))),
        direction=direction,
    )
    config = SimConfig(
        n_paths=int(args.paths),
        steps_per_year=int(args.steps),
        horizon=float(overrides.get("horizon", 1.0)),
        seed=int(args.seed),
        drift=overrides.get("drift"),
        driver_corr=overrides.get("driver_corr"),
        vol_vol_corr=overrides.get("vol_vol_corr"),
        index_vol_of_vol=float(overrides.get("xi_index", 0.0)),
        antithetic=bool(overrides.get("antithetic", False)),
        chunk_size=int(overrides.get("chunk_size", 4096)),
        n_jobs=int(overrides.get("n_jobs", 1)),
    )
    strike = float(overrides.get("corr_strike", _equicorr(basket)))
    report = run_spread_experiment(basket, market["rates"], trade, strike, config)
    row = report.to_dict()
    row["weight_scheme"] = scheme
    return [row]


COMMANDS = {
    "price": cmd_price,
    "greeks": cmd_greeks,
    "weights": cmd_weights,
    "decompose": cmd_decompose,
    "identity": cmd_identity,
    "simulate": cmd_simulate,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="voldisp",
        description="Variance/gamma/correlation swap analytics and dispersion experiments",
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--market", required=True, help="TOML market file")
    parser.add_argument("--out", default="-", help="output path (default stdout)")
    parser.add_argument("--format", choices=("json", "csv"), default="json")
    parser.add_argument("--kind", choices=("variance", "gamma", "correlation"))
    parser.add_argument("--scheme", choices=(
        "vega-flat", "vega-weighted-flat", "theta-gamma-flat", "naive-w2"))
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--paths", type=int, default=10000)
    parser.add_argument("--steps", type=int, default=252)
    parser.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="KEY=VALUE", help="override a named input (repeatable)")
    return parser


def run(argv: list[str]) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        overrides = parse_overrides(args.overrides)
        market = load_market(args.market)
        rows = COMMANDS[args.command](market, args, overrides)
        text = render_json(rows) if args.format == "json" else render_csv(rows)
        if args.out == "-":
            sys.stdout.write(text)
        else:
            with open(args.out, "w", newline="") as fh:
                fh.write(text)
    except SchemaError as exc:
        print(f"error: schema: {exc}", file=sys.stderr)
        return 2
    except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"error: numerical: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: io: {exc}", file=sys.stderr)
        return 4
    return 0


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
