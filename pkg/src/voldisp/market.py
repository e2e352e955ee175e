"""Market and contract data types shared by pricing, P&L and simulation.

All value objects are frozen dataclasses and validate themselves on
construction; downstream code can assume a basket that exists is usable.
Vols are annualized, strikes of variance/gamma swaps are in variance units
(vol squared), times are year fractions.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

# Smallest eigenvalue allowed when checking that a correlation matrix
# factorizes; the simulator needs a Cholesky-able matrix anyway.
PSD_TOL = 1e-10


class SwapKind(enum.Enum):
    VARIANCE = "variance"
    GAMMA = "gamma"
    CORRELATION = "correlation"


@dataclass(frozen=True)
class AssetParams:
    """Single-asset market snapshot under lognormal stochastic volatility.

    spot:          current price, > 0
    vol:           flat implied/instantaneous volatility, >= 0
    vol_of_vol:    lognormal vol-of-vol of the volatility process, >= 0
    spot_vol_corr: correlation between the spot and its own vol driver, in [-1, 1]
    vol_drift:     absolute drift of the volatility process (simulator only)
    """

    spot: float
    vol: float
    vol_of_vol: float = 0.0
    spot_vol_corr: float = 0.0
    vol_drift: float = 0.0

    def __post_init__(self):
        if not self.spot > 0.0:
            raise ValueError(f"spot must be positive, got {self.spot}")
        if self.vol < 0.0:
            raise ValueError(f"vol must be nonnegative, got {self.vol}")
        if self.vol_of_vol < 0.0:
            raise ValueError(f"vol_of_vol must be nonnegative, got {self.vol_of_vol}")
        if not -1.0 <= self.spot_vol_corr <= 1.0:
            raise ValueError(f"spot_vol_corr must lie in [-1, 1], got {self.spot_vol_corr}")
        if not np.isfinite(self.vol_drift):
            raise ValueError("vol_drift must be finite")


@dataclass(frozen=True)
class RateEnv:
    """Continuously compounded risk-free rate (may be negative)."""

    rate: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.rate):
            raise ValueError("rate must be finite")


def _as_corr_matrix(corr, n: int) -> np.ndarray:
    """Accept a full matrix or the equicorrelation shorthand (single rho)."""
    if np.isscalar(corr):
        rho = float(corr)
        m = np.full((n, n), rho)
        np.fill_diagonal(m, 1.0)
        return m
    m = np.array(corr, dtype=float)
    if m.shape != (n, n):
        raise ValueError(f"correlation matrix must be {n}x{n}, got {m.shape}")
    return m


@dataclass(frozen=True, eq=False)  # ndarray field: compare by identity
class IndexBasket:
    """An index seen as a basket of shares.

    components: per-asset market snapshots
    shares:     number of shares p_i of each component, > 0
    corr:       pairwise correlation matrix (or a single equicorrelation value)
    index_vol:  optional quoted index implied vol; if None it is derived from
                the components through the basket-variance identity
    """

    components: tuple[AssetParams, ...]
    shares: tuple[float, ...]
    corr: np.ndarray = field(default=1.0)  # type: ignore[assignment]
    index_vol: float | None = None

    def __post_init__(self):
        comps = tuple(self.components)
        shares = tuple(float(p) for p in self.shares)
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "shares", shares)
        if len(comps) == 0:
            raise ValueError("basket must contain at least one component")
        if len(shares) != len(comps):
            raise ValueError("shares and components must have the same length")
        if any(p <= 0.0 for p in shares):
            raise ValueError("share counts must be positive")

        m = _as_corr_matrix(self.corr, len(comps))
        if not np.allclose(m, m.T, atol=1e-12):
            raise ValueError("correlation matrix must be symmetric")
        if not np.allclose(np.diag(m), 1.0, atol=1e-12):
            raise ValueError("correlation matrix must have a unit diagonal")
        if np.any(np.abs(m) > 1.0 + 1e-12):
            raise ValueError("correlation entries must lie in [-1, 1]")
        min_eig = float(np.linalg.eigvalsh(m)[0])
        if min_eig < -PSD_TOL:
            raise ValueError(
                f"correlation matrix is not positive semidefinite (min eigenvalue {min_eig:.3e})"
            )
        m.setflags(write=False)
        object.__setattr__(self, "corr", m)

        if self.index_vol is not None and self.index_vol < 0.0:
            raise ValueError("index_vol must be nonnegative")

    @property
    def n_assets(self) -> int:
        return len(self.components)

    @property
    def spots(self) -> np.ndarray:
        return np.array([a.spot for a in self.components])

    @property
    def vols(self) -> np.ndarray:
        return np.array([a.vol for a in self.components])

    @property
    def index_level(self) -> float:
        """Index level as the share-weighted sum of spots."""
        return float(np.dot(self.shares, self.spots))

    def implied_index_vol(self) -> float:
        """Quoted index vol if supplied, otherwise the basket-identity vol."""
        if self.index_vol is not None:
            return float(self.index_vol)
        return basket_vol(self)


@dataclass(frozen=True)
class SwapContract:
    """A variance, gamma or correlation swap position.

    strike:    variance units for variance/gamma swaps, correlation points
               for correlation swaps
    notional:  currency per unit of variance (or per correlation point)
    maturity:  T, year fraction > 0
    valuation: t in [0, T]
    accrued:   realized integral to date; int_0^t vol_u^2 du for variance,
               int_0^t vol_u^2 S_u/S_0 du for gamma legs
    """

    kind: SwapKind
    strike: float
    notional: float = 1.0
    maturity: float = 1.0
    valuation: float = 0.0
    accrued: float = 0.0

    def __post_init__(self):
        if self.maturity <= 0.0:
            raise ValueError("maturity must be positive")
        if not 0.0 <= self.valuation <= self.maturity:
            raise ValueError("valuation time must lie in [0, maturity]")
        if self.accrued < 0.0:
            raise ValueError("accrued realized leg must be nonnegative")
        if self.accrued > 0.0 and self.valuation == 0.0:
            raise ValueError("accrued > 0 is inconsistent with valuation at inception")
        if self.kind in (SwapKind.VARIANCE, SwapKind.GAMMA) and self.strike < 0.0:
            raise ValueError("variance-unit strikes must be nonnegative")

    @property
    def time_to_maturity(self) -> float:
        return self.maturity - self.valuation


def weights(basket: IndexBasket) -> np.ndarray:
    """Index weights w_i = p_i S_i / sum_j p_j S_j, in component order."""
    notionals = np.asarray(basket.shares) * basket.spots
    total = notionals.sum()
    if total <= 0.0:
        raise ValueError("basket has no positive market value")
    return notionals / total


def basket_vol(basket: IndexBasket) -> float:
    """Index volatility implied by component vols and pairwise correlations.

    Evaluates sigma_I^2 = sum_i w_i^2 s_i^2 + sum_{i!=j} w_i w_j s_i s_j rho_ij
    and returns the nonnegative root.
    """
    w = weights(basket)
    s = basket.vols
    cov = np.outer(w * s, w * s) * basket.corr
    var = float(cov.sum())
    if var < 0.0:
        raise ValueError(f"basket variance came out negative ({var:.3e}); check the correlation matrix")
    return float(np.sqrt(var))
