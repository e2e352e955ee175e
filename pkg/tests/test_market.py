import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from voldisp import AssetParams, IndexBasket, RateEnv, SwapContract, SwapKind, basket_vol, weights


def make_basket(spots, vols, shares=None, corr=0.0, index_vol=None):
    comps = tuple(AssetParams(spot=s, vol=v) for s, v in zip(spots, vols))
    if shares is None:
        shares = (1.0,) * len(comps)
    return IndexBasket(components=comps, shares=tuple(shares), corr=corr,
                       index_vol=index_vol)


class TestWeights:
    def test_equal_spots_equal_shares(self):
        b = make_basket([100, 100], [0.2, 0.2])
        assert np.allclose(weights(b), [0.5, 0.5])

    def test_equal_notionals(self):
        b = make_basket([50, 100], [0.2, 0.2], shares=(2, 1))
        assert np.allclose(weights(b), [0.5, 0.5])

    def test_proportionality(self):
        b = make_basket([100, 100], [0.2, 0.2], shares=(1, 3))
        assert np.allclose(weights(b), [0.25, 0.75])

    def test_order_matches_components(self):
        b = make_basket([10, 100], [0.2, 0.2])
        w = weights(b)
        assert w[0] < w[1]

    def test_scaling_invariance(self):
        b1 = make_basket([80, 120, 95], [0.2, 0.3, 0.4], shares=(1, 2, 3))
        b2 = make_basket([160, 240, 190], [0.2, 0.3, 0.4], shares=(1, 2, 3))
        assert np.allclose(weights(b1), weights(b2), rtol=0, atol=1e-15)

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.tuples(st.floats(1.0, 1e4), st.floats(0.1, 100.0)),
                    min_size=1, max_size=8))
    def test_sum_to_one(self, spec):
        spots = [s for s, _ in spec]
        shares = [p for _, p in spec]
        b = make_basket(spots, [0.2] * len(spots), shares=shares, corr=0.5 if len(spots) > 1 else 1.0)
        assert abs(weights(b).sum() - 1.0) < 1e-12


class TestBasketVol:
    def test_perfectly_correlated_identical(self):
        b = make_basket([100, 100], [0.2, 0.2], corr=1.0)
        assert basket_vol(b) == pytest.approx(0.2, rel=1e-14)

    def test_uncorrelated_pair(self):
        b = make_basket([100, 100], [0.2, 0.2], corr=0.0)
        assert basket_vol(b) == pytest.approx(0.2 / np.sqrt(2), rel=1e-12)

    def test_single_asset(self):
        b = make_basket([100], [0.3], corr=1.0)
        assert basket_vol(b) == pytest.approx(0.3, rel=1e-14)

    def test_monotone_in_correlation(self):
        vols = [0.15, 0.25, 0.35]
        prev = -1.0
        for rho in np.linspace(-0.45, 1.0, 15):
            v = basket_vol(make_basket([100, 90, 110], vols, corr=float(rho)))
            assert v >= prev
            prev = v

    def test_perfect_correlation_collapse(self):
        b = make_basket([100, 50, 200], [0.1, 0.2, 0.45], shares=(1, 4, 2), corr=1.0)
        w = weights(b)
        assert basket_vol(b) == pytest.approx(float(np.dot(w, b.vols)), rel=1e-12)

    def test_index_vol_override(self):
        b = make_basket([100, 100], [0.2, 0.2], corr=0.0, index_vol=0.17)
        assert b.implied_index_vol() == 0.17
        assert basket_vol(b) == pytest.approx(0.2 / np.sqrt(2), rel=1e-12)

    def test_equicorr_shorthand_matches_matrix(self):
        m = np.array([[1.0, 0.3, 0.3], [0.3, 1.0, 0.3], [0.3, 0.3, 1.0]])
        b1 = make_basket([100, 90, 80], [0.2, 0.25, 0.3], corr=0.3)
        b2 = make_basket([100, 90, 80], [0.2, 0.25, 0.3], corr=m)
        assert basket_vol(b1) == basket_vol(b2)


class TestValidation:
    def test_empty_basket(self):
        with pytest.raises(ValueError, match="at least one component"):
            IndexBasket(components=(), shares=(), corr=1.0)

    def test_negative_shares(self):
        with pytest.raises(ValueError, match="share counts"):
            make_basket([100], [0.2], shares=(-1.0,), corr=1.0)

    def test_non_psd_rejected(self):
        # equicorrelation below -1/(n-1) cannot factorize
        with pytest.raises(ValueError, match="positive semidefinite"):
            make_basket([100, 100, 100], [0.2, 0.2, 0.2], corr=-0.9)

    def test_asymmetric_rejected(self):
        m = np.array([[1.0, 0.5], [0.2, 1.0]])
        with pytest.raises(ValueError, match="symmetric"):
            make_basket([100, 100], [0.2, 0.2], corr=m)

    def test_bad_diagonal_rejected(self):
        m = np.array([[1.0, 0.1], [0.1, 0.9]])
        with pytest.raises(ValueError, match="unit diagonal"):
            make_basket([100, 100], [0.2, 0.2], corr=m)

    def test_entry_out_of_range(self):
        m = np.array([[1.0, 1.4], [1.4, 1.0]])
        with pytest.raises(ValueError):
            make_basket([100, 100], [0.2, 0.2], corr=m)

    def test_asset_params(self):
        with pytest.raises(ValueError):
            AssetParams(spot=-1.0, vol=0.2)
        with pytest.raises(ValueError):
            AssetParams(spot=100.0, vol=-0.2)
        with pytest.raises(ValueError):
            AssetParams(spot=100.0, vol=0.2, vol_of_vol=-0.1)
        with pytest.raises(ValueError):
            AssetParams(spot=100.0, vol=0.2, spot_vol_corr=-1.5)

    def test_rate_env(self):
        assert RateEnv(-0.01).rate == -0.01
        with pytest.raises(ValueError):
            RateEnv(float("nan"))


class TestSwapContract:
    def test_valid(self):
        c = SwapContract(kind=SwapKind.VARIANCE, strike=0.04, maturity=2.0,
                         valuation=0.5, accrued=0.01)
        assert c.time_to_maturity == 1.5

    def test_accrued_at_inception_rejected(self):
        with pytest.raises(ValueError, match="accrued"):
            SwapContract(kind=SwapKind.VARIANCE, strike=0.04, valuation=0.0, accrued=0.01)

    def test_valuation_after_maturity_rejected(self):
        with pytest.raises(ValueError):
            SwapContract(kind=SwapKind.VARIANCE, strike=0.04, maturity=1.0, valuation=1.5)

    def test_negative_variance_strike_rejected(self):
        with pytest.raises(ValueError):
            SwapContract(kind=SwapKind.GAMMA, strike=-0.01)

    def test_correlation_strike_may_be_any_sign(self):
        c = SwapContract(kind=SwapKind.CORRELATION, strike=-0.2)
        assert c.strike == -0.2
