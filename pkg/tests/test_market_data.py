"""Price ingestion, signal construction, and the contract-level pipeline."""

from pathlib import Path

import numpy as np
import pytest

from ntband import (DataError, PriceSeries, SignalSpec, SpecError,
                    build_real_backtest, calibrate_beta, ewma_volatility,
                    load_price_csv, momentum_signal, simulate_signal_model)
from ntband.market_data import signal_policy

DATA = Path(__file__).resolve().parent.parent / "data"


def _series(prices, start="2000-01-03"):
    dates = (np.datetime64(start) + np.arange(len(prices))).astype("datetime64[D]")
    return PriceSeries(dates=dates, prices=np.asarray(prices, dtype=float))


class TestPriceSeries:
    def test_strictly_increasing_dates_required(self):
        dates = np.array(["2000-01-03", "2000-01-03"], dtype="datetime64[D]")
        with pytest.raises(DataError):
            PriceSeries(dates=dates, prices=np.array([1.0, 2.0]))

    def test_non_finite_prices_rejected(self):
        with pytest.raises(DataError):
            _series([1.0, np.nan, 3.0])

    def test_misaligned_rejected(self):
        dates = np.array(["2000-01-03"], dtype="datetime64[D]")
        with pytest.raises(DataError):
            PriceSeries(dates=dates, prices=np.array([1.0, 2.0]))


class TestLoadPriceCsv:
    def test_loads_bundled_sample(self):
        ps = load_price_csv(DATA / "sample_bond.csv")
        assert len(ps.prices) == 9000
        assert np.isfinite(ps.prices).all()

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError):
            load_price_csv(tmp_path / "nope.csv")

    def test_wrong_header(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("day,close\n2000-01-03,1.0\n")
        with pytest.raises(DataError, match="header"):
            load_price_csv(p)

    def test_missing_price_rejected(self, tmp_path):
        p = tmp_path / "gap.csv"
        p.write_text("date,price\n2000-01-03,1.0\n2000-01-04,\n")
        with pytest.raises(DataError):
            load_price_csv(p)


class TestEwmaVolatility:
    def test_gaussian_returns_recovered(self):
        rng = np.random.default_rng(12)
        x = np.cumsum(0.5 * rng.standard_normal(1 << 15))
        vol = ewma_volatility(x, 1.0 / 33.0, floor=1e-6)
        assert np.nanmean(vol) == pytest.approx(0.5, rel=0.05)

    def test_constant_prices_floor(self):
        x = np.concatenate((np.arange(30, dtype=float), np.full(500, 29.0)))
        vol = ewma_volatility(x, 1.0 / 33.0, floor=0.05)
        assert vol[-1] == pytest.approx(0.05)
        assert np.nanmin(vol) >= 0.05

    def test_floor_must_be_positive(self):
        with pytest.raises(SpecError):
            ewma_volatility(np.arange(30, dtype=float), 1.0 / 33.0, floor=0.0)

    def test_too_short_rejected(self):
        with pytest.raises(DataError):
            ewma_volatility(np.arange(10, dtype=float), 1.0 / 33.0, floor=0.1)

    def test_warmup_is_nan(self):
        vol = ewma_volatility(np.arange(40, dtype=float), 1.0 / 33.0, floor=1e-6)
        assert np.isnan(vol[:20]).all()
        assert np.isfinite(vol[20:]).all()


class TestMomentumSignal:
    def test_constant_prices_zero(self):
        x = np.full(100, 7.0)
        z = momentum_signal(x, 1.0 / 50.0, np.ones(100))
        np.testing.assert_array_equal(z, 0.0)

    def test_impulse_response_decays_geometrically(self):
        x = np.concatenate((np.zeros(5), np.ones(50)))
        z = momentum_signal(x, 0.1, np.ones(55))
        tail = z[5:]
        np.testing.assert_allclose(tail[1:] / tail[:-1], np.exp(-0.1), rtol=1e-9)

    def test_linear_in_increments(self):
        rng = np.random.default_rng(8)
        x = np.cumsum(rng.standard_normal(500))
        ones = np.ones(500)
        z1 = momentum_signal(x, 1.0 / 50.0, ones)
        z3 = momentum_signal(3.0 * x, 1.0 / 50.0, ones)
        np.testing.assert_allclose(z3, 3.0 * z1, rtol=1e-9, atol=1e-12)

    def test_unit_variance_on_brownian(self, brownian_prices):
        z = momentum_signal(brownian_prices, 1.0 / 50.0,
                            np.full(len(brownian_prices), 0.5))
        assert z[200:].var() == pytest.approx(1.0, rel=0.10)

    def test_nonpositive_sigma_rejected(self):
        with pytest.raises(SpecError):
            momentum_signal(np.zeros(10), 0.02, np.zeros(10))


class TestSignalSpec:
    def test_validation(self):
        with pytest.raises(SpecError):
            SignalSpec(decay=0.0)
        with pytest.raises(SpecError):
            SignalSpec(vol_decay=-1.0)
        with pytest.raises(SpecError):
            SignalSpec(coupling="relu")

    def test_policy_requires_beta(self, brownian_prices):
        with pytest.raises(SpecError, match="beta"):
            signal_policy(_series(brownian_prices), SignalSpec(), g=1.0)


class TestCausality:
    def test_future_perturbation_leaves_prefix_unchanged(self):
        ps = load_price_csv(DATA / "sample_bond.csv")
        spec = SignalSpec(beta=0.125)
        base = build_real_backtest(ps, spec, 0.01, 1e6, point_value=1000.0)
        cut = 6000
        bumped = ps.prices.copy()
        bumped[cut:] += np.linspace(0.5, 20.0, len(bumped) - cut)
        ps2 = PriceSeries(dates=ps.dates, prices=bumped)
        pert = build_real_backtest(ps2, spec, 0.01, 1e6, point_value=1000.0)
        np.testing.assert_array_equal(base.positions[:cut], pert.positions[:cut])
        np.testing.assert_array_equal(base.account_curve[:cut - 1],
                                      pert.account_curve[:cut - 1])


class TestBuildRealBacktest:
    def test_integer_positions(self):
        ps = load_price_csv(DATA / "sample_energy.csv")
        res = build_real_backtest(ps, SignalSpec(beta=0.075), 0.01, 1e6,
                                  point_value=1000.0)
        np.testing.assert_array_equal(res.positions, np.round(res.positions))
        assert res.turnover > 0

    def test_point_value_scales_money_only(self):
        ps = load_price_csv(DATA / "sample_bond.csv")
        spec = SignalSpec(beta=0.1)
        big = build_real_backtest(ps, spec, 0.01, 1e6, point_value=1000.0)
        small = build_real_backtest(ps, spec, 0.01, 1e3, point_value=1.0)
        np.testing.assert_array_equal(big.positions, small.positions)
        assert big.v_emp == pytest.approx(1000.0 * small.v_emp, rel=1e-12)
        np.testing.assert_allclose(big.account_curve, 1000.0 * small.account_curve)

    def test_point_value_must_be_positive(self, brownian_prices):
        with pytest.raises(SpecError):
            build_real_backtest(_series(brownian_prices), SignalSpec(beta=0.1),
                                0.01, 1.0, point_value=0.0)


class TestCalibrateBeta:
    def test_singleton_grid(self, brownian_prices):
        best, df = calibrate_beta(_series(brownian_prices), SignalSpec(), 0.05,
                                  1.0, [0.2])
        assert best == 0.2
        assert len(df) == 1

    def test_empty_grid_rejected(self, brownian_prices):
        with pytest.raises(SpecError):
            calibrate_beta(_series(brownian_prices), SignalSpec(), 0.05, 1.0, [])

    def test_pure_noise_prefers_smallest_magnitude(self, brownian_prices):
        best, df = calibrate_beta(_series(brownian_prices), SignalSpec(), 0.05,
                                  1.0, [0.05, 0.1, 0.2, 0.4])
        assert abs(best) == pytest.approx(0.05)
        assert df["v_emp"].max() <= 0.0

    def test_sign_agrees_with_regression(self):
        ps = simulate_signal_model(1 << 16, 0.2, 0.5, seed=5, decay=0.3)
        spec = SignalSpec(decay=0.3, coupling="identity")
        best, _ = calibrate_beta(ps, spec, 0.02, 1.0,
                                 [-0.4, -0.2, -0.1, 0.1, 0.2, 0.4])
        pol = signal_policy(ps, type(spec)(decay=0.3, coupling="identity",
                                           beta=1.0), g=1.0)
        z = pol.target[:-1] * pol.sigma_hat[:-1]  # gamma(Z) with g = 1
        r = np.diff(ps.prices) / pol.sigma_hat[:-1]
        ok = np.isfinite(z) & np.isfinite(r)
        slope = np.polyfit(z[ok], r[ok], 1)[0]
        assert best > 0 and slope > 0


class TestSimulateSignalModel:
    def test_deterministic(self):
        a = simulate_signal_model(500, 0.2, 0.5, seed=1)
        b = simulate_signal_model(500, 0.2, 0.5, seed=1)
        np.testing.assert_array_equal(a.prices, b.prices)

    def test_identity_instability_guard(self):
        with pytest.raises(SpecError, match="unstable"):
            simulate_signal_model(100, 0.2, 0.5, seed=0, decay=0.02)

    def test_tanh2_allows_slow_kernel(self):
        ps = simulate_signal_model(2000, 0.2, 0.5, seed=0, decay=0.02,
                                   coupling="tanh2")
        assert np.isfinite(ps.prices).all()
