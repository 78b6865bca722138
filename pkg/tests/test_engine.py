"""Execution loop: clamping, hysteresis, costs, and the account identities."""

import numpy as np
import pytest

from ntband import (SpecError, apply_band, build_policy_series, run_backtest,
                    run_with_bands, utility)
from ntband.engine import backtest_frame, scale_money


class TestApplyBand:
    def test_clamp_from_above(self):
        assert apply_band(0.5, 0.2, 0.4) == pytest.approx(0.4)

    def test_hold_inside(self):
        assert apply_band(0.3, 0.2, 0.4) == pytest.approx(0.3)

    def test_clamp_from_below(self):
        assert apply_band(0.0, 0.2, 0.4) == pytest.approx(0.2)

    def test_inverted_band_rejected(self):
        with pytest.raises(SpecError):
            apply_band(0.3, 0.4, 0.2)


def _wide_hold(x, theta):
    """Bands so wide the initial position is simply held."""
    n = len(x) - 1
    return run_with_bands(x, np.full(n, theta - 100.0), np.full(n, theta + 100.0),
                          0.1, 1.0, initial_position=theta)


class TestRunWithBands:
    def test_single_step_utility(self):
        x = np.array([0.0, 0.1])
        res = run_with_bands(x, np.array([1.0]), np.array([1.0]), 0.0, 1.0,
                             initial_position=1.0)
        assert res.v_emp == pytest.approx(1 - np.exp(-0.1), abs=1e-9)
        assert res.cost_paid == 0.0

    def test_no_trade_inside_wide_band(self, brownian_prices):
        res = _wide_hold(brownian_prices, 1.5)
        assert res.turnover == 0.0
        assert res.cost_paid == 0.0
        np.testing.assert_array_equal(res.positions, 1.5)

    def test_pnl_identity(self, brownian_prices):
        x = brownian_prices
        n = len(x) - 1
        rng = np.random.default_rng(2)
        center = rng.standard_normal(n).cumsum() * 0.01
        res = run_with_bands(x, center - 0.3, center + 0.3, 0.05, 1.0)
        lhs = res.account_curve[-1]
        rhs = res.positions[:-1] @ np.diff(x) - 0.05 * res.turnover
        assert lhs == pytest.approx(rhs, rel=1e-9)

    def test_costs_only_subtract(self, brownian_prices):
        x = brownian_prices
        n = len(x) - 1
        res = run_with_bands(x, np.full(n, -0.2), np.full(n, 0.2), 0.1, 1.0)
        gross_u = utility(res.positions[:-1] * np.diff(x), 1.0).sum()
        assert res.v_emp <= gross_u

    def test_position_at_edge_after_trade(self, brownian_prices):
        x = brownian_prices
        n = len(x) - 1
        rng = np.random.default_rng(3)
        center = rng.standard_normal(n).cumsum() * 0.05
        res = run_with_bands(x, center - 0.1, center + 0.1, 0.01, 1.0)
        traded = res.trades[:n] != 0.0
        inside = ((res.positions[:n] >= center - 0.1 - 1e-12)
                  & (res.positions[:n] <= center + 0.1 + 1e-12))
        assert inside[traded].all()

    def test_nan_band_holds_previous(self):
        x = np.zeros(6)
        lower = np.array([0.5, np.nan, np.nan, 2.0, 2.0])
        upper = np.array([1.0, np.nan, np.nan, 3.0, 3.0])
        res = run_with_bands(x, lower, upper, 0.0, 1.0)
        np.testing.assert_allclose(res.positions[:5], [0.5, 0.5, 0.5, 2.0, 2.0])

    def test_leading_nan_band_stays_flat(self):
        x = np.zeros(5)
        lower = np.array([np.nan, np.nan, 1.0, 1.0])
        upper = np.array([np.nan, np.nan, 2.0, 2.0])
        res = run_with_bands(x, lower, upper, 0.0, 1.0)
        np.testing.assert_allclose(res.positions[:4], [0.0, 0.0, 1.0, 1.0])

    def test_integer_mode_rounds_within_band(self):
        x = np.zeros(4)
        lower = np.array([1.2, 1.2, 6.4])
        upper = np.array([3.8, 3.8, 6.6])
        res = run_with_bands(x, lower, upper, 0.0, 1.0, integer_positions=True)
        # from 0, the nearest integer inside [1.2, 3.8] is 2; [6.4, 6.6] has
        # no integer so the position is held
        np.testing.assert_allclose(res.positions, [2.0, 2.0, 2.0, 2.0])

    def test_integer_mode_smallest_trade_from_above(self):
        x = np.zeros(2)
        res = run_with_bands(x, np.array([-3.6]), np.array([-1.2]), 0.0, 1.0,
                             integer_positions=True, initial_position=5.0)
        assert res.positions[0] == pytest.approx(-2.0)

    def test_band_length_mismatch_rejected(self, brownian_prices):
        with pytest.raises(SpecError):
            run_with_bands(brownian_prices, np.zeros(3), np.zeros(3), 0.1, 1.0)

    def test_inverted_band_rejected(self):
        with pytest.raises(SpecError):
            run_with_bands(np.zeros(3), np.array([1.0, 1.0]),
                           np.array([0.0, 0.0]), 0.1, 1.0)


class TestRunBacktest:
    def test_costfree_lambda_zero_tracks_target(self, short_path_a, short_policy_a):
        res = run_backtest(short_path_a.x, short_policy_a, 0.0, 1.0, lam=0.0)
        n = short_path_a.n_steps
        np.testing.assert_allclose(res.positions[:n], short_policy_a.target[:n])

    def test_pnl_identity(self, short_path_a, short_policy_a):
        res = run_backtest(short_path_a.x, short_policy_a, 0.1, 1.0)
        rhs = res.positions[:-1] @ np.diff(short_path_a.x) - 0.1 * res.turnover
        assert res.account_curve[-1] == pytest.approx(rhs, rel=1e-9)

    def test_turnover_nonincreasing_in_lambda(self, short_path_a, short_policy_a):
        turns = [run_backtest(short_path_a.x, short_policy_a, 0.1, 1.0, lam=lam).turnover
                 for lam in (0.5, 1.0, 2.0, 4.0)]
        assert turns == sorted(turns, reverse=True)

    def test_doubling_gearing_doubles_positions(self, short_path_a):
        pol1 = build_policy_series(short_path_a, g=1.0)
        pol2 = build_policy_series(short_path_a, g=2.0)
        r1 = run_backtest(short_path_a.x, pol1, 0.1, 1.0)
        r2 = run_backtest(short_path_a.x, pol2, 0.1, 2.0)
        np.testing.assert_allclose(r2.positions, 2 * r1.positions, rtol=1e-9)
        np.testing.assert_allclose(r2.trades, 2 * r1.trades, rtol=1e-9, atol=1e-12)

    def test_mean_buffer_width_scales_with_lambda(self, short_path_a, short_policy_a):
        r1 = run_backtest(short_path_a.x, short_policy_a, 0.1, 1.0, lam=1.0)
        r2 = run_backtest(short_path_a.x, short_policy_a, 0.1, 1.0, lam=2.5)
        assert r2.mean_buffer_width == pytest.approx(2.5 * r1.mean_buffer_width)

    def test_displacement_requires_drift(self, short_path_a, short_policy_a):
        with pytest.raises(SpecError):
            run_backtest(short_path_a.x, short_policy_a, 0.1, 1.0,
                         use_displacement=True)

    def test_displacement_shifts_center_down_for_positive_target(self, short_path_a):
        pol = build_policy_series(short_path_a, with_drift=True)
        res = run_backtest(short_path_a.x, pol, 0.2, 1.0, use_displacement=True)
        pos_t = pol.target[:short_path_a.n_steps] > 0.5
        shift = res.lower[pos_t] + res.upper[pos_t] - 2 * pol.target[:short_path_a.n_steps][pos_t]
        assert np.all(shift < 0)

    def test_misaligned_policy_rejected(self, short_policy_a):
        with pytest.raises(SpecError):
            run_backtest(np.zeros(10), short_policy_a, 0.1, 1.0)


class TestExports:
    def test_scale_money(self, short_path_a, short_policy_a):
        res = run_backtest(short_path_a.x, short_policy_a, 0.1, 1.0)
        scaled = scale_money(res, 1000.0)
        assert scaled.v_emp == pytest.approx(1000 * res.v_emp)
        assert scaled.cost_paid == pytest.approx(1000 * res.cost_paid)
        np.testing.assert_allclose(scaled.account_curve, 1000 * res.account_curve)
        np.testing.assert_array_equal(scaled.positions, res.positions)

    def test_backtest_frame_schema(self, short_path_a, short_policy_a):
        res = run_backtest(short_path_a.x, short_policy_a, 0.1, 1.0)
        df = backtest_frame(res, short_path_a.x)
        assert list(df.columns) == ["t", "x", "target", "lower", "upper",
                                    "position", "trade", "net_pnl"]
        assert len(df) == short_path_a.n_steps + 1
        assert df["net_pnl"].iloc[0] == 0.0
        assert df["net_pnl"].iloc[-1] == pytest.approx(res.account_curve[-1])
