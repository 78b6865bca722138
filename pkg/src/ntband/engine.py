"""DT-NT-DT execution loop: hold inside the band, trade to the nearest edge
outside it, accrue utility and proportional costs.

Cost convention: the cost of a trade is charged at the step where the trade
is decided, so the total over a full path equals the paper-style sum that
pairs the utility at step i with the position change into step i+1.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from numba import njit

from .banding import half_width as band_half_width
from .banding import displacement as band_displacement
from .errors import SpecError
from .policy import PolicySeries, utility


@dataclass(eq=False)
class BacktestResult:
    """Output of one DT-NT-DT run.

    ``positions`` has length N+1 (the last step makes no new decision);
    ``trades`` is the per-step position change, ``account_curve`` the
    cumulative net P&L (length N).  The P&L identity
    account_curve[-1] == sum(theta_i dX_i) - epsilon * turnover holds by
    construction.
    """

    positions: np.ndarray
    trades: np.ndarray
    cost_paid: float
    v_emp: float
    account_curve: np.ndarray
    mean_buffer_width: float
    turnover: float
    lower: np.ndarray
    upper: np.ndarray
    target: np.ndarray


def apply_band(current_position: float, lower: float, upper: float) -> float:
    """Trade to the nearest band edge when outside; hold when inside."""
    if lower > upper:
        raise SpecError("band lower must not exceed upper")
    return min(max(current_position, lower), upper)


@njit(cache=True)
def _dtntdt_scan(lower, upper, theta0, integer_mode):
    """Positions from per-step bands with hysteresis.

    NaN band entries mean 'undefined at this step': the previous band is
    held; before any band is defined the position is held unchanged.
    In integer mode the position is the nearest whole number inside the
    band requiring the smallest trade; if the band contains no integer the
    position is held.
    """
    n = lower.shape[0]
    pos = np.empty(n)
    th = theta0
    lo = np.nan
    up = np.nan
    for i in range(n):
        if lower[i] == lower[i] and upper[i] == upper[i]:
            lo = lower[i]
            up = upper[i]
        if lo == lo:
            if integer_mode:
                if th < lo:
                    c = np.rint(lo)
                    if c < lo:
                        c += 1.0
                    if c <= up:
                        th = c
                elif th > up:
                    c = np.rint(up)
                    if c > up:
                        c -= 1.0
                    if c >= lo:
                        th = c
            else:
                if th < lo:
                    th = lo
                elif th > up:
                    th = up
        pos[i] = th
    return pos


def _ffill(a: np.ndarray) -> np.ndarray:
    """Forward-fill NaNs (leading NaNs stay NaN)."""
    idx = np.where(np.isfinite(a), np.arange(len(a)), -1)
    idx = np.maximum.accumulate(idx)
    out = np.where(idx >= 0, a[np.clip(idx, 0, None)], np.nan)
    return out


def run_with_bands(x: np.ndarray, lower: np.ndarray, upper: np.ndarray, cost_epsilon: float,
                   g: float, initial_position: float = 0.0,
                   integer_positions: bool = False,
                   target: np.ndarray | None = None) -> BacktestResult:
    """Run the execution loop over explicit per-step bands.

    ``lower``/``upper`` cover the N decision steps (t_0 .. t_{N-1}); ``x``
    has length N+1.
    """
    x = np.asarray(x, dtype=float)
    n = len(x) - 1
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    if len(lower) != n or len(upper) != n:
        raise SpecError(f"bands must cover the {n} decision steps, got {len(lower)}")
    both = np.isfinite(lower) & np.isfinite(upper)
    if np.any(lower[both] > upper[both]):
        raise SpecError("band lower must not exceed upper")

    core = _dtntdt_scan(lower, upper, float(initial_position), integer_positions)
    positions = np.concatenate((core, core[-1:]))
    trades = np.diff(positions, prepend=initial_position)
    dx = np.diff(x)
    gross = core * dx
    step_cost = cost_epsilon * np.abs(trades[:n])
    account = np.cumsum(gross - step_cost)
    v_emp = float(utility(gross, g).sum() - step_cost.sum())
    hw_held = _ffill(0.5 * (upper - lower))
    mean_bw = float(np.nanmean(hw_held)) if np.isfinite(hw_held).any() else 0.0
    turnover = float(np.abs(trades).sum())
    return BacktestResult(
        positions=positions, trades=trades, cost_paid=float(cost_epsilon * turnover),
        v_emp=v_emp, account_curve=account, mean_buffer_width=mean_bw,
        turnover=turnover, lower=lower, upper=upper,
        target=np.asarray(target, dtype=float) if target is not None else 0.5 * (lower + upper),
    )


def run_backtest(x: np.ndarray, policy: PolicySeries, cost_epsilon: float, g: float,
                 lam: float = 1.0, initial_position: float = 0.0,
                 integer_positions: bool = False,
                 use_displacement: bool = False) -> BacktestResult:
    """Backtest a per-step policy: band from the cube-root rule, clamp, accrue.

    Steps with undefined gamma_sq (NaN) hold the previous band unchanged.
    Displacement defaults off; when enabled it requires ``policy.target_drift``.
    """
    x = np.asarray(x, dtype=float)
    n = len(x) - 1
    if len(policy.target) not in (n, n + 1):
        raise SpecError("policy series and path are misaligned")
    target = policy.target[:n]
    gamma = policy.gamma_sq[:n]
    hw = band_half_width(cost_epsilon, g, gamma)
    disp = 0.0
    if use_displacement:
        if policy.target_drift is None:
            raise SpecError("displacement requires a target_drift series")
        disp = band_displacement(cost_epsilon, g, gamma, policy.target_drift[:n],
                                 policy.sigma_hat[:n] ** 2)
    center = target + disp
    return run_with_bands(x, center - lam * hw, center + lam * hw, cost_epsilon, g,
                          initial_position=initial_position,
                          integer_positions=integer_positions, target=target)


def scale_money(result: BacktestResult, factor: float) -> BacktestResult:
    """Rescale the money-denominated fields (positions stay in asset units)."""
    return replace(result,
                   cost_paid=result.cost_paid * factor,
                   v_emp=result.v_emp * factor,
                   account_curve=result.account_curve * factor)


def backtest_frame(result: BacktestResult, x: np.ndarray, dt: float = 1.0):
    """Per-step export table: t, x, target, lower, upper, position, trade, net_pnl."""
    import pandas as pd

    n = len(x) - 1
    net = np.concatenate(([0.0], result.account_curve))
    return pd.DataFrame({
        "t": np.arange(n + 1) * dt,
        "x": np.asarray(x, dtype=float),
        "target": np.concatenate((result.target, result.target[-1:]))[: n + 1],
        "lower": np.concatenate((result.lower, result.lower[-1:]))[: n + 1],
        "upper": np.concatenate((result.upper, result.upper[-1:]))[: n + 1],
        "position": result.positions,
        "trade": result.trades,
        "net_pnl": net,
    })
