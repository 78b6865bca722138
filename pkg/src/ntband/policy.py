"""Costfree target position, target-volatility ratio (closed form or rolling),
target drift, and the utility function.

The target-volatility ratio gamma_sq is the ratio of the quadratic variation
of the target position to that of the tradable.  Closed forms exist for the
one-factor models; the rolling estimator covers everything else.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import SpecError
from .models import COUPLINGS, MarketPath

log = logging.getLogger(__name__)

DEFAULT_ROLLING_WINDOW = 250


def utility(x, g: float):
    """Utility of a P&L increment: (1 - exp(-x/g)) * g.

    u(0) = 0, u'(0) = 1, u''(0) = -1/g; g is the gearing (risk appetite,
    money units, the desired P&L stdev per unit Sharpe).
    """
    if g <= 0:
        raise SpecError(f"gearing must be > 0, got {g}")
    return (1.0 - np.exp(-np.asarray(x, dtype=float) / g)) * g


def target_costfree(mu_x, sigma_x, g: float):
    """Optimal position under zero transaction costs: mu * g / sigma^2."""
    sigma_x = np.asarray(sigma_x, dtype=float)
    if np.any(sigma_x <= 0):
        raise SpecError("sigma_x must be > 0")
    return np.asarray(mu_x, dtype=float) * g / sigma_x ** 2


def gamma_sq_linear(beta: float, kappa1: float, sigma: float, g: float) -> float:
    """Closed-form ratio for the linear model: 2 beta^2 kappa1 g^2 / sigma^4."""
    if sigma <= 0:
        raise SpecError("sigma must be > 0")
    return 2.0 * beta ** 2 * kappa1 * g ** 2 / sigma ** 4


def gamma_sq_nonlinear(beta: float, gamma_prime_at_z, kappa1: float, sigma: float, g: float):
    """Nonlinear-coupling ratio: 2 beta^2 gamma'(Z)^2 kappa1 g^2 / sigma^4."""
    if sigma <= 0:
        raise SpecError("sigma must be > 0")
    gp = np.asarray(gamma_prime_at_z, dtype=float)
    return 2.0 * beta ** 2 * gp ** 2 * kappa1 * g ** 2 / sigma ** 4


def gamma_sq_stochvol(beta: float, kappa1: float, kappa_v: float, eta: float,
                      rho_1v: float, sigma_t, target, g: float, gamma_prime=1.0):
    """Stochastic-volatility ratio (three terms; clamped below at 0).

    2 b'^2 kappa1 g^2 / s^4 + 8 b' eta sqrt(kappa1 kappa_v) rho_1v T g / s^3
    + 8 eta^2 kappa_v T^2 / s^2, with b' = beta * gamma', s = sigma_t and
    T the current target.  With identity coupling gamma' = 1.
    """
    s = np.asarray(sigma_t, dtype=float)
    if np.any(s <= 0):
        raise SpecError("sigma_t must be > 0")
    t = np.asarray(target, dtype=float)
    bp = beta * np.asarray(gamma_prime, dtype=float)
    out = (2.0 * bp ** 2 * kappa1 * g ** 2 / s ** 4
           + 8.0 * bp * eta * np.sqrt(kappa1 * kappa_v) * rho_1v * t * g / s ** 3
           + 8.0 * eta ** 2 * kappa_v * t ** 2 / s ** 2)
    n_neg = int(np.count_nonzero(out < 0))
    if n_neg:
        log.warning("gamma_sq_stochvol clamped %d negative values to 0", n_neg)
        out = np.clip(out, 0.0, None)
    return out


def gamma_sq_rolling(target_series, x_series, window: int = DEFAULT_ROLLING_WINDOW,
                     mode: str = "backfill") -> np.ndarray:
    """Rolling realized-quadratic-variation ratio of target to price.

    At step i >= window, returns the sum of the last ``window`` squared target
    increments divided by the same sum of squared price increments; increments
    ending at t_i are known at t_i, so the value at i uses data with index
    <= i only.

    ``mode``:
      - "backfill": the first window-1 steps (and step 0) carry the first
        computable value, so the engine never lacks a width;
      - "nan": undefined steps are NaN (no lookahead; the engine then holds
        the previous band).
    A zero denominator (constant price over the window) is flagged as NaN.
    """
    if window < 2:
        raise SpecError(f"window must be >= 2, got {window}")
    if mode not in ("backfill", "nan"):
        raise SpecError(f"unknown rolling mode {mode!r}")
    t = np.asarray(target_series, dtype=float)
    x = np.asarray(x_series, dtype=float)
    if t.shape != x.shape:
        raise SpecError("target and price series must be aligned")
    n = len(t)
    out = np.full(n, np.nan)
    if n - 1 < window:
        return out

    dth2 = np.diff(t) ** 2
    dx2 = np.diff(x) ** 2
    # rolling sums that are NaN whenever any increment in the window is NaN
    num = _rolling_sum(dth2, window)
    den = _rolling_sum(dx2, window)
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = num / den
    vals[den == 0.0] = np.nan
    # vals[k] covers increments k-window+1 .. k (0-based over N increments),
    # i.e. belongs to grid step k+1; first defined at step `window`.
    out[window:] = vals[window - 1:]
    if mode == "backfill":
        finite = np.isfinite(out)
        if finite.any():
            first = np.argmax(finite)
            out[:first] = out[first]
    return out


def _rolling_sum(a: np.ndarray, window: int) -> np.ndarray:
    """Trailing-window sums; NaN where the window is incomplete or tainted."""
    n = len(a)
    out = np.full(n, np.nan)
    if n < window:
        return out
    c = np.concatenate(([0.0], np.cumsum(np.nan_to_num(a, nan=0.0))))
    sums = c[window:] - c[:-window]
    bad = np.concatenate(([0], np.cumsum((~np.isfinite(a)).astype(np.int64))))
    tainted = (bad[window:] - bad[:-window]) > 0
    sums = np.where(tainted, np.nan, sums)
    out[window - 1:] = sums
    return out


def target_drift_linear(target, kappa1: float):
    """Expected instantaneous change of the linear-model target: -kappa1 * target."""
    return -kappa1 * np.asarray(target, dtype=float)


@dataclass(eq=False)
class PolicySeries:
    """Per-step policy state over a whole path (aligned with the grid)."""

    target: np.ndarray
    gamma_sq: np.ndarray
    sigma_hat: np.ndarray
    target_drift: np.ndarray | None = None

    def __post_init__(self):
        if len(self.gamma_sq) != len(self.target) or len(self.sigma_hat) != len(self.target):
            raise SpecError("policy series must be aligned")


def build_policy_series(path: MarketPath, g: float = 1.0, gamma_mode: str = "closed-form",
                        window: int = DEFAULT_ROLLING_WINDOW,
                        with_drift: bool = False) -> PolicySeries:
    """Targets and gamma_sq for a simulated path, per the model kind.

    ``gamma_mode`` is "closed-form" or "rolling"; the two-factor kind has no
    closed form and requires "rolling".
    """
    model = path.model
    sigma = path.sigma_t
    drift_sum = np.zeros(len(path.x))
    for i, (b, cname) in enumerate(zip(model.beta, model.coupling)):
        drift_sum += b * COUPLINGS[cname][0](path.z[:, i])
    # mu_X = drift_sum * sigma_t, so the target is drift_sum * g / sigma_t
    target = target_costfree(drift_sum * sigma, sigma, g)

    if gamma_mode == "rolling":
        gamma = gamma_sq_rolling(target, path.x, window)
    elif gamma_mode == "closed-form":
        kind = model.kind
        beta = model.beta[0]
        kappa1 = model.return_factors[0].kappa
        if kind == "linear":
            gamma = np.full(len(target), gamma_sq_linear(beta, kappa1, model.sigma_bar, g))
        elif kind == "nonlinear":
            gp = COUPLINGS[model.coupling[0]][1](path.z[:, 0])
            gamma = gamma_sq_nonlinear(beta, gp, kappa1, model.sigma_bar, g)
        elif kind == "stochastic-vol":
            gp = COUPLINGS[model.coupling[0]][1](path.z[:, 0])
            gamma = gamma_sq_stochvol(beta, kappa1, model.vol_factor.kappa, model.eta,
                                      model.rho_1v, sigma, target, g, gamma_prime=gp)
        else:
            raise SpecError(f"no closed-form gamma_sq for kind {kind!r}; use gamma_mode='rolling'")
    else:
        raise SpecError(f"unknown gamma_mode {gamma_mode!r}")

    drift = None
    if with_drift:
        if model.kind != "linear":
            raise SpecError("target drift has a closed form only for the linear kind")
        drift = target_drift_linear(target, model.return_factors[0].kappa)
    return PolicySeries(target=target, gamma_sq=np.asarray(gamma, dtype=float),
                        sigma_hat=sigma, target_drift=drift)
