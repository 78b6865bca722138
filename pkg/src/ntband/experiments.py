"""Sweep experiments: lambda-sweeps across costs producing (mean buffer width,
empirical value) curves, the brute-force constant-band oracle, and the five
synthesized-model scenarios.

One path is simulated per seed and reused across all (epsilon, lambda) cells
(common random numbers), exploiting ergodicity: the time average over one
long trajectory stands in for the ensemble average.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .engine import run_backtest, run_with_bands, BacktestResult
from .errors import SpecError
from .models import ModelSpec, MarketPath, simulate
from .policy import PolicySeries, build_policy_series, DEFAULT_ROLLING_WINDOW

DEFAULT_COSTS = (0.02, 0.05, 0.1, 0.2, 0.5)
DEFAULT_N_STEPS = 1 << 20
DEFAULT_SEED = 27


def default_lambda_grid(n: int = 13, lo: float = 0.25, hi: float = 4.0) -> tuple[float, ...]:
    """Log-spaced lambda grid containing 1 exactly."""
    grid = np.geomspace(lo, hi, n)
    mid = int(np.argmin(np.abs(grid - 1.0)))
    grid[mid] = 1.0
    return tuple(float(v) for v in grid)


@dataclass(eq=False)
class SweepSpec:
    """Everything needed to reproduce one value-vs-buffer-width sweep."""

    model: ModelSpec
    costs: tuple[float, ...] = DEFAULT_COSTS
    lambdas: tuple[float, ...] = field(default_factory=default_lambda_grid)
    n_steps: int = DEFAULT_N_STEPS
    dt: float = 1.0
    seed: int = DEFAULT_SEED
    gamma_mode: str = "closed-form"
    window: int = DEFAULT_ROLLING_WINDOW
    g: float = 1.0

    def __post_init__(self):
        self.costs = tuple(float(c) for c in self.costs)
        self.lambdas = tuple(float(v) for v in self.lambdas)
        if any(c < 0 for c in self.costs):
            raise SpecError("costs must be >= 0")
        if any(v < 0 for v in self.lambdas):
            raise SpecError("lambdas must be >= 0")
        if list(self.lambdas) != sorted(self.lambdas):
            raise SpecError("lambdas must be sorted ascending")
        if 1.0 not in self.lambdas:
            raise SpecError("lambda grid must contain 1")
        if self.gamma_mode not in ("closed-form", "rolling"):
            raise SpecError(f"unknown gamma_mode {self.gamma_mode!r}")


SCENARIO_NAMES = ("a", "b", "c", "d", "e")


def scenario(name: str, **overrides) -> SweepSpec:
    """The five synthesized-model scenarios of the sweep experiments.

    (a) linear, (b) nonlinear coupling, (c) linear with stochastic
    volatility, (d) nonlinear coupling and stochastic volatility, (e) two
    prediction factors with rolling gamma_sq estimation.
    """
    kappa1, beta, sigma = 0.02, 0.2, 0.5
    eta, kappa_v = 0.4, 0.005
    if name == "a":
        model = ModelSpec.linear(beta, kappa1, sigma)
        gamma_mode = "closed-form"
    elif name == "b":
        model = ModelSpec.nonlinear(beta, kappa1, sigma)
        gamma_mode = "closed-form"
    elif name == "c":
        model = ModelSpec.stochastic_vol(beta, kappa1, sigma, eta, kappa_v)
        gamma_mode = "closed-form"
    elif name == "d":
        model = ModelSpec.stochastic_vol(beta, kappa1, sigma, eta, kappa_v, coupling="tanh2")
        gamma_mode = "closed-form"
    elif name == "e":
        model = ModelSpec.two_factor(0.1, 0.1, 0.02, 0.005, sigma, eta, kappa_v, rho_12=0.5)
        gamma_mode = "rolling"
    else:
        raise SpecError(f"unknown scenario {name!r}; expected one of {SCENARIO_NAMES}")
    spec = SweepSpec(model=model, gamma_mode=gamma_mode)
    for key, val in overrides.items():
        if not hasattr(spec, key):
            raise SpecError(f"unknown sweep override {key!r}")
        setattr(spec, key, val)
    spec.__post_init__()
    return spec


def run_sweep(spec: SweepSpec, path: MarketPath | None = None,
              policy: PolicySeries | None = None) -> pd.DataFrame:
    """Sweep curve rows, one per (epsilon, lambda), on one shared path.

    Columns: epsilon, lambda, mean_buffer_width, v_emp, turnover,
    is_lambda_one.  Bit-reproducible given (spec, seed).
    """
    if path is None:
        path = simulate(spec.model, spec.n_steps, spec.dt, spec.seed)
    if policy is None:
        policy = build_policy_series(path, g=spec.g, gamma_mode=spec.gamma_mode,
                                     window=spec.window)
    rows = []
    for eps in spec.costs:
        for lam in spec.lambdas:
            res = run_backtest(path.x, policy, eps, spec.g, lam=lam)
            rows.append({
                "epsilon": eps,
                "lambda": lam,
                "mean_buffer_width": res.mean_buffer_width,
                "v_emp": res.v_emp,
                "turnover": res.turnover,
                "is_lambda_one": lam == 1.0,
            })
    return pd.DataFrame(rows)


def brute_force_band_oracle(x: np.ndarray, policy: PolicySeries, cost_epsilon: float,
                            g: float, width_grid) -> tuple[float, float, pd.DataFrame]:
    """Best constant half-width by exhaustive search (independent of the
    cube-root rule).

    Returns (best_width, v_emp at best, table of all grid points).  Ties go
    to the smaller width.
    """
    widths = [float(w) for w in width_grid]
    if not widths:
        raise SpecError("width_grid must be nonempty")
    if widths != sorted(widths):
        raise SpecError("width_grid must be ascending")
    x = np.asarray(x, dtype=float)
    n = len(x) - 1
    target = policy.target[:n]
    best_w, best_v = None, -np.inf
    rows = []
    for w in widths:
        res = run_with_bands(x, target - w, target + w, cost_epsilon, g, target=target)
        rows.append({"width": w, "v_emp": res.v_emp, "turnover": res.turnover})
        if res.v_emp > best_v:
            best_w, best_v = w, res.v_emp
    return best_w, best_v, pd.DataFrame(rows)


def path_frame(path: MarketPath, result: BacktestResult | None = None) -> pd.DataFrame:
    """Path-level series for figure-style exports: factors, vol multiplier,
    price, and optionally position and account curve."""
    n = path.n_steps
    data = {"t": np.arange(n + 1) * path.dt}
    for i in range(path.z.shape[1]):
        data[f"z{i + 1}"] = path.z[:, i]
    if path.z_vol is not None:
        data["vol_multiplier"] = path.sigma_t / path.model.sigma_bar
    data["sigma_t"] = path.sigma_t
    data["x"] = path.x
    if result is not None:
        data["position"] = result.positions
        data["account"] = np.concatenate(([0.0], result.account_curve))
    return pd.DataFrame(data)
