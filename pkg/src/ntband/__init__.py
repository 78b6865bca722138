"""No-trade-band trading under proportional transaction costs.

Computes costfree target positions, the asymptotically optimal band
half-width and displacement, runs DT-NT-DT backtests on simulated and real
price series, and reproduces value-vs-buffer-width sweep experiments.
"""

from .banding import Band, CostSpec, displacement, half_width, make_band
from .engine import BacktestResult, apply_band, run_backtest, run_with_bands
from .errors import (ConfigError, CorrelationError, DataError, NTBandError,
                     SpecError)
from .experiments import (SweepSpec, brute_force_band_oracle, default_lambda_grid,
                          run_sweep, scenario)
from .market_data import (PriceSeries, SignalSpec, build_real_backtest,
                          calibrate_beta, ewma_volatility, load_price_csv,
                          momentum_signal, simulate_signal_model)
from .models import (FactorSpec, MarketPath, ModelSpec, correlated_normals,
                     ou_step, simulate, tanh2)
from .policy import (PolicySeries, build_policy_series, gamma_sq_linear,
                     gamma_sq_nonlinear, gamma_sq_rolling, gamma_sq_stochvol,
                     target_costfree, target_drift_linear, utility)

__version__ = "0.1.0"
