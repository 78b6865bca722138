"""Shared fixtures: the long fixed-seed paths reused across test modules."""

import numpy as np
import pytest

from ntband import build_policy_series, scenario, simulate
from ntband.experiments import DEFAULT_N_STEPS, DEFAULT_SEED


@pytest.fixture(scope="session")
def spec_a():
    return scenario("a")


@pytest.fixture(scope="session")
def path_a(spec_a):
    """Scenario (a) path at full experiment length, documented seed."""
    return simulate(spec_a.model, DEFAULT_N_STEPS, spec_a.dt, DEFAULT_SEED)


@pytest.fixture(scope="session")
def policy_a(path_a):
    return build_policy_series(path_a)


@pytest.fixture(scope="session")
def short_path_a(spec_a):
    """A cheap linear-model path for unit tests."""
    return simulate(spec_a.model, 1 << 14, spec_a.dt, 5)


@pytest.fixture(scope="session")
def short_policy_a(short_path_a):
    return build_policy_series(short_path_a)


@pytest.fixture(scope="session")
def brownian_prices():
    """A driftless random-walk price series (sigma = 0.5, 2^15 steps)."""
    rng = np.random.default_rng(99)
    return 100.0 + np.concatenate(([0.0], np.cumsum(0.5 * rng.standard_normal(1 << 15))))
