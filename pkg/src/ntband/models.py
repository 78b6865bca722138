"""Market models: correlated driving noises, OU factors, optional stochastic
volatility, and path simulation on a uniform time grid.

All simulation is a pure function of (spec, n_steps, dt, seed).  The RNG is
NumPy's default_rng (PCG64); draws are generated one row per driving noise so
that adding an uncorrelated extra factor to a spec does not perturb the draws
of the existing ones.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter

from .errors import CorrelationError, SpecError

PSD_TOL = 1e-10

KINDS = ("linear", "nonlinear", "stochastic-vol", "two-factor-stochastic-vol")
_STOCHVOL_KINDS = ("stochastic-vol", "two-factor-stochastic-vol")


def tanh2(z):
    """Bounded activation tanh(2z); tanh2(0) = 0, range (-1, 1)."""
    return np.tanh(2.0 * np.asarray(z, dtype=float))


def tanh2_prime(z):
    """Derivative of tanh(2z): 2 / cosh(2z)^2."""
    return 2.0 / np.cosh(2.0 * np.asarray(z, dtype=float)) ** 2


# name -> (function, derivative)
COUPLINGS = {
    "identity": (lambda z: np.asarray(z, dtype=float), lambda z: np.ones_like(np.asarray(z, dtype=float))),
    "tanh2": (tanh2, tanh2_prime),
}


@dataclass(frozen=True)
class FactorSpec:
    """One mean-reverting factor with unit stationary variance.

    The factor follows dZ = -kappa * Z dt + sqrt(2 kappa) dW, so its
    stationary law is standard normal.
    """

    kappa: float
    role: str = "return"  # "return" or "volatility"

    def __post_init__(self):
        if self.kappa <= 0:
            raise SpecError(f"factor kappa must be > 0, got {self.kappa}")
        if self.role not in ("return", "volatility"):
            raise SpecError(f"unknown factor role {self.role!r}")


@dataclass(eq=False)
class ModelSpec:
    """Full parameterization of one simulated market model.

    ``corr`` is the correlation matrix over the driving noises in the order
    (W0, W1, ..., Wv): price noise first, then one per return factor, then
    the volatility-factor noise last when present.  ``None`` means identity.
    """

    kind: str
    beta: tuple[float, ...]
    sigma_bar: float
    factors: tuple[FactorSpec, ...]
    eta: float = 0.0
    corr: np.ndarray | None = None
    coupling: tuple[str, ...] = ("identity",)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SpecError(f"unknown model kind {self.kind!r}")
        self.beta = tuple(float(b) for b in np.atleast_1d(self.beta))
        self.coupling = tuple(self.coupling) if not isinstance(self.coupling, str) else (self.coupling,)
        self.factors = tuple(self.factors)
        if self.sigma_bar <= 0:
            raise SpecError(f"sigma_bar must be > 0, got {self.sigma_bar}")
        if self.eta < 0:
            raise SpecError(f"eta must be >= 0, got {self.eta}")
        for c in self.coupling:
            if c not in COUPLINGS:
                raise SpecError(f"unknown coupling {c!r}")

        n_ret = len(self.return_factors)
        n_vol = len(self.factors) - n_ret
        if len(self.beta) != n_ret or len(self.coupling) != n_ret:
            raise SpecError(
                f"need one beta and one coupling per return factor: "
                f"{len(self.beta)} betas, {len(self.coupling)} couplings, {n_ret} factors"
            )
        if self.kind in _STOCHVOL_KINDS:
            if n_vol != 1:
                raise SpecError(f"kind {self.kind!r} requires exactly one volatility factor")
        else:
            if n_vol != 0 or self.eta != 0.0:
                raise SpecError(f"kind {self.kind!r} must have eta = 0 and no volatility factor")
        if self.kind == "two-factor-stochastic-vol":
            if n_ret != 2:
                raise SpecError("two-factor kind requires exactly two return factors")
        elif n_ret != 1:
            raise SpecError(f"kind {self.kind!r} requires exactly one return factor")
        if self.kind == "linear" and self.coupling != ("identity",):
            raise SpecError("linear kind requires identity coupling")

        if self.corr is not None:
            c = np.asarray(self.corr, dtype=float)
            m = self.n_noises
            if c.shape != (m, m):
                raise SpecError(f"corr must be {m}x{m} for this spec, got {c.shape}")
            _validate_correlation(c)
            self.corr = c

    @property
    def return_factors(self) -> tuple[FactorSpec, ...]:
        return tuple(f for f in self.factors if f.role == "return")

    @property
    def vol_factor(self) -> FactorSpec | None:
        vols = [f for f in self.factors if f.role == "volatility"]
        return vols[0] if vols else None

    @property
    def has_stochastic_vol(self) -> bool:
        return self.vol_factor is not None

    @property
    def n_noises(self) -> int:
        return 1 + len(self.factors)

    @property
    def corr_full(self) -> np.ndarray:
        if self.corr is None:
            return np.eye(self.n_noises)
        return self.corr

    @property
    def rho_1v(self) -> float:
        """Correlation between the first return-factor noise and the vol-factor noise."""
        if not self.has_stochastic_vol or self.corr is None:
            return 0.0
        return float(self.corr[1, -1])

    # --- convenience constructors -------------------------------------------------

    @classmethod
    def linear(cls, beta, kappa1, sigma, rho01=0.0):
        corr = None
        if rho01 != 0.0:
            corr = np.array([[1.0, rho01], [rho01, 1.0]])
        return cls(kind="linear", beta=(beta,), sigma_bar=sigma,
                   factors=(FactorSpec(kappa1),), corr=corr)

    @classmethod
    def nonlinear(cls, beta, kappa1, sigma, rho01=0.0, coupling="tanh2"):
        corr = None
        if rho01 != 0.0:
            corr = np.array([[1.0, rho01], [rho01, 1.0]])
        return cls(kind="nonlinear", beta=(beta,), sigma_bar=sigma,
                   factors=(FactorSpec(kappa1),), corr=corr, coupling=(coupling,))

    @classmethod
    def stochastic_vol(cls, beta, kappa1, sigma_bar, eta, kappa_v,
                       rho_1v=0.0, coupling="identity"):
        corr = None
        if rho_1v != 0.0:
            corr = np.eye(3)
            corr[1, 2] = corr[2, 1] = rho_1v
        return cls(kind="stochastic-vol", beta=(beta,), sigma_bar=sigma_bar, eta=eta,
                   factors=(FactorSpec(kappa1), FactorSpec(kappa_v, role="volatility")),
                   corr=corr, coupling=(coupling,))

    @classmethod
    def two_factor(cls, beta1, beta2, kappa1, kappa2, sigma_bar, eta, kappa_v,
                   rho_12=0.5, coupling="tanh2"):
        corr = np.eye(4)
        corr[1, 2] = corr[2, 1] = rho_12
        return cls(kind="two-factor-stochastic-vol", beta=(beta1, beta2),
                   sigma_bar=sigma_bar, eta=eta,
                   factors=(FactorSpec(kappa1), FactorSpec(kappa2),
                            FactorSpec(kappa_v, role="volatility")),
                   corr=corr, coupling=(coupling, coupling))

    # --- serialization ------------------------------------------------------------

    def to_dict(self) -> dict:
        d = {
            "kind": self.kind,
            "beta": list(self.beta),
            "sigma_bar": self.sigma_bar,
            "kappa": [f.kappa for f in self.return_factors],
            "coupling": list(self.coupling),
        }
        if self.has_stochastic_vol:
            d["eta"] = self.eta
            d["kappa_v"] = self.vol_factor.kappa
        if self.corr is not None:
            d["corr"] = [[float(v) for v in row] for row in self.corr]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModelSpec":
        allowed = {"kind", "beta", "sigma_bar", "kappa", "coupling", "eta", "kappa_v", "corr"}
        unknown = set(d) - allowed
        if unknown:
            raise SpecError(f"unknown model keys: {sorted(unknown)}")
        for key in ("kind", "beta", "sigma_bar", "kappa"):
            if key not in d:
                raise SpecError(f"model spec missing required key {key!r}")
        kappas = list(np.atleast_1d(d["kappa"]))
        factors = [FactorSpec(float(k)) for k in kappas]
        if "kappa_v" in d and d["kappa_v"] is not None:
            factors.append(FactorSpec(float(d["kappa_v"]), role="volatility"))
        beta = tuple(np.atleast_1d(d["beta"]))
        coupling = d.get("coupling", ["identity"] * len(beta))
        if isinstance(coupling, str):
            coupling = [coupling] * len(beta)
        corr = np.asarray(d["corr"], dtype=float) if "corr" in d else None
        return cls(kind=d["kind"], beta=beta, sigma_bar=float(d["sigma_bar"]),
                   factors=tuple(factors), eta=float(d.get("eta", 0.0)),
                   corr=corr, coupling=tuple(coupling))


@dataclass(eq=False)
class MarketPath:
    """One simulated trajectory on a uniform grid of N+1 points.

    ``z`` holds the return factors, shape (N+1, n_return); ``z_vol`` is the
    volatility factor when present.  ``sigma_t`` is the instantaneous
    volatility, constant and equal to sigma_bar for non-stochastic-vol kinds.
    """

    dt: float
    x: np.ndarray
    z: np.ndarray
    sigma_t: np.ndarray
    model: ModelSpec
    z_vol: np.ndarray | None = None

    def __post_init__(self):
        n = len(self.x)
        if self.z.shape[0] != n or len(self.sigma_t) != n:
            raise SpecError("all path series must share length N+1")
        if self.z_vol is not None and len(self.z_vol) != n:
            raise SpecError("all path series must share length N+1")
        if np.any(self.sigma_t <= 0):
            raise SpecError("sigma_t must be positive everywhere")

    @property
    def n_steps(self) -> int:
        return len(self.x) - 1


def _validate_correlation(corr: np.ndarray) -> np.ndarray:
    corr = np.asarray(corr, dtype=float)
    if corr.ndim != 2 or corr.shape[0] != corr.shape[1]:
        raise CorrelationError(f"correlation matrix must be square, got shape {corr.shape}")
    if not np.allclose(corr, corr.T, atol=PSD_TOL):
        raise CorrelationError("correlation matrix is not symmetric")
    if not np.allclose(np.diag(corr), 1.0, atol=PSD_TOL):
        raise CorrelationError("correlation matrix diagonal must be 1")
    sym = 0.5 * (corr + corr.T)
    eigmin = float(np.linalg.eigvalsh(sym).min())
    if eigmin < -PSD_TOL:
        raise CorrelationError(f"correlation matrix is not positive semi-definite (min eigenvalue {eigmin:.3e})")
    return sym


def _corr_factor(corr: np.ndarray) -> np.ndarray:
    """Lower-triangular (Cholesky) factor when PD, symmetric-eigen factor otherwise."""
    try:
        return np.linalg.cholesky(corr)
    except np.linalg.LinAlgError:
        w, v = np.linalg.eigh(corr)
        return v * np.sqrt(np.clip(w, 0.0, None))


def correlated_normals(corr, n_steps: int, seed: int) -> np.ndarray:
    """Standard normal draws with the given per-step cross-correlation.

    Returns shape (n_steps, m).  Deterministic in (corr, n_steps, seed).
    Draws are generated one full row per noise before mixing, so dropping a
    trailing uncorrelated noise leaves the leading columns bit-identical.
    """
    corr = _validate_correlation(np.asarray(corr, dtype=float))
    m = corr.shape[0]
    fac = _corr_factor(corr)
    rng = np.random.default_rng(seed)
    raw = rng.standard_normal((m, int(n_steps)))
    return (fac @ raw).T


def ou_step(z: float, kappa: float, dt: float, xi: float) -> float:
    """Exact OU transition preserving unit stationary variance.

    Returns z * exp(-kappa dt) + sqrt(1 - exp(-2 kappa dt)) * xi.
    """
    if kappa <= 0:
        raise SpecError(f"kappa must be > 0, got {kappa}")
    if dt <= 0:
        raise SpecError(f"dt must be > 0, got {dt}")
    a = np.exp(-kappa * dt)
    return z * a + np.sqrt(1.0 - a * a) * xi


def _ou_path(xi: np.ndarray, kappa: float, dt: float) -> np.ndarray:
    """Full factor path from per-step innovations, starting at 0.

    Applies the exact transition of ``ou_step`` recursively (via a linear
    filter; same arithmetic, vectorized).
    """
    a = np.exp(-kappa * dt)
    b = np.sqrt(1.0 - a * a)
    z = lfilter([b], [1.0, -a], xi)
    return np.concatenate(([0.0], z))


def simulate(model: ModelSpec, n_steps: int, dt: float = 1.0, seed: int = 0) -> MarketPath:
    """Simulate one path of the given model.

    Factors use the exact OU transition; the price line is Euler with the
    time-t (pre-step) drift and volatility:
        dX = (sum_i beta_i gamma_i(Z_i)) * sigma_t * dt + sigma_t * sqrt(dt) * xi0.
    """
    if dt <= 0:
        raise SpecError(f"dt must be > 0, got {dt}")
    xi = correlated_normals(model.corr_full, n_steps, seed)

    ret_factors = model.return_factors
    z = np.empty((n_steps + 1, len(ret_factors)))
    for i, f in enumerate(ret_factors):
        z[:, i] = _ou_path(xi[:, 1 + i], f.kappa, dt)

    z_vol = None
    if model.has_stochastic_vol:
        z_vol = _ou_path(xi[:, -1], model.vol_factor.kappa, dt)
        sigma_t = model.sigma_bar * np.exp(model.eta * z_vol - 0.5 * model.eta ** 2)
    else:
        sigma_t = np.full(n_steps + 1, model.sigma_bar)

    drift = np.zeros(n_steps + 1)
    for i, (b, cname) in enumerate(zip(model.beta, model.coupling)):
        gamma_fn = COUPLINGS[cname][0]
        drift += b * gamma_fn(z[:, i])

    # pre-step values drive the increment over [t, t+dt]
    dx = drift[:-1] * sigma_t[:-1] * dt + sigma_t[:-1] * np.sqrt(dt) * xi[:, 0]
    x = np.concatenate(([0.0], np.cumsum(dx)))
    return MarketPath(dt=dt, x=x, z=z, sigma_t=sigma_t, model=model, z_vol=z_vol)
