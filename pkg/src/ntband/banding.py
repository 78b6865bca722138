"""No-trade band construction: cube-root half-width, optional displacement,
and the uniform scale multiplier lambda used by the sweep experiments."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SpecError


@dataclass(frozen=True)
class CostSpec:
    """Proportional cost: money paid per unit traded, symmetric for buys and sells."""

    epsilon: float

    def __post_init__(self):
        if self.epsilon < 0:
            raise SpecError(f"epsilon must be >= 0, got {self.epsilon}")


@dataclass(eq=False)
class Band:
    """No-trade interval in position space (scalar or per-step arrays)."""

    lower: np.ndarray
    upper: np.ndarray
    half_width: np.ndarray
    displacement: np.ndarray
    center: np.ndarray


def half_width(epsilon, g: float, gamma_sq):
    """Asymptotically optimal half-width: (3 epsilon g gamma_sq / 2)^(1/3)."""
    gamma_sq = np.asarray(gamma_sq, dtype=float)
    return np.cbrt(1.5 * np.asarray(epsilon, dtype=float) * g * gamma_sq)


def displacement(epsilon, g: float, gamma_sq, target_drift, var_dx):
    """Band-center offset: (drift/var_dx) * (2 eps^2 g^2 / (3 gamma_sq))^(1/3).

    Zero where gamma_sq is 0 (no trading signal at all).
    """
    gamma_sq = np.asarray(gamma_sq, dtype=float)
    var_dx = np.asarray(var_dx, dtype=float)
    if np.any(var_dx <= 0):
        raise SpecError("var_dx must be > 0")
    with np.errstate(divide="ignore"):
        out = (np.asarray(target_drift, dtype=float) / var_dx
               * np.cbrt(2.0 * np.asarray(epsilon, dtype=float) ** 2 * g ** 2 / (3.0 * gamma_sq)))
    return np.where(gamma_sq == 0.0, 0.0, out)


def make_band(target, half_width, displacement=0.0, lam: float = 1.0) -> Band:
    """Band centered at target + displacement with half-extent lam * half_width.

    lambda scales the half-width only, never the displacement; lam = 0 gives
    the degenerate band that tracks the displaced target continuously.
    """
    if lam < 0:
        raise SpecError(f"lambda must be >= 0, got {lam}")
    hw = np.asarray(half_width, dtype=float)
    if np.any(hw[np.isfinite(hw)] < 0):
        raise SpecError("half_width must be >= 0")
    center = np.asarray(target, dtype=float) + displacement
    disp = np.broadcast_to(np.asarray(displacement, dtype=float), np.shape(center))
    return Band(lower=center - lam * hw, upper=center + lam * hw,
                half_width=lam * hw, displacement=disp, center=center)
