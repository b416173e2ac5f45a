"""Step-count dependent taming of the SDE coefficients.

Drift, diffusion and the Milstein correction are all divided by the same
denominator ``1 + n**(-theta) * |x|**(2 * rho * theta)``, so at large ``|x|``
the explicit scheme cannot be destabilised by super-linear growth while every
coefficient still converges pointwise to its untamed value as ``n -> inf``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import UsageError
from .model import SdeModel, _as_state, diffusion_jacobian, eval_diffusion, eval_drift, lambda_all


@dataclass(frozen=True)
class TamingConfig:
    n: int
    theta: float = 1.0
    rho: float = 0.0

    def __post_init__(self):
        if self.n < 1:
            raise UsageError(f"step count must be >= 1, got {self.n}")
        if self.theta < 0.5:
            raise UsageError(f"taming exponent theta must be >= 1/2, got {self.theta}")

    @classmethod
    def for_model(cls, model: SdeModel, n: int, theta: float = 1.0) -> "TamingConfig":
        return cls(n=n, theta=theta, rho=model.rho)


@dataclass(frozen=True)
class TamedValues:
    drift: np.ndarray
    diffusion: np.ndarray
    lam: np.ndarray  # (..., m, d, m): lam[..., j] is the tamed Lambda^j sigma
    factor: np.ndarray


def taming_factor(cfg: TamingConfig, x) -> np.ndarray:
    """``1 / (1 + n^-theta |x|^(2 rho theta))`` over the trailing state axis.

    ``|x|**0`` is taken as 1 (including at ``x = 0``), so for ``rho = 0`` the
    factor is the constant ``1 / (1 + n^-theta)``.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x.reshape(1)
    power = 2.0 * cfg.rho * cfg.theta
    if power == 0.0:
        growth = np.ones(x.shape[:-1])
    else:
        growth = np.sqrt(np.sum(x * x, axis=-1)) ** power
    return 1.0 / (1.0 + cfg.n ** (-cfg.theta) * growth)


def tame_coefficients(model: SdeModel, cfg: TamingConfig, x) -> TamedValues:
    x = _as_state(model, x)
    factor = taming_factor(cfg, x)
    b = eval_drift(model, x)
    sig = eval_diffusion(model, x)
    lam = lambda_all(sig, diffusion_jacobian(model, x))
    return TamedValues(
        drift=factor[..., None] * b,
        diffusion=factor[..., None, None] * sig,
        lam=factor[..., None, None, None] * lam,
        factor=factor,
    )
