"""SDE coefficient models.

A model bundles the drift ``b: R^d -> R^d`` and diffusion ``sigma: R^d -> R^{d x m}``
of an autonomous Ito SDE ``dx = b(x) dt + sigma(x) dw``.  All coefficient
callables are vectorised over leading axes: ``drift(x)`` maps ``(..., d)`` to
``(..., d)``, ``diffusion(x)`` maps ``(..., d)`` to ``(..., d, m)`` and the
optional ``diffusion_jacobian(x)`` returns ``(..., d, m, d)`` with entry
``[i, k, u] = d sigma[i, k] / d x[u]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, Optional

import numpy as np

from .errors import NumericalFailure, UsageError

Array = np.ndarray


@dataclass(frozen=True)
class ModelDomain:
    """Axis-aligned box used when sampling points from a model's state space."""

    lower: Array
    upper: Array

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float))
        hi = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lo.shape != hi.shape:
            raise UsageError("domain bounds must have the same shape")
        if not np.all(lo < hi):
            raise UsageError("domain requires lower < upper componentwise")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def cube(cls, lo: float, hi: float, d: int) -> "ModelDomain":
        return cls(np.full(d, float(lo)), np.full(d, float(hi)))

    def scaled(self, factor: float) -> "ModelDomain":
        """Box with the same centre and every side multiplied by ``factor``."""
        centre = 0.5 * (self.lower + self.upper)
        half = 0.5 * (self.upper - self.lower) * factor
        return ModelDomain(centre - half, centre + half)


@dataclass(frozen=True)
class SdeModel:
    name: str
    d: int
    m: int
    drift: Callable[[Array], Array]
    diffusion: Callable[[Array], Array]
    diffusion_jacobian: Optional[Callable[[Array], Array]] = None
    rho: float = 0.0
    params: Dict[str, float] = field(default_factory=dict)
    commutative_noise: bool = False
    domain: Optional[ModelDomain] = None
    # (x0, T, w_T) -> x_T, when the strong solution is known in closed form
    exact_solution: Optional[Callable[..., Array]] = None

    def __post_init__(self):
        if self.d < 1 or self.m < 1:
            raise UsageError("state and noise dimensions must be positive")
        if not (self.rho == 0 or self.rho >= 1):
            raise UsageError(f"growth exponent rho must be 0 or >= 1, got {self.rho}")
        if self.domain is None:
            object.__setattr__(self, "domain", ModelDomain.cube(-1.0, 1.0, self.d))


def _as_state(model: SdeModel, x) -> Array:
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x.reshape(1)
    if x.shape[-1] != model.d:
        raise UsageError(f"state has trailing size {x.shape[-1]}, model expects d={model.d}")
    return x


def _check_finite(values: Array, x: Array, what: str) -> Array:
    if not np.all(np.isfinite(values)):
        raise NumericalFailure(f"non-finite {what} at x={x!r}", point=x)
    return values


def eval_drift(model: SdeModel, x) -> Array:
    """Evaluate ``b(x)``; raises :class:`NumericalFailure` on non-finite output."""
    x = _as_state(model, x)
    return _check_finite(np.asarray(model.drift(x), dtype=float), x, "drift")


def eval_diffusion(model: SdeModel, x) -> Array:
    """Evaluate ``sigma(x)`` with shape ``(..., d, m)``."""
    x = _as_state(model, x)
    return _check_finite(np.asarray(model.diffusion(x), dtype=float), x, "diffusion")


def finite_difference_jacobian(model: SdeModel, x) -> Array:
    """Central-difference jacobian of the diffusion, step ``1e-6 * max(1, |x_u|)``."""
    x = _as_state(model, x)
    cols = []
    for u in range(model.d):
        eps = 1e-6 * np.maximum(1.0, np.abs(x[..., u]))
        e = np.zeros(model.d)
        e[u] = 1.0
        step = eps[..., None] * e
        diff = np.asarray(model.diffusion(x + step)) - np.asarray(model.diffusion(x - step))
        cols.append(diff / (2.0 * eps[..., None, None]))
    return np.stack(cols, axis=-1)


def diffusion_jacobian(model: SdeModel, x) -> Array:
    """Jacobian ``[..., i, k, u] = d sigma^{(i,k)} / d x^u``.

    Uses the model's analytic jacobian when it has one, otherwise central
    finite differences.
    """
    x = _as_state(model, x)
    if model.diffusion_jacobian is not None:
        jac = np.asarray(model.diffusion_jacobian(x), dtype=float)
    else:
        jac = finite_difference_jacobian(model, x)
    return _check_finite(jac, x, "diffusion jacobian")


def lambda_all(sigma: Array, jac: Array) -> Array:
    """Stack of all ``Lambda^j sigma`` matrices, shape ``(..., m, d, m)``.

    ``out[..., j, i, k] = sum_u sigma[..., u, j] * jac[..., i, k, u]``.
    """
    return np.einsum("...uj,...iku->...jik", sigma, jac)


def lambda_sigma(model: SdeModel, x, j: int) -> Array:
    """``Lambda^j sigma(x)`` for the (0-based) noise column ``j``."""
    if not 0 <= j < model.m:
        raise UsageError(f"column index {j} outside [0, {model.m})")
    x = _as_state(model, x)
    sig = eval_diffusion(model, x)
    jac = diffusion_jacobian(model, x)
    return np.einsum("...u,...iku->...ik", sig[..., :, j], jac)


def gbm_exact(x0, mu: float, sigma0: float, T: float, wT):
    """Strong solution of ``dx = mu x dt + sigma0 x dw`` at time(s) ``T`` given ``w_T``."""
    T = np.asarray(T, dtype=float)
    if np.any(T < 0):
        raise UsageError("T must be non-negative")
    return np.asarray(x0) * np.exp((mu - 0.5 * sigma0**2) * T + sigma0 * np.asarray(wT))


# ---------------------------------------------------------------------------
# built-in models


def _paper_example(sigma0=0.35):
    def drift(x):
        return x * (1.0 - x**2)

    def diffusion(x):
        return (sigma0 * (1.0 - x**2))[..., None]

    def jacobian(x):
        return (-2.0 * sigma0 * x)[..., None, None]

    return SdeModel(
        name="paper-example", d=1, m=1, drift=drift, diffusion=diffusion,
        diffusion_jacobian=jacobian, rho=2.0, params={"sigma0": sigma0},
        commutative_noise=True, domain=ModelDomain.cube(-3.0, 3.0, 1),
    )


def _gbm(mu=1.0, sigma0=0.5):
    def drift(x):
        return mu * x

    def diffusion(x):
        return (sigma0 * x)[..., None]

    def jacobian(x):
        return np.full(x.shape + (1, 1), sigma0)

    def exact(x0, T, wT):
        return gbm_exact(x0, mu, sigma0, T, wT)

    return SdeModel(
        name="gbm", d=1, m=1, drift=drift, diffusion=diffusion,
        diffusion_jacobian=jacobian, rho=0.0, params={"mu": mu, "sigma0": sigma0},
        commutative_noise=True, domain=ModelDomain.cube(-5.0, 5.0, 1),
        exact_solution=exact,
    )


def _ginzburg_landau(sigma0=0.5):
    def drift(x):
        return x - x**3

    def diffusion(x):
        return (sigma0 * x)[..., None]

    def jacobian(x):
        return np.full(x.shape + (1, 1), sigma0)

    return SdeModel(
        name="ginzburg-landau", d=1, m=1, drift=drift, diffusion=diffusion,
        diffusion_jacobian=jacobian, rho=2.0, params={"sigma0": sigma0},
        commutative_noise=True, domain=ModelDomain.cube(-3.0, 3.0, 1),
    )


def _superlinear_2d(sigma0=0.3):
    # column 0: sigma0 * sqrt(1 + |x|^2) e_1;  column 1: sigma0 * (x_2, x_1).
    # (D col1) col0 != (D col0) col1, so the noise is non-commutative.
    def drift(x):
        return x - np.sum(x * x, axis=-1, keepdims=True) * x

    def diffusion(x):
        r = np.sqrt(1.0 + np.sum(x * x, axis=-1))
        out = np.zeros(x.shape + (2,))
        out[..., 0, 0] = sigma0 * r
        out[..., 0, 1] = sigma0 * x[..., 1]
        out[..., 1, 1] = sigma0 * x[..., 0]
        return out

    def jacobian(x):
        r = np.sqrt(1.0 + np.sum(x * x, axis=-1))
        out = np.zeros(x.shape + (2, 2))
        out[..., 0, 0, 0] = sigma0 * x[..., 0] / r
        out[..., 0, 0, 1] = sigma0 * x[..., 1] / r
        out[..., 0, 1, 1] = sigma0
        out[..., 1, 1, 0] = sigma0
        return out

    return SdeModel(
        name="superlinear-2d", d=2, m=2, drift=drift, diffusion=diffusion,
        diffusion_jacobian=jacobian, rho=2.0, params={"sigma0": sigma0},
        commutative_noise=False, domain=ModelDomain.cube(-2.0, 2.0, 2),
    )


BUILTINS = {
    "paper-example": _paper_example,
    "gbm": _gbm,
    "ginzburg-landau": _ginzburg_landau,
    "superlinear-2d": _superlinear_2d,
}


def builtin_parameters(name: str) -> Dict[str, float]:
    """Default parameter values of a built-in model."""
    return dict(make_builtin(name).params)


def make_builtin(name: str, **params) -> SdeModel:
    """Construct one of the bundled models by name.

    >>> make_builtin("paper-example", sigma0=0.35).rho
    2.0
    """
    try:
        factory = BUILTINS[name]
    except KeyError:
        raise UsageError(
            f"unknown model {name!r}; choose one of {', '.join(sorted(BUILTINS))}"
        ) from None
    try:
        return factory(**{k: float(v) for k, v in params.items()})
    except TypeError as exc:
        raise UsageError(f"bad parameters for model {name!r}: {exc}") from None
