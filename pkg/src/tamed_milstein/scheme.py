"""One-step maps and path integration.

Four schemes share one grid recursion on ``t_k = k T / n``:

* ``tamed-milstein``: ``x + f (b h + sigma dw + sum_{j,l} Lambda^j sigma^{(., l)} I[j, l])``
* ``tamed-euler``: the same without the iterated-integral term, ``theta = 1/2``
* ``milstein`` / ``euler``: the untamed versions (``f = 1``)

where ``f`` is the taming factor of :mod:`tamed_milstein.taming`.  Every
function here accepts leading batch axes, so a whole block of Monte Carlo
paths advances with one call per step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import UsageError
from .model import SdeModel, finite_difference_jacobian, lambda_all
from .noise import (
    ITER_MODES,
    LEVY_AREA,
    IncrementGrid,
    NoiseStream,
    StepRandomness,
    auto_mode,
    iterated_integrals,
    levy_area,
)
from .taming import TamingConfig, taming_factor

SCHEMES = ("tamed-milstein", "tamed-euler", "euler", "milstein")
TAMED = ("tamed-milstein", "tamed-euler")
MILSTEIN = ("tamed-milstein", "milstein")
OVERFLOW_GUARD = 1e150


@dataclass(frozen=True)
class SchemeConfig:
    kind: str
    n: int
    theta: Optional[float] = None
    T: float = 1.0
    x0: np.ndarray = field(default_factory=lambda: np.ones(1))

    def __post_init__(self):
        if self.kind not in SCHEMES:
            raise UsageError(f"unknown scheme {self.kind!r}; choose one of {', '.join(SCHEMES)}")
        if self.n < 1:
            raise UsageError("number of steps must be >= 1")
        if self.T <= 0:
            raise UsageError("horizon T must be positive")
        if self.kind == "tamed-euler":
            theta = 0.5
        elif self.theta is None:
            theta = 1.0
        else:
            theta = float(self.theta)
        if theta < 0.5:
            raise UsageError(f"theta must be >= 1/2, got {theta}")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "x0", np.atleast_1d(np.asarray(self.x0, dtype=float)))

    @property
    def h(self) -> float:
        return self.T / self.n

    def with_n(self, n: int) -> "SchemeConfig":
        return SchemeConfig(self.kind, n, self.theta, self.T, self.x0)


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # (..., len(times), d); NaN from first_bad_step on
    diverged: np.ndarray
    first_bad_step: np.ndarray  # -1 where the path never diverged

    @property
    def final(self) -> np.ndarray:
        return self.states[..., -1, :]


def kappa(n: int, t: float, T: float = 1.0) -> float:
    """Left grid point ``floor(n t / T) T / n`` of the step containing ``t``."""
    k = math.floor(n * t / T)
    return k * T / n


def _jacobian(model: SdeModel, x):
    if model.diffusion_jacobian is not None:
        return model.diffusion_jacobian(x)
    return finite_difference_jacobian(model, x)


def _step(model: SdeModel, kind: str, n: int, theta: float, x, dw, it, h: float):
    b = model.drift(x)
    sig = model.diffusion(x)
    incr = b * h + np.einsum("...ik,...k->...i", sig, dw)
    if kind in MILSTEIN:
        lam = lambda_all(sig, _jacobian(model, x))
        incr = incr + np.einsum("...jil,...jl->...i", lam, it)
    if kind in TAMED:
        f = taming_factor(TamingConfig(n=n, theta=theta, rho=model.rho), x)
        incr = f[..., None] * incr
    return x + incr


def _state(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return x.reshape(1) if x.ndim == 0 else x


def step_tamed_milstein(model: SdeModel, cfg: SchemeConfig, x, rnd: StepRandomness):
    """One tamed Milstein step from ``x`` with the given step randomness.

    Non-finite results are returned as they are; :func:`integrate` turns them
    into divergence flags.
    """
    with np.errstate(all="ignore"):
        return _step(model, "tamed-milstein", cfg.n, cfg.theta, _state(x), rnd.dw, rnd.iter, rnd.h)


def step_tamed_euler(model: SdeModel, cfg: SchemeConfig, x, rnd: StepRandomness):
    """One tamed Euler step (``theta = 1/2``, no iterated integrals)."""
    with np.errstate(all="ignore"):
        return _step(model, "tamed-euler", cfg.n, 0.5, _state(x), rnd.dw, None, rnd.h)


def step_classical(kind: str, model: SdeModel, x, rnd: StepRandomness):
    if kind not in ("euler", "milstein"):
        raise UsageError(f"classical step must be 'euler' or 'milstein', got {kind!r}")
    with np.errstate(all="ignore"):
        return _step(model, kind, 1, 1.0, _state(x), rnd.dw, rnd.iter, rnd.h)


def integrate(
    model: SdeModel,
    cfg: SchemeConfig,
    grid: IncrementGrid,
    iter_mode: Optional[str] = None,
    K: Optional[int] = None,
    stream: Optional[NoiseStream] = None,
    area: Optional[np.ndarray] = None,
    stride: int = 1,
    x0=None,
) -> Trajectory:
    """Apply the configured one-step map ``cfg.n`` times along ``grid``.

    ``grid.dw`` may carry leading path axes; ``x0`` (default ``cfg.x0``) is
    broadcast against them.  In ``levy-fourier`` mode the Levy areas are taken
    from ``area`` (shape ``(..., n, m, m)``) or drawn from ``stream``'s Levy
    substream.  Only every ``stride``-th state is stored.

    A path diverges when its state stops being finite or its norm exceeds
    ``1e150``; its remaining states are NaN.  Divergence is reported, never
    raised.
    """
    if grid.n != cfg.n or not math.isclose(grid.T, cfg.T):
        raise UsageError(f"increment grid (n={grid.n}, T={grid.T}) does not match scheme (n={cfg.n}, T={cfg.T})")
    if stride < 1 or cfg.n % stride:
        raise UsageError(f"stride {stride} does not divide n={cfg.n}")
    if grid.m != model.m:
        raise UsageError(f"grid noise dimension {grid.m} != model m={model.m}")
    mode = iter_mode or auto_mode(model.m, model.commutative_noise)
    if mode not in ITER_MODES:
        raise UsageError(f"unknown iterated-integral mode {mode!r}")
    dw = grid.dw
    batch = dw.shape[:-2]
    h = grid.h
    needs_iter = cfg.kind in MILSTEIN
    if needs_iter and mode == "levy-fourier" and model.m > 1 and area is None:
        if stream is None:
            raise UsageError("levy-fourier mode needs either precomputed areas or a stream")
        area = levy_area(dw, h, K, stream.with_substream(LEVY_AREA))

    x = np.broadcast_to(_state(cfg.x0 if x0 is None else x0), batch + (model.d,)).astype(float)
    n_rec = cfg.n // stride + 1
    states = np.empty(batch + (n_rec, model.d))
    states[..., 0, :] = x
    diverged = np.zeros(batch, dtype=bool)
    first_bad = np.full(batch, -1, dtype=np.int64)
    with np.errstate(all="ignore"):
        for k in range(cfg.n):
            dw_k = dw[..., k, :]
            it = None
            if needs_iter:
                a_k = None if area is None else area[..., k, :, :]
                it = iterated_integrals(dw_k, h, mode, area=a_k)
            x = _step(model, cfg.kind, cfg.n, cfg.theta, x, dw_k, it, h)
            bad = ~np.all(np.isfinite(x), axis=-1) | (np.sqrt(np.sum(x * x, axis=-1)) > OVERFLOW_GUARD)
            new = bad & ~diverged
            if np.any(new):
                first_bad = np.where(new, k + 1, first_bad)
                diverged = diverged | bad
            if np.any(diverged):
                x = np.where(diverged[..., None], np.nan, x)
            if (k + 1) % stride == 0:
                states[..., (k + 1) // stride, :] = x
    times = np.arange(n_rec) * (stride * cfg.T / cfg.n)
    return Trajectory(times=times, states=states, diverged=diverged, first_bad_step=first_bad)
