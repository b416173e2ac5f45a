"""Sampling-based checks of the coefficient conditions behind the scheme.

Each check draws points (or pairs of points) in a box, evaluates the ratio
``LHS / RHS-without-L`` of one inequality and reports the largest value seen
as the estimated constant ``L``.  Sampling can only refute a condition, never
prove it, so a pass means "no counterexample in this box".

Unbounded ratios are not always visible inside a single box: the ratio of the
coercivity condition for a strongly noisy model grows like ``|x|^2`` yet may
stay under any fixed cap on a moderate box.  Every check therefore also
re-evaluates the same relative sample on boxes scaled by 2, 4 and 8; a maximum
that still grows by more than 50% on the last doubling is reported as
unbounded and fails the check.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .errors import UsageError
from .model import ModelDomain, SdeModel, _as_state, diffusion_jacobian
from .noise import NoiseStream

L_CAP = 1e6
GROWTH_SCALES = (1.0, 2.0, 4.0, 8.0)
GROWTH_LIMIT = 1.5
LOCAL_SCALES = (1e-1, 1e-3)
MIN_PAIR_DISTANCE = 1e-8


@dataclass(frozen=True)
class CheckReport:
    assumption: str
    passed: bool
    estimated_L: float
    worst_point: np.ndarray
    worst_partner: Optional[np.ndarray]
    samples: int
    growth: float
    domain: ModelDomain
    seed: int

    @property
    def unbounded(self) -> bool:
        return not self.growth <= GROWTH_LIMIT


def _unit_points(stream: NoiseStream, samples: int, d: int, which: int) -> np.ndarray:
    # substream per array keeps a smaller sample an exact prefix of a larger one
    return NoiseStream(stream.seed, stream.path_index, which).generator().random((samples, d))


def _directions(stream: NoiseStream, samples: int, d: int) -> np.ndarray:
    u = NoiseStream(stream.seed, stream.path_index, 2).generator().standard_normal((samples, d))
    norm = np.linalg.norm(u, axis=1, keepdims=True)
    return np.where(norm > 0, u / np.where(norm > 0, norm, 1.0), np.eye(d)[:1])


def _points(domain: ModelDomain, unit: np.ndarray, scale: float) -> np.ndarray:
    centre = 0.5 * (domain.lower + domain.upper)
    half = 0.5 * (domain.upper - domain.lower) * scale
    return centre + (2.0 * unit - 1.0) * half


def _pairs(domain: ModelDomain, stream: NoiseStream, samples: int, d: int, scale: float):
    """Mixed global / local pairs; index ``i % 3`` selects the kind."""
    x = _points(domain, _unit_points(stream, samples, d, 0), scale)
    y = _points(domain, _unit_points(stream, samples, d, 1), scale)
    u = _directions(stream, samples, d)
    kind = np.arange(samples) % 3
    for k, eps in enumerate(LOCAL_SCALES, start=1):
        sel = kind == k
        y[sel] = x[sel] + eps * scale * u[sel]
    close = np.linalg.norm(x - y, axis=1) < MIN_PAIR_DISTANCE
    y[close] = x[close] + LOCAL_SCALES[-1] * scale * u[close]
    return x, y


def _hs(a: np.ndarray, axes) -> np.ndarray:
    return np.sqrt(np.sum(a * a, axis=axes))


def _report(name, ratio_fn, sampler, domain, samples, stream, L_cap) -> CheckReport:
    maxima = []
    worst = None
    with np.errstate(all="ignore"):
        for scale in GROWTH_SCALES:
            pts = sampler(scale)
            ratio = ratio_fn(*pts)
            ratio = np.where(np.isnan(ratio), np.inf, ratio)
            i = int(np.argmax(ratio))
            maxima.append(float(ratio[i]))
            if worst is None:
                worst = tuple(p[i] for p in pts)
    est = max(0.0, maxima[0])
    last, prev = maxima[-1], maxima[-2]
    if not np.isfinite(last):
        growth = np.inf
    elif last <= 0 or prev <= 0:
        growth = 1.0 if last <= max(prev, 0.0) else np.inf
    else:
        growth = last / prev
    passed = bool(np.isfinite(est) and est <= L_cap and growth <= GROWTH_LIMIT)
    return CheckReport(
        assumption=name, passed=passed, estimated_L=est, worst_point=worst[0],
        worst_partner=worst[1] if len(worst) > 1 else None, samples=samples,
        growth=float(growth), domain=domain, seed=stream.seed,
    )


def _setup(model: SdeModel, domain, samples, stream):
    domain = model.domain if domain is None else domain
    if domain.lower.shape != (model.d,):
        raise UsageError(f"domain must have {model.d} components")
    if samples < 1:
        raise UsageError("need at least one sample")
    return domain, stream or NoiseStream(0)


def _dot(a, b):
    return np.sum(a * b, axis=-1)


def check_a2(model: SdeModel, p0: float, domain: Optional[ModelDomain] = None, samples: int = 10_000,
             stream: Optional[NoiseStream] = None, L_cap: float = L_CAP) -> CheckReport:
    """Coercivity: ``2 x.b(x) + (p0 - 1)|sigma(x)|^2 <= L (1 + |x|^2)``."""
    if p0 < 2:
        raise UsageError(f"p0 must be >= 2, got {p0}")
    domain, stream = _setup(model, domain, samples, stream)
    unit = _unit_points(stream, samples, model.d, 0)

    def ratio(x):
        lhs = 2.0 * _dot(x, model.drift(x)) + (p0 - 1.0) * _hs(model.diffusion(x), (-2, -1)) ** 2
        return lhs / (1.0 + _dot(x, x))

    return _report("A2", ratio, lambda s: (_points(domain, unit, s),), domain, samples, stream, L_cap)


def check_a3(model: SdeModel, p1: float, domain: Optional[ModelDomain] = None, samples: int = 10_000,
             stream: Optional[NoiseStream] = None, L_cap: float = L_CAP) -> CheckReport:
    """One-sided Lipschitz: ``2(x-y).(b(x)-b(y)) + (p1-1)|sigma(x)-sigma(y)|^2 <= L|x-y|^2``."""
    if not p1 > 2:
        raise UsageError(f"p1 must be > 2, got {p1}")
    domain, stream = _setup(model, domain, samples, stream)

    def ratio(x, y):
        dx = x - y
        ds = model.diffusion(x) - model.diffusion(y)
        lhs = 2.0 * _dot(dx, model.drift(x) - model.drift(y)) + (p1 - 1.0) * _hs(ds, (-2, -1)) ** 2
        return lhs / _dot(dx, dx)

    return _report("A3", ratio, lambda s: _pairs(domain, stream, samples, model.d, s),
                   domain, samples, stream, L_cap)


def drift_jacobian(model: SdeModel, x) -> np.ndarray:
    """Central-difference ``Db(x)``, shape ``(..., d, d)``, step ``1e-6 * max(1, |x_u|)``."""
    x = _as_state(model, x)
    cols = []
    for u in range(model.d):
        eps = 1e-6 * np.maximum(1.0, np.abs(x[..., u]))
        step = eps[..., None] * np.eye(model.d)[u]
        cols.append((model.drift(x + step) - model.drift(x - step)) / (2.0 * eps[..., None]))
    return np.stack(cols, axis=-1)


def check_derivative_regularity(model: SdeModel, rho: Optional[float] = None,
                                domain: Optional[ModelDomain] = None, samples: int = 10_000,
                                stream: Optional[NoiseStream] = None,
                                L_cap: float = L_CAP) -> Tuple[CheckReport, CheckReport]:
    """Local Lipschitz bounds on ``Db`` and on each ``D sigma^{(j)}``.

    ``|Db(x) - Db(y)| <= L (1 + |x| + |y|)^(rho - 1) |x - y|`` and
    ``|D sigma^{(j)}(x) - D sigma^{(j)}(y)| <= L (1 + |x| + |y|)^((rho - 2) / 2) |x - y|``,
    both in Hilbert-Schmidt norm; the second is maximised over columns.
    """
    rho = model.rho if rho is None else float(rho)
    domain, stream = _setup(model, domain, samples, stream)

    def weight(x, y, power):
        return (1.0 + np.linalg.norm(x, axis=-1) + np.linalg.norm(y, axis=-1)) ** power

    def ratio_a4(x, y):
        num = _hs(drift_jacobian(model, x) - drift_jacobian(model, y), (-2, -1))
        return num / (weight(x, y, rho - 1.0) * np.linalg.norm(x - y, axis=-1))

    def ratio_a5(x, y):
        diff = diffusion_jacobian(model, x) - diffusion_jacobian(model, y)  # (..., d, m, d)
        num = np.max(_hs(diff, (-3, -1)), axis=-1)
        return num / (weight(x, y, (rho - 2.0) / 2.0) * np.linalg.norm(x - y, axis=-1))

    def sampler(s):
        return _pairs(domain, stream, samples, model.d, s)

    return (
        _report("A4", ratio_a4, sampler, domain, samples, stream, L_cap),
        _report("A5", ratio_a5, sampler, domain, samples, stream, L_cap),
    )


def check_all(model: SdeModel, p0: float, p1: float, domain: Optional[ModelDomain] = None,
              samples: int = 10_000, stream: Optional[NoiseStream] = None, L_cap: float = L_CAP):
    a4, a5 = check_derivative_regularity(model, None, domain, samples, stream, L_cap)
    return [
        check_a2(model, p0, domain, samples, stream, L_cap),
        check_a3(model, p1, domain, samples, stream, L_cap),
        a4,
        a5,
    ]
