"""Monte Carlo strong-error studies, convergence-order fits and moment sweeps.

Strong errors are estimated against a coupled reference: for every path the
Brownian increments are drawn once on the finest grid (``n_ref`` steps) and
every coarser grid sums blocks of them, so each coarse path and the
reference see the same Brownian motion.  The reference is either the same
scheme on the fine grid or, for models with a closed-form solution, the
exact solution at the same Brownian endpoint.

Paths are processed in fixed-size chunks; workers only change which thread
handles a chunk, never the arithmetic, so results are bit-for-bit the same
for any worker count.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, List, Optional, Sequence

import numpy as np

from .errors import NumericalFailure, UsageError
from .model import SdeModel
from .noise import (
    INITIAL_STATE,
    LEVY_AREA,
    IncrementGrid,
    NoiseStream,
    auto_mode,
    coarsen_area,
    _coarsen_dw,
    generate_path_increments,
    levy_area,
)
from .scheme import MILSTEIN, SchemeConfig, integrate

CHUNK_SIZE = 512


@dataclass
class StudyConfig:
    model: SdeModel
    scheme: str = "tamed-milstein"
    p: float = 2.0
    n_list: Sequence[int] = (16, 32, 64, 128, 256, 512)
    n_ref: int = 8192
    M: int = 4096
    seed: int = 42
    T: float = 1.0
    x0: Optional[Sequence[float]] = None
    theta: Optional[float] = None
    batches: int = 10
    reference: str = "scheme"  # or "exact"
    iter_mode: Optional[str] = None
    levy_terms: Optional[int] = None
    sup_grid: bool = False
    workers: int = 1
    p1: Optional[float] = None
    # (generator, d) -> initial state, drawn per path from its own substream
    x0_sampler: Optional[Callable[[np.random.Generator, int], np.ndarray]] = None
    chunk_size: int = CHUNK_SIZE

    def __post_init__(self):
        self.n_list = [int(n) for n in self.n_list]
        if not self.n_list:
            raise UsageError("n_list must not be empty")
        if any(b <= a for a, b in zip(self.n_list, self.n_list[1:])):
            raise UsageError("n_list must be strictly increasing")
        if self.n_list[0] < 1:
            raise UsageError("step counts must be positive")
        if self.p < 2:
            raise UsageError(f"error exponent p must be >= 2, got {self.p}")
        if self.p1 is not None and not self.p < self.p1:
            raise UsageError(f"p={self.p} must be below p1={self.p1}")
        if self.M < 1 or self.batches < 2 or self.batches > self.M:
            raise UsageError("need M >= batches >= 2")
        if self.reference not in ("scheme", "exact"):
            raise UsageError(f"reference must be 'scheme' or 'exact', got {self.reference!r}")
        if self.reference == "exact" and self.model.exact_solution is None:
            raise UsageError(f"model {self.model.name!r} has no exact solution")
        if self.workers < 1 or self.chunk_size < 1:
            raise UsageError("workers and chunk_size must be positive")
        self.x0 = np.ones(self.model.d) if self.x0 is None else np.atleast_1d(np.asarray(self.x0, dtype=float))
        if self.x0.shape != (self.model.d,):
            raise UsageError(f"x0 must have {self.model.d} components")
        SchemeConfig(self.scheme, 1, self.theta, self.T)  # validates scheme/theta/T

    def validate_levels(self):
        """Checks linking the step counts to the reference grid."""
        for n in self.n_list:
            if self.n_ref % n:
                raise UsageError(f"n_ref={self.n_ref} is not divisible by n={n}")
        if self.n_ref < 16 * max(self.n_list):
            raise UsageError(f"n_ref={self.n_ref} must be at least 16 * max(n_list)")

    def scheme_config(self, n: int) -> SchemeConfig:
        return SchemeConfig(self.scheme, n, self.theta, self.T, self.x0)

    @property
    def mode(self) -> str:
        return self.iter_mode or auto_mode(self.model.m, self.model.commutative_noise)


@dataclass(frozen=True)
class ErrorRecord:
    n: int
    error: float
    stderr: float
    diverged_count: int


@dataclass(frozen=True)
class MomentRecord:
    n: int
    moment: float
    stderr: float
    diverged_count: int


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    r2: float


# ---------------------------------------------------------------------------
# path simulation


def _chunks(M: int, size: int) -> List[range]:
    return [range(a, min(M, a + size)) for a in range(0, M, size)]


def _map_chunks(cfg: StudyConfig, fn, M: int):
    chunks = _chunks(M, cfg.chunk_size)
    if cfg.workers == 1 or len(chunks) == 1:
        return [fn(c) for c in chunks]
    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        return list(pool.map(fn, chunks))


def _initial_states(cfg: StudyConfig, paths: range) -> np.ndarray:
    if cfg.x0_sampler is None:
        return np.broadcast_to(cfg.x0, (len(paths), cfg.model.d))
    return np.stack([
        np.asarray(cfg.x0_sampler(NoiseStream(cfg.seed, i, INITIAL_STATE).generator(), cfg.model.d), dtype=float)
        for i in paths
    ])


def _path_noise(cfg: StudyConfig, paths: range, n: int):
    """Increments on an ``n``-step grid and, when needed, matching Levy areas."""
    grid = generate_path_increments(cfg.seed, paths, n, cfg.model.m, cfg.T)
    area = None
    if cfg.scheme in MILSTEIN and cfg.mode == "levy-fourier" and cfg.model.m > 1:
        area = np.stack([
            levy_area(grid.dw[k], grid.h, cfg.levy_terms, NoiseStream(cfg.seed, i, LEVY_AREA))
            for k, i in enumerate(paths)
        ])
    return grid, area


def _coarse(grid: IncrementGrid, area, n: int):
    factor = grid.n // n
    if area is None:
        return IncrementGrid(n, grid.m, grid.T, _coarsen_dw(grid.dw, factor)), None
    dw, a = coarsen_area(grid.dw, area, factor)
    return IncrementGrid(n, grid.m, grid.T, dw), a


def _norm(v):
    return np.sqrt(np.sum(v * v, axis=-1))


def _error_chunk(cfg: StudyConfig, levels: Sequence[int], paths: range):
    grid, area = _path_noise(cfg, paths, cfg.n_ref)
    x0 = _initial_states(cfg, paths)
    n_grid = max(levels) if cfg.sup_grid else 1
    if cfg.reference == "exact":
        g = _coarse(grid, None, n_grid)[0]
        w = np.cumsum(g.dw, axis=-2)
        times = np.arange(1, n_grid + 1) * (cfg.T / n_grid)
        ref = cfg.model.exact_solution(x0[:, None, :], times[:, None], w)
        ref = np.concatenate([x0[:, None, :], ref], axis=1)
    else:
        traj = integrate(cfg.model, cfg.scheme_config(cfg.n_ref), grid, cfg.mode, cfg.levy_terms,
                         area=area, stride=cfg.n_ref // n_grid, x0=x0)
        if np.any(traj.diverged):
            bad = paths[int(np.argmax(traj.diverged))]
            raise NumericalFailure(f"reference path {bad} diverged at n_ref={cfg.n_ref}")
        ref = traj.states
    out = {}
    for n in levels:
        g, a = _coarse(grid, area, n)
        traj = integrate(cfg.model, cfg.scheme_config(n), g, cfg.mode, cfg.levy_terms, area=a,
                         stride=1 if cfg.sup_grid else n, x0=x0)
        if cfg.sup_grid:
            r = ref[:, :: n_grid // n, :]
            dev = _norm(traj.states - r) ** cfg.p  # (P, n + 1)
        else:
            dev = _norm(traj.final - ref[:, -1, :]) ** cfg.p
        out[n] = (dev, traj.diverged)
    return out


def _batch_slices(M: int, batches: int):
    return np.array_split(np.arange(M), batches)


def _root_mean(dev, valid, p):
    # per-time means over valid paths, root p, sup over the time axis if present
    mean = np.sum(np.where(valid.reshape(valid.shape + (1,) * (dev.ndim - 1)), dev, 0.0), axis=0) / np.sum(valid)
    return float(np.max(mean ** (1.0 / p)))


def _error_record(cfg: StudyConfig, n: int, dev: np.ndarray, diverged: np.ndarray) -> ErrorRecord:
    valid = ~diverged
    if not np.any(valid):
        raise NumericalFailure(f"all {cfg.M} paths diverged at n={n}")
    error = _root_mean(dev, valid, cfg.p)
    per_batch = [_root_mean(dev[idx], valid[idx], cfg.p) for idx in _batch_slices(cfg.M, cfg.batches)
                 if np.any(valid[idx])]
    stderr = float(np.std(per_batch, ddof=1) / math.sqrt(len(per_batch))) if len(per_batch) > 1 else float("nan")
    return ErrorRecord(n=n, error=error, stderr=stderr, diverged_count=int(np.sum(diverged)))


def strong_errors(cfg: StudyConfig, levels: Optional[Iterable[int]] = None) -> List[ErrorRecord]:
    """Strong ``L^p`` errors ``(E|x_T^ref - x_T^n|^p)^(1/p)`` for every level.

    All levels share one pass over the paths, so the reference is simulated
    once.  With ``cfg.sup_grid`` the error is the maximum over the coarse grid
    times of the per-time errors.
    """
    levels = list(cfg.n_list if levels is None else levels)
    for n in levels:
        if n < 1 or cfg.n_ref % n:
            raise UsageError(f"n={n} does not divide n_ref={cfg.n_ref}")
    if cfg.sup_grid and any(max(levels) % n for n in levels):
        raise UsageError("sup-grid errors need every level to divide the largest one")
    parts = _map_chunks(cfg, lambda paths: _error_chunk(cfg, levels, paths), cfg.M)
    records = []
    for n in sorted(levels):
        dev = np.concatenate([part[n][0] for part in parts])
        diverged = np.concatenate([part[n][1] for part in parts])
        records.append(_error_record(cfg, n, dev, diverged))
    return records


def strong_error(cfg: StudyConfig, n: int) -> ErrorRecord:
    return strong_errors(cfg, [n])[0]


# ---------------------------------------------------------------------------
# moment and one-step sweeps


def _base_level(n_list: Sequence[int]) -> int:
    return int(np.lcm.reduce([int(n) for n in n_list]))


def _sweep_chunk(cfg: StudyConfig, n_list, q, paths: range, one_step: bool):
    base = _base_level(n_list)
    grid, area = _path_noise(cfg, paths, base)
    x0 = _initial_states(cfg, paths)
    out = {}
    for n in n_list:
        g, a = _coarse(grid, area, n)
        traj = integrate(cfg.model, cfg.scheme_config(n), g, cfg.mode, cfg.levy_terms, area=a,
                         stride=1 if one_step else n, x0=x0)
        if one_step:
            vals = _norm(np.diff(traj.states, axis=-2)) ** q  # (P, n)
        else:
            vals = _norm(traj.final) ** q
        out[n] = (vals, traj.diverged)
    return out


def _sweep(cfg: StudyConfig, q: float, n_list, one_step: bool) -> List[MomentRecord]:
    n_list = sorted(int(n) for n in (cfg.n_list if n_list is None else n_list))
    if q < 2:
        raise UsageError(f"moment order q must be >= 2, got {q}")
    parts = _map_chunks(cfg, lambda paths: _sweep_chunk(cfg, n_list, q, paths, one_step), cfg.M)
    records = []
    for n in n_list:
        vals = np.concatenate([part[n][0] for part in parts])
        diverged = np.concatenate([part[n][1] for part in parts])
        valid = ~diverged

        def estimate(idx):
            v = vals[idx][valid[idx]]
            if v.size == 0:
                return float("nan")
            mean = np.mean(v, axis=0)
            return float(np.max(mean))

        est = estimate(slice(None))
        per_batch = [estimate(idx) for idx in _batch_slices(cfg.M, cfg.batches) if np.any(valid[idx])]
        with np.errstate(over="ignore", invalid="ignore"):  # huge but finite moments of untamed schemes
            stderr = float(np.std(per_batch, ddof=1) / math.sqrt(len(per_batch))) if len(per_batch) > 1 else float("nan")
        records.append(MomentRecord(n=n, moment=est, stderr=stderr, diverged_count=int(np.sum(diverged))))
    return records


def moment_sweep(cfg: StudyConfig, q: float, n_list: Optional[Sequence[int]] = None) -> List[MomentRecord]:
    """Monte Carlo estimates of ``E|x_T^n|^q`` with batch standard errors.

    Diverged paths are excluded from the estimate and counted.  All levels are
    driven by coarsenings of one Brownian path per sample.
    """
    return _sweep(cfg, q, n_list, one_step=False)


def one_step_sweep(cfg: StudyConfig, q: float = 2.0, n_list: Optional[Sequence[int]] = None) -> List[MomentRecord]:
    """``max_k E|x_{t_{k+1}}^n - x_{t_k}^n|^q`` for each step count."""
    return _sweep(cfg, q, n_list, one_step=True)


# ---------------------------------------------------------------------------
# rate fitting


def loglog_fit(n, values) -> RateFit:
    """Least-squares line through ``(log2 n, log2 value)``; slope as fitted."""
    n = np.asarray(n, dtype=float)
    v = np.asarray(values, dtype=float)
    if n.size < 2:
        raise UsageError("need at least two points for a log-log fit")
    if np.any(~np.isfinite(v)) or np.any(v <= 0) or np.any(n <= 0):
        raise UsageError("log-log fit needs positive finite values")
    x, y = np.log2(n), np.log2(v)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_res = float(np.sum(resid**2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        r2 = 1.0 if ss_res <= 1e-24 else 0.0
    else:
        r2 = 1.0 - ss_res / ss_tot
    return RateFit(slope=float(slope), intercept=float(intercept), r2=r2)


def fit_rate(records, force: bool = False) -> RateFit:
    """Convergence order from error records (or ``(n, error)`` pairs).

    The order is the negated slope of ``log2(error)`` against ``log2(n)``.
    Records with diverged paths are skipped unless ``force`` is set.
    """
    pairs = []
    for r in records:
        if isinstance(r, ErrorRecord):
            if r.diverged_count and not force:
                continue
            pairs.append((r.n, r.error))
        else:
            pairs.append((r[0], r[1]))
    if len(pairs) < 2:
        raise UsageError("need at least two usable error records to fit a rate")
    n, err = zip(*pairs)
    if any(not e > 0 for e in err):
        raise UsageError("errors must be strictly positive to fit a rate")
    fit = loglog_fit(n, err)
    return RateFit(slope=-fit.slope if fit.slope else 0.0, intercept=fit.intercept, r2=fit.r2)


# ---------------------------------------------------------------------------
# CSV output

STUDY_HEADER = ["model", "scheme", "p", "n", "n_ref", "paths", "error", "stderr", "diverged", "seed"]
MOMENT_HEADER = ["model", "scheme", "q", "n", "paths", "moment", "stderr", "diverged", "seed"]


def fmt(x: float) -> str:
    return f"{x:.17g}"


def _write(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def study_csv(cfg: StudyConfig, records: Sequence[ErrorRecord]) -> str:
    return _write(STUDY_HEADER, [
        [cfg.model.name, cfg.scheme, fmt(cfg.p), r.n, cfg.n_ref, cfg.M, fmt(r.error), fmt(r.stderr),
         r.diverged_count, cfg.seed]
        for r in records
    ])


def moment_csv(cfg: StudyConfig, q: float, records: Sequence[MomentRecord]) -> str:
    return _write(MOMENT_HEADER, [
        [cfg.model.name, cfg.scheme, fmt(q), r.n, cfg.M, fmt(r.moment), fmt(r.stderr), r.diverged_count, cfg.seed]
        for r in records
    ])
