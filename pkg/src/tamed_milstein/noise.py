"""Reproducible Brownian increments and iterated Ito integrals.

Every random draw comes from a :class:`NoiseStream`, a ``(seed, path_index,
substream)`` triple mapped onto an independent Philox counter stream.  Paths
never share state, so Monte Carlo loops can be split across workers in any
way without changing a single output bit.

Increment arrays have shape ``(..., n, m)`` (optional leading path axes);
iterated integral matrices ``I[j, l] = int (w^j_s - w^j_{t_k}) dw^l_s`` are
split into the symmetric part, which is a function of the increments alone,
and the antisymmetric Levy area.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import UsageError

# substream ids
INCREMENTS = 0
LEVY_AREA = 1
INITIAL_STATE = 2

ITER_MODES = ("scalar", "commutative", "levy-fourier")


@dataclass(frozen=True)
class NoiseStream:
    seed: int
    path_index: int = 0
    substream: int = INCREMENTS

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.path_index, self.substream))
        return np.random.Generator(np.random.Philox(ss))

    def with_substream(self, substream: int) -> "NoiseStream":
        return NoiseStream(self.seed, self.path_index, substream)


@dataclass(frozen=True)
class IncrementGrid:
    n: int
    m: int
    T: float
    dw: np.ndarray

    @property
    def h(self) -> float:
        return self.T / self.n


@dataclass(frozen=True)
class StepRandomness:
    """Brownian increment and iterated integrals of one step (optionally batched)."""

    dw: np.ndarray
    iter: np.ndarray
    h: float
    area: Optional[np.ndarray] = None

    @classmethod
    def build(cls, dw, h, mode="scalar", area=None, K=None, stream=None):
        dw = np.asarray(dw, dtype=float)
        if mode == "levy-fourier" and area is None:
            area = levy_area(dw, h, K, stream)
        return cls(dw=dw, iter=iterated_integrals(dw, h, mode, K, stream, area=area), h=h, area=area)


def generate_increments(stream: NoiseStream, n: int, m: int, T: float) -> IncrementGrid:
    """``n x m`` independent ``N(0, T/n)`` draws, deterministic in ``stream``."""
    if n < 1 or T <= 0:
        raise UsageError("need n >= 1 and T > 0")
    rng = stream.generator()
    dw = rng.standard_normal((n, m)) * math.sqrt(T / n)
    return IncrementGrid(n=n, m=m, T=float(T), dw=dw)


def generate_path_increments(seed: int, paths: Sequence[int], n: int, m: int, T: float) -> IncrementGrid:
    """Stack the increment grids of several paths along a leading axis."""
    dw = np.stack([generate_increments(NoiseStream(seed, int(i)), n, m, T).dw for i in paths])
    return IncrementGrid(n=n, m=m, T=float(T), dw=dw)


def _check_factor(n: int, factor: int):
    if factor < 1 or n % factor:
        raise UsageError(f"coarsening factor {factor} does not divide {n}")


def _coarsen_dw(dw: np.ndarray, factor: int) -> np.ndarray:
    # halve pairwise while the factor is even, then sum odd blocks left to right;
    # this makes coarsen(coarsen(g, 2), 2) bitwise equal to coarsen(g, 4)
    while factor % 2 == 0:
        dw = dw[..., 0::2, :] + dw[..., 1::2, :]
        factor //= 2
    if factor > 1:
        blocks = dw.reshape(dw.shape[:-2] + (dw.shape[-2] // factor, factor, dw.shape[-1]))
        acc = blocks[..., 0, :]
        for r in range(1, factor):
            acc = acc + blocks[..., r, :]
        dw = acc
    return dw


def coarsen(fine: IncrementGrid, factor: int) -> IncrementGrid:
    """Sum blocks of ``factor`` consecutive increments (no resampling)."""
    _check_factor(fine.n, factor)
    if factor == 1:
        return fine
    return IncrementGrid(n=fine.n // factor, m=fine.m, T=fine.T, dw=_coarsen_dw(fine.dw, factor))


def _join_area(dw_a, area_a, dw_b, area_b):
    # Chen relation for the antisymmetric part of two consecutive steps
    cross = dw_a[..., :, None] * dw_b[..., None, :]
    return dw_a + dw_b, area_a + area_b + 0.5 * (cross - np.swapaxes(cross, -1, -2))


def coarsen_area(dw: np.ndarray, area: np.ndarray, factor: int):
    """Coarsen increments ``(..., n, m)`` and Levy areas ``(..., n, m, m)`` together.

    The returned increments are bitwise identical to :func:`coarsen` output and
    the areas are the exact Levy areas of the merged steps.
    """
    _check_factor(dw.shape[-2], factor)
    while factor % 2 == 0:
        dw, area = _join_area(dw[..., 0::2, :], area[..., 0::2, :, :], dw[..., 1::2, :], area[..., 1::2, :, :])
        factor //= 2
    if factor > 1:
        n, m = dw.shape[-2], dw.shape[-1]
        dwb = dw.reshape(dw.shape[:-2] + (n // factor, factor, m))
        ab = area.reshape(area.shape[:-3] + (n // factor, factor, m, m))
        acc_dw, acc_a = dwb[..., 0, :], ab[..., 0, :, :]
        for r in range(1, factor):
            acc_dw, acc_a = _join_area(acc_dw, acc_a, dwb[..., r, :], ab[..., r, :, :])
        dw, area = acc_dw, acc_a
    return dw, area


def default_levy_terms(h: float) -> int:
    """Fourier depth keeping the per-step truncation RMS error below ``h**1.5``."""
    return max(1, math.ceil(1.0 / (2.0 * math.pi**2 * h)))


def _rng(stream) -> np.random.Generator:
    if isinstance(stream, np.random.Generator):
        return stream
    if stream is None:
        raise UsageError("a NoiseStream is required to sample Levy areas")
    return stream.generator()


def levy_area(dw, h: float, K: Optional[int] = None, stream=None) -> np.ndarray:
    """Sample Levy areas ``A = (I - I^T) / 2`` conditionally on the increments.

    Truncated Fourier expansion of the Brownian bridge with ``K`` terms; the
    neglected tail of every pair ``j < l`` is replaced by an independent
    Gaussian carrying the exact remaining conditional variance.  The result is
    antisymmetric with an exactly zero diagonal.

    ``dw`` has shape ``(..., m)``; ``stream`` is a :class:`NoiseStream` or a
    ``numpy.random.Generator``.
    """
    dw = np.asarray(dw, dtype=float)
    batch, m = dw.shape[:-1], dw.shape[-1]
    K = default_levy_terms(h) if K is None else int(K)
    if K < 1:
        raise UsageError("number of Levy-area terms must be >= 1")
    if m == 1:
        return np.zeros(batch + (1, 1))
    rng = _rng(stream)
    iu, ju = np.triu_indices(m, k=1)
    a = math.sqrt(2.0 / h) * dw
    acc = np.zeros(batch + (len(iu),))
    size = max(1, int(np.prod(batch, dtype=np.int64)) * m)
    chunk = max(1, min(K, 4_000_000 // size))
    for k0 in range(1, K + 1, chunk):
        k1 = min(K + 1, k0 + chunk)
        ks = np.arange(k0, k1, dtype=float).reshape((-1,) + (1,) * (len(batch) + 1))
        X = rng.standard_normal((k1 - k0,) + batch + (m,))
        B = rng.standard_normal((k1 - k0,) + batch + (m,)) + a
        term = (X[..., iu] * B[..., ju] - B[..., iu] * X[..., ju]) / ks
        acc += term.sum(axis=0)
    tail = math.pi**2 / 6.0 - float(np.sum(1.0 / np.arange(1, K + 1, dtype=float) ** 2))
    tail_sd = np.sqrt(max(tail, 0.0) * (2.0 + a[..., iu] ** 2 + a[..., ju] ** 2))
    acc += tail_sd * rng.standard_normal(batch + (len(iu),))
    upper = np.zeros(batch + (m, m))
    upper[..., iu, ju] = (h / (2.0 * math.pi)) * acc
    return upper - np.swapaxes(upper, -1, -2)


def symmetric_part(dw, h: float) -> np.ndarray:
    """``(dw dw^T - h Id) / 2``, the increment-determined half of ``I``."""
    dw = np.asarray(dw, dtype=float)
    m = dw.shape[-1]
    return 0.5 * (dw[..., :, None] * dw[..., None, :] - h * np.eye(m))


def iterated_integrals(dw, h: float, mode: str = "scalar", K: Optional[int] = None,
                       stream=None, area: Optional[np.ndarray] = None) -> np.ndarray:
    """Iterated Ito integrals ``I[j, l]`` over one step of length ``h``.

    ``scalar`` (``m = 1``) and ``commutative`` return the symmetric part only,
    which is all the Milstein correction needs under commutative noise.
    ``levy-fourier`` adds a Levy area, either the supplied ``area`` or one
    sampled with :func:`levy_area`.
    """
    dw = np.asarray(dw, dtype=float)
    if dw.ndim == 0:
        dw = dw.reshape(1)
    m = dw.shape[-1]
    if mode not in ITER_MODES:
        raise UsageError(f"unknown iterated-integral mode {mode!r}")
    if mode == "scalar" and m != 1:
        raise UsageError("scalar iterated-integral mode requires m = 1")
    sym = symmetric_part(dw, h)
    if mode != "levy-fourier" or m == 1:
        return sym
    if area is None:
        area = levy_area(dw, h, K, stream)
    return sym + area


def auto_mode(m: int, commutative: bool) -> str:
    if m == 1:
        return "scalar"
    return "commutative" if commutative else "levy-fourier"
