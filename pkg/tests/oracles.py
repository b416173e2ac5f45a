"""Independent reference computations used by the tests."""

import numpy as np


def brute_force_levy_area(dw, h, substeps, samples, rng, chunk=500):
    """Levy area ``(I_12 - I_21) / 2`` of a finely discretised Brownian bridge.

    The 2-d path is conditioned on the endpoint increment ``dw`` and the
    iterated integrals are left-point Ito sums over ``substeps`` sub-intervals.
    """
    dw = np.asarray(dw, dtype=float)
    out = []
    t = np.arange(1, substeps + 1) / substeps
    for start in range(0, samples, chunk):
        k = min(chunk, samples - start)
        b = np.cumsum(rng.standard_normal((k, substeps, 2)) * np.sqrt(h / substeps), axis=1)
        w = b - t[None, :, None] * b[:, -1:, :] + t[None, :, None] * dw
        w_prev = np.concatenate([np.zeros((k, 1, 2)), w[:, :-1, :]], axis=1)
        inc = w - w_prev
        i12 = np.sum(w_prev[..., 0] * inc[..., 1], axis=1)
        i21 = np.sum(w_prev[..., 1] * inc[..., 0], axis=1)
        out.append(0.5 * (i12 - i21))
    return np.concatenate(out)


def chen_iterated_integrals(dw, iters):
    """Iterated integrals over the union of consecutive steps, accumulated in order.

    ``dw``: ``(r, m)`` step increments, ``iters``: ``(r, m, m)`` per-step ``I``.
    """
    m = dw.shape[1]
    total = np.zeros((m, m))
    w = np.zeros(m)
    for inc, it in zip(dw, iters):
        total += it + np.outer(w, inc)
        w = w + inc
    return total
