"""NumPy fallback for the compiled kernels in ``_kernels.pyx``.

Same signatures and bit-identical results; used when the extension is not built
or ``QCAROBUST_PURE=1`` is set.
"""
from __future__ import annotations

import numpy as np

TOL = 1e-12


def _weights(v: int) -> np.ndarray:
    return (1 << np.arange(v - 1, -1, -1)).astype(np.int64)


def config_counts(conditions, outcome):
    conditions = np.asarray(conditions, dtype=np.int64)
    v = conditions.shape[1]
    idx = conditions @ _weights(v)
    counts = np.bincount(idx, minlength=1 << v).astype(np.int64)
    hits = np.bincount(idx, weights=np.asarray(outcome, dtype=np.int64),
                       minlength=1 << v).astype(np.int64)
    return counts, hits


def uniform_counts(draws, probs):
    draws = np.asarray(draws)
    cells = draws < np.asarray(probs)
    return config_counts(cells[:, :-1], cells[:, -1])


def _pass_mask(counts, hits, consistency, conf_n):
    return (counts >= conf_n) & (counts > 0) & (hits >= consistency * counts - TOL)


def result_indicator(counts, hits, consistency, conf_n, complex_mode):
    passed = _pass_mask(counts, hits, consistency, conf_n)
    if not passed.any():
        return False
    forbidden = ~passed if complex_mode else (~passed & (counts > 0))
    return bool(forbidden.any())


def uniform_indicator(draws, probs, consistency, conf_n, complex_mode):
    counts, hits = uniform_counts(draws, probs)
    return result_indicator(counts, hits, consistency, conf_n, complex_mode)


def grid_indicators(counts, hits, consistencies, conf_ns, complex_mode):
    counts = np.asarray(counts)[None, None, :]
    hits = np.asarray(hits)[None, None, :]
    cons = np.asarray(consistencies, dtype=float)[:, None, None]
    ns = np.asarray(conf_ns)[None, :, None]
    passed = (counts >= ns) & (counts > 0) & (hits >= cons * counts - TOL)
    if complex_mode:
        forbidden = ~passed
    else:
        forbidden = ~passed & (counts > 0)
    return (passed.any(axis=2) & forbidden.any(axis=2)).astype(np.uint8)
