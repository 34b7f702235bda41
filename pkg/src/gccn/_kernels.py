"""Hot inner loops: row gather/scatter-add and segment sums over edge lists.

Every kernel exists twice: a numba-compiled loop and a pure-numpy fallback.
Both process entries in the same order, so results are bitwise identical.
The active path is chosen at import time by the environment variable
``GCCN_NUMBA`` ("0" selects the numpy fallback; default is the compiled
path, falling back automatically when numba is unavailable).
``benchmarks/bench_kernels.py`` times the two paths against each other.
"""

from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAS_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        if len(args) == 1 and callable(args[0]):
            return args[0]
        return wrap


def _scatter_add_rows_numpy(out, idx, rows):
    np.add.at(out, idx, rows)
    return out


@njit(cache=True)
def _scatter_add_rows_numba(out, idx, rows):
    for e in range(idx.shape[0]):
        i = idx[e]
        for f in range(rows.shape[1]):
            out[i, f] += rows[e, f]
    return out


def _scatter_add_rows_weighted_numpy(out, idx, rows, weights):
    np.add.at(out, idx, rows * weights[:, None])
    return out


@njit(cache=True)
def _scatter_add_rows_weighted_numba(out, idx, rows, weights):
    for e in range(idx.shape[0]):
        i = idx[e]
        w = weights[e]
        for f in range(rows.shape[1]):
            out[i, f] += w * rows[e, f]
    return out


def _edge_segment_sum_numpy(h, src, dst, n_out):
    out = np.zeros((n_out, h.shape[1]))
    np.add.at(out, dst, h[src])
    return out


@njit(cache=True)
def _edge_segment_sum_numba(h, src, dst, n_out):
    out = np.zeros((n_out, h.shape[1]))
    for e in range(src.shape[0]):
        s = src[e]
        d = dst[e]
        for f in range(h.shape[1]):
            out[d, f] += h[s, f]
    return out


def _use_numba() -> bool:
    flag = os.environ.get("GCCN_NUMBA", "1").strip().lower()
    return HAS_NUMBA and flag not in ("0", "false", "off")


USING_NUMBA = _use_numba()

if USING_NUMBA:
    scatter_add_rows = _scatter_add_rows_numba
    scatter_add_rows_weighted = _scatter_add_rows_weighted_numba
    edge_segment_sum = _edge_segment_sum_numba
else:
    scatter_add_rows = _scatter_add_rows_numpy
    scatter_add_rows_weighted = _scatter_add_rows_weighted_numpy
    edge_segment_sum = _edge_segment_sum_numpy
