"""Vectorized numpy twins of the batch kernels.

These trace many replicate webs in lockstep instead of looping over them.
They are the fallback when numba is disabled and the baseline in
``benchmarks/bench_kernels.py``.
"""

import numpy as np

from .kernels import KIND_A, KIND_B, KIND_C, KIND_U
from .rng import MAIN, SECONDARY, arrow_value_np, ring_gap_np, site_key_np


def arrow_at_np(seeds, web, x, t, tau):
    """Arrow values at ``tau`` for arrays of (seed, x, t); ``web`` may be an array."""
    seeds = np.asarray(seeds, dtype=np.uint64)
    x = np.broadcast_to(np.asarray(x, dtype=np.int64), seeds.shape)
    t = np.broadcast_to(np.asarray(t, dtype=np.int64), seeds.shape)
    web = np.asarray(web)
    if web.ndim == 0:
        key = site_key_np(seeds, int(web), x, t)
    else:
        key = np.where(
            web == MAIN,
            site_key_np(seeds, MAIN, x, t),
            site_key_np(seeds, SECONDARY, x, t),
        )
    v = arrow_value_np(key, 0)
    s = np.zeros(seeds.shape)
    active = np.arange(seeds.size)
    j = 0
    flat_v = v.reshape(-1)
    flat_key = key.reshape(-1)
    flat_s = s.reshape(-1)
    while active.size:
        flat_s[active] += ring_gap_np(flat_key[active], j)
        rang = flat_s[active] <= tau
        active = active[rang]
        flat_v[active] = arrow_value_np(flat_key[active], j + 1)
        j += 1
    return v


def origin_paths_np(seeds, n, tau):
    seeds = np.asarray(seeds, dtype=np.uint64)
    out = np.zeros((seeds.size, n + 1), dtype=np.int64)
    x = np.zeros(seeds.size, dtype=np.int64)
    for i in range(n):
        x = x + arrow_at_np(seeds, MAIN, x, i, tau)
        out[:, i + 1] = x
    return out


def eval_event_seeds_np(seeds, kind, xl, xr, t0, t1, lo, hi, w, tau):
    seeds = np.asarray(seeds, dtype=np.uint64)
    m = seeds.size
    if kind == KIND_U:
        x = np.zeros(m, dtype=np.int64)
        base = np.zeros(m, dtype=np.int64)
        ok = np.zeros(m, dtype=bool)
        for t in range(t1):
            x = x + arrow_at_np(seeds, MAIN, x, t, tau)
            if t + 1 == t0:
                base = x.copy()
            if t + 1 >= t0:
                ok |= x - base >= w
        return ok
    if kind == KIND_A:
        x = np.full(m, xl, dtype=np.int64)
        for t in range(t0, t1):
            x = x + arrow_at_np(seeds, MAIN, x, t, tau)
        return x > w
    a = np.full(m, xl, dtype=np.int64)
    b = np.full(m, xr, dtype=np.int64)
    ok = (lo <= a) & (a <= hi) & (lo <= b) & (b <= hi)
    for t in range(t0, t1):
        va = arrow_at_np(seeds, MAIN, a, t, tau)
        together = a == b
        if kind == KIND_C:
            webs = np.where(together, SECONDARY, MAIN)
            vb = arrow_at_np(seeds, webs, b, t, tau)
        elif kind == KIND_B:
            vb = np.where(together, va, arrow_at_np(seeds, MAIN, b, t, tau))
        else:
            raise ValueError(f"unknown event kind {kind}")
        a = a + va
        b = b + vb
        ok &= (lo <= a) & (a <= hi) & (lo <= b) & (b <= hi)
    return ok
