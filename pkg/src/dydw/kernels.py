"""Hot loops: arrow lookup, path tracing, event evaluation, sticking labels.

All functions here are numba kernels (see ``_accel``).  Inputs are plain
ints/floats/arrays so the same source runs compiled or interpreted.

Event kinds are encoded as small ints and described by seven integers
``(xl, xr, t0, t1, lo, hi, w)``:

* ``KIND_B``: coalescing paths from ``(xl, t0)`` and ``(xr, t0)`` stay in
  ``[lo, hi]`` for every ``t`` in ``[t0, t1]``.
* ``KIND_C``: same bounds for the non-coalescing pair (the right path reads
  the secondary web whenever it sits on the left path).
* ``KIND_A``: the path from ``(xl, t0)`` ends strictly above ``w`` at ``t1``.
* ``KIND_U``: the origin path satisfies
  ``max_{t0 <= t <= t1} S(t) - S(t0) >= w``.

Every evaluation also returns the earliest switch time, after ``tau`` and no
later than ``limit``, among the sites it consulted; the event indicator is
constant until then.
"""

import numpy as np

from ._accel import njit
from .rng import MAIN, SECONDARY, arrow_value, ring_gap, site_key

KIND_B = 0
KIND_C = 1
KIND_A = 2
KIND_U = 3

INF = np.inf


@njit
def arrow_at_key(key, tau):
    v = arrow_value(key, 0)
    s = 0.0
    j = 0
    while True:
        s += ring_gap(key, j)
        if s > tau:
            return v
        j += 1
        v = arrow_value(key, j)


@njit
def arrow_next(key, tau, limit):
    """Arrow at ``tau`` and the first switch time in ``(tau, limit]`` (inf if none)."""
    v = arrow_value(key, 0)
    s = 0.0
    j = 0
    while True:
        s += ring_gap(key, j)
        if s > tau:
            break
        j += 1
        v = arrow_value(key, j)
    # s is now the first ring strictly after tau
    while s <= limit:
        if arrow_value(key, j + 1) != v:
            return v, s
        j += 1
        s += ring_gap(key, j)
    return v, INF


@njit
def rang_between(key, tau1, tau2):
    """True iff the clock rings in ``(tau1, tau2]``."""
    s = 0.0
    j = 0
    while True:
        s += ring_gap(key, j)
        if s > tau2:
            return False
        if s > tau1:
            return True
        j += 1


@njit
def stream_length(key, tau_max):
    s = ring_gap(key, 0)
    n = 0
    while s <= tau_max:
        n += 1
        s += ring_gap(key, n)
    return n


@njit
def stream_fill(key, times, values):
    values[0] = arrow_value(key, 0)
    s = 0.0
    for j in range(times.shape[0]):
        s += ring_gap(key, j)
        times[j] = s
        values[j + 1] = arrow_value(key, j + 1)


@njit
def trace_path(seed, web, x0, t0, n, tau, out):
    x = x0
    out[0] = x
    for i in range(n):
        x += arrow_at_key(site_key(seed, web, x, t0 + i), tau)
        out[i + 1] = x


@njit
def trace_pair(seed, xl, xr, t0, n, tau, outl, outr, used_secondary):
    a = xl
    b = xr
    outl[0] = a
    outr[0] = b
    for i in range(n):
        t = t0 + i
        va = arrow_at_key(site_key(seed, MAIN, a, t), tau)
        if b == a:
            vb = arrow_at_key(site_key(seed, SECONDARY, b, t), tau)
            used_secondary[i] = True
        else:
            vb = arrow_at_key(site_key(seed, MAIN, b, t), tau)
            used_secondary[i] = False
        a += va
        b += vb
        outl[i + 1] = a
        outr[i + 1] = b


@njit
def _lookup(seed, web, x, t, tau, limit, best, bw, bx, bt, tie):
    v, ns = arrow_next(site_key(seed, web, x, t), tau, limit)
    if ns < best:
        return v, ns, web, x, t, False
    if ns == best and ns < INF and (web != bw or x != bx or t != bt):
        return v, best, bw, bx, bt, True
    return v, best, bw, bx, bt, tie


@njit
def eval_event(seed, kind, xl, xr, t0, t1, lo, hi, w, tau, limit):
    """Evaluate an event at ``tau``.

    Returns ``(ok, next_switch, web, x, t, tie)`` where ``(web, x, t)`` is the
    consulted site owning ``next_switch`` and ``tie`` flags two distinct
    consulted sites switching at that same instant.
    """
    best = INF
    bw = -1
    bx = 0
    bt = 0
    tie = False
    ok = False
    if kind == KIND_U:
        x = 0
        base = 0
        for t in range(t1):
            v, best, bw, bx, bt, tie = _lookup(seed, MAIN, x, t, tau, limit, best, bw, bx, bt, tie)
            x += v
            if t + 1 == t0:
                base = x
            if t + 1 >= t0 and x - base >= w:
                ok = True
                break
    elif kind == KIND_A:
        x = xl
        for t in range(t0, t1):
            v, best, bw, bx, bt, tie = _lookup(seed, MAIN, x, t, tau, limit, best, bw, bx, bt, tie)
            x += v
        ok = x > w
    else:
        a = xl
        b = xr
        ok = lo <= a <= hi and lo <= b <= hi
        if ok:
            for t in range(t0, t1):
                va, best, bw, bx, bt, tie = _lookup(seed, MAIN, a, t, tau, limit, best, bw, bx, bt, tie)
                if b == a:
                    if kind == KIND_C:
                        vb, best, bw, bx, bt, tie = _lookup(
                            seed, SECONDARY, b, t, tau, limit, best, bw, bx, bt, tie
                        )
                    else:
                        vb = va
                else:
                    vb, best, bw, bx, bt, tie = _lookup(seed, MAIN, b, t, tau, limit, best, bw, bx, bt, tie)
                a += va
                b += vb
                if a < lo or a > hi or b < lo or b > hi:
                    ok = False
                    break
    return ok, best, bw, bx, bt, tie


@njit
def eval_event_seeds(seeds, kind, xl, xr, t0, t1, lo, hi, w, tau, out):
    for i in range(seeds.shape[0]):
        out[i] = eval_event(seeds[i], kind, xl, xr, t0, t1, lo, hi, w, tau, -1.0)[0]


@njit
def eval_event_taus(seed, kind, xl, xr, t0, t1, lo, hi, w, taus, out):
    for i in range(taus.shape[0]):
        out[i] = eval_event(seed, kind, xl, xr, t0, t1, lo, hi, w, taus[i], -1.0)[0]


@njit
def event_intervals(seed, kind, xl, xr, t0, t1, lo, hi, w, a, b):
    """Exact ``{tau in [a, b) : event}`` as half-open intervals.

    Returns ``(starts, ends, start_sites, end_sites, tie_time)``.  Site rows are
    ``(web, x, t)`` with ``web = -1`` marking a window endpoint.  ``tie_time`` is
    NaN unless two consulted sites switched simultaneously.
    """
    starts = [0.0]
    ends = [0.0]
    sites = [0]
    starts.pop()
    ends.pop()
    sites.pop()
    tie_time = np.nan
    ok, nxt, sw, sx, st, tie = eval_event(seed, kind, xl, xr, t0, t1, lo, hi, w, a, b)
    if tie and nxt < b:
        tie_time = nxt
    cur = ok
    if cur:
        starts.append(a)
        sites.append(-1)
        sites.append(0)
        sites.append(0)
    while nxt < b and np.isnan(tie_time):
        tau = nxt
        pw = sw
        px = sx
        pt = st
        ok, nxt, sw, sx, st, tie = eval_event(seed, kind, xl, xr, t0, t1, lo, hi, w, tau, b)
        if tie and nxt < b:
            tie_time = nxt
        if ok != cur:
            if cur:
                ends.append(tau)
            else:
                starts.append(tau)
            sites.append(pw)
            sites.append(px)
            sites.append(pt)
            cur = ok
    if cur:
        ends.append(b)
        sites.append(-1)
        sites.append(0)
        sites.append(0)
    n = len(starts)
    s_arr = np.empty(n)
    e_arr = np.empty(n)
    s_sites = np.empty((n, 3), dtype=np.int64)
    e_sites = np.empty((n, 3), dtype=np.int64)
    for i in range(n):
        s_arr[i] = starts[i]
        e_arr[i] = ends[i]
        for c in range(3):
            s_sites[i, c] = sites[6 * i + c]
            e_sites[i, c] = sites[6 * i + 3 + c]
    return s_arr, e_arr, s_sites, e_sites, tie_time


@njit
def region_switch_count(seed, webs, xs, ts, a, b):
    total = 0
    for i in range(xs.shape[0]):
        key = site_key(seed, webs[i], xs[i], ts[i])
        v = arrow_value(key, 0)
        s = 0.0
        j = 0
        while True:
            s += ring_gap(key, j)
            if s > b:
                break
            nv = arrow_value(key, j + 1)
            if s > a and nv != v:
                total += 1
            v = nv
            j += 1
    return total


@njit
def region_switch_fill(seed, webs, xs, ts, a, b, times, rows):
    """Switches in ``(a, b]``; ``rows`` gets ``(web, x, t, old, new)``."""
    k = 0
    for i in range(xs.shape[0]):
        key = site_key(seed, webs[i], xs[i], ts[i])
        v = arrow_value(key, 0)
        s = 0.0
        j = 0
        while True:
            s += ring_gap(key, j)
            if s > b:
                break
            nv = arrow_value(key, j + 1)
            if s > a and nv != v:
                times[k] = s
                rows[k, 0] = webs[i]
                rows[k, 1] = xs[i]
                rows[k, 2] = ts[i]
                rows[k, 3] = v
                rows[k, 4] = nv
                k += 1
            v = nv
            j += 1


@njit
def rang_sites(seed, webs, xs, ts, tau1, tau2, out):
    for i in range(xs.shape[0]):
        out[i] = rang_between(site_key(seed, webs[i], xs[i], ts[i]), tau1, tau2)


# sticking -------------------------------------------------------------------

LABEL_LL = 1
LABEL_LR = 2
LABEL_RL = 4
LABEL_RR = 8


@njit
def quad_trace(seed, xl, xr, t0, n, tau1, tau2, paths, labels):
    """Trace ``(Y_l, Y_r)`` at ``tau1`` and ``tau2`` and label sticking steps.

    ``paths`` rows: ``Y_l^tau1, Y_r^tau1, Y_l^tau2, Y_r^tau2``.  ``labels[m]``
    is a bitmask of LABEL_* flags for step ``m``.
    """
    l1 = xl
    r1 = xr
    l2 = xl
    r2 = xr
    paths[0, 0] = l1
    paths[1, 0] = r1
    paths[2, 0] = l2
    paths[3, 0] = r2
    for m in range(n):
        t = t0 + m
        lab = 0
        if l1 == l2 and not rang_between(site_key(seed, MAIN, l1, t), tau1, tau2):
            lab |= LABEL_LL
        if l1 == r2 and r2 != l2 and not rang_between(site_key(seed, MAIN, l1, t), tau1, tau2):
            lab |= LABEL_LR
        if l2 == r1 and r1 != l1 and not rang_between(site_key(seed, MAIN, l2, t), tau1, tau2):
            lab |= LABEL_RL
        if r1 == r2:
            if r1 != l1 and r1 != l2:
                if not rang_between(site_key(seed, MAIN, r1, t), tau1, tau2):
                    lab |= LABEL_RR
            elif r1 == l1 and r1 == l2:
                if not rang_between(site_key(seed, SECONDARY, r1, t), tau1, tau2):
                    lab |= LABEL_RR
        labels[m] = lab

        va1 = arrow_at_key(site_key(seed, MAIN, l1, t), tau1)
        if r1 == l1:
            vb1 = arrow_at_key(site_key(seed, SECONDARY, r1, t), tau1)
        else:
            vb1 = arrow_at_key(site_key(seed, MAIN, r1, t), tau1)
        va2 = arrow_at_key(site_key(seed, MAIN, l2, t), tau2)
        if r2 == l2:
            vb2 = arrow_at_key(site_key(seed, SECONDARY, r2, t), tau2)
        else:
            vb2 = arrow_at_key(site_key(seed, MAIN, r2, t), tau2)
        l1 += va1
        r1 += vb1
        l2 += va2
        r2 += vb2
        paths[0, m + 1] = l1
        paths[1, m + 1] = r1
        paths[2, m + 1] = l2
        paths[3, m + 1] = r2


@njit
def reference_trace(seed, x0, t0, n, tau1, tau2, paths, stick):
    """Coalescing-web pair ``S^tau1, S^tau2`` from one site; ``stick[m]`` marks
    steps where both sit together and the shared clock did not ring."""
    p = x0
    q = x0
    paths[0, 0] = p
    paths[1, 0] = q
    for m in range(n):
        t = t0 + m
        kp = site_key(seed, MAIN, p, t)
        if p == q:
            stick[m] = not rang_between(kp, tau1, tau2)
        else:
            stick[m] = False
        p += arrow_at_key(kp, tau1)
        q += arrow_at_key(site_key(seed, MAIN, q, t), tau2)
        paths[0, m + 1] = p
        paths[1, m + 1] = q


@njit
def first_false(flags):
    for i in range(flags.shape[0]):
        if not flags[i]:
            return i
    return flags.shape[0]


@njit
def delta0_seeds(seeds, xl, xr, t0, n, tau1, tau2, ref_out, star_out):
    """First sticking-run lengths for the reference pair (from the origin) and
    the rr-pair (from the corners); censored values equal ``n``."""
    paths = np.empty((4, n + 1), dtype=np.int64)
    labels = np.empty(n, dtype=np.uint8)
    ref_paths = np.empty((2, n + 1), dtype=np.int64)
    stick = np.empty(n, dtype=np.bool_)
    rr = np.empty(n, dtype=np.bool_)
    for i in range(seeds.shape[0]):
        reference_trace(seeds[i], 0, 0, n, tau1, tau2, ref_paths, stick)
        ref_out[i] = first_false(stick)
        quad_trace(seeds[i], xl, xr, t0, n, tau1, tau2, paths, labels)
        for m in range(n):
            rr[m] = (labels[m] & LABEL_RR) != 0
        star_out[i] = first_false(rr)


@njit
def sticking_totals_seeds(seeds, xl, xr, t0, n, tau1, tau2, out):
    """Number of sticking steps (any label) per replicate."""
    paths = np.empty((4, n + 1), dtype=np.int64)
    labels = np.empty(n, dtype=np.uint8)
    for i in range(seeds.shape[0]):
        quad_trace(seeds[i], xl, xr, t0, n, tau1, tau2, paths, labels)
        c = 0
        for m in range(n):
            if labels[m] != 0:
                c += 1
        out[i] = c


@njit
def origin_paths_seeds(seeds, n, tau, out):
    buf = np.empty(n + 1, dtype=np.int64)
    for i in range(seeds.shape[0]):
        trace_path(seeds[i], MAIN, 0, 0, n, tau, buf)
        for j in range(n + 1):
            out[i, j] = buf[j]


@njit
def arrow_at_seeds(seeds, web, x, t, tau, out):
    for i in range(seeds.shape[0]):
        out[i] = arrow_at_key(site_key(seeds[i], web, x, t), tau)
