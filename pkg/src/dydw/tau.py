"""Exact sets of dynamical times on which a lattice event holds."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import kernels
from ._accel import quiet_overflow
from .errors import TieError, ValidationError
from .events import EventSpec, Region, RectangleStack, dependence_region, evaluate_event
from .web import WebPair

NO_SITE = (-1, 0, 0)


@dataclass
class TauIntervalSet:
    """Disjoint sorted half-open intervals ``[a_i, b_i)`` inside ``window``.

    ``start_sites[i]``/``end_sites[i]`` hold ``(web, x, t)`` of the arrow whose
    switch produced that endpoint, or ``(-1, 0, 0)`` for a window endpoint.
    An interval ending at the window end also covers that end point.
    """

    window: tuple[float, float]
    starts: np.ndarray
    ends: np.ndarray
    start_sites: np.ndarray = field(repr=False)
    end_sites: np.ndarray = field(repr=False)

    @classmethod
    def empty(cls, window):
        z = np.empty(0)
        zs = np.empty((0, 3), dtype=np.int64)
        return cls(tuple(window), z, z.copy(), zs, zs.copy())

    @property
    def intervals(self) -> list[tuple[float, float]]:
        return list(zip(self.starts.tolist(), self.ends.tolist()))

    def __len__(self):
        return len(self.starts)

    def is_empty(self) -> bool:
        return len(self.starts) == 0

    def measure(self) -> float:
        return float(np.sum(self.ends - self.starts))

    def contains(self, tau: float) -> bool:
        i = int(np.searchsorted(self.starts, tau, side="right")) - 1
        if i < 0:
            return False
        if tau < self.ends[i]:
            return True
        return tau == self.ends[i] == self.window[1]

    def contains_many(self, taus) -> np.ndarray:
        return np.array([self.contains(float(x)) for x in np.asarray(taus)], dtype=bool)

    def endpoints(self):
        """Switch-produced endpoints as ``(tau, (web, x, t))``, window ends excluded."""
        out = []
        for times, sites in ((self.starts, self.start_sites), (self.ends, self.end_sites)):
            for tau, site in zip(times.tolist(), sites.tolist()):
                if site[0] >= 0:
                    out.append((tau, tuple(site)))
        out.sort()
        return out

    def intersect(self, other: TauIntervalSet) -> TauIntervalSet:
        if tuple(other.window) != tuple(self.window):
            raise ValidationError("cannot intersect sets over different windows")
        s, e, ss, es = [], [], [], []
        i = j = 0
        while i < len(self) and j < len(other):
            if self.starts[i] >= other.starts[j]:
                lo, lo_site = self.starts[i], self.start_sites[i]
            else:
                lo, lo_site = other.starts[j], other.start_sites[j]
            if self.ends[i] <= other.ends[j]:
                hi, hi_site = self.ends[i], self.end_sites[i]
            else:
                hi, hi_site = other.ends[j], other.end_sites[j]
            if lo < hi:
                s.append(lo)
                e.append(hi)
                ss.append(lo_site)
                es.append(hi_site)
            if self.ends[i] <= other.ends[j]:
                i += 1
            else:
                j += 1
        if not s:
            return TauIntervalSet.empty(self.window)
        return TauIntervalSet(self.window, np.array(s), np.array(e), np.array(ss), np.array(es))

    def restrict(self, a: float, b: float) -> TauIntervalSet:
        """Clip to ``[a, b]``; cut points become window endpoints."""
        s, e, ss, es = [], [], [], []
        for k in range(len(self)):
            lo, hi = max(self.starts[k], a), min(self.ends[k], b)
            if lo < hi:
                s.append(lo)
                e.append(hi)
                ss.append(self.start_sites[k] if lo == self.starts[k] and lo > a else NO_SITE)
                es.append(self.end_sites[k] if hi == self.ends[k] and hi < b else NO_SITE)
        if not s:
            return TauIntervalSet.empty((a, b))
        return TauIntervalSet((a, b), np.array(s), np.array(e), np.array(ss, dtype=np.int64), np.array(es, dtype=np.int64))

    def to_rows(self):
        """CSV rows: index, a, b, then the producing sites of ``a`` and ``b``
        (blank for window endpoints)."""
        rows = []
        for i in range(len(self)):
            sw, sx, st = (int(v) for v in self.start_sites[i])
            ew, ex, et = (int(v) for v in self.end_sites[i])
            a_site = (sx, st, sw) if sw >= 0 else ("", "", "")
            b_site = (ex, et, ew) if ew >= 0 else ("", "", "")
            rows.append((i, repr(float(self.starts[i])), repr(float(self.ends[i])), *a_site, *b_site))
        return rows


CSV_HEADER = (
    "interval_index",
    "a",
    "b",
    "producing_site_x",
    "producing_site_t",
    "producing_site_web",
    "end_site_x",
    "end_site_t",
    "end_site_web",
)


class Switch(NamedTuple):
    tau: float
    web: int
    x: int
    t: int
    old: int
    new: int


@dataclass
class SwitchList:
    taus: np.ndarray
    rows: np.ndarray  # (web, x, t, old, new)

    def __len__(self):
        return len(self.taus)

    def __iter__(self):
        for tau, r in zip(self.taus.tolist(), self.rows.tolist()):
            yield Switch(tau, *r)

    def sites(self) -> np.ndarray:
        return self.rows[:, :3]


def switch_times(web: WebPair, region: Region, window) -> SwitchList:
    """All switches (rings that change the arrow) in ``region`` during ``(a, b]``."""
    a, b = web.check_window(window)
    webs, xs, ts = region.as_arrays()
    with quiet_overflow():
        n = kernels.region_switch_count(web.useed, webs, xs, ts, a, b)
        taus = np.empty(n)
        rows = np.empty((n, 5), dtype=np.int64)
        kernels.region_switch_fill(web.useed, webs, xs, ts, a, b, taus, rows)
    order = np.argsort(taus, kind="stable")
    taus, rows = taus[order], rows[order]
    if n > 1:
        dup = np.flatnonzero(np.diff(taus) == 0)
        if dup.size:
            i = dup[0]
            raise TieError(f"sites {tuple(rows[i, :3])} and {tuple(rows[i + 1, :3])} both switch at tau={taus[i]!r}")
    return SwitchList(taus, rows)


def _from_kernel(window, out) -> TauIntervalSet:
    starts, ends, ss, es, tie_time = out
    if not np.isnan(tie_time):
        raise TieError(f"two consulted arrows switch at tau={tie_time!r}")
    return TauIntervalSet(tuple(window), starts, ends, ss, es)


def tau_interval_set(web: WebPair, spec: EventSpec, window=None, *, method: str = "sweep") -> TauIntervalSet:
    """Exact ``{tau in window : event}``.

    ``method="sweep"`` walks forward from one switch of a consulted arrow to
    the next.  ``method="region"`` enumerates every switch in the dependence
    region and re-evaluates the event once per gap; it is the slow reference.
    """
    window = web.check_window(window if window is not None else (0.0, web.tau_max))
    a, b = window
    params = spec.params()
    if method == "sweep":
        with quiet_overflow():
            return _from_kernel(window, kernels.event_intervals(web.useed, *params, a, b))
    if method != "region":
        raise ValidationError(f"unknown method {method!r}")
    sw = switch_times(web, dependence_region(spec), window)
    inside = sw.taus < b
    taus = np.concatenate([[a], sw.taus[inside]])
    values = np.empty(taus.size, dtype=np.bool_)
    with quiet_overflow():
        kernels.eval_event_taus(web.useed, *params, taus, values)
    s, e, ss, es = [], [], [], []
    cur = False
    sites = np.vstack([np.array([NO_SITE], dtype=np.int64), sw.rows[inside, :3]])
    for i in range(taus.size):
        if values[i] != cur:
            (s if values[i] else e).append(taus[i])
            (ss if values[i] else es).append(sites[i])
            cur = values[i]
    if cur:
        e.append(b)
        es.append(NO_SITE)
    if not s:
        return TauIntervalSet.empty(window)
    return TauIntervalSet(window, np.array(s), np.array(e), np.array(ss, dtype=np.int64), np.array(es, dtype=np.int64))


def exceptional_search_sub(web: WebPair, stack: RectangleStack, n: int, window=None) -> TauIntervalSet:
    """``E_n``: dynamical times at which ``C_0, ..., C_n`` all hold."""
    if not 0 <= n <= stack.k_max:
        raise ValidationError(f"n={n} outside 0..{stack.k_max}")
    out = None
    for k in range(n + 1):
        cur = tau_interval_set(web, EventSpec("C", k, stack), window)
        out = cur if out is None else out.intersect(cur)
        if out.is_empty():
            break
    return out


@dataclass
class SuperSearch:
    intervals: list[tuple[float, float]]
    depth: int
    k_list: tuple[int, ...]

    @property
    def complete(self) -> bool:
        return self.depth == len(self.k_list)


def exceptional_search_super(web: WebPair, stack: RectangleStack, k_list, window=None) -> SuperSearch:
    """Nested closed intervals ``[a_j, b_j]`` with ``[a_{j+1}, b_{j+1}]`` inside
    the longest component of ``E_hat_k intersected with [a_j, b_j]``.

    A component ``[s, e)`` ending before the current window end is closed off
    at the largest float below ``e``.
    """
    k_list = tuple(int(k) for k in k_list)
    if any(b <= a for a, b in zip(k_list, k_list[1:])):
        raise ValidationError("k_list must be strictly increasing")
    a, b = web.check_window(window if window is not None else (0.0, web.tau_max))
    intervals = [(a, b)]
    for depth, k in enumerate(k_list):
        spec = EventSpec("A_hat", k, stack)
        if a == b:
            # the nest has shrunk to a single float
            if not evaluate_event(web, spec, a):
                return SuperSearch(intervals, depth, k_list)
            intervals.append((a, b))
            continue
        hits = tau_interval_set(web, spec, (a, b))
        if hits.is_empty():
            return SuperSearch(intervals, depth, k_list)
        i = int(np.argmax(hits.ends - hits.starts))
        s, e = float(hits.starts[i]), float(hits.ends[i])
        if e < b:
            e = float(np.nextafter(e, -np.inf))
        a, b = s, e
        intervals.append((a, b))
    return SuperSearch(intervals, len(k_list), k_list)


def pivotal_endpoint_census(web: WebPair, spec: EventSpec, window=None):
    """Count switch-produced endpoints of the Upsilon interval set and attribute
    each one to its switching site.  Returns ``(count, Counter[(web, x, t)])``."""
    if spec.kind != "Upsilon":
        raise ValidationError("census needs an Upsilon event")
    ivs = tau_interval_set(web, spec, window)
    counts = Counter(site for _, site in ivs.endpoints())
    return sum(counts.values()), counts
