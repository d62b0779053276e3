"""The dynamical discrete web pair (main and secondary) and path tracing."""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from ._accel import quiet_overflow
from .errors import GeometryError, ParityError, ValidationError, WindowError
from .rng import MAIN, SECONDARY, site_key

WEB_IDS = {"main": MAIN, "secondary": SECONDARY, MAIN: MAIN, SECONDARY: SECONDARY}


def web_index(web_id) -> int:
    try:
        return WEB_IDS[web_id]
    except (KeyError, TypeError):
        raise ValidationError(f"unknown web id {web_id!r}; use 'main' or 'secondary'") from None


@dataclass(frozen=True, order=True)
class SiteAddress:
    """A point of the even sublattice: ``x + t`` must be even."""

    x: int
    t: int

    def __post_init__(self):
        if (self.x + self.t) % 2:
            raise ParityError(f"site ({self.x}, {self.t}) is not in Z^2_even")


@dataclass(frozen=True)
class WebPair:
    """Seeded handle on the main web and the independent secondary web.

    Holds no realization; every arrow is recomputed from ``seed`` on demand.
    """

    seed: int
    tau_max: float = 1.0

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2**64:
            raise ValidationError("seed must lie in [0, 2**64)")
        if not self.tau_max > 0:
            raise ValidationError("tau_max must be positive")

    @property
    def useed(self) -> np.uint64:
        return np.uint64(self.seed)

    def check_tau(self, tau: float) -> float:
        tau = float(tau)
        if not 0.0 <= tau <= self.tau_max:
            raise WindowError(f"tau={tau} outside [0, {self.tau_max}]")
        return tau

    def check_window(self, window) -> tuple[float, float]:
        a, b = (float(v) for v in window)
        if not 0.0 <= a < b <= self.tau_max:
            raise WindowError(f"window [{a}, {b}] not inside [0, {self.tau_max}] or empty")
        return a, b


@dataclass(frozen=True)
class ArrowStream:
    site: SiteAddress
    window_end: float
    ring_times: np.ndarray
    values: np.ndarray
    web_id: int = MAIN

    def __post_init__(self):
        if len(self.values) != len(self.ring_times) + 1:
            raise ValidationError("values must have one more entry than ring_times")

    def switch_times(self) -> np.ndarray:
        changed = self.values[1:] != self.values[:-1]
        return self.ring_times[changed]

    def to_rows(self):
        """CSV rows ``(ring_index, ring_time, value_after)``; ring 0 is the initial arrow."""
        rows = [(0, 0.0, int(self.values[0]))]
        for j, (r, v) in enumerate(zip(self.ring_times, self.values[1:]), start=1):
            rows.append((j, float(r), int(v)))
        return rows


@dataclass(frozen=True)
class PathTrace:
    origin: SiteAddress
    tau: float
    positions: np.ndarray = field(repr=False)

    @property
    def t_end(self) -> int:
        return self.origin.t + len(self.positions) - 1

    def at(self, t: int) -> int:
        return int(self.positions[t - self.origin.t])

    def times(self) -> np.ndarray:
        return np.arange(self.origin.t, self.t_end + 1)


def arrow_stream(web: WebPair, web_id, site: SiteAddress) -> ArrowStream:
    wid = web_index(web_id)
    if not isinstance(site, SiteAddress):
        site = SiteAddress(*site)
    with quiet_overflow():
        key = np.uint64(site_key(web.useed, wid, site.x, site.t))
        n = kernels.stream_length(key, web.tau_max)
        times = np.empty(n)
        values = np.empty(n + 1, dtype=np.int64)
        kernels.stream_fill(key, times, values)
    return ArrowStream(site, web.tau_max, times, values, wid)


def arrow_at(stream: ArrowStream, tau: float) -> int:
    """Right-continuous lookup: the value after every ring at or before ``tau``."""
    if not 0.0 <= tau <= stream.window_end:
        raise WindowError(f"tau={tau} outside [0, {stream.window_end}]")
    i = bisect.bisect_right(stream.ring_times.tolist(), tau)
    return int(stream.values[i])


def trace_path(web: WebPair, origin: SiteAddress, tau: float, t_end: int) -> PathTrace:
    if not isinstance(origin, SiteAddress):
        origin = SiteAddress(*origin)
    tau = web.check_tau(tau)
    if t_end < origin.t:
        raise GeometryError("t_end precedes the origin time")
    n = t_end - origin.t
    out = np.empty(n + 1, dtype=np.int64)
    with quiet_overflow():
        kernels.trace_path(web.useed, MAIN, origin.x, origin.t, n, tau, out)
    return PathTrace(origin, tau, out)


def trace_pair_noncoalescing(
    web: WebPair, left: SiteAddress, right: SiteAddress, tau: float, t_end: int, *, with_flags=False
):
    """Left path follows the main web; the right path follows it too except on
    steps where it sits on the left path, where it reads the secondary web.

    With ``with_flags`` also returns a boolean array marking those steps.
    """
    if not isinstance(left, SiteAddress):
        left = SiteAddress(*left)
    if not isinstance(right, SiteAddress):
        right = SiteAddress(*right)
    if left.t != right.t:
        raise GeometryError("left and right must start at the same time")
    if not left.x < right.x:
        raise GeometryError("left must lie strictly left of right")
    tau = web.check_tau(tau)
    if t_end < left.t:
        raise GeometryError("t_end precedes the start time")
    n = t_end - left.t
    outl = np.empty(n + 1, dtype=np.int64)
    outr = np.empty(n + 1, dtype=np.int64)
    flags = np.empty(n, dtype=np.bool_)
    with quiet_overflow():
        kernels.trace_pair(web.useed, left.x, right.x, left.t, n, tau, outl, outr, flags)
    pair = PathTrace(left, tau, outl), PathTrace(right, tau, outr)
    if with_flags:
        return pair + (flags,)
    return pair
