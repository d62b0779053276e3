"""Rectangle stacks and the lattice events evaluated on them."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from ._accel import quiet_overflow
from .errors import GeometryError, HorizonError, ValidationError
from .web import WebPair

KINDS = ("B", "C", "A_hat", "Upsilon")


def round_out_even(v: float) -> int:
    """Smallest even integer >= v (v >= 0); ``round`` guards float noise like 12.000000000000002."""
    return 2 * math.ceil(round(v, 9) / 2)


def stack_width(gamma: float, k: int) -> int:
    """``d_k = 2 (floor(gamma^k / 2) + 1)``."""
    return 2 * (math.floor(gamma**k / 2 * (1 + 1e-13)) + 1)


def super_width(alpha: float, d: int) -> int:
    """``w_k = 2 (floor(alpha sqrt(log(d^2) d^2) / 2) + 1)``, natural log."""
    return 2 * (math.floor(alpha * math.sqrt(math.log(d * d) * d * d) / 2) + 1)


@dataclass(frozen=True)
class RectangleStack:
    """Diffusively growing rectangle stack.

    ``d[k]`` and ``w[k]`` are tabulated for ``0 <= k <= k_max + 1`` and the lower
    edge times ``t[k]`` for ``0 <= k <= k_max + 2``.  ``left``/``right`` are the
    (possibly skewed) half-widths of each rectangle.
    """

    gamma: float
    k_max: int
    width_alpha: float = 1.0
    skew: tuple[float, float] = (1.0, 1.0)
    d: tuple[int, ...] = field(init=False, repr=False)
    t: tuple[int, ...] = field(init=False, repr=False)
    w: tuple[int, ...] = field(init=False, repr=False)
    left: tuple[int, ...] = field(init=False, repr=False)
    right: tuple[int, ...] = field(init=False, repr=False)

    def __post_init__(self):
        if not self.gamma > 1:
            raise ValidationError("gamma must exceed 1")
        if self.k_max < 0:
            raise ValidationError("k_max must be non-negative")
        if not self.width_alpha > 0:
            raise ValidationError("width_alpha must be positive")
        c_l, c_r = self.skew
        if not (c_l > 0 and c_r > 0):
            raise ValidationError("skew factors must be positive")
        d = tuple(stack_width(self.gamma, k) for k in range(self.k_max + 2))
        t = [0]
        for dk in d:
            t.append(t[-1] + dk * dk)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "t", tuple(t))
        object.__setattr__(self, "w", tuple(super_width(self.width_alpha, dk) for dk in d))
        if (c_l, c_r) == (1.0, 1.0):
            left = right = d
        else:
            left = tuple(round_out_even(c_l * dk) for dk in d)
            right = tuple(round_out_even(c_r * dk) for dk in d)
        object.__setattr__(self, "left", left)
        object.__setattr__(self, "right", right)

    @property
    def horizon(self) -> int:
        """Last path time covered by ``sigma_gamma``: ``t_{k_max + 1}``."""
        return self.t[self.k_max + 1]

    def corners(self, k: int) -> tuple[tuple[int, int], tuple[int, int]]:
        """``l_k`` and ``r_k`` (upper corners of rectangle ``k - 1``)."""
        if not 1 <= k <= self.k_max:
            raise HorizonError(f"corner index {k} outside 1..{self.k_max}")
        return (-self.left[k - 1], self.t[k]), (self.right[k - 1], self.t[k])

    def hat_corners(self, k: int) -> tuple[tuple[int, int], tuple[int, int]]:
        if not 1 <= k <= self.k_max:
            raise HorizonError(f"corner index {k} outside 1..{self.k_max}")
        return (-self.w[k - 1], self.t[k]), (self.w[k - 1], self.t[k])

    def rows(self):
        """Audit rows ``(k, d_k, t_k, w_k)``."""
        return [(k, self.d[k], self.t[k], self.w[k]) for k in range(self.k_max + 1)]


def skew_stack(stack: RectangleStack, c_left: float, c_right: float) -> RectangleStack:
    if not (c_left > 0 and c_right > 0):
        raise ValidationError("skew factors must be positive")
    return replace(stack, skew=(float(c_left), float(c_right)))


def sigma_gamma(stack: RectangleStack, t: int) -> int:
    """Right edge of the stack at path time ``t``."""
    if t < 0:
        raise ValidationError("t must be non-negative")
    if t > stack.horizon:
        raise HorizonError(f"t={t} beyond stack horizon {stack.horizon}")
    k = int(np.searchsorted(stack.t, t, side="right")) - 1
    return stack.right[k]


@dataclass(frozen=True)
class EventSpec:
    kind: str
    k: int
    stack: RectangleStack

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown event kind {self.kind!r}")
        lowest = 0 if self.kind in ("B", "C") else 1
        if self.k < lowest:
            raise ValidationError(f"event {self.kind} needs k >= {lowest}")
        if self.k > self.stack.k_max:
            raise HorizonError(f"k={self.k} beyond k_max={self.stack.k_max}")

    def params(self) -> tuple[int, int, int, int, int, int, int, int]:
        """Kernel encoding ``(kind, xl, xr, t0, t1, lo, hi, w)``."""
        s, k = self.stack, self.k
        if self.kind in ("B", "C") and k == 0:
            return kernels.KIND_B, 0, 0, 0, s.t[1], -s.left[0], s.right[0], 0
        if self.kind in ("B", "C"):
            (xl, tk), (xr, _) = s.corners(k)
            code = kernels.KIND_B if self.kind == "B" else kernels.KIND_C
            return code, xl, xr, tk, s.t[k + 1], -s.left[k], s.right[k], 0
        if self.kind == "A_hat":
            (xl, tk), _ = s.hat_corners(k)
            return kernels.KIND_A, xl, 0, tk, s.t[k + 1], 0, 0, s.w[k]
        return kernels.KIND_U, 0, 0, s.t[k - 1], s.t[k], 0, 0, s.w[k]

    @property
    def uses_secondary(self) -> bool:
        return self.kind == "C" and self.k >= 1

    def label(self) -> str:
        return f"{self.kind}{self.k}"


def evaluate_event(web: WebPair, spec: EventSpec, tau: float) -> bool:
    tau = web.check_tau(tau)
    with quiet_overflow():
        return bool(kernels.eval_event(web.useed, *spec.params(), tau, -1.0)[0])


def evaluate_event_many(web: WebPair, spec: EventSpec, taus) -> np.ndarray:
    taus = np.ascontiguousarray(taus, dtype=np.float64)
    if taus.size and (taus.min() < 0 or taus.max() > web.tau_max):
        raise ValidationError("tau outside the web window")
    out = np.empty(taus.size, dtype=np.bool_)
    with quiet_overflow():
        kernels.eval_event_taus(web.useed, *spec.params(), taus, out)
    return out


@dataclass(frozen=True)
class Region:
    """Sites an event can consult, split by web; rows are ``(x, t)``."""

    main: np.ndarray
    secondary: np.ndarray

    def __len__(self):
        return len(self.main) + len(self.secondary)

    def as_arrays(self):
        """``(webs, xs, ts)`` int64 arrays covering both webs."""
        webs = np.concatenate([np.zeros(len(self.main), np.int64), np.ones(len(self.secondary), np.int64)])
        both = np.concatenate([self.main, self.secondary]).reshape(-1, 2)
        return webs, np.ascontiguousarray(both[:, 0]), np.ascontiguousarray(both[:, 1])

    def site_set(self):
        return {(0, int(x), int(t)) for x, t in self.main} | {(1, int(x), int(t)) for x, t in self.secondary}


def _cone(x0, t0, t1, lo=None, hi=None):
    """Even-parity sites reachable from ``(x0, t0)`` at times ``t0 <= t < t1``."""
    rows = []
    for t in range(t0, t1):
        h = t - t0
        xs = np.arange(x0 - h, x0 + h + 1, 2, dtype=np.int64)
        if lo is not None:
            xs = xs[(xs >= lo) & (xs <= hi)]
        rows.append(np.column_stack([xs, np.full(xs.size, t, dtype=np.int64)]))
    if not rows:
        return np.empty((0, 2), dtype=np.int64)
    return np.concatenate(rows)


def _union(a, b):
    if len(a) == 0:
        return b
    return np.unique(np.concatenate([a, b]), axis=0)


def _intersect(a, b):
    sa = {tuple(r) for r in a.tolist()}
    rows = [r for r in b.tolist() if tuple(r) in sa]
    return np.array(rows, dtype=np.int64).reshape(-1, 2)


def dependence_region(spec: EventSpec) -> Region:
    """Light-cone superset of every site the event can consult.

    Bounded events stop at the first exit, so their cones are clipped to the
    rectangle's horizontal extent.
    """
    code, xl, xr, t0, t1, lo, hi, _ = spec.params()
    empty = np.empty((0, 2), dtype=np.int64)
    if code == kernels.KIND_U:
        return Region(_cone(0, 0, t1), empty)
    if code == kernels.KIND_A:
        return Region(_cone(xl, t0, t1), empty)
    left = _cone(xl, t0, t1, lo, hi)
    right = _cone(xr, t0, t1, lo, hi)
    main = _union(left, right)
    secondary = _intersect(left, right) if code == kernels.KIND_C else empty
    return Region(main, secondary)


def check_geometry(spec: EventSpec):
    code, xl, xr, t0, *_ = spec.params()
    if (xl + t0) % 2 or (xr + t0) % 2:
        raise GeometryError("event anchors are off the even lattice")


def sigma_bound_audit(stack: RectangleStack):
    """Exact finite check of the stack envelope.

    Returns ``(sqrt_ok, ratio_rows)``: ``sqrt_ok`` says ``sigma_gamma(t) <= 2 + gamma sqrt(t)``
    for every integer ``t <= horizon``; each ratio row is
    ``(k, max_t (sigma(t) - 2) / sqrt(t), sqrt((gamma^2 - 1) / (1 - gamma^(-2k))), ok)``
    over ``t_k <= t < t_{k+1}``, where the max sits at ``t = t_k``.
    """
    g = stack.gamma
    ts = np.arange(stack.horizon + 1)
    sig = np.asarray(stack.right)[np.searchsorted(stack.t, ts, side="right") - 1]
    sqrt_ok = bool(np.all(sig <= 2 + g * np.sqrt(ts)))
    rows = []
    for k in range(1, stack.k_max + 1):
        worst = (stack.d[k] - 2) / math.sqrt(stack.t[k])
        limit = math.sqrt((g * g - 1) / (1 - g ** (-2 * k)))
        rows.append((k, worst, limit, worst <= limit * (1 + 1e-12)))
    return sqrt_ok, rows
