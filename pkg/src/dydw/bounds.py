"""Hausdorff-dimension bound formulas for two-sided subdiffusive exceptional times."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, logsumexp, ndtr

from .errors import DomainError, SolverError

REL_TOL = 1e-14
ROOT_TOL = 1e-10
EPS = 1e-6


def brownian_stay_probability(start: float, t_end: float) -> float:
    """P(a standard Brownian motion from ``start`` stays in [-1, 1] up to ``t_end``).

    Sine-series solution of the heat equation on the interval with absorbing
    ends; for short times, where that series converges slowly, the image
    expansion is used instead.
    """
    if not abs(start) < 1:
        raise DomainError("start must lie strictly inside (-1, 1)")
    if not t_end > 0:
        raise DomainError("t_end must be positive")
    if t_end < 0.05:
        return stay_probability_images(start, t_end)
    total = 0.0
    n = 1
    while True:
        term = 4 / (n * math.pi) * math.sin(n * math.pi * (start + 1) / 2) * math.exp(-(n * n) * math.pi**2 * t_end / 8)
        total += term
        nxt = 4 / ((n + 2) * math.pi) * math.exp(-((n + 2) ** 2) * math.pi**2 * t_end / 8)
        if nxt < REL_TOL * abs(total):
            break
        n += 2
    return min(max(total, 0.0), 1.0)


def stay_probability_images(start: float, t_end: float, n_images: int | None = None) -> float:
    """Same probability from the method of images (alternating reflections in
    the two walls, period 4)."""
    if not abs(start) < 1:
        raise DomainError("start must lie strictly inside (-1, 1)")
    s = math.sqrt(t_end)
    if n_images is None:
        n_images = int(math.ceil(2 + 2 * s)) + 3
    total = 0.0
    for k in range(-n_images, n_images + 1):
        # density of the killed motion integrated over [-1, 1]
        total += ndtr((1 - start + 4 * k) / s) - ndtr((-1 - start + 4 * k) / s)
        total -= ndtr((1 + start - 2 + 4 * k) / s) - ndtr((-1 + start - 2 + 4 * k) / s)
    return float(min(max(total, 0.0), 1.0))


def c_infinity_probability(gamma: float) -> float:
    """Two independent motions from ``+-1/gamma`` both stay in [-1, 1] for unit time."""
    if not gamma > 1:
        raise DomainError("gamma must exceed 1")
    return brownian_stay_probability(1 / gamma, 1.0) ** 2


def c_star_probability() -> float:
    """Both motions started at the centre."""
    return brownian_stay_probability(0.0, 1.0) ** 2


def gamma_tilde(K: float) -> float:
    return math.sqrt(K * K + 1)


def lower_bound(K: float):
    """``(b_inf, 1 - b_inf, P_C_inf)``; the raw value may be negative."""
    if not K > 0:
        raise DomainError("K must be positive")
    g = gamma_tilde(K)
    p = c_infinity_probability(g)
    b = math.log(1 / p) / math.log(g)
    return b, 1 - b, p


def _log_terms(p: float, K: float, n_terms: int) -> np.ndarray:
    n = np.arange(1, n_terms + 1, dtype=float)
    return n * math.log(math.sqrt(2) * K) - gammaln(n + 1) + gammaln((n - p) / 2)


def _default_terms(K: float) -> int:
    # terms peak near n ~ 2K^2 and decay super-geometrically after that
    return int(2 * K * K + 40 * K + 200)


def log_f_of_p(p: float, K: float, n_terms: int | None = None) -> float:
    if not 0 < p < 1:
        raise DomainError("p must lie in (0, 1)")
    if not K > 0:
        raise DomainError("K must be positive")
    n_terms = _default_terms(K) if n_terms is None else int(n_terms)
    while True:
        logs = _log_terms(p, K, n_terms)
        total = logsumexp(logs)
        if logs[-1] - total < math.log(REL_TOL) - 5:
            break
        n_terms *= 2
    prefactor = math.log(math.sin(math.pi * p / 2)) + gammaln(1 + p / 2) - math.log(math.pi)
    return float(prefactor + total)


def f_of_p(p: float, K: float, n_terms: int | None = None) -> float:
    return math.exp(log_f_of_p(p, K, n_terms))


def solve_p(K: float, n_terms: int | None = None) -> float:
    """Root of ``f(p, K) = 1``.

    ``f`` increases in ``p``.  The bracket starts at ``(EPS, 1 - EPS)``; when
    ``f(EPS) > 1`` (large ``K``) the lower end is pushed down geometrically
    until the sign changes.  Bisection runs in ``log p`` on that lower range.
    """
    if not K > 0:
        raise DomainError("K must be positive")

    def g(p):
        return log_f_of_p(p, K, n_terms)

    lo, hi = EPS, 1 - EPS
    g_lo, g_hi = g(lo), g(hi)
    while g_lo > 0 and lo * 1e-6 > 1e-300:
        hi, g_hi = lo, g_lo
        lo = lo * 1e-6
        g_lo = g(lo)
    if not (g_lo < 0 < g_hi):
        raise SolverError(f"no sign change for K={K}: log f({lo:g}) = {g_lo:.6g}, log f({hi:g}) = {g_hi:.6g}")
    log_space = hi <= EPS
    for _ in range(400):
        mid = math.exp(0.5 * (math.log(lo) + math.log(hi))) if log_space else 0.5 * (lo + hi)
        gm = g(mid)
        # |f - 1| ~ |log f| near the root
        if abs(gm) < ROOT_TOL / 10:
            return mid
        if gm < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-17 * hi:
            return mid
    raise SolverError(f"bisection did not converge for K={K}")


@dataclass
class BoundReport:
    K_L: float
    K_R: float
    gamma_tilde: float | None
    P_C_infinity: float | None
    b_infinity: float | None
    lower_bound: float | None
    p_L: float
    p_R: float
    upper_bound: float
    emptiness_flag: bool

    @property
    def vacuous(self) -> bool:
        return self.lower_bound is None or self.lower_bound < 0

    def row(self):
        def fmt(v):
            return "" if v is None else repr(float(v))

        return (
            repr(float(self.K_L)),
            repr(float(self.K_R)),
            fmt(self.gamma_tilde),
            fmt(self.P_C_infinity),
            fmt(self.b_infinity),
            fmt(self.lower_bound),
            repr(self.p_L),
            repr(self.p_R),
            repr(self.upper_bound),
            int(self.emptiness_flag),
            int(self.vacuous),
        )


CSV_HEADER = ("K_L", "K_R", "gamma_tilde", "P_C_inf", "b_inf", "lower", "p_L", "p_R", "upper", "empty_flag", "vacuous")


def bound_report(K_L: float, K_R: float | None = None) -> BoundReport:
    """Both bounds; the lower bound is computed only for ``K_L == K_R``."""
    K_R = K_L if K_R is None else K_R
    p_l = solve_p(K_L)
    p_r = p_l if K_R == K_L else solve_p(K_R)
    if K_L == K_R:
        b, lower, pc = lower_bound(K_L)
        gt = gamma_tilde(K_L)
    else:
        b = lower = pc = gt = None
    return BoundReport(K_L, K_R, gt, pc, b, lower, p_l, p_r, 1 - p_l - p_r, p_l + p_r > 1)


def parse_grid(text: str) -> list[float]:
    """``start:stop:step`` (inclusive stop) or a comma-separated list."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise DomainError(f"bad grid {text!r}")
        a, b, s = (float(v) for v in parts)
        if s <= 0 or b < a:
            raise DomainError(f"bad grid {text!r}")
        n = int(math.floor((b - a) / s + 1e-9))
        return [round(a + i * s, 12) for i in range(n + 1)]
    return [float(v) for v in text.split(",") if v.strip()]
