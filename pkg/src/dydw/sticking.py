"""Sticking between paths at two dynamical times.

For a rectangle index ``k`` the four paths ``Y_l, Y_r`` at ``tau`` and
``tau'`` start at the corners ``l_k, r_k`` and run for ``d_k^2`` steps (times
shifted so that ``t_k`` maps to 0).  A step is a sticking step when a
``tau``-path and a ``tau'``-path sit on the same site and read the same,
unchanged arrow.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from ._accel import quiet_overflow
from .errors import DegenerateError, IntegrityError, ValidationError
from .events import RectangleStack
from .rng import MAIN
from .web import WebPair

LABELS = ("ll", "lr", "rl", "rr")


@dataclass
class StickQuadruple:
    k: int
    tau: float
    tau_prime: float
    traces: np.ndarray  # rows: Y_l^tau, Y_r^tau, Y_l^tau', Y_r^tau'
    t_offset: int
    d: int
    seed: int = field(repr=False, default=0)
    labels: np.ndarray | None = field(repr=False, default=None)

    @property
    def n_steps(self) -> int:
        return self.traces.shape[1] - 1


def stick_quadruple(web: WebPair, stack: RectangleStack, k: int, tau: float, tau_prime: float, n_steps=None):
    if not tau < tau_prime:
        raise ValidationError("need tau < tau'")
    tau, tau_prime = web.check_tau(tau), web.check_tau(tau_prime)
    (xl, tk), (xr, _) = stack.corners(k)
    n = stack.d[k] ** 2 if n_steps is None else int(n_steps)
    paths = np.empty((4, n + 1), dtype=np.int64)
    labels = np.empty(n, dtype=np.uint8)
    with quiet_overflow():
        kernels.quad_trace(web.useed, xl, xr, tk, n, tau, tau_prime, paths, labels)
    return StickQuadruple(k, tau, tau_prime, paths, tk, stack.d[k], web.seed, labels)


@dataclass
class StickingProfile:
    """Per-step label sets and the integrated clocks ``G`` (sampled at 0..n)."""

    labels: list[frozenset]
    G: np.ndarray
    G_parts: dict[str, np.ndarray]
    delta: float

    @property
    def sticking(self) -> np.ndarray:
        return np.array([bool(s) for s in self.labels])

    def rows(self):
        return [(n, *(int(lab in s) for lab in LABELS)) for n, s in enumerate(self.labels)]


def _integrate(mask: np.ndarray) -> np.ndarray:
    """``G(t) = t - #{sticking steps < t}`` for integer t."""
    g = np.zeros(mask.size + 1, dtype=np.int64)
    np.cumsum(~mask, out=g[1:])
    return g


def classify_sticking(web: WebPair, quad: StickQuadruple) -> StickingProfile:
    """Label each step with the sticking cases it satisfies.

    The ring test for each label is re-done from the arrow streams here (not
    read back from the kernel) so the labels are checked against the paths.
    """
    tau1, tau2 = quad.tau, quad.tau_prime
    l1, r1, l2, r2 = quad.traces[:, :-1]
    n = quad.n_steps
    ts = quad.t_offset + np.arange(n, dtype=np.int64)
    with quiet_overflow():
        rang_l1 = _rang(web, MAIN, l1, ts, tau1, tau2)
        rang_l2 = _rang(web, MAIN, l2, ts, tau1, tau2)
        rang_r1 = _rang(web, MAIN, r1, ts, tau1, tau2)
        rang_hat = _rang(web, 1, r1, ts, tau1, tau2)
    masks = {
        "ll": (l1 == l2) & ~rang_l1,
        "lr": (l1 == r2) & (r2 != l2) & ~rang_l1,
        "rl": (l2 == r1) & (r1 != l1) & ~rang_l2,
        "rr": ((r1 == r2) & (r1 != l1) & (r1 != l2) & ~rang_r1)
        | ((r1 == r2) & (r1 == l1) & (r1 == l2) & ~rang_hat),
    }
    labels = [frozenset(lab for lab in LABELS if masks[lab][m]) for m in range(n)]
    any_mask = np.zeros(n, dtype=bool)
    for m in masks.values():
        any_mask |= m
    delta = 1.0 / (quad.d * (tau2 - tau1))
    return StickingProfile(labels, _integrate(any_mask), {lab: _integrate(masks[lab]) for lab in LABELS}, delta)


def _rang(web, web_id, xs, ts, tau1, tau2):
    out = np.empty(xs.size, dtype=np.bool_)
    webs = np.full(xs.size, web_id, dtype=np.int64)
    kernels.rang_sites(web.useed, webs, np.ascontiguousarray(xs), ts, tau1, tau2, out)
    return out


def split_holds(profile: StickingProfile) -> bool:
    """``t - G(t) <= sum over labels of (t - G_label(t))`` at every integer t."""
    t = np.arange(profile.G.size)
    lhs = t - profile.G
    rhs = sum(t - profile.G_parts[lab] for lab in LABELS)
    return bool(np.all(lhs <= rhs))


def decompose(quad: StickQuadruple, profile: StickingProfile):
    """Split each path into its non-sticking part ``Y_d`` (run on clock ``G``)
    and sticking part ``Y_s`` (run on ``t - G``).

    Returns a list of four ``(Y_d, Y_s)`` pairs; ``Y(t) == Y_d[G(t)] + Y_s[t - G(t)]``.
    """
    n = quad.n_steps
    if len(profile.labels) != n or profile.G.size != n + 1:
        raise IntegrityError("profile length does not match the quadruple")
    g = profile.G
    if g[0] != 0 or np.any(np.diff(g) < 0) or np.any(np.diff(g) > 1):
        raise IntegrityError("G must start at 0 with increments in {0, 1}")
    stick = np.diff(g) == 0
    out = []
    for path in quad.traces:
        inc = np.diff(path)
        y_d = np.concatenate([[path[0]], path[0] + np.cumsum(inc[~stick])]).astype(np.int64)
        y_s = np.concatenate([[0], np.cumsum(inc[stick])]).astype(np.int64)
        out.append((y_d, y_s))
    return out


def reconstruct(pair, profile: StickingProfile) -> np.ndarray:
    y_d, y_s = pair
    t = np.arange(profile.G.size)
    return y_d[profile.G] + y_s[t - profile.G]


@dataclass
class CouplingTrace:
    deltas: list[int]
    gammas: list[int]
    complete: bool
    censored_delta: int | None = None

    @property
    def cycles(self) -> int:
        return len(self.gammas)


def _cycles(stick: np.ndarray, together: np.ndarray) -> CouplingTrace:
    """Alternate sticking runs (lengths ``Delta_j``) and excursions until the
    pair meets again (lengths ``Gamma_j``), truncated at the horizon."""
    h = stick.size
    deltas, gammas = [], []
    start = 0
    while True:
        off = np.flatnonzero(~stick[start:])
        if off.size == 0:
            return CouplingTrace(deltas, gammas, False, h - start)
        t_odd = start + int(off[0])
        deltas.append(t_odd - start)
        back = np.flatnonzero(together[t_odd + 1 :])
        if back.size == 0:
            return CouplingTrace(deltas, gammas, False)
        t_even = t_odd + 1 + int(back[0])
        gammas.append(t_even - t_odd)
        if t_even >= h:
            return CouplingTrace(deltas, gammas, True)
        start = t_even


def coupling_trace(web: WebPair, stack: RectangleStack, k: int, tau: float, tau_prime: float, horizon=None):
    """Sticking/excursion durations for the origin pair ``(S_0^tau, S_0^tau')``
    and for the rr-pair ``(Y_r^tau, Y_r^tau')``.

    ``complete`` is False when the horizon cut a cycle short.
    """
    if not tau < tau_prime:
        raise ValidationError("need tau < tau'")
    n = stack.d[k] ** 2 if horizon is None else int(horizon)
    if n < 1:
        raise ValidationError("horizon must be at least one step")
    quad = stick_quadruple(web, stack, k, tau, tau_prime, n)
    ref_paths = np.empty((2, n + 1), dtype=np.int64)
    stick = np.empty(n, dtype=np.bool_)
    with quiet_overflow():
        kernels.reference_trace(web.useed, 0, 0, n, quad.tau, quad.tau_prime, ref_paths, stick)
    ref = _cycles(stick, ref_paths[0] == ref_paths[1])
    rr = (quad.labels & kernels.LABEL_RR) != 0
    star = _cycles(rr, quad.traces[1] == quad.traces[3])
    return ref, star


def sticking_statistic(profiles, beta: float) -> float:
    """Fraction of profiles with ``sup_{t<=1} (t - G(t d^2)/d^2) >= Delta^beta``.

    ``t - G`` is nondecreasing, so the supremum is the total sticking fraction.
    """
    profiles = list(profiles)
    if not profiles:
        raise DegenerateError("empty profile collection")
    if not 0 < beta < 1:
        raise ValidationError("beta must lie in (0, 1)")
    deltas = {p.delta for p in profiles}
    if len(deltas) != 1:
        raise ValidationError("profiles must share (k, tau, tau')")
    threshold = deltas.pop() ** beta
    hits = 0
    for p in profiles:
        n = p.G.size - 1
        hits += (n - p.G[-1]) / n >= threshold
    return hits / len(profiles)


def fit_sticking_constant(deltas, stats, beta: float) -> float:
    """Smallest ``c`` with ``stat <= c * Delta^(1 - beta)`` on the grid."""
    deltas = np.asarray(deltas, dtype=float)
    stats = np.asarray(stats, dtype=float)
    return float(np.max(stats / deltas ** (1 - beta)))


def modulus_curve(path: np.ndarray, d: int, eps_grid) -> np.ndarray:
    """Modulus of continuity of the rescaled step path ``S(floor(t d^2)) / d``
    on ``[0, 1]``: the largest ``|S(j) - S(i)| / d`` with lag at most
    ``ceil(eps d^2)``."""
    n = path.size - 1
    best = np.zeros(n + 1)
    for lag in range(1, n + 1):
        best[lag] = max(best[lag - 1], np.max(np.abs(path[lag:] - path[:-lag])))
    lags = np.minimum(np.ceil(np.asarray(eps_grid, dtype=float) * n - 1e-9).astype(int), n)
    return best[np.maximum(lags, 0)] / d


def modulus_statistic(web_seeds, stack: RectangleStack, k: int, alphas, betas, deltas, tau: float = 0.0):
    """Empirical ``P(omega(Delta^beta) >= Delta^alpha / 2)`` over walks of
    ``d_k^2`` steps, for every ``(alpha, beta, Delta)`` with ``beta / 2 > alpha``.

    Returns ``{(alpha, beta, Delta): frequency}``.
    """
    from .estimators import origin_paths

    d = stack.d[k]
    paths = origin_paths(web_seeds, d * d, tau)
    grid = [(a, b, dl) for a in alphas for b in betas for dl in deltas if b / 2 > a]
    eps = np.array([dl**b for _, b, dl in grid])
    thr = np.array([dl**a / 2 for a, _, dl in grid])
    hits = np.zeros(len(grid))
    for p in paths:
        hits += modulus_curve(p, d, eps) >= thr
    return {g: h / len(paths) for g, h in zip(grid, hits)}
