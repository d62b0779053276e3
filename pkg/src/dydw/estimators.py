"""Replicated Monte Carlo estimators.

Replicate ``i`` runs on the web seeded by ``replicate_seeds(seed_root, n)[i]``.
Work is cut into fixed-size chunks that do not depend on the worker count and
results are reduced in replicate order, so output is identical for any
``workers``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import kernels, npkernels
from ._accel import NUMBA_ENABLED, quiet_overflow
from .errors import DegenerateError, ValidationError
from .events import EventSpec, RectangleStack, dependence_region
from .rng import replicate_seeds
from .tau import _from_kernel

CHUNK = 4096


@dataclass
class Estimate:
    mean: float
    stderr: float
    n_replicates: int
    seed_root: int

    @classmethod
    def from_samples(cls, x, seed_root):
        x = np.asarray(x, dtype=float)
        n = x.size
        sd = float(np.std(x, ddof=1)) if n > 1 else 0.0
        return cls(float(np.mean(x)), sd / math.sqrt(n), n, int(seed_root))

    def within(self, value: float, n_sigma: float = 3.0, floor: float = 0.0) -> bool:
        return abs(self.mean - value) <= n_sigma * max(self.stderr, floor)


def _chunked(func, seeds, workers=1):
    """Apply ``func`` to fixed chunks of ``seeds`` and concatenate in order."""
    parts = [seeds[i : i + CHUNK] for i in range(0, len(seeds), CHUNK)]
    if workers <= 1 or len(parts) <= 1:
        results = [func(p) for p in parts]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(func, parts))
    return np.concatenate(results) if results else np.empty(0)


def event_indicators(spec: EventSpec, tau: float, seeds, workers=1, *, use_numba=None) -> np.ndarray:
    if tau < 0:
        raise ValidationError("tau must be non-negative")
    params = spec.params()
    use_numba = NUMBA_ENABLED if use_numba is None else use_numba
    tau = float(tau)

    def run(chunk):
        if use_numba:
            out = np.empty(chunk.size, dtype=np.bool_)
            kernels.eval_event_seeds(chunk, *params, tau, out)
            return out
        return npkernels.eval_event_seeds_np(chunk, *params, tau)

    with quiet_overflow():
        return _chunked(run, np.asarray(seeds, dtype=np.uint64), workers).astype(bool)


def origin_paths(seeds, n_steps: int, tau: float = 0.0) -> np.ndarray:
    seeds = np.asarray(seeds, dtype=np.uint64)
    with quiet_overflow():
        if NUMBA_ENABLED:
            out = np.empty((seeds.size, n_steps + 1), dtype=np.int64)
            kernels.origin_paths_seeds(seeds, n_steps, float(tau), out)
            return out
        return npkernels.origin_paths_np(seeds, n_steps, float(tau))


def estimate_event(spec: EventSpec, tau: float, n: int, seed_root: int, workers=1) -> Estimate:
    if n < 1:
        raise ValidationError("n must be at least 1")
    hits = event_indicators(spec, tau, replicate_seeds(seed_root, n), workers)
    return Estimate.from_samples(hits, seed_root)


@dataclass
class JointEstimate:
    joint: Estimate
    p_tau: float
    p_tau_prime: float
    excess: float
    excess_stderr: float


def _joint_from(i0, i1, seed_root) -> JointEstimate:
    x, y = i0.astype(float), i1.astype(float)
    n = x.size
    joint = Estimate.from_samples(x * y, seed_root)
    mx, my = x.mean(), y.mean()
    excess = joint.mean - mx * my
    # influence function of E[XY] - E[X]E[Y]
    infl = x * y - my * x - mx * y
    se = float(np.std(infl, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return JointEstimate(joint, float(mx), float(my), float(excess), se)


def joint_event(spec: EventSpec, tau: float, tau_prime: float, n: int, seed_root: int, workers=1) -> JointEstimate:
    """``P(event at tau and event at tau')`` on shared replicate webs, with the
    covariance excess over the product of the two marginals."""
    seeds = replicate_seeds(seed_root, n)
    i0 = event_indicators(spec, tau, seeds, workers)
    i1 = i0 if tau_prime == tau else event_indicators(spec, tau_prime, seeds, workers)
    return _joint_from(i0, i1, seed_root)


def weighted_power_fit(x, y, y_se):
    """Fit ``log y = log c + a log x`` by weighted least squares.

    Returns ``(a, a_se, c)``; the slope error uses the known variances, inflated
    by the reduced chi-square when the scatter exceeds them.
    """
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    var = (np.asarray(y_se, float) / np.asarray(y, float)) ** 2
    w = 1.0 / var
    A = np.column_stack([np.ones_like(lx), lx])
    cov = np.linalg.inv(A.T @ (A * w[:, None]))
    beta = cov @ (A.T @ (w * ly))
    dof = len(lx) - 2
    if dof > 0:
        chi2 = float(np.sum(w * (ly - A @ beta) ** 2)) / dof
        cov = cov * max(1.0, chi2)
    return float(beta[1]), float(math.sqrt(cov[1, 1])), float(math.exp(beta[0]))


@dataclass
class DecorrelationSweep:
    k: int
    kind: str
    tau_primes: list[float]
    deltas: list[float]
    joint: list[float]
    joint_stderr: list[float]
    p_squared: list[float]
    excess: list[float]
    excess_stderr: list[float]
    admissible: list[bool]
    a: float | None
    a_stderr: float | None
    c: float | None
    degenerate: bool
    product: dict = field(default_factory=dict)

    def to_rows(self):
        return [
            (self.kind, self.k, tp, dl, j, js, p2, ex, es, int(ad))
            for tp, dl, j, js, p2, ex, es, ad in zip(
                self.tau_primes,
                self.deltas,
                self.joint,
                self.joint_stderr,
                self.p_squared,
                self.excess,
                self.excess_stderr,
                self.admissible,
            )
        ]


def decorrelation_sweep(
    stack: RectangleStack,
    k: int,
    tau_primes,
    n: int,
    seed_root: int,
    *,
    kind: str = "C",
    product_n: int | None = None,
    workers=1,
) -> DecorrelationSweep:
    """Excess ``P(E^0 and E^tau') - P(E)^2`` across ``tau'`` and a power-law fit
    of excess against ``Delta = 1 / (d_k tau')`` on points with excess > 3 stderr.

    With ``product_n`` also reports, per ``tau'``, the product over
    ``j <= product_n`` of ``P(C_j^0 and C_j^tau') / P(C_j)^2`` together with
    ``b = log(max_j 1/P(C_j)) / log gamma``.
    """
    tau_primes = [float(v) for v in tau_primes]
    if any(v <= 0 for v in tau_primes):
        raise ValidationError("tau' grid must be positive")
    seeds = replicate_seeds(seed_root, n)
    spec = EventSpec(kind, k, stack)
    i0 = event_indicators(spec, 0.0, seeds, workers)
    rows = [_joint_from(i0, event_indicators(spec, tp, seeds, workers), seed_root) for tp in tau_primes]
    d = stack.d[k]
    deltas = [1.0 / (d * tp) for tp in tau_primes]
    excess = [r.excess for r in rows]
    ex_se = [r.excess_stderr for r in rows]
    adm = [e > 3 * s and s > 0 for e, s in zip(excess, ex_se)]
    idx = [i for i, ok in enumerate(adm) if ok]
    if len(idx) >= 3:
        a, a_se, c = weighted_power_fit([deltas[i] for i in idx], [excess[i] for i in idx], [ex_se[i] for i in idx])
        degenerate = False
    else:
        a = a_se = c = None
        degenerate = True
    sweep = DecorrelationSweep(
        k,
        kind,
        tau_primes,
        deltas,
        [r.joint.mean for r in rows],
        [r.joint.stderr for r in rows],
        [r.p_tau * r.p_tau_prime for r in rows],
        excess,
        ex_se,
        adm,
        a,
        a_se,
        c,
        degenerate,
    )
    if product_n is not None:
        sweep.product = product_diagnostic(stack, product_n, tau_primes, n, seed_root, workers=workers)
    return sweep


def product_diagnostic(stack, n_max, tau_primes, n, seed_root, workers=1):
    seeds = replicate_seeds(seed_root, n)
    probs = []
    ratios = np.ones(len(tau_primes))
    for j in range(n_max + 1):
        spec = EventSpec("C", j, stack)
        i0 = event_indicators(spec, 0.0, seeds, workers)
        p = float(i0.mean())
        probs.append(p)
        for m, tp in enumerate(tau_primes):
            i1 = event_indicators(spec, tp, seeds, workers)
            ratios[m] *= float(np.mean(i0 & i1)) / (p * p) if p > 0 else np.inf
    sup_inv = max(1.0 / p if p > 0 else np.inf for p in probs)
    b = math.log(sup_inv) / math.log(stack.gamma)
    c = float(np.max(ratios * np.asarray(tau_primes) ** b))
    return {"p_C": probs, "b": b, "product": ratios.tolist(), "c": c}


# interval-set based estimators ---------------------------------------------------


def _per_seed(func, seeds, workers=1):
    def run(chunk):
        return np.array([func(s) for s in chunk], dtype=float).reshape(len(chunk), -1)

    parts = [seeds[i : i + CHUNK] for i in range(0, len(seeds), CHUNK)]
    with quiet_overflow():
        if workers <= 1 or len(parts) <= 1:
            res = [run(p) for p in parts]
        else:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                res = list(pool.map(run, parts))
    return np.concatenate(res) if res else np.empty((0, 1))


def interval_set_for_seed(seed, spec: EventSpec, window):
    a, b = window
    return _from_kernel(window, kernels.event_intervals(np.uint64(seed), *spec.params(), float(a), float(b)))


def interval_measures(spec: EventSpec, window, n: int, seed_root: int, workers=1) -> np.ndarray:
    seeds = replicate_seeds(seed_root, n)
    return _per_seed(lambda s: interval_set_for_seed(s, spec, window).measure(), seeds, workers)[:, 0]


@dataclass
class SecondMomentReport:
    n: int
    ratio: float
    ratio_stderr: float
    ratio_quadrature: float
    observed: Estimate
    mean_measure: float
    degenerate: bool


def second_moment_bound(
    stack: RectangleStack, n: int, resolution: int, n_rep: int, seed_root: int, window=(0.0, 1.0), workers=1
) -> SecondMomentReport:
    """``(E X)^2 / E[X^2]`` with ``X`` the Lebesgue measure of ``E_n``, next to
    the observed frequency of ``E_n`` being non-empty.

    ``ratio`` uses exact per-replicate measures; ``ratio_quadrature`` replaces
    ``X`` by the midpoint rule on ``resolution`` equal cells, which is the
    double integral of the pairwise joint probabilities.
    """
    if not 0 <= n <= stack.k_max:
        raise ValidationError(f"n={n} outside 0..{stack.k_max}")
    if resolution < 1:
        raise ValidationError("resolution must be positive")
    a, b = (float(v) for v in window)
    mids = a + (np.arange(resolution) + 0.5) * (b - a) / resolution
    specs = [EventSpec("C", k, stack) for k in range(n + 1)]

    def one(seed):
        cur = None
        for spec in specs:
            s = interval_set_for_seed(seed, spec, (a, b))
            cur = s if cur is None else cur.intersect(s)
            if cur.is_empty():
                break
        quad = float(np.mean(cur.contains_many(mids))) * (b - a) if not cur.is_empty() else 0.0
        return cur.measure(), float(not cur.is_empty()), quad

    res = _per_seed(one, replicate_seeds(seed_root, n_rep), workers)
    x, nonempty, xq = res[:, 0], res[:, 1], res[:, 2]
    m1, m2 = float(x.mean()), float(np.mean(x * x))
    observed = Estimate.from_samples(nonempty, seed_root)
    if m2 == 0:
        return SecondMomentReport(n, 0.0, 0.0, 0.0, observed, 0.0, True)
    ratio = m1 * m1 / m2
    infl = 2 * m1 / m2 * (x - m1) - (m1 * m1) / (m2 * m2) * (x * x - m2)
    ratio_se = float(np.std(infl, ddof=1) / math.sqrt(x.size)) if x.size > 1 else 0.0
    q2 = float(np.mean(xq * xq))
    ratio_q = float(xq.mean()) ** 2 / q2 if q2 > 0 else 0.0
    return SecondMomentReport(n, ratio, ratio_se, ratio_q, observed, m1, False)


# superdiffusive tail -----------------------------------------------------------


def normal_pdf(x: float) -> float:
    return math.exp(-0.5 * x * x) / math.sqrt(2 * math.pi)


def gaussian_tail_lower(x: float) -> float:
    """``x / (1 + x^2) * phi(x) <= P(Z > x)`` for ``x > 0``."""
    return x / (1 + x * x) * normal_pdf(x)


def gaussian_tail_upper(x: float) -> float:
    """``P(Z > x) <= phi(x) / x`` for ``x > 0``."""
    return normal_pdf(x) / x


def a_hat_threshold(stack: RectangleStack, k: int) -> float:
    """Normalized displacement the ``A_hat_k`` walk must reach.

    The walk starts at ``-w_{k-1}`` and ends on an even site above ``w_k``, so it
    needs a displacement of at least ``w_k + w_{k-1} + 2`` over ``d_k^2`` steps.
    """
    return (stack.w[k] + stack.w[k - 1] + 2) / stack.d[k]


def tail_envelope(stack: RectangleStack, k: int, k_tilde: float) -> float:
    """``k_tilde / sqrt(log(d_k^2)) * gamma^(-4 alpha^2 k)``."""
    d = stack.d[k]
    return k_tilde / math.sqrt(math.log(d * d)) * stack.gamma ** (-4 * stack.width_alpha**2 * k)


def audited_k_tilde(stack: RectangleStack, ks) -> float:
    """Largest constant for which the envelope stays below the Gaussian lower
    tail bound at the true threshold for every ``k`` in ``ks``."""
    vals = []
    for k in ks:
        d = stack.d[k]
        g = gaussian_tail_lower(a_hat_threshold(stack, k))
        vals.append(g * math.sqrt(math.log(d * d)) * stack.gamma ** (4 * stack.width_alpha**2 * k))
    return min(vals)


def a_hat_exact(stack: RectangleStack, k: int) -> float:
    """Exact ``P(A_hat_k)`` by binomial counting of the ``d_k^2`` steps."""
    n = stack.d[k] ** 2
    need = stack.w[k] + stack.w[k - 1] + 2
    h_min = math.ceil((n + need) / 2)
    total = sum(math.comb(n, h) for h in range(max(h_min, 0), n + 1))
    return total / 2**n


@dataclass
class TailReport:
    k: int
    envelope: float
    k_tilde: float
    gaussian_lower: float
    estimate: Estimate
    exact: float | None

    @property
    def holds(self) -> bool:
        return self.estimate.mean + 3 * self.estimate.stderr >= self.envelope


def superdiffusive_tail_bound(stack: RectangleStack, k: int, n: int, seed_root: int, ks=None, workers=1) -> TailReport:
    if not 1 <= k <= stack.k_max:
        raise ValidationError(f"k={k} outside 1..{stack.k_max}")
    ks = tuple(ks) if ks is not None else tuple(range(1, stack.k_max + 1))
    k_tilde = audited_k_tilde(stack, ks)
    env = tail_envelope(stack, k, k_tilde)
    est = estimate_event(EventSpec("A_hat", k, stack), 0.0, n, seed_root, workers)
    exact = a_hat_exact(stack, k) if stack.d[k] ** 2 <= 4096 else None
    return TailReport(k, env, k_tilde, gaussian_tail_lower(a_hat_threshold(stack, k)), est, exact)


# pivotal chain ---------------------------------------------------------------


@dataclass
class PivotalReport:
    k: int
    p_exists: Estimate
    p_at_zero: Estimate
    p_all: Estimate
    mean_endpoints: Estimate
    region_size: int
    ratio: float

    @property
    def chain_holds(self) -> bool:
        lhs = self.p_exists.mean
        rhs = self.p_at_zero.mean + self.mean_endpoints.mean
        return lhs <= rhs + 3 * math.hypot(self.p_exists.stderr, self.mean_endpoints.stderr)

    def to_dict(self):
        return asdict(self)


def pivotal_chain(stack: RectangleStack, k: int, n_rep: int, seed_root: int, window=(0.0, 1.0), workers=1):
    spec = EventSpec("Upsilon", k, stack)
    region = len(dependence_region(spec))

    def one(seed):
        ivs = interval_set_for_seed(seed, spec, window)
        n_end = len(ivs.endpoints())
        at0 = ivs.contains(window[0])
        return float(not ivs.is_empty()), float(at0), float(at0 and n_end == 0 and len(ivs) == 1), float(n_end)

    res = _per_seed(one, replicate_seeds(seed_root, n_rep), workers)
    ex, at0, all_, ends = (Estimate.from_samples(res[:, i], seed_root) for i in range(4))
    denom = region * at0.mean
    return PivotalReport(k, ex, at0, all_, ends, region, ends.mean / denom if denom > 0 else float("nan"))


# sticking -------------------------------------------------------------------


@dataclass
class SurvivalReport:
    j: list[int]
    p_ref: list[float]
    p_star: list[float]
    stderr: list[float]

    def dominated(self, n_sigma=3.0) -> bool:
        return all(s <= r + n_sigma * e for r, s, e in zip(self.p_ref, self.p_star, self.stderr))

    def to_rows(self):
        return list(zip(self.j, self.p_ref, self.p_star, self.stderr))


def delta_survival(stack, k, tau, tau_prime, n, seed_root, j_max=5, horizon=None, workers=1) -> SurvivalReport:
    """Survival functions ``P(Delta_0 >= j)`` (origin pair) and
    ``P(Delta*_0 >= j)`` (rr-pair) from shared replicate webs."""
    (xl, tk), (xr, _) = stack.corners(k)
    h = stack.d[k] ** 2 if horizon is None else int(horizon)
    if h < j_max:
        raise ValidationError("horizon shorter than j_max")

    def run(chunk):
        ref = np.empty(chunk.size, dtype=np.int64)
        star = np.empty(chunk.size, dtype=np.int64)
        kernels.delta0_seeds(chunk, xl, xr, tk, h, float(tau), float(tau_prime), ref, star)
        return np.column_stack([ref, star])

    seeds = replicate_seeds(seed_root, n)
    parts = [seeds[i : i + CHUNK] for i in range(0, len(seeds), CHUNK)]
    with quiet_overflow():
        if workers <= 1:
            res = [run(p) for p in parts]
        else:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                res = list(pool.map(run, parts))
    res = np.concatenate(res)
    js = list(range(1, j_max + 1))
    p_ref, p_star, se = [], [], []
    for j in js:
        a = (res[:, 0] >= j).astype(float)
        b = (res[:, 1] >= j).astype(float)
        p_ref.append(float(a.mean()))
        p_star.append(float(b.mean()))
        se.append(float(np.std(b - a, ddof=1) / math.sqrt(len(a))))
    return SurvivalReport(js, p_ref, p_star, se)


def sticking_fractions(stack, k, tau, tau_prime, n, seed_root, workers=1) -> np.ndarray:
    """Total sticking fraction ``sup_t (t - G_bar(t))`` per replicate."""
    (xl, tk), (xr, _) = stack.corners(k)
    h = stack.d[k] ** 2

    def run(chunk):
        out = np.empty(chunk.size, dtype=np.int64)
        kernels.sticking_totals_seeds(chunk, xl, xr, tk, h, float(tau), float(tau_prime), out)
        return out

    with quiet_overflow():
        return _chunked(run, replicate_seeds(seed_root, n), workers) / h


def sticking_power_sweep(stack, k, gaps, beta, n, seed_root, workers=1):
    """Empirical ``P(sup_t (t - G_bar) >= Delta^beta)`` across ``tau' - tau`` gaps."""
    d = stack.d[k]
    rows = []
    for g in gaps:
        frac = sticking_fractions(stack, k, 0.0, float(g), n, seed_root, workers)
        delta = 1.0 / (d * g)
        rows.append((float(g), delta, float(np.mean(frac >= delta**beta))))
    if not rows:
        raise DegenerateError("empty gap grid")
    return rows
