import math
from fractions import Fraction

import numpy as np
import pytest
from scipy.stats import norm

from dydw import estimators as est
from dydw import kernels, npkernels
from dydw.errors import ValidationError
from dydw.events import EventSpec, RectangleStack
from dydw.rng import replicate_seeds
from oracles import binomial_tail

G3 = RectangleStack(3.0, 2)
G2 = RectangleStack(2.0, 3)


def test_estimate_from_samples():
    x = np.array([1, 0, 1, 1], dtype=float)
    e = est.Estimate.from_samples(x, 5)
    assert e.mean == 0.75
    assert e.stderr == pytest.approx(np.std(x, ddof=1) / 2)
    assert e.n_replicates == 4 and e.seed_root == 5


def test_c0_matches_enumeration():
    e = est.estimate_event(EventSpec("C", 0, G3), 0.0, 20_000, 1)
    assert e.within(0.75)


def test_stationarity_in_tau():
    spec = EventSpec("C", 1, G2)
    a = est.estimate_event(spec, 0.0, 20_000, 2)
    b = est.estimate_event(spec, 0.5, 20_000, 3)
    assert abs(a.mean - b.mean) <= 3 * math.hypot(a.stderr, b.stderr)


def test_bit_identical_across_workers():
    spec = EventSpec("C", 2, G2)
    n = 3 * est.CHUNK + 17
    a = est.estimate_event(spec, 0.4, n, 9, workers=1)
    b = est.estimate_event(spec, 0.4, n, 9, workers=4)
    assert a == b
    m1 = est.interval_measures(EventSpec("C", 1, G2), (0.0, 1.0), 300, 4, workers=1)
    m2 = est.interval_measures(EventSpec("C", 1, G2), (0.0, 1.0), 300, 4, workers=3)
    np.testing.assert_array_equal(m1, m2)


def test_numpy_fallback_agrees_with_kernels():
    seeds = replicate_seeds(7, 3000)
    for spec in (EventSpec("C", 2, G2), EventSpec("B", 1, G2), EventSpec("A_hat", 2, G2), EventSpec("Upsilon", 2, G2)):
        a = est.event_indicators(spec, 0.37, seeds, use_numba=True)
        b = est.event_indicators(spec, 0.37, seeds, use_numba=False)
        np.testing.assert_array_equal(a, b)
    out = np.empty((seeds.size, 21), dtype=np.int64)
    kernels.origin_paths_seeds(seeds, 20, 0.8, out)
    np.testing.assert_array_equal(out, npkernels.origin_paths_np(seeds, 20, 0.8))


def test_joint_same_tau_reduces_to_marginal():
    spec = EventSpec("C", 1, G2)
    j = est.joint_event(spec, 0.3, 0.3, 5000, 1)
    m = est.estimate_event(spec, 0.3, 5000, 1)
    assert j.joint.mean == m.mean
    assert j.excess == pytest.approx(m.mean - m.mean**2)


def test_joint_far_apart_is_independent():
    spec = EventSpec("C", 1, G2)
    j = est.joint_event(spec, 0.0, 50.0, 40_000, 2)
    assert abs(j.excess) <= 3 * j.excess_stderr


def test_power_fit_exact_law():
    d = np.logspace(-2, 0, 8)
    a, a_se, c = est.weighted_power_fit(d, d, 0.01 * d)
    assert a == pytest.approx(1.0, abs=1e-12)
    assert c == pytest.approx(1.0, abs=1e-12)
    a, _, c = est.weighted_power_fit(d, 3 * d**0.5, 0.01 * d)
    assert a == pytest.approx(0.5, abs=1e-12) and c == pytest.approx(3.0)


def test_sweep_degenerate_when_noisy():
    sw = est.decorrelation_sweep(G2, 2, [5.0, 10.0, 20.0], 200, 1)
    assert sw.degenerate and sw.a is None
    with pytest.raises(ValidationError):
        est.decorrelation_sweep(G2, 2, [0.0], 10, 1)


def test_product_diagnostic_finite():
    res = est.product_diagnostic(G2, 2, [0.5, 2.0], 4000, 3)
    assert np.all(np.isfinite(res["product"])) and res["b"] > 0


def test_gaussian_tail_inequalities():
    for x in np.linspace(0.05, 8, 60):
        assert est.gaussian_tail_lower(x) <= norm.sf(x) <= est.gaussian_tail_upper(x)


def test_a_hat_exact_matches_binomial():
    s = RectangleStack(2.0, 3, width_alpha=0.05)
    # d_1 = 4: the walk needs displacement 2 + 2 + 2 = 6 over 16 steps
    assert Fraction(est.a_hat_exact(s, 1)).limit_denominator(2**16) == Fraction(6885, 65536)
    assert binomial_tail(16, 6) == Fraction(6885, 65536)


def test_a_hat_mc_matches_enumeration():
    s = RectangleStack(2.0, 3, width_alpha=0.05)
    e = est.estimate_event(EventSpec("A_hat", 1, s), 0.0, 40_000, 5)
    assert e.within(6885 / 65536)


def test_envelope_hand_value():
    s = RectangleStack(2.0, 3, width_alpha=0.1)
    k, kt = 2, 0.37
    hand = kt / math.sqrt(math.log(36)) * 2.0 ** (-4 * 0.01 * 2)
    assert abs(est.tail_envelope(s, k, kt) - hand) < 1e-12


def test_envelope_decreasing_in_alpha():
    vals = [est.tail_envelope(RectangleStack(2.0, 3, width_alpha=a), 2, 0.5) for a in (0.05, 0.1, 0.2, 0.4)]
    assert all(x > y for x, y in zip(vals, vals[1:]))


def test_audited_constant_is_conservative():
    s = RectangleStack(2.0, 3, width_alpha=0.1)
    kt = est.audited_k_tilde(s, (1, 2, 3))
    for k in (1, 2, 3):
        assert est.tail_envelope(s, k, kt) <= est.gaussian_tail_lower(est.a_hat_threshold(s, k)) * (1 + 1e-12)


def test_tail_report():
    s = RectangleStack(2.0, 3, width_alpha=0.1)
    r = est.superdiffusive_tail_bound(s, 1, 5000, 1)
    assert r.exact is not None and r.holds


def test_pivotal_chain_containment():
    s = RectangleStack(2.0, 3, width_alpha=0.5)
    r = est.pivotal_chain(s, 2, 300, 1)
    assert r.p_exists.mean >= r.p_at_zero.mean >= r.p_all.mean
    assert r.chain_holds


def test_second_moment_direction_and_quadrature():
    r = est.second_moment_bound(G3, 1, 64, 400, 2)
    assert not r.degenerate
    assert 0 < r.ratio <= r.observed.mean + 1e-12
    assert r.ratio_quadrature == pytest.approx(r.ratio, abs=0.05)


def test_delta_survival_shapes():
    rep = est.delta_survival(G2, 2, 0.0, 0.5, 2000, 1, j_max=4)
    assert rep.j == [1, 2, 3, 4]
    assert all(a >= b for a, b in zip(rep.p_ref, rep.p_ref[1:]))
    fr = est.sticking_fractions(G2, 2, 0.0, 0.5, 500, 1)
    assert np.all((fr >= 0) & (fr <= 1))


def test_sticking_power_sweep_rows():
    rows = est.sticking_power_sweep(G2, 2, [0.1, 1.0], 0.5, 500, 1)
    assert len(rows) == 2 and rows[0][1] > rows[1][1]
