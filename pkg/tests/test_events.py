import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dydw import kernels
from dydw.errors import HorizonError, ValidationError
from dydw.events import (
    EventSpec,
    RectangleStack,
    dependence_region,
    evaluate_event,
    evaluate_event_many,
    round_out_even,
    sigma_bound_audit,
    sigma_gamma,
    skew_stack,
    stack_width,
)
from dydw.web import SiteAddress, WebPair, trace_path
from oracles import StreamCache, event_by_paths


def test_geometry_values():
    s = RectangleStack(2.0, 3)
    assert s.d == (2, 4, 6, 10, 18)
    assert s.t == (0, 4, 20, 56, 156, 480)
    s3 = RectangleStack(3.0, 2)
    assert s3.d[:3] == (2, 4, 10)
    assert s3.t[:4] == (0, 4, 20, 120)
    assert sigma_gamma(s3, 0) == 2


@given(st.floats(1.01, 6.0), st.integers(0, 8))
def test_width_formula(gamma, k):
    d = stack_width(gamma, k)
    assert d % 2 == 0
    # the width guard absorbs relative float noise of order 1e-13 in gamma^k
    assert gamma**k * (1 - 1e-12) <= d <= gamma**k * (1 + 1e-12) + 2


def test_width_at_exact_powers():
    # gamma^k = 9 and 27 exactly: floor(4.5) and floor(13.5)
    assert stack_width(3.0, 2) == 10
    assert stack_width(3.0, 3) == 28
    assert stack_width(2.0, 3) == 10


def test_super_width_values():
    s = RectangleStack(2.0, 3, width_alpha=1.0)
    # w_1 = 2(floor(sqrt(log 16) * 4 / 2) + 1) = 2(floor(3.3302) + 1) = 8
    assert s.w[1] == 8
    assert all(w % 2 == 0 for w in s.w)
    tiny = RectangleStack(2.0, 3, width_alpha=0.05)
    assert tiny.w[:3] == (2, 2, 2)


def test_skew_examples():
    s = RectangleStack(3.0, 3)
    assert skew_stack(s, 1, 1).left == s.left
    assert round_out_even(2 * 10) == 20
    assert round_out_even(1.3 * 10) == 14
    sk = skew_stack(s, 2, 1.3)
    assert sk.left[2] == 20 and sk.right[2] == 14
    assert sk.d == s.d and sk.t == s.t


def test_validation():
    with pytest.raises(ValidationError):
        RectangleStack(1.0, 3)
    with pytest.raises(ValidationError):
        EventSpec("A_hat", 0, RectangleStack(2.0, 3))
    with pytest.raises(HorizonError):
        EventSpec("C", 4, RectangleStack(2.0, 3))
    with pytest.raises(HorizonError):
        sigma_gamma(RectangleStack(2.0, 1), 10**6)


@pytest.mark.parametrize("gamma", [1.5, 2.0, 3.0, 5.0])
def test_sigma_bounds(gamma):
    ok, rows = sigma_bound_audit(RectangleStack(gamma, 5))
    assert ok
    assert all(r[3] for r in rows)


def test_sigma_nondecreasing():
    s = RectangleStack(2.5, 4)
    vals = [sigma_gamma(s, t) for t in range(s.horizon + 1)]
    assert all(a <= b for a, b in zip(vals, vals[1:]))


def test_upsilon_region_count():
    s = RectangleStack(2.0, 3)
    # t_1 = 4: cone over t = 0..3 holds 1 + 2 + 3 + 4 sites
    assert len(dependence_region(EventSpec("Upsilon", 1, s))) == 10


def test_region_size_scales_like_d4():
    s = RectangleStack(2.0, 5)
    ratios = [len(dependence_region(EventSpec("Upsilon", k, s))) / s.d[k] ** 4 for k in range(1, 6)]
    assert max(ratios) < 5


@pytest.mark.parametrize("kind,k", [("B", 0), ("B", 2), ("C", 2), ("A_hat", 2), ("Upsilon", 2)])
def test_kernel_matches_path_oracle_and_stays_in_region(kind, k):
    stack = RectangleStack(2.0, 3, width_alpha=0.4)
    spec = EventSpec(kind, k, stack)
    region = dependence_region(spec).site_set()
    for seed in range(40):
        web = WebPair(seed)
        cache = StreamCache(web)
        for tau in (0.0, 0.31, 0.9):
            assert evaluate_event(web, spec, tau) == event_by_paths(cache, spec, tau)
        assert cache.consulted <= region


def test_c_implies_b():
    stack = RectangleStack(2.0, 3)
    taus = np.linspace(0, 1, 50)
    for seed in range(100):
        web = WebPair(seed)
        for k in range(1, 4):
            c = evaluate_event_many(web, EventSpec("C", k, stack), taus)
            b = evaluate_event_many(web, EventSpec("B", k, stack), taus)
            assert np.all(b[c])


def test_c0_equals_b0():
    stack = RectangleStack(3.0, 2)
    assert EventSpec("C", 0, stack).params() == EventSpec("B", 0, stack).params()


def test_subdiffusive_envelope_on_success():
    stack = RectangleStack(3.0, 2)
    n = 2
    hits = 0
    for seed in range(2000):
        web = WebPair(seed)
        if all(evaluate_event(web, EventSpec("C", k, stack), 0.0) for k in range(n + 1)):
            hits += 1
            path = trace_path(web, SiteAddress(0, 0), 0.0, stack.t[n + 1])
            t = path.times()
            assert np.all(np.abs(path.positions) <= 2 + stack.gamma * np.sqrt(t))
    assert hits > 0


def test_a_hat_forces_origin_excursion():
    stack = RectangleStack(2.0, 3, width_alpha=0.3)
    for k in (1, 2):
        spec = EventSpec("A_hat", k, stack)
        for seed in range(300):
            web = WebPair(seed)
            if evaluate_event(web, spec, 0.0):
                p = trace_path(web, SiteAddress(0, 0), 0.0, stack.t[k + 1])
                assert p.at(stack.t[k]) < -stack.w[k - 1] or p.at(stack.t[k + 1]) > stack.w[k]


def test_c0_enumeration_oracle():
    from fractions import Fraction

    from oracles import enumerate_c0

    assert enumerate_c0(2, 4) == Fraction(12, 16)


def test_eval_event_reports_next_switch_among_consulted():
    stack = RectangleStack(2.0, 2)
    spec = EventSpec("C", 1, stack)
    web = WebPair(4)
    ok, nxt, w, x, t, tie = kernels.eval_event(web.useed, *spec.params(), 0.0, 1.0)
    assert not tie
    if math.isfinite(nxt):
        assert (w, x, t) in dependence_region(spec).site_set()
        assert nxt <= 1.0
