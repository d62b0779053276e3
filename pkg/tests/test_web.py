import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dydw.errors import GeometryError, ParityError, ValidationError, WindowError
from dydw.web import (
    SiteAddress,
    WebPair,
    arrow_at,
    arrow_stream,
    trace_pair_noncoalescing,
    trace_path,
    web_index,
)
from oracles import StreamCache


def test_site_parity():
    SiteAddress(1, 1)
    SiteAddress(-2, 4)
    with pytest.raises(ParityError):
        SiteAddress(1, 2)


def test_web_validation():
    with pytest.raises(ValidationError):
        WebPair(-1)
    with pytest.raises(ValidationError):
        WebPair(1, tau_max=0.0)
    with pytest.raises(ValidationError):
        web_index("tertiary")
    web = WebPair(1, 2.0)
    with pytest.raises(WindowError):
        web.check_window((1.0, 1.0))
    with pytest.raises(WindowError):
        web.check_tau(2.5)


def test_stream_is_deterministic_and_prefix_consistent():
    site = SiteAddress(4, 6)
    short = arrow_stream(WebPair(5, 1.0), "main", site)
    long = arrow_stream(WebPair(5, 10.0), "main", site)
    n = len(short.ring_times)
    np.testing.assert_array_equal(long.ring_times[:n], short.ring_times)
    np.testing.assert_array_equal(long.values[: n + 1], short.values)
    assert np.all(np.diff(long.ring_times) > 0)
    assert set(np.unique(long.values)) <= {-1, 1}


def test_main_and_secondary_differ():
    web = WebPair(5, 50.0)
    a = arrow_stream(web, "main", SiteAddress(0, 0))
    b = arrow_stream(web, "secondary", SiteAddress(0, 0))
    assert not np.array_equal(a.ring_times[:5], b.ring_times[:5])


def test_arrow_right_continuous():
    web = WebPair(17, 20.0)
    st_ = arrow_stream(web, "main", SiteAddress(0, 0))
    assert len(st_.ring_times) > 3
    r = float(st_.ring_times[2])
    assert arrow_at(st_, r) == st_.values[3]
    assert arrow_at(st_, np.nextafter(r, 0)) == st_.values[2]
    assert arrow_at(st_, 0.0) == st_.values[0]
    rows = st_.to_rows()
    assert rows[0] == (0, 0.0, int(st_.values[0]))
    assert len(rows) == len(st_.ring_times) + 1


def test_switch_times_subset_of_rings():
    st_ = arrow_stream(WebPair(2, 30.0), "main", SiteAddress(2, 0))
    sw = st_.switch_times()
    assert set(sw.tolist()) <= set(st_.ring_times.tolist())
    # a switch changes the value, so values at consecutive switches alternate
    vals = [arrow_at(st_, float(s)) for s in sw]
    assert all(a != b for a, b in zip(vals, vals[1:]))


@given(st.integers(0, 2**32), st.floats(0, 1), st.integers(-6, 6), st.integers(0, 6))
@settings(max_examples=60, deadline=None)
def test_path_steps_and_parity(seed, tau, half, t0):
    x0 = 2 * half + (t0 % 2)
    web = WebPair(seed)
    p = trace_path(web, SiteAddress(x0, t0), tau, t0 + 30)
    assert p.at(t0) == x0
    assert np.all(np.abs(np.diff(p.positions)) == 1)
    assert all((p.at(t) + t) % 2 == 0 for t in p.times())


def test_path_matches_stream_oracle():
    web = WebPair(8, 1.0)
    cache = StreamCache(web)
    for tau in (0.0, 0.3, 0.77, 1.0):
        p = trace_path(web, SiteAddress(0, 0), tau, 40)
        x = 0
        for t in range(40):
            x += cache.value(0, x, t, tau)
            assert p.at(t + 1) == x


@given(st.integers(0, 2**32), st.floats(0, 1))
@settings(max_examples=60, deadline=None)
def test_paths_never_cross(seed, tau):
    web = WebPair(seed)
    a = trace_path(web, SiteAddress(-2, 0), tau, 60).positions
    b = trace_path(web, SiteAddress(2, 0), tau, 60).positions
    assert np.all(a <= b)
    met = np.flatnonzero(a == b)
    if met.size:
        assert np.all(a[met[0] :] == b[met[0] :])


def test_noncoalescing_pair():
    web = WebPair(3, 1.0)
    left, right, flags = trace_pair_noncoalescing(web, SiteAddress(-2, 0), SiteAddress(2, 0), 0.4, 200, with_flags=True)
    coal = trace_path(web, SiteAddress(-2, 0), 0.4, 200)
    np.testing.assert_array_equal(left.positions, coal.positions)
    meet = left.positions[:-1] == right.positions[:-1]
    np.testing.assert_array_equal(flags, meet)
    with pytest.raises(GeometryError):
        trace_pair_noncoalescing(web, SiteAddress(2, 0), SiteAddress(-2, 0), 0.4, 10)


def test_noncoalescing_pair_is_independent():
    # X_r - X_l behaves like a walk with steps in {-2, 0, 2}, variance 2 per step
    n = 64
    diffs = []
    for s in range(400):
        l, r = trace_pair_noncoalescing(WebPair(s), SiteAddress(0, 0), SiteAddress(2, 0), 0.0, n)
        diffs.append(r.positions[-1] - l.positions[-1])
    diffs = np.array(diffs, dtype=float)
    # independent walks: Var(X_r(n) - X_l(n)) = 2n; coalescing would collapse it
    assert abs(diffs.var() / (2 * n) - 1) < 0.25
