import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dydw import kernels
from dydw.errors import DegenerateError, IntegrityError, ValidationError
from dydw.events import RectangleStack
from dydw.rng import replicate_seeds
from dydw.sticking import (
    LABELS,
    StickingProfile,
    _cycles,
    classify_sticking,
    coupling_trace,
    decompose,
    fit_sticking_constant,
    sticking_statistic,
    modulus_curve,
    modulus_statistic,
    reconstruct,
    split_holds,
    stick_quadruple,
)
from dydw.web import SiteAddress, WebPair, trace_pair_noncoalescing
from oracles import StreamCache

STACK = RectangleStack(2.0, 3)


def test_quadruple_paths_match_pair_tracer():
    web = WebPair(9)
    q = stick_quadruple(web, STACK, 2, 0.2, 0.6)
    (xl, tk), (xr, _) = STACK.corners(2)
    n = STACK.d[2] ** 2
    for row, tau in ((0, 0.2), (2, 0.6)):
        l, r = trace_pair_noncoalescing(web, SiteAddress(xl, tk), SiteAddress(xr, tk), tau, tk + n)
        np.testing.assert_array_equal(q.traces[row], l.positions)
        np.testing.assert_array_equal(q.traces[row + 1], r.positions)


def test_labels_match_kernel_bitmask():
    for seed in range(50):
        web = WebPair(seed)
        q = stick_quadruple(web, STACK, 2, 0.0, 0.3)
        prof = classify_sticking(web, q)
        bits = {"ll": 1, "lr": 2, "rl": 4, "rr": 8}
        for m, s in enumerate(prof.labels):
            assert sum(bits[lab] for lab in s) == q.labels[m]


def test_sticking_steps_share_arrows():
    # on a sticking step the two paths move identically
    for seed in range(50):
        web = WebPair(seed)
        q = stick_quadruple(web, STACK, 2, 0.0, 0.3)
        prof = classify_sticking(web, q)
        pairs = {"ll": (0, 2), "lr": (0, 3), "rl": (2, 1), "rr": (1, 3)}
        inc = np.diff(q.traces, axis=1)
        for m, s in enumerate(prof.labels):
            for lab in s:
                i, j = pairs[lab]
                assert q.traces[i, m] == q.traces[j, m]
                assert inc[i, m] == inc[j, m]


def test_no_ring_check_against_streams():
    web = WebPair(4, 1.0)
    q = stick_quadruple(web, STACK, 1, 0.1, 0.7)
    prof = classify_sticking(web, q)
    cache = StreamCache(web)
    for m, s in enumerate(prof.labels):
        if "ll" in s:
            x, t = int(q.traces[0, m]), q.t_offset + m
            cache.value(0, x, t, 0.0)
            st_ = cache.streams[(0, x, t)]
            assert not np.any((st_.ring_times > 0.1) & (st_.ring_times <= 0.7))


def test_split_and_reconstruction_exact():
    for seed in replicate_seeds(4, 200):
        web = WebPair(int(seed))
        q = stick_quadruple(web, STACK, 2, 0.0, 0.25)
        prof = classify_sticking(web, q)
        assert split_holds(prof)
        for pair, path in zip(decompose(q, prof), q.traces):
            np.testing.assert_array_equal(reconstruct(pair, prof), path)


def test_delta_value():
    q = stick_quadruple(WebPair(1), STACK, 2, 0.0, 0.5)
    assert classify_sticking(WebPair(1), q).delta == pytest.approx(1 / (6 * 0.5))


def test_decompose_rejects_bad_clock():
    web = WebPair(3)
    q = stick_quadruple(web, STACK, 1, 0.0, 0.5)
    prof = classify_sticking(web, q)
    bad = StickingProfile(prof.labels, prof.G * 2, prof.G_parts, prof.delta)
    with pytest.raises(IntegrityError):
        decompose(q, bad)


def test_quadruple_validation():
    with pytest.raises(ValidationError):
        stick_quadruple(WebPair(1), STACK, 1, 0.5, 0.5)


@given(st.lists(st.booleans(), min_size=1, max_size=40))
def test_cycles_partition_time(stick):
    stick = np.array(stick)
    together = np.ones(stick.size + 1, dtype=bool)
    tr = _cycles(stick, together)
    assert sum(tr.deltas) + sum(tr.gammas) + (tr.censored_delta or 0) >= min(stick.size, 1)
    assert all(d >= 0 for d in tr.deltas) and all(g >= 1 for g in tr.gammas)


def test_cycles_hand_case():
    stick = np.array([True, True, False, False, True, False])
    together = np.array([True, True, True, False, True, True, True])
    tr = _cycles(stick, together)
    assert tr.deltas[:2] == [2, 1]
    assert tr.gammas[0] == 2


def test_coupling_trace_runs():
    ref, star = coupling_trace(WebPair(2), STACK, 2, 0.0, 0.2)
    assert ref.deltas and star.deltas is not None


def test_sticking_statistic():
    profs = []
    for s in range(30):
        web = WebPair(s)
        profs.append(classify_sticking(web, stick_quadruple(web, STACK, 2, 0.0, 0.5)))
    v = sticking_statistic(profs, 0.5)
    assert 0 <= v <= 1
    with pytest.raises(DegenerateError):
        sticking_statistic([], 0.5)
    with pytest.raises(ValidationError):
        sticking_statistic(profs, 1.5)
    assert fit_sticking_constant([0.1, 0.2], [0.01, 0.04], 0.5) == pytest.approx(0.04 / 0.2**0.5)


def test_modulus_curve_brute_force():
    rng = np.random.default_rng(1)
    path = np.concatenate([[0], np.cumsum(rng.choice([-1, 1], 36))])
    d = 6
    for eps in (0.01, 0.1, 0.3, 1.0):
        lag = int(np.ceil(eps * 36 - 1e-9))
        brute = max(abs(path[j] - path[i]) for i in range(37) for j in range(i, min(i + lag, 36) + 1)) / d
        assert modulus_curve(path, d, [eps])[0] == brute


def test_modulus_statistic_shape():
    res = modulus_statistic(replicate_seeds(1, 200), STACK, 2, [0.1], [0.5, 0.1], [0.5, 0.25])
    assert set(res) == {(0.1, 0.5, 0.5), (0.1, 0.5, 0.25)}
    assert all(0 <= v <= 1 for v in res.values())
