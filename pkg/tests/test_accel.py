"""The interpreted fallback (DYDW_NUMBA=0) against the compiled kernels."""

import json
import os
import subprocess
import sys

import numpy as np

from dydw import _accel

PROBE = r"""
import json, numpy as np
from dydw import _accel, estimators
from dydw.events import EventSpec, RectangleStack
from dydw.rng import replicate_seeds
from dydw.tau import tau_interval_set
from dydw.web import SiteAddress, WebPair, arrow_stream, trace_path
stack = RectangleStack(2.0, 2)
seeds = replicate_seeds(3, 200)
out = {"numba": _accel.NUMBA_ENABLED}
out["ind"] = estimators.event_indicators(EventSpec("C", 1, stack), 0.3, seeds).tolist()
web = WebPair(5, 2.0)
ivs = tau_interval_set(web, EventSpec("C", 1, stack))
out["starts"] = ivs.starts.tolist(); out["ends"] = ivs.ends.tolist()
out["sites"] = ivs.start_sites.tolist()
st = arrow_stream(web, "secondary", SiteAddress(3, 1))
out["rings"] = st.ring_times.tolist(); out["vals"] = st.values.tolist()
out["path"] = trace_path(web, SiteAddress(0, 0), 0.7, 30).positions.tolist()
print(json.dumps(out))
"""


def _probe(flag):
    env = dict(os.environ, DYDW_NUMBA=flag)
    res = subprocess.run([sys.executable, "-W", "error::RuntimeWarning", "-c", PROBE], env=env, capture_output=True, text=True, check=True)
    return json.loads(res.stdout)


def test_fallback_matches_compiled():
    fast, slow = _probe("1"), _probe("0")
    assert fast["numba"] and not slow["numba"]
    assert fast["ind"] == slow["ind"]
    assert fast["sites"] == slow["sites"]
    assert fast["vals"] == slow["vals"]
    assert fast["path"] == slow["path"]
    for key in ("starts", "ends", "rings"):
        np.testing.assert_allclose(fast[key], slow[key], rtol=1e-14)


def test_flag_parsing():
    assert isinstance(_accel.NUMBA_ENABLED, bool)
