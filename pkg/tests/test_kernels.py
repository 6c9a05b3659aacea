"""Cross-backend equality: the compiled kernels must reproduce the pure
reference bit for bit."""

import numpy as np
import pytest

from cascade_lens.cascade import DetectionArrays, _group_by
from cascade_lens.kernels import BACKEND, pure
from cascade_lens.model import CommitHistory
from conftest import coedit
from test_cascade import random_instance

try:
    from cascade_lens.kernels import _speedups
except ImportError:
    _speedups = None

needs_speedups = pytest.mark.skipif(_speedups is None, reason="compiled kernels not built")


def kernel_inputs(rng):
    history, events, initiators = random_instance(rng, max_devs=8, max_events=80, t_max=200)
    hist = CommitHistory(times={d: np.asarray(ts, dtype=np.int64) for d, ts in history.items()})
    arrays = DetectionArrays(hist, [coedit(*e) for e in events])
    order = arrays.canonical_order(arrays.base_time)
    ev_time = np.ascontiguousarray(arrays.base_time[order])
    ev_editor = np.ascontiguousarray(arrays.ev_editor[order])
    ev_edited = np.ascontiguousarray(arrays.ev_edited[order])
    edg_starts, edg_order = _group_by(ev_edited, arrays.n_devs)
    grp_starts, grp_order = _group_by(ev_editor, arrays.n_devs)
    seed_ok = arrays.initiator_mask(initiators)[ev_editor].astype(np.uint8)
    return arrays, ev_time, ev_editor, ev_edited, edg_starts, edg_order, grp_starts, grp_order, seed_ok


@needs_speedups
def test_trigger_scores_bitwise_equal():
    rng = np.random.default_rng(101)
    for _ in range(150):
        arrays, ev_time, _, _, edg_starts, edg_order, *_ = kernel_inputs(rng)
        for strict in (False, True):
            t1, r1, x1 = pure.trigger_scores(arrays.hist_flat, arrays.hist_starts, ev_time,
                                             edg_starts, edg_order, 25.0, strict)
            t2, r2, x2 = _speedups.trigger_scores(arrays.hist_flat, arrays.hist_starts, ev_time,
                                                  edg_starts, edg_order, 25.0, strict)
            np.testing.assert_array_equal(t1, t2)
            np.testing.assert_array_equal(r1, r2)  # NaN == NaN under array_equal
            np.testing.assert_array_equal(x1, x2)


@needs_speedups
def test_detect_chains_identical():
    rng = np.random.default_rng(202)
    for _ in range(150):
        arrays, ev_time, _, ev_edited, edg_starts, edg_order, grp_starts, grp_order, seed_ok = kernel_inputs(rng)
        trig, _, _ = pure.trigger_scores(arrays.hist_flat, arrays.hist_starts, ev_time,
                                         edg_starts, edg_order, 25.0)
        o1, f1 = pure.detect_chains(ev_time, ev_edited, trig, seed_ok, grp_starts, grp_order)
        o2, f2 = _speedups.detect_chains(ev_time, ev_edited, trig, seed_ok, grp_starts, grp_order)
        np.testing.assert_array_equal(o1, o2)
        np.testing.assert_array_equal(f1, f2)


def test_env_override_selects_pure(tmp_path):
    import subprocess
    import sys
    code = "from cascade_lens import kernels; print(kernels.BACKEND)"
    out = subprocess.run([sys.executable, "-c", code],
                         env={"PATH": "/usr/bin:/bin", "CASCADE_LENS_PURE": "1"},
                         capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "pure"


def test_active_backend_reported():
    assert BACKEND in ("cython", "pure")
