# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled detection kernels.

Semantics (and bit-exact outputs) must match ``cascade_lens.kernels.pure``;
the trigger ranking additionally uses a per-developer Fenwick tree over
coordinate-compressed inter-commit intervals so that ranking an event
against a history prefix costs O(log H) instead of O(H).
"""

import numpy as np


cdef Py_ssize_t _bisect_left(const long long[::1] a, Py_ssize_t lo, Py_ssize_t hi, long long x):
    cdef Py_ssize_t mid
    while lo < hi:
        mid = (lo + hi) // 2
        if a[mid] < x:
            lo = mid + 1
        else:
            hi = mid
    return lo


cdef Py_ssize_t _bisect_right(const long long[::1] a, Py_ssize_t lo, Py_ssize_t hi, long long x):
    cdef Py_ssize_t mid
    while lo < hi:
        mid = (lo + hi) // 2
        if a[mid] <= x:
            lo = mid + 1
        else:
            hi = mid
    return lo


cdef void _fen_add(long long[::1] fen, Py_ssize_t size, Py_ssize_t pos):
    # 1-based Fenwick over compressed interval values
    cdef Py_ssize_t i = pos
    while i <= size:
        fen[i] += 1
        i += i & (-i)


cdef long long _fen_sum(const long long[::1] fen, Py_ssize_t pos):
    cdef long long s = 0
    cdef Py_ssize_t i = pos
    while i > 0:
        s += fen[i]
        i -= i & (-i)
    return s


def trigger_scores(hist_flat, hist_starts, ev_time, edg_starts, edg_order, threshold, strict_ties=False):
    """Trigger flags, percentile ranks and response intervals for every event."""
    cdef const long long[::1] hflat = hist_flat
    cdef const long long[::1] hstarts = hist_starts
    cdef const long long[::1] etime = ev_time
    cdef const long long[::1] gstarts = edg_starts
    cdef const long long[::1] gorder = edg_order
    cdef double thr = threshold
    cdef bint strict = bool(strict_ties)

    cdef Py_ssize_t n_events = etime.shape[0]
    cdef Py_ssize_t n_devs = gstarts.shape[0] - 1

    trig_arr = np.zeros(n_events, dtype=np.uint8)
    rank_arr = np.full(n_events, np.nan)
    resp_arr = np.full(n_events, np.nan)
    cdef unsigned char[::1] trig = trig_arr
    cdef double[::1] rank = rank_arr
    cdef double[::1] resp = resp_arr

    cdef Py_ssize_t d, lo, hi, hs, he, m, k, ins, target, n_uniq
    cdef Py_ssize_t j, nb, na, idx_lt, idx_rt
    cdef long long t, x, n_less, n_eq
    cdef double r
    cdef const long long[::1] uniq_v
    cdef const long long[::1] ivpos_v
    cdef long long[::1] fen_v

    for d in range(n_devs):
        lo = gstarts[d]
        hi = gstarts[d + 1]
        if lo == hi:
            continue
        hs = hstarts[d]
        he = hstarts[d + 1]
        m = he - hs
        if m >= 3:
            times_np = np.asarray(hist_flat[hs:he])
            iv_np = np.diff(times_np)
            uniq_np = np.unique(iv_np)
            ivpos_np = np.searchsorted(uniq_np, iv_np).astype(np.int64) + 1
            n_uniq = uniq_np.shape[0]
            fen_np = np.zeros(n_uniq + 1, dtype=np.int64)
            uniq_v = uniq_np
            ivpos_v = ivpos_np
            fen_v = fen_np
        else:
            n_uniq = 0
        ins = 0
        for k in range(lo, hi):
            j = gorder[k]
            t = etime[j]
            na = _bisect_right(hflat, hs, he, t)
            if na - hs >= m:
                continue
            x = hflat[na] - t
            resp[j] = <double> x
            nb = _bisect_left(hflat, hs, he, t) - hs
            if nb < 2:
                continue
            target = nb - 1
            while ins < target:
                _fen_add(fen_v, n_uniq, ivpos_v[ins])
                ins += 1
            idx_lt = _bisect_left(uniq_v, 0, n_uniq, x)
            n_less = _fen_sum(fen_v, idx_lt)
            if strict:
                r = 100.0 * n_less / target
            else:
                idx_rt = _bisect_right(uniq_v, 0, n_uniq, x)
                n_eq = _fen_sum(fen_v, idx_rt) - n_less
                r = 100.0 * (n_less + 0.5 * n_eq) / target
            rank[j] = r
            if r <= thr:
                trig[j] = 1
    return trig_arr, rank_arr, resp_arr


def detect_chains(ev_time, ev_edited, trig, seed_ok, grp_starts, grp_order):
    """Greedy cascade chains (offsets, flattened event indices), one per seed."""
    cdef const long long[::1] etime = ev_time
    cdef const long long[::1] edited = ev_edited
    cdef const unsigned char[::1] tr = trig
    cdef const unsigned char[::1] seeds = seed_ok
    cdef const long long[::1] gstarts = grp_starts
    cdef const long long[::1] gorder = grp_order

    cdef Py_ssize_t n_events = etime.shape[0]
    grp_times_np = np.asarray(ev_time)[np.asarray(grp_order)]
    cdef const long long[::1] gtimes = grp_times_np

    step_np = np.full(n_events, -1, dtype=np.int64)
    suffix_np = np.ones(n_events, dtype=np.int64)
    cdef long long[::1] step = step_np
    cdef long long[::1] suffix = suffix_np

    cdef Py_ssize_t j, lo, hi, pos
    cdef long long nxt
    for j in range(n_events):
        lo = gstarts[edited[j]]
        hi = gstarts[edited[j] + 1]
        if lo == hi:
            continue
        pos = _bisect_right(gtimes, lo, hi, etime[j])
        if pos < hi:
            nxt = gorder[pos]
            if tr[nxt]:
                step[j] = nxt

    # successors always sit at larger canonical index (strictly later time)
    for j in range(n_events - 1, -1, -1):
        if step[j] >= 0:
            suffix[j] = 1 + suffix[step[j]]

    cdef long long total = 0
    cdef long long n_chains = 0
    for j in range(n_events):
        if seeds[j] and tr[j] and suffix[j] >= 2:
            total += suffix[j]
            n_chains += 1

    offsets_np = np.zeros(n_chains + 1, dtype=np.int64)
    flat_np = np.empty(total, dtype=np.int64)
    cdef long long[::1] offsets = offsets_np
    cdef long long[::1] flat = flat_np

    cdef long long c = 0
    cdef long long w = 0
    cdef long long cur
    for j in range(n_events):
        if seeds[j] and tr[j] and suffix[j] >= 2:
            cur = j
            while cur >= 0:
                flat[w] = cur
                w += 1
                cur = step[cur]
            c += 1
            offsets[c] = w
    return offsets_np, flat_np
