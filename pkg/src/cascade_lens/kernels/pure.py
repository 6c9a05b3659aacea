"""Pure-Python/numpy reference implementation of the detection kernels.

This backend defines the semantics; the compiled extension in
``_speedups.pyx`` must produce bit-identical outputs (checked by the
cross-backend tests and the benchmark). Array layout conventions:

* developer codes are 0..n_devs-1, assigned in lexicographic id order so
  integer comparisons reproduce string tie-breaking;
* events arrive in canonical order (timestamp, editor, edited, input
  order) with self-edits already removed;
* per-developer commit histories are concatenated into ``hist_flat`` with
  CSR-style ``hist_starts`` offsets;
* ``edg_starts``/``edg_order`` group event indices by edited developer and
  ``grp_starts``/``grp_order`` by editor, preserving canonical order
  inside each group.
"""

from __future__ import annotations

import numpy as np


def trigger_scores(hist_flat, hist_starts, ev_time, edg_starts, edg_order, threshold, strict_ties=False):
    """Classify every event as trigger / non-trigger against the edited developer's history.

    For an event at time t against developer d: B = commits of d strictly
    before t, A = strictly after. With |B| >= 2 and |A| >= 1 the response
    x = min(A) - t is ranked against the inter-commit intervals of B
    (mid-rank for ties unless ``strict_ties``); rank <= threshold marks a
    trigger. Insufficient history is a non-trigger with NaN rank.

    Returns (trig uint8[E], rank float64[E], response float64[E]); response
    is filled whenever A is non-empty, rank only when the rank is defined.
    """
    n_events = len(ev_time)
    trig = np.zeros(n_events, dtype=np.uint8)
    rank = np.full(n_events, np.nan)
    resp = np.full(n_events, np.nan)
    n_devs = len(edg_starts) - 1
    for d in range(n_devs):
        lo, hi = edg_starts[d], edg_starts[d + 1]
        if lo == hi:
            continue
        times = hist_flat[hist_starts[d]:hist_starts[d + 1]]
        m = len(times)
        iv = np.diff(times)
        for j in edg_order[lo:hi]:
            t = ev_time[j]
            nb = int(np.searchsorted(times, t, side="left"))
            na = int(np.searchsorted(times, t, side="right"))
            if na < m:
                x = int(times[na]) - int(t)
                resp[j] = float(x)
                if nb >= 2:
                    pre = iv[:nb - 1]
                    n_iv = nb - 1
                    n_less = int(np.count_nonzero(pre < x))
                    if strict_ties:
                        r = 100.0 * n_less / n_iv
                    else:
                        n_eq = int(np.count_nonzero(pre == x))
                        r = 100.0 * (n_less + 0.5 * n_eq) / n_iv
                    rank[j] = r
                    if r <= threshold:
                        trig[j] = 1
    return trig, rank, resp


def chain_successors(ev_time, ev_edited, trig, grp_starts, grp_order, grp_times):
    """For every event, the event index greedy extension steps to, or -1.

    The successor of e is the first event (canonical order) whose editor is
    e's edited developer with a strictly later timestamp, provided that
    event is itself a trigger; otherwise -1. Successors always have larger
    canonical index because canonical order is timestamp-major.
    """
    n_events = len(ev_time)
    step = np.full(n_events, -1, dtype=np.int64)
    for j in range(n_events):
        d = ev_edited[j]
        lo, hi = grp_starts[d], grp_starts[d + 1]
        if lo == hi:
            continue
        pos = lo + int(np.searchsorted(grp_times[lo:hi], ev_time[j], side="right"))
        if pos < hi:
            nxt = int(grp_order[pos])
            if trig[nxt]:
                step[j] = nxt
    return step


def detect_chains(ev_time, ev_edited, trig, seed_ok, grp_starts, grp_order):
    """Greedy cascade chains, one per qualifying seed event.

    Seeds every trigger event with ``seed_ok`` set (editor in the initiator
    set), extends through ``chain_successors`` until the next event is
    missing or not a trigger, and keeps chains of length >= 2.

    Returns (offsets int64[n_chains+1], events int64[sum(depths)]): chain c
    is ``events[offsets[c]:offsets[c+1]]``, ordered by seed position.
    """
    grp_times = ev_time[grp_order]
    step = chain_successors(ev_time, ev_edited, trig, grp_starts, grp_order, grp_times)
    offsets = [0]
    flat: list[int] = []
    for s in range(len(ev_time)):
        if not (seed_ok[s] and trig[s]):
            continue
        cur = s
        chain = [cur]
        while step[cur] >= 0:
            cur = int(step[cur])
            chain.append(cur)
        if len(chain) >= 2:
            flat.extend(chain)
            offsets.append(len(flat))
    return np.asarray(offsets, dtype=np.int64), np.asarray(flat, dtype=np.int64)
