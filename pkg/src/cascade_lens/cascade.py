"""Trigger-event classification and greedy cascade-chain tracing.

A co-edit is a trigger when the edited developer's next commit lands
unusually fast by their own historical standards: the response interval's
percentile rank among the developer's prior inter-commit intervals is at
or below a threshold (default 25). Chains link triggers whose edited
developer authors the next trigger, and only chains of two or more
triggers count as cascades.

Self co-edits (editor == edited) are excluded from trigger evaluation and
from the event sequence used for chain extension.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple, Optional, Sequence

import numpy as np

from . import kernels
from .model import CoEditEvent, CommitHistory, TopDevelopers, sort_coedits

DEFAULT_THRESHOLD = 25.0

_EMPTY = np.empty(0, dtype=np.int64)


class TriggerCheck(NamedTuple):
    triggered: bool
    rank: Optional[float]
    response: Optional[int]


@dataclass(frozen=True)
class TriggerEvent:
    event: CoEditEvent
    response_interval: int
    percentile_rank: float

    def __post_init__(self):
        if self.response_interval < 0:
            raise ValueError("response_interval must be >= 0")


@dataclass(frozen=True)
class CascadeChain:
    events: tuple[TriggerEvent, ...]

    def __post_init__(self):
        if len(self.events) < 2:
            raise ValueError("a cascade chain needs at least two trigger events")
        for prev, cur in zip(self.events, self.events[1:]):
            if cur.event.timestamp <= prev.event.timestamp:
                raise ValueError("chain timestamps must strictly increase")
            if cur.event.editor_id != prev.event.edited_id:
                raise ValueError("consecutive chain events must link editor to edited")

    @property
    def depth(self) -> int:
        return len(self.events)

    @property
    def devs(self) -> int:
        ids = set()
        for te in self.events:
            ids.add(te.event.editor_id)
            ids.add(te.event.edited_id)
        return len(ids)


@dataclass(frozen=True)
class CascadeStats:
    n_cascades: int
    avg_depth: float
    avg_devs: float


@dataclass(frozen=True)
class DetectionResult:
    """Chains plus the diagnostics tallies of the trigger pass."""

    chains: tuple[CascadeChain, ...]
    n_events: int
    n_self_edits: int
    n_insufficient_history: int
    n_triggers: int
    threshold_percentile: float


def is_trigger(history: CommitHistory, event: CoEditEvent, threshold_percentile: float = DEFAULT_THRESHOLD,
               strict_ties: bool = False) -> TriggerCheck:
    """Single-event trigger check against the edited developer's commit history.

    Returns (triggered, rank, response). Insufficient history (< 2 commits
    before the edit or none after) is a non-trigger with rank None; the
    response is still reported when a next commit exists.
    """
    if not (0.0 < threshold_percentile < 100.0):
        raise ValueError(f"threshold_percentile must be in (0, 100), got {threshold_percentile}")
    if event.is_self_edit:
        raise ValueError("self-edits are never evaluated for triggers")
    times = history.times.get(event.edited_id, _EMPTY)
    t = event.timestamp
    nb = int(np.searchsorted(times, t, side="left"))
    na = int(np.searchsorted(times, t, side="right"))
    if na >= len(times):
        return TriggerCheck(False, None, None)
    x = int(times[na]) - t
    if nb < 2:
        return TriggerCheck(False, None, x)
    iv = np.diff(times[:nb])
    n_iv = nb - 1
    n_less = int(np.count_nonzero(iv < x))
    if strict_ties:
        rank = 100.0 * n_less / n_iv
    else:
        n_eq = int(np.count_nonzero(iv == x))
        rank = 100.0 * (n_less + 0.5 * n_eq) / n_iv
    return TriggerCheck(rank <= threshold_percentile, rank, x)


class DetectionArrays:
    """Picklable array view of a (history, events) pair for the kernels.

    Developer codes follow lexicographic id order so integer comparisons
    reproduce string tie-breaking; histories are CSR-packed; self-edits are
    dropped from the kept-event arrays, but their timestamps remain in
    ``full_times`` so timestamp permutations stay aligned with the public
    shuffle op.
    """

    def __init__(self, history: CommitHistory, events: Sequence[CoEditEvent]):
        ids = set(history.times)
        kept_idx = []
        kept = []
        for i, e in enumerate(events):
            ids.add(e.editor_id)
            ids.add(e.edited_id)
            if not e.is_self_edit:
                kept_idx.append(i)
                kept.append(e)
        self.dev_ids: tuple[str, ...] = tuple(sorted(ids))
        code = {d: i for i, d in enumerate(self.dev_ids)}
        self.n_devs = len(self.dev_ids)
        self.n_self_edits = len(events) - len(kept)

        starts = np.zeros(self.n_devs + 1, dtype=np.int64)
        chunks = []
        for i, d in enumerate(self.dev_ids):
            arr = history.times.get(d, _EMPTY)
            starts[i + 1] = starts[i] + len(arr)
            chunks.append(np.asarray(arr, dtype=np.int64))
        self.hist_flat = np.concatenate(chunks) if chunks else _EMPTY.copy()
        self.hist_starts = starts

        n = len(kept)
        self.ev_editor = np.fromiter((code[e.editor_id] for e in kept), dtype=np.int64, count=n)
        self.ev_edited = np.fromiter((code[e.edited_id] for e in kept), dtype=np.int64, count=n)
        self.kept_idx = np.asarray(kept_idx, dtype=np.int64)
        self.full_times = np.fromiter((e.timestamp for e in events), dtype=np.int64, count=len(events))

    @property
    def base_time(self) -> np.ndarray:
        """Unshuffled timestamps of the kept events."""
        return self.full_times[self.kept_idx]

    def initiator_mask(self, initiators: Iterable[str]) -> np.ndarray:
        members = set(initiators)
        return np.fromiter((d in members for d in self.dev_ids), dtype=bool, count=self.n_devs)

    def canonical_order(self, times: np.ndarray) -> np.ndarray:
        """Order kept events by (timestamp, editor, edited, input order)."""
        n = len(times)
        return np.lexsort((np.arange(n), self.ev_edited, self.ev_editor, times))


class DetectionContext:
    """DetectionArrays plus the event objects, for wrapping kernel output."""

    def __init__(self, history: CommitHistory, events: Sequence[CoEditEvent]):
        self.arrays = DetectionArrays(history, events)
        self.events: tuple[CoEditEvent, ...] = tuple(
            events[i] for i in self.arrays.kept_idx)


def _group_by(codes: np.ndarray, n_devs: int) -> tuple[np.ndarray, np.ndarray]:
    order = np.argsort(codes, kind="stable").astype(np.int64)
    starts = np.zeros(n_devs + 1, dtype=np.int64)
    starts[1:] = np.cumsum(np.bincount(codes, minlength=n_devs))
    return starts, order


def run_detection(arrays: DetectionArrays, times: np.ndarray, initiator_mask: np.ndarray,
                  threshold_percentile: float, strict_ties: bool = False):
    """Kernel pass over one timestamp assignment of the kept events.

    Returns (order, trig, rank, resp, offsets, flat): `order` maps each
    canonical position back to the kept-event index; the chain arrays index
    into canonical positions.
    """
    order = arrays.canonical_order(times)
    ev_time = np.ascontiguousarray(times[order])
    ev_editor = np.ascontiguousarray(arrays.ev_editor[order])
    ev_edited = np.ascontiguousarray(arrays.ev_edited[order])

    edg_starts, edg_order = _group_by(ev_edited, arrays.n_devs)
    grp_starts, grp_order = _group_by(ev_editor, arrays.n_devs)

    trig, rank, resp = kernels.trigger_scores(
        arrays.hist_flat, arrays.hist_starts, ev_time, edg_starts, edg_order,
        float(threshold_percentile), strict_ties)
    seed_ok = initiator_mask[ev_editor].astype(np.uint8)
    offsets, flat = kernels.detect_chains(ev_time, ev_edited, trig, seed_ok, grp_starts, grp_order)
    return order, trig, rank, resp, offsets, flat


def chain_shape_stats(ev_editor_by_pos, ev_edited_by_pos, offsets, flat) -> tuple[list[int], list[int]]:
    """Depth and unique-developer count per detected chain."""
    depths, devs = [], []
    for c in range(len(offsets) - 1):
        members = flat[offsets[c]:offsets[c + 1]]
        depths.append(len(members))
        uniq = set()
        for j in members:
            uniq.add(int(ev_editor_by_pos[j]))
            uniq.add(int(ev_edited_by_pos[j]))
        devs.append(len(uniq))
    return depths, devs


def detect_cascades_detailed(history: CommitHistory, events: Sequence[CoEditEvent],
                             initiators: TopDevelopers | Iterable[str],
                             threshold_percentile: float = DEFAULT_THRESHOLD,
                             strict_ties: bool = False) -> DetectionResult:
    """Detect cascades and report trigger diagnostics.

    `events` may arrive in any order; they are canonicalized to
    (timestamp, editor, edited, input order) before detection so equal
    timestamps extend chains deterministically.
    """
    if not (0.0 < threshold_percentile < 100.0):
        raise ValueError(f"threshold_percentile must be in (0, 100), got {threshold_percentile}")
    initiator_ids = initiators.ids if isinstance(initiators, TopDevelopers) else tuple(initiators)
    ctx = DetectionContext(history, sort_coedits(events))
    arrays = ctx.arrays
    mask = arrays.initiator_mask(initiator_ids)
    order, trig, rank, resp, offsets, flat = run_detection(
        arrays, arrays.base_time, mask, threshold_percentile, strict_ties)

    chains = []
    for c in range(len(offsets) - 1):
        members = flat[offsets[c]:offsets[c + 1]]
        chain = tuple(
            TriggerEvent(
                event=ctx.events[int(order[j])],
                response_interval=int(resp[j]),
                percentile_rank=float(rank[j]),
            )
            for j in members
        )
        chains.append(CascadeChain(chain))

    evaluated = ~np.isnan(rank)
    return DetectionResult(
        chains=tuple(chains),
        n_events=len(events),
        n_self_edits=arrays.n_self_edits,
        n_insufficient_history=int(len(ctx.events) - np.count_nonzero(evaluated)),
        n_triggers=int(trig.sum()),
        threshold_percentile=threshold_percentile,
    )


def detect_cascades(history: CommitHistory, events: Sequence[CoEditEvent],
                    initiators: TopDevelopers | Iterable[str],
                    threshold_percentile: float = DEFAULT_THRESHOLD,
                    strict_ties: bool = False) -> tuple[CascadeChain, ...]:
    return detect_cascades_detailed(history, events, initiators, threshold_percentile, strict_ties).chains


def cascade_stats(chains: Sequence[CascadeChain]) -> CascadeStats:
    """Count, mean depth and mean unique-developer count; zeros when empty."""
    if not chains:
        return CascadeStats(0, 0.0, 0.0)
    depths = [c.depth for c in chains]
    devs = [c.devs for c in chains]
    return CascadeStats(len(chains), float(np.mean(depths)), float(np.mean(devs)))
