"""Temporal-shuffling null model for co-edits and the permutation test.

The null model permutes co-edit timestamps while keeping who-edits-whom
fixed; commit histories (and therefore every developer's trigger baseline)
stay untouched. Significance is the add-one empirical p-value
(1 + k) / (1 + N) over N shuffles, effect size is Cohen's d against the
null count distribution.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Iterable, Sequence

import numpy as np

from .cascade import CascadeStats, DetectionArrays, chain_shape_stats, run_detection
from .model import CoEditEvent, CommitHistory, EventLog, TopDevelopers, build_commit_history, sort_coedits


@dataclass(frozen=True)
class PermutationResult:
    repo_id: str
    observed: CascadeStats
    null_counts: tuple[int, ...]
    null_depths: tuple[float, ...]
    null_devs: tuple[float, ...]
    null_mean_count: float
    null_std_count: float
    null_mean_depth: float
    null_mean_devs: float
    p_value: float
    cohens_d: float
    n_shuffles: int
    base_seed: int
    threshold_percentile: float

    def __post_init__(self):
        if self.n_shuffles < 1:
            raise ValueError("n_shuffles must be >= 1")
        lo = 1.0 / (self.n_shuffles + 1)
        if not (lo <= self.p_value <= 1.0):
            raise ValueError(f"p_value {self.p_value} outside [{lo}, 1]")


def shuffle_coedit_timestamps(events: Sequence[CoEditEvent], rng_seed: int) -> tuple[CoEditEvent, ...]:
    """Permute timestamps among co-edits; pairs, weights and files stay put.

    The output is re-sorted into canonical (timestamp, editor, edited,
    input order) order, so the timestamp multiset and the ordered-pair
    multiset are both preserved exactly.
    """
    events = list(events)
    rng = np.random.default_rng(rng_seed)
    perm = rng.permutation(len(events))
    shuffled = [
        CoEditEvent(e.editor_id, e.edited_id, int(events[p].timestamp), e.weight, e.file)
        for e, p in zip(events, perm)
    ]
    return sort_coedits(shuffled)


def empirical_p(k: int, n_shuffles: int) -> float:
    """Add-one estimator (1 + k) / (1 + N); floor 1/(N+1), never exactly 0."""
    return (1 + k) / (1 + n_shuffles)


def cohens_d(observed: float, null_mean: float, null_std: float) -> float:
    """(observed - null mean) / null population std, with signed infinities
    when the null is degenerate; the all-zero case reports +inf."""
    if null_std > 0.0:
        return (observed - null_mean) / null_std
    if observed > null_mean:
        return math.inf
    if observed < null_mean:
        return -math.inf
    return math.inf if observed == 0.0 else 0.0


def _null_stats_one(arrays: DetectionArrays, times: np.ndarray, mask: np.ndarray,
                    threshold: float) -> tuple[int, float, float]:
    order, trig, rank, resp, offsets, flat = run_detection(arrays, times, mask, threshold)
    n = len(offsets) - 1
    if n == 0:
        return 0, 0.0, 0.0
    ev_editor = arrays.ev_editor[order]
    ev_edited = arrays.ev_edited[order]
    depths, devs = chain_shape_stats(ev_editor, ev_edited, offsets, flat)
    return n, float(np.mean(depths)), float(np.mean(devs))


def _shuffle_batch(arrays: DetectionArrays, mask: np.ndarray, threshold: float,
                   seeds: list[int]) -> list[tuple[int, float, float]]:
    # the permutation runs over the full co-edit list (self-edits included)
    # so iteration i reproduces shuffle_coedit_timestamps(log.coedits, seed_i)
    out = []
    n_full = len(arrays.full_times)
    for seed in seeds:
        perm = np.random.default_rng(seed).permutation(n_full)
        times_kept = arrays.full_times[perm][arrays.kept_idx]
        out.append(_null_stats_one(arrays, times_kept, mask, threshold))
    return out


def permutation_test(log: EventLog, initiators: TopDevelopers | Iterable[str],
                     n_shuffles: int = 100, base_seed: int = 42,
                     threshold: float = 25.0, jobs: int = 1,
                     history: CommitHistory | None = None) -> PermutationResult:
    """Observed cascade count against n_shuffles temporally shuffled nulls.

    Shuffle i draws its permutation from seed base_seed + i, so results are
    bit-identical for a fixed seed regardless of `jobs`. Per-shuffle
    average depth/devs are 0 for cascade-free shuffles and enter the null
    means as such.
    """
    if n_shuffles < 1:
        raise ValueError("n_shuffles must be >= 1")
    if history is None:
        history = build_commit_history(log)
    initiator_ids = initiators.ids if isinstance(initiators, TopDevelopers) else tuple(initiators)

    arrays = DetectionArrays(history, log.coedits)
    mask = arrays.initiator_mask(initiator_ids)

    obs_count, obs_depth, obs_devs = _null_stats_one(arrays, arrays.base_time, mask, threshold)
    observed = CascadeStats(obs_count, obs_depth, obs_devs)

    seeds = [base_seed + i for i in range(n_shuffles)]
    if jobs > 1 and n_shuffles > 1:
        chunks = [seeds[i::jobs] for i in range(jobs)]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_shuffle_batch, arrays, mask, threshold, chunk) for chunk in chunks]
            results = [f.result() for f in futures]
        by_seed = {}
        for chunk, res in zip(chunks, results):
            by_seed.update(zip(chunk, res))
        stats = [by_seed[s] for s in seeds]
    else:
        stats = _shuffle_batch(arrays, mask, threshold, seeds)

    counts = [s[0] for s in stats]
    depths = [s[1] for s in stats]
    devs = [s[2] for s in stats]
    k = sum(1 for c in counts if c >= obs_count)
    null_mean = float(np.mean(counts))
    null_std = float(np.std(counts))

    return PermutationResult(
        repo_id=log.repo_id,
        observed=observed,
        null_counts=tuple(counts),
        null_depths=tuple(depths),
        null_devs=tuple(devs),
        null_mean_count=null_mean,
        null_std_count=null_std,
        null_mean_depth=float(np.mean(depths)),
        null_mean_devs=float(np.mean(devs)),
        p_value=empirical_p(k, n_shuffles),
        cohens_d=cohens_d(float(obs_count), null_mean, null_std),
        n_shuffles=n_shuffles,
        base_seed=base_seed,
        threshold_percentile=threshold,
    )


def round_half_up(x: float, digits: int = 3) -> float:
    return float(Decimal(repr(x)).quantize(Decimal(1).scaleb(-digits), rounding=ROUND_HALF_UP))


def significance_stars(p: float) -> str:
    if p < 0.001:
        return "***"
    if p < 0.01:
        return "**"
    if p < 0.05:
        return "*"
    return ""


@dataclass(frozen=True)
class ReportEntry:
    repo_id: str
    top: TopDevelopers
    result: PermutationResult


REPORT_HEADER = (
    "repo", "top_devs", "commit_share_pct",
    "cascades", "avg_depth", "avg_devs",
    "null_mean_cascades", "p_value", "significance", "cohens_d",
    "null_avg_depth", "null_avg_devs",
)


def _fmt_d(d: float) -> str:
    if math.isinf(d):
        return "inf" if d > 0 else "-inf"
    return f"{d:.2f}"


def assemble_report(entries: Sequence[ReportEntry]) -> list[tuple]:
    """Rows in the shape of the per-repository result table.

    One row per repository: top-slice size and commit share, observed
    cascade stats, then the shuffle-null summary with the rounded p-value
    and its significance stars (derived from the raw p).
    """
    rows = []
    for e in entries:
        r = e.result
        rows.append((
            e.repo_id,
            len(e.top.ids),
            f"{e.top.commit_share:.1f}",
            r.observed.n_cascades,
            f"{r.observed.avg_depth:.2f}",
            f"{r.observed.avg_devs:.2f}",
            f"{r.null_mean_count:.2f}",
            f"{round_half_up(r.p_value, 3):.3f}",
            significance_stars(r.p_value),
            _fmt_d(r.cohens_d),
            f"{r.null_mean_depth:.2f}",
            f"{r.null_mean_devs:.2f}",
        ))
    return rows
