"""Inter-event time statistics and the commit-timestamp shuffle null model.

The burstiness coefficient B = (sigma - mu) / (sigma + mu) of a subject's
inter-event times sits in [-1, 1]: -1 for a perfectly periodic process,
~0 for memoryless arrivals, towards 1 for heavy clustering. Population
standard deviation by default so the periodic limit is exact on short
series (sample std available via ddof).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np

from .model import CommitHistory, EventLog, InsufficientDataError, TopDevelopers, build_commit_history

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class InterEventSeries:
    subject: str
    timestamps: np.ndarray  # sorted int64

    def __post_init__(self):
        ts = np.asarray(self.timestamps, dtype=np.int64)
        if len(ts) > 1 and np.any(np.diff(ts) < 0):
            raise ValueError(f"timestamps of {self.subject!r} must be sorted")
        object.__setattr__(self, "timestamps", ts)

    @property
    def taus(self) -> np.ndarray:
        return np.diff(self.timestamps)


@dataclass(frozen=True)
class BurstinessReport:
    repo_id: str
    project_b: Optional[float]
    individual: Mapping[str, float]
    shuffled_mean: Mapping[str, float]
    skipped: tuple[str, ...]
    n_shuffles: int
    seed: int
    min_commits: int
    subjects: tuple[str, ...]  # developers the individual level was computed over


def burstiness_from_intervals(taus: np.ndarray, ddof: int = 0) -> Optional[float]:
    """B over a tau sequence; None when mu = sigma = 0 (all events simultaneous)."""
    taus = np.asarray(taus, dtype=np.float64)
    if len(taus) < 2:
        raise InsufficientDataError(f"need >= 2 inter-event times, got {len(taus)}")
    mu = float(np.mean(taus))
    sigma = float(np.std(taus, ddof=ddof))
    if mu == 0.0 and sigma == 0.0:
        return None
    return (sigma - mu) / (sigma + mu)


def burstiness(series: InterEventSeries, ddof: int = 0) -> Optional[float]:
    """Burstiness coefficient of one subject; requires >= 3 events."""
    return burstiness_from_intervals(series.taus, ddof=ddof)


def project_burstiness(log_: EventLog, ddof: int = 0) -> Optional[float]:
    """B of the pooled, author-agnostic commit time series of a project."""
    ts = np.asarray([c.timestamp for c in log_.commits], dtype=np.int64)
    if len(ts) < 3:
        raise InsufficientDataError(f"need >= 3 commits, got {len(ts)}")
    return burstiness(InterEventSeries(log_.repo_id, ts), ddof=ddof)


def individual_burstiness(history: CommitHistory, min_commits: int = 3,
                          ddof: int = 0) -> tuple[dict[str, float], tuple[str, ...]]:
    """Per-developer B for developers with >= min_commits commits.

    Returns (values, skipped): skipped developers either fall under the
    commit threshold or have an undefined B (all commits simultaneous).
    """
    if min_commits < 3:
        raise ValueError("min_commits must be >= 3")
    values: dict[str, float] = {}
    skipped: list[str] = []
    for dev in history.developers:
        ts = history.times[dev]
        if len(ts) < min_commits:
            skipped.append(dev)
            continue
        b = burstiness(InterEventSeries(dev, ts), ddof=ddof)
        if b is None:
            skipped.append(dev)
        else:
            values[dev] = b
    return values, tuple(skipped)


def shuffle_commit_timestamps(log_: EventLog, rng_seed: int) -> EventLog:
    """Uniformly permute commit timestamps across all commits of the project.

    Preserves the timestamp multiset (hence project-level inter-event
    times) and the number of commits per developer; only the assignment of
    times to commits changes. Co-edits are untouched.
    """
    rng = np.random.default_rng(rng_seed)
    ts = np.asarray([c.timestamp for c in log_.commits], dtype=np.int64)
    return log_.replace_commit_timestamps(ts[rng.permutation(len(ts))])


def burstiness_report(log_: EventLog, top: Optional[TopDevelopers] = None,
                      n_shuffles: int = 100, seed: int = 42, min_commits: int = 3) -> BurstinessReport:
    """Project + individual burstiness with the shuffle-null comparison.

    When `top` is given, the individual level is restricted to those
    developers (the paper-style top-20% cut); otherwise all developers
    with enough commits are reported. Shuffle i uses seed `seed + i`.
    """
    if n_shuffles < 1:
        raise ValueError("n_shuffles must be >= 1")
    history = build_commit_history(log_)
    try:
        project_b = project_burstiness(log_)
    except InsufficientDataError:
        project_b = None
        log.warning("project %s has < 3 commits; project-level B skipped", log_.repo_id)

    subjects = top.ids if top is not None else history.committers()
    subject_set = set(subjects)

    values, skipped = individual_burstiness(history, min_commits=min_commits)
    values = {d: b for d, b in values.items() if d in subject_set}
    skipped = tuple(d for d in skipped if d in subject_set)

    sums: dict[str, float] = {d: 0.0 for d in values}
    counts: dict[str, int] = {d: 0 for d in values}
    for i in range(n_shuffles):
        shuffled = shuffle_commit_timestamps(log_, seed + i)
        shuffled_values, _ = individual_burstiness(build_commit_history(shuffled), min_commits=min_commits)
        for d in sums:
            b = shuffled_values.get(d)
            if b is not None:
                sums[d] += b
                counts[d] += 1
    shuffled_mean = {d: sums[d] / counts[d] for d in sums if counts[d]}

    return BurstinessReport(
        repo_id=log_.repo_id,
        project_b=project_b,
        individual=values,
        shuffled_mean=shuffled_mean,
        skipped=skipped,
        n_shuffles=n_shuffles,
        seed=seed,
        min_commits=min_commits,
        subjects=tuple(subjects),
    )
