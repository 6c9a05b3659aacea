"""Ground-truth validation networks: a random negative control and a
rhythm network with planted cascades.

The cascade network gives every developer a characteristic commit period
(with per-developer jitter) and inserts each planted co-edit a fixed
lead time before the responder's next expected commit, so the response
interval is far below the responder's typical inter-commit interval and
the trigger test fires by construction. The random control has uniform
commit times and uniformly random co-edit pairs/times, so response ranks
are uniform and no cascade excess should survive the permutation test.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .model import CoEditEvent, CommitEvent, EventLog

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SynthConfig:
    n_developers: int = 20
    horizon: int = 10_000_000
    commits_per_dev: int = 50
    n_random_coedits: int = 100
    n_planted_chains: int = 30
    chain_length: int = 6
    base_period: int = 100_000
    period_jitter: float = 0.1
    lead_time: int = 10
    background_commit_fraction: float = 0.3
    seed: int = 42

    def __post_init__(self):
        if self.n_developers < 2:
            raise ValueError("need at least 2 developers")
        if self.chain_length < 2:
            raise ValueError("chain_length must be >= 2")
        if not (0.0 <= self.period_jitter < 1.0):
            raise ValueError("period_jitter must be in [0, 1)")
        if self.lead_time >= self.base_period * (1.0 - self.period_jitter):
            raise ValueError("lead_time must be < base_period * (1 - period_jitter)")
        if self.background_commit_fraction < 0.0:
            raise ValueError("background_commit_fraction must be >= 0")


def default_random_config(seed: int = 42) -> SynthConfig:
    return SynthConfig(n_developers=20, commits_per_dev=50, n_random_coedits=200,
                       n_planted_chains=0, seed=seed)


def default_cascade_config(seed: int = 42) -> SynthConfig:
    return SynthConfig(seed=seed)


@dataclass(frozen=True)
class PlantedChain:
    links: tuple[tuple[str, str, int], ...]  # (editor, edited, timestamp) per co-edit
    event_indices: tuple[int, ...]  # positions in the final canonical co-edit list


@dataclass(frozen=True)
class GroundTruth:
    planted: tuple[PlantedChain, ...]
    skipped_chains: int
    initiator_pool: tuple[str, ...]


def _dev_ids(n: int) -> list[str]:
    width = max(2, len(str(n - 1)))
    return [f"dev{i:0{width}d}" for i in range(n)]


def _log_from_rows(repo_id: str, commit_rows, coedit_rows) -> tuple[EventLog, list[int]]:
    """Build the log and report where each co-edit row landed.

    coedit_rows are (editor, edited, time); the returned list maps row
    index -> position in the final canonical co-edit ordering.
    """
    commits = [
        CommitEvent(f"c{i:07d}", dev, int(t), repo_id)
        for i, (dev, t) in enumerate(commit_rows)
    ]
    order = sorted(range(len(coedit_rows)),
                   key=lambda i: (coedit_rows[i][2], coedit_rows[i][0], coedit_rows[i][1], i))
    events = [CoEditEvent(coedit_rows[i][0], coedit_rows[i][1], int(coedit_rows[i][2])) for i in order]
    positions = [0] * len(coedit_rows)
    for pos, row_idx in enumerate(order):
        positions[row_idx] = pos
    return EventLog.build(repo_id, commits, events), positions


def generate_random_network(cfg: Optional[SynthConfig] = None, seed: Optional[int] = None
                            ) -> tuple[EventLog, GroundTruth]:
    """Negative control: uniform commit times, uniform co-edit pairs and times."""
    if cfg is None:
        cfg = default_random_config(seed if seed is not None else 42)
    elif seed is not None:
        cfg = replace(cfg, seed=seed)
    rng = np.random.default_rng(cfg.seed)
    devs = _dev_ids(cfg.n_developers)

    commit_rows = []
    for dev in devs:
        for t in rng.integers(0, cfg.horizon, size=cfg.commits_per_dev, endpoint=True):
            commit_rows.append((dev, int(t)))

    coedit_rows = []
    for _ in range(cfg.n_random_coedits):
        a, b = rng.choice(cfg.n_developers, size=2, replace=False)
        t = int(rng.integers(0, cfg.horizon, endpoint=True))
        coedit_rows.append((devs[a], devs[b], t))

    log_, _ = _log_from_rows(f"synth-random-{cfg.seed}", commit_rows, coedit_rows)
    return log_, GroundTruth(planted=(), skipped_chains=0, initiator_pool=())


def generate_cascade_network(cfg: Optional[SynthConfig] = None, seed: Optional[int] = None
                             ) -> tuple[EventLog, GroundTruth]:
    """Rhythm network with planted cascade chains.

    Developer i commits with period base_period * (1 + u_i), u_i uniform in
    [-jitter, +jitter], random phase. The initiator pool (first
    ceil(0.2 * n) developers) receives extra uniformly-placed commits so
    the top-20% cut always contains the planted chain seeds. Each planted
    chain walks a developer sequence d_1..d_{L+1}; link k is a co-edit
    (d_k -> d_{k+1}) placed lead_time before d_{k+1}'s next commit, giving
    a response interval of at most lead_time. Chains that would run past
    the horizon are skipped and counted.
    """
    if cfg is None:
        cfg = default_cascade_config(seed if seed is not None else 42)
    elif seed is not None:
        cfg = replace(cfg, seed=seed)
    rng = np.random.default_rng(cfg.seed)
    devs = _dev_ids(cfg.n_developers)
    n_pool = math.ceil(0.2 * cfg.n_developers)
    pool = devs[:n_pool]

    commit_times: dict[str, np.ndarray] = {}
    for i, dev in enumerate(devs):
        period = cfg.base_period * (1.0 + rng.uniform(-cfg.period_jitter, cfg.period_jitter))
        phase = rng.uniform(0.0, period)
        times = np.arange(phase, float(cfg.horizon), period).astype(np.int64)
        commit_times[dev] = times

    # background commits spread every developer's inter-commit intervals so
    # shuffled co-edits do not trigger-saturate against constant rhythms
    n_background = math.ceil(cfg.background_commit_fraction * cfg.horizon / cfg.base_period)
    if n_background:
        for dev in devs:
            extra = rng.integers(0, cfg.horizon, size=n_background, endpoint=True)
            commit_times[dev] = np.sort(np.concatenate([commit_times[dev], extra.astype(np.int64)]))

    # further extra commits dominate any non-pool count (rhythm max ~=
    # horizon / (base_period * (1 - jitter)) plus background), forcing the
    # pool into the top 20%
    n_extra = math.ceil(0.6 * cfg.horizon / cfg.base_period)
    for dev in pool:
        extra = rng.integers(0, cfg.horizon, size=n_extra, endpoint=True)
        commit_times[dev] = np.sort(np.concatenate([commit_times[dev], extra.astype(np.int64)]))

    coedit_rows = []
    planted_links: list[list[tuple[str, str, int]]] = []
    skipped = 0
    min_start = 3 * cfg.base_period
    for _ in range(cfg.n_planted_chains):
        seq = [pool[int(rng.integers(0, n_pool))]]
        for _ in range(cfg.chain_length):
            while True:
                nxt = devs[int(rng.integers(0, cfg.n_developers))]
                if nxt != seq[-1]:
                    break
            seq.append(nxt)
        t_prev = float(rng.integers(min_start, cfg.horizon // 2, endpoint=True))
        links = []
        feasible = True
        for k in range(cfg.chain_length):
            responder = seq[k + 1]
            times = commit_times[responder]
            pos = int(np.searchsorted(times, int(t_prev) + cfg.lead_time, side="right"))
            if pos >= len(times):
                feasible = False
                break
            target = int(times[pos])
            t_link = target - cfg.lead_time
            links.append((seq[k], responder, t_link))
            t_prev = float(t_link)
        if not feasible:
            skipped += 1
            log.warning("planted chain ran past the horizon; skipped")
            continue
        planted_links.append(links)
        for editor, edited, t in links:
            coedit_rows.append((editor, edited, t))

    for _ in range(cfg.n_random_coedits):
        a, b = rng.choice(cfg.n_developers, size=2, replace=False)
        t = int(rng.integers(0, cfg.horizon, endpoint=True))
        coedit_rows.append((devs[a], devs[b], t))

    commit_rows = [(dev, int(t)) for dev in devs for t in commit_times[dev]]
    log_, row_positions = _log_from_rows(f"synth-cascade-{cfg.seed}", commit_rows, coedit_rows)

    chains = []
    row = 0
    for links in planted_links:
        indices = tuple(row_positions[row + j] for j in range(len(links)))
        row += len(links)
        chains.append(PlantedChain(links=tuple(links), event_indices=indices))

    truth = GroundTruth(planted=tuple(chains), skipped_chains=skipped, initiator_pool=tuple(pool))
    return log_, truth
