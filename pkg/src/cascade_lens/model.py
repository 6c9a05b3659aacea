"""Core domain types and event-log ingestion.

An event log is the common substrate of every analysis in this package:
per-commit activity events plus directed co-editing events ("A edited a
line last written by B at time t"), both with integer UTC-second
timestamps. Loading validates and canonically sorts both streams; all
containers are immutable after construction and safe to share across
threads.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

COMMITS_HEADER = ("commit_id", "author", "timestamp", "repo")
COEDITS_HEADER = ("editor", "edited", "timestamp", "weight", "file")


class ParseError(ValueError):
    """Malformed input row; carries file, 1-based line number and column name."""

    def __init__(self, path, line, column, message):
        self.path = str(path)
        self.line = line
        self.column = column
        super().__init__(f"{path}:{line}: column '{column}': {message}")


class InsufficientDataError(ValueError):
    """A statistic was requested on a series too short to define it."""


@dataclass(frozen=True)
class CommitEvent:
    commit_id: str
    author_id: str
    timestamp: int
    repo_id: str

    def __post_init__(self):
        if not self.commit_id:
            raise ValueError("commit_id must be non-empty")
        if not self.author_id:
            raise ValueError("author_id must be non-empty")
        if not isinstance(self.timestamp, int) or self.timestamp < 0:
            raise ValueError(f"timestamp must be a non-negative integer, got {self.timestamp!r}")


@dataclass(frozen=True)
class CoEditEvent:
    editor_id: str
    edited_id: str
    timestamp: int
    weight: int = 1
    file: str = ""

    def __post_init__(self):
        if not self.editor_id or not self.edited_id:
            raise ValueError("editor_id and edited_id must be non-empty")
        if not isinstance(self.timestamp, int) or self.timestamp < 0:
            raise ValueError(f"timestamp must be a non-negative integer, got {self.timestamp!r}")
        if not isinstance(self.weight, int) or self.weight < 1:
            raise ValueError(f"weight must be an integer >= 1, got {self.weight!r}")

    @property
    def is_self_edit(self) -> bool:
        return self.editor_id == self.edited_id


def _commit_sort_key(c: CommitEvent):
    return (c.timestamp, c.author_id, c.commit_id)


def _coedit_sort_key(item):
    # (event, original row index); the row index makes equal-timestamp
    # ordering deterministic: (timestamp, editor, edited, input order).
    e, i = item
    return (e.timestamp, e.editor_id, e.edited_id, i)


def sort_coedits(events: Iterable[CoEditEvent]) -> tuple[CoEditEvent, ...]:
    """Canonical co-edit order: (timestamp, editor, edited, input order)."""
    return tuple(e for e, _ in sorted(((e, i) for i, e in enumerate(events)), key=_coedit_sort_key))


@dataclass(frozen=True)
class EventLog:
    """Validated, canonically sorted pair of commit and co-edit streams."""

    repo_id: str
    commits: tuple[CommitEvent, ...]
    coedits: tuple[CoEditEvent, ...]

    @classmethod
    def build(cls, repo_id: str, commits: Iterable[CommitEvent], coedits: Iterable[CoEditEvent]) -> "EventLog":
        commits = tuple(sorted(commits, key=_commit_sort_key))
        if not commits:
            raise ValueError("no commits")
        return cls(repo_id=repo_id, commits=commits, coedits=sort_coedits(coedits))

    @property
    def t_min(self) -> int:
        ts = [self.commits[0].timestamp] + ([self.coedits[0].timestamp] if self.coedits else [])
        return min(ts)

    @property
    def t_max(self) -> int:
        ts = [self.commits[-1].timestamp] + ([self.coedits[-1].timestamp] if self.coedits else [])
        return max(ts)

    @property
    def span(self) -> tuple[int, int]:
        return (self.t_min, self.t_max)

    @property
    def developers(self) -> tuple[str, ...]:
        """Every id seen as author, editor or edited, sorted."""
        ids = {c.author_id for c in self.commits}
        for e in self.coedits:
            ids.add(e.editor_id)
            ids.add(e.edited_id)
        return tuple(sorted(ids))

    def replace_commit_timestamps(self, timestamps: Sequence[int]) -> "EventLog":
        """New log with commit timestamps reassigned positionally, then re-sorted."""
        if len(timestamps) != len(self.commits):
            raise ValueError("timestamp count mismatch")
        commits = [
            CommitEvent(c.commit_id, c.author_id, int(t), c.repo_id)
            for c, t in zip(self.commits, timestamps)
        ]
        return EventLog.build(self.repo_id, commits, self.coedits)

    def replace_coedits(self, coedits: Iterable[CoEditEvent]) -> "EventLog":
        return EventLog(self.repo_id, self.commits, sort_coedits(coedits))


@dataclass(frozen=True)
class CommitHistory:
    """Per-developer sorted commit timestamps.

    Developers that only ever appear as the edited side of a co-edit are
    present with an empty history, so downstream lookups never miss.
    """

    times: Mapping[str, np.ndarray]
    repo_id: str = ""

    def __post_init__(self):
        for dev, arr in self.times.items():
            if len(arr) > 1 and np.any(np.diff(arr) < 0):
                raise ValueError(f"history of {dev!r} is not sorted")

    def count(self, dev: str) -> int:
        return len(self.times.get(dev, ()))

    @property
    def developers(self) -> tuple[str, ...]:
        return tuple(sorted(self.times))

    def committers(self) -> tuple[str, ...]:
        return tuple(sorted(d for d, t in self.times.items() if len(t)))


@dataclass(frozen=True)
class TopDevelopers:
    """Most-active developer slice plus its aggregate share of commits (%)."""

    ids: tuple[str, ...]
    commit_share: float
    fraction: float

    def __contains__(self, dev: str) -> bool:
        return dev in set(self.ids)


def _parse_int(value: str, path, line, column) -> int:
    try:
        return int(value)
    except ValueError:
        raise ParseError(path, line, column, f"expected integer, got {value!r}") from None


def _read_rows(path: Path, header: tuple[str, ...]):
    """Yield (line_number, row) for data rows; validates header and column counts.

    Full-line comments starting with '#' before the header are skipped; they
    carry the emitting tool's config and are not part of the schema proper.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header_seen = False
        for row in reader:
            line = reader.line_num
            if not row:
                continue
            if not header_seen:
                if row[0].startswith("#"):
                    continue
                if tuple(row) != header:
                    raise ParseError(path, line, header[0], f"expected header {','.join(header)}")
                header_seen = True
                continue
            if len(row) != len(header):
                raise ParseError(path, line, header[min(len(row), len(header) - 1)],
                                 f"expected {len(header)} columns, got {len(row)}")
            yield line, row
        if not header_seen:
            raise ParseError(path, 1, header[0], "missing header")


def load_event_log(commits_path, coedits_path) -> EventLog:
    """Load and validate the two event CSVs into a canonical EventLog.

    Duplicate rows are preserved: several co-edits between the same pair at
    the same second are distinct events. Rows out of order on disk are
    sorted on load.
    """
    commits_path, coedits_path = Path(commits_path), Path(coedits_path)
    commits = []
    repo_id = ""
    for line, row in _read_rows(commits_path, COMMITS_HEADER):
        commit_id, author, ts_raw, repo = row
        ts = _parse_int(ts_raw, commits_path, line, "timestamp")
        if ts < 0:
            raise ParseError(commits_path, line, "timestamp", "must be >= 0")
        if not commit_id:
            raise ParseError(commits_path, line, "commit_id", "must be non-empty")
        if not author:
            raise ParseError(commits_path, line, "author", "must be non-empty")
        commits.append(CommitEvent(commit_id, author, ts, repo))
        repo_id = repo_id or repo
    if not commits:
        raise ParseError(commits_path, 1, "commit_id", "no commits")

    coedits = []
    for line, row in _read_rows(coedits_path, COEDITS_HEADER):
        editor, edited, ts_raw, weight_raw, file_ = row
        ts = _parse_int(ts_raw, coedits_path, line, "timestamp")
        if ts < 0:
            raise ParseError(coedits_path, line, "timestamp", "must be >= 0")
        weight = _parse_int(weight_raw, coedits_path, line, "weight")
        if weight < 1:
            raise ParseError(coedits_path, line, "weight", "must be >= 1")
        if not editor:
            raise ParseError(coedits_path, line, "editor", "must be non-empty")
        if not edited:
            raise ParseError(coedits_path, line, "edited", "must be non-empty")
        coedits.append(CoEditEvent(editor, edited, ts, weight, file_))

    return EventLog.build(repo_id, commits, coedits)


def write_event_log(log: EventLog, commits_path, coedits_path, header_comment: str = "") -> None:
    """Serialize a log back to the two CSV schemas (inverse of load_event_log)."""
    with open(commits_path, "w", newline="", encoding="utf-8") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COMMITS_HEADER)
        for c in log.commits:
            w.writerow([c.commit_id, c.author_id, c.timestamp, c.repo_id])
    with open(coedits_path, "w", newline="", encoding="utf-8") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COEDITS_HEADER)
        for e in log.coedits:
            w.writerow([e.editor_id, e.edited_id, e.timestamp, e.weight, e.file])


def build_commit_history(log: EventLog) -> CommitHistory:
    """Map every developer to their sorted commit timestamps.

    Developers appearing only as the edited side of a co-edit get an empty
    array, so trigger checks against them are well defined.
    """
    per_dev: dict[str, list[int]] = {}
    for c in log.commits:
        per_dev.setdefault(c.author_id, []).append(c.timestamp)
    for e in log.coedits:
        per_dev.setdefault(e.editor_id, [])
        per_dev.setdefault(e.edited_id, [])
    times = {}
    for dev, ts in per_dev.items():
        arr = np.asarray(sorted(ts), dtype=np.int64)
        arr.flags.writeable = False
        times[dev] = arr
    return CommitHistory(times=times, repo_id=log.repo_id)


def top_fraction_developers(history: CommitHistory, fraction: float) -> TopDevelopers:
    """The ceil(fraction * D) most-committing developers and their commit share.

    D counts developers with at least one commit. Ties break on earlier
    first-commit timestamp, then lexicographic id, so the slice is
    deterministic across runs.
    """
    if not (0.0 < fraction <= 1.0):
        raise ValueError(f"fraction must be in (0, 1], got {fraction}")
    committers = [(dev, arr) for dev, arr in history.times.items() if len(arr)]
    if not committers:
        raise ValueError("history has no developers with commits")
    ranked = sorted(committers, key=lambda kv: (-len(kv[1]), int(kv[1][0]), kv[0]))
    k = math.ceil(fraction * len(ranked))
    top = ranked[:k]
    total = sum(len(arr) for _, arr in ranked)
    share = 100.0 * sum(len(arr) for _, arr in top) / total
    return TopDevelopers(ids=tuple(dev for dev, _ in top), commit_share=share, fraction=fraction)
