"""Simplified line-ownership miner for git repositories.

Walks the first-parent history oldest to newest, keeps a per-file map of
which developer last touched each line, and emits a directed co-edit
A -> B whenever A's commit removes or rewrites a line currently owned by
B. Weights accumulate per (editor, edited) pair within a commit. Added
lines transfer ownership to the commit author.

This is a deliberate simplification of full line-tracking miners: only
first-parent diffs are attributed, line matching is positional per diff
hunk (no within-file move detection), and renames are followed only when
git reports them.
"""

from __future__ import annotations

import logging
import re
import subprocess
from dataclasses import dataclass
from pathlib import Path

from .model import CoEditEvent, CommitEvent, EventLog

log = logging.getLogger(__name__)

_HUNK_RE = re.compile(r"^@@ -(\d+)(?:,(\d+))? \+(\d+)(?:,(\d+))? @@")


class MinerError(RuntimeError):
    pass


@dataclass
class _FileDiff:
    old_path: str | None  # None for created files
    new_path: str | None  # None for deleted files
    hunks: list[tuple[int, int, int, int]]  # (old_start, old_count, new_start, new_count)
    binary: bool = False


def _git(repo: Path, *args: str) -> str:
    try:
        out = subprocess.run(
            ["git", "-C", str(repo), *args],
            check=True, capture_output=True, text=True)
    except FileNotFoundError as exc:
        raise MinerError("git executable not found") from exc
    except subprocess.CalledProcessError as exc:
        raise MinerError(f"git {' '.join(args)} failed: {exc.stderr.strip()}") from exc
    return out.stdout


def _unquote(path: str) -> str:
    # git C-quotes paths with special characters
    if path.startswith('"') and path.endswith('"'):
        return path[1:-1].encode().decode("unicode_escape").encode("latin-1").decode("utf-8")
    return path


def _parse_patch(patch: str) -> list[_FileDiff]:
    diffs: list[_FileDiff] = []
    cur: _FileDiff | None = None
    for line in patch.splitlines():
        if line.startswith("diff --git "):
            cur = _FileDiff(old_path=None, new_path=None, hunks=[])
            diffs.append(cur)
        elif cur is None:
            continue
        elif line.startswith("--- "):
            path = _unquote(line[4:])
            cur.old_path = None if path == "/dev/null" else path[2:]  # strip "a/"
        elif line.startswith("+++ "):
            path = _unquote(line[4:])
            cur.new_path = None if path == "/dev/null" else path[2:]  # strip "b/"
        elif line.startswith("Binary files ") or line.startswith("GIT binary patch"):
            cur.binary = True
        elif line.startswith("rename from "):
            cur.old_path = _unquote(line[len("rename from "):])
        elif line.startswith("rename to "):
            cur.new_path = _unquote(line[len("rename to "):])
        else:
            m = _HUNK_RE.match(line)
            if m:
                old_start = int(m.group(1))
                old_count = int(m.group(2)) if m.group(2) is not None else 1
                new_start = int(m.group(3))
                new_count = int(m.group(4)) if m.group(4) is not None else 1
                cur.hunks.append((old_start, old_count, new_start, new_count))
    return diffs


def _apply_diff(owners: list[tuple[str, int]], hunks, author: str, ts: int,
                removed: list[tuple[str, int]]) -> list[tuple[str, int]]:
    """Replay one file diff over its line-ownership array.

    `owners` maps 0-based line number -> (owner, owning commit time) for
    the pre-commit file; hunk coordinates are the usual 1-based unified
    ones (old_start names the line *before* a pure insertion). Removed
    lines' owners are appended to `removed`.
    """
    out: list[tuple[str, int]] = []
    pos = 0  # next unconsumed pre-commit line, 0-based
    for old_start, old_count, new_start, new_count in hunks:
        copy_until = old_start - 1 if old_count else old_start
        out.extend(owners[pos:copy_until])
        pos = copy_until
        for _ in range(old_count):
            if pos < len(owners):
                removed.append(owners[pos])
            pos += 1
        out.extend([(author, ts)] * new_count)
    out.extend(owners[pos:])
    return out


def mine_repository(repo_path, branch: str = "HEAD", repo_id: str | None = None) -> EventLog:
    """Mine a git repository into an EventLog.

    Commits are walked in first-parent order oldest to newest; author
    identity is the author email (falling back to the name) and commit
    time the author timestamp. Binary files are skipped (logged).
    """
    repo = Path(repo_path)
    if not repo.is_dir():
        raise IOError(f"not a readable directory: {repo}")
    try:
        _git(repo, "rev-parse", "--git-dir")
    except MinerError as exc:
        raise IOError(f"not a git repository: {repo}") from exc
    try:
        _git(repo, "rev-parse", "--verify", "--quiet", f"{branch}^{{commit}}")
    except MinerError:
        raise ValueError(f"branch {branch!r} does not exist in {repo}") from None
    if repo_id is None:
        repo_id = repo.resolve().name

    empty_tree = _git(repo, "hash-object", "-t", "tree", "/dev/null").strip()
    meta = _git(repo, "log", "--first-parent", "--reverse",
                "--format=%H%x1f%P%x1f%ae%x1f%an%x1f%at", branch)
    commits: list[CommitEvent] = []
    coedits: list[CoEditEvent] = []
    ownership: dict[str, list[tuple[str, int]]] = {}

    for row in meta.splitlines():
        sha, parents, email, name, at = row.split("\x1f")
        author = email or name
        ts = int(at)
        commits.append(CommitEvent(sha, author, ts, repo_id))

        first_parent = parents.split()[0] if parents else empty_tree
        patch = _git(repo, "diff-tree", "-r", "-M", "--unified=0", first_parent, sha)
        removed_by_pair: dict[tuple[str, str], int] = {}
        files_by_pair: dict[tuple[str, str], set[str]] = {}
        for fd in _parse_patch(patch):
            if fd.binary:
                log.info("skipping binary file %s in %s", fd.new_path or fd.old_path, sha[:10])
                continue
            src = fd.old_path
            dst = fd.new_path
            owners = ownership.pop(src, []) if src is not None else []
            removed: list[tuple[str, int]] = []
            owners = _apply_diff(owners, fd.hunks, author, ts, removed)
            if dst is not None:
                ownership[dst] = owners
            for owner, _owned_ts in removed:
                key = (author, owner)
                removed_by_pair[key] = removed_by_pair.get(key, 0) + 1
                files_by_pair.setdefault(key, set()).add(dst or src or "")
        for (editor, edited), weight in removed_by_pair.items():
            files = files_by_pair[(editor, edited)]
            file_ = next(iter(files)) if len(files) == 1 else ""
            coedits.append(CoEditEvent(editor, edited, ts, weight, file_))

    if not commits:
        raise ValueError(f"branch {branch!r} of {repo} has no commits")
    return EventLog.build(repo_id, commits, coedits)
