import numpy as np
import pytest

from cascade_lens.model import CoEditEvent, CommitEvent, CommitHistory, EventLog


def commit(author, t, cid=None, repo="r"):
    return CommitEvent(cid or f"c{author}{t}", author, t, repo)


def coedit(editor, edited, t, weight=1, file=""):
    return CoEditEvent(editor, edited, t, weight, file)


def make_log(commits, coedits=(), repo="r"):
    return EventLog.build(repo, list(commits), list(coedits))


def history_of(**times):
    return CommitHistory(times={
        dev: np.asarray(sorted(ts), dtype=np.int64) for dev, ts in times.items()
    })


@pytest.fixture
def tiny_log():
    commits = [commit("alice", t) for t in (0, 10, 20, 30)] + [commit("bob", t) for t in (5, 15)]
    coedits = [coedit("bob", "alice", 12), coedit("alice", "bob", 21)]
    return make_log(commits, coedits)
