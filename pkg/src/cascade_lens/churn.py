"""Developer churn prediction over windowed co-editing networks.

Pipeline: split each repository into non-overlapping 12-month windows,
extract per-developer activity and network features inside each window,
label a developer as churned when they stop committing for a full horizon
after the window, balance classes with SMOTE, fit a balanced logistic
regression on standardized features, and evaluate leave-one-repo-out.

Feature sets differ by projection: the directed co-editing graph
contributes in/out-degree and directed path features, the undirected
projection plain degree; inactivity, age and commit-count features are
shared.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Mapping, Optional, Sequence

import networkx as nx
import numpy as np
from sklearn.linear_model import LogisticRegression

from .model import CommitHistory, EventLog, build_commit_history

log = logging.getLogger(__name__)

SECONDS_PER_MONTH = 365 * 24 * 3600 // 12
WINDOW_12M = 12 * SECONDS_PER_MONTH

SHARED_FEATURES = (
    "max_inactivity",
    "neighbor_max_inactivity",
    "neighbor_mean_inactivity",
    "neighbor_min_inactivity",
    "developer_age",
    "unique_commits",
    "distance_to_first_contributor",
    "strength_to_first_contributor",
    "closeness",
    "betweenness",
)
DIRECTED_FEATURES = SHARED_FEATURES + ("out_degree", "in_degree")
UNDIRECTED_FEATURES = SHARED_FEATURES + ("degree",)

PROJECTIONS = ("directed", "undirected")


def feature_names(projection: str) -> tuple[str, ...]:
    if projection == "directed":
        return DIRECTED_FEATURES
    if projection == "undirected":
        return UNDIRECTED_FEATURES
    raise ValueError(f"unknown projection {projection!r}")


@dataclass(frozen=True)
class TimeWindow:
    repo_id: str
    index: int
    start: int
    end: int

    def __post_init__(self):
        if self.end <= self.start:
            raise ValueError("window end must be after start")

    @property
    def length(self) -> int:
        return self.end - self.start


@dataclass(frozen=True)
class DeveloperWindowRecord:
    developer: str
    repo_id: str
    window: Optional[TimeWindow]
    projection: str
    features: Mapping[str, float]
    label: Optional[int] = None
    synthetic: bool = False

    def vector(self) -> np.ndarray:
        return np.asarray([self.features[n] for n in feature_names(self.projection)], dtype=np.float64)


@dataclass(frozen=True)
class LogisticModel:
    """Balanced logistic regression plus its standardization, in feature order."""

    projection: str
    feature_names_: tuple[str, ...]
    coef: np.ndarray  # one per feature, 0.0 for dropped zero-variance features
    intercept: float
    means: np.ndarray
    stds: np.ndarray  # 1.0 for dropped features
    dropped: tuple[str, ...]
    class_weights: Mapping[int, float]
    seed: int

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        Z = (np.asarray(X, dtype=np.float64) - self.means) / self.stds
        return Z @ self.coef + self.intercept

    def predict(self, X: np.ndarray) -> np.ndarray:
        return (self.decision_function(X) > 0).astype(int)

    def predict_records(self, records: Sequence[DeveloperWindowRecord]) -> np.ndarray:
        return self.predict(np.stack([r.vector() for r in records]))


@dataclass(frozen=True)
class EvaluationResult:
    projection: str
    per_repo_mean: Mapping[str, float]
    per_repo_std: Mapping[str, float]
    per_repo_windows: Mapping[str, int]  # evaluated (two-class) windows
    n_seeds: int
    base_seed: int


def make_windows(log_: EventLog, window_seconds: int = WINDOW_12M) -> list[TimeWindow]:
    """Consecutive full windows from the first commit; a trailing partial
    window is dropped. Labeling censors further (see label_churn)."""
    if window_seconds <= 0:
        raise ValueError("window_seconds must be > 0")
    first = min(c.timestamp for c in log_.commits)
    last = max(c.timestamp for c in log_.commits)
    n = (last - first) // window_seconds
    if n == 0:
        log.warning("repo %s: history shorter than one window, no windows", log_.repo_id)
    return [
        TimeWindow(log_.repo_id, i, first + i * window_seconds, first + (i + 1) * window_seconds)
        for i in range(n)
    ]


def max_inactivity_gap(commit_times: Sequence[int], start: int, end: int) -> int:
    """Longest gap between consecutive in-window commits, counting the window
    boundaries as virtual endpoints; a commitless developer gets end - start."""
    gaps = []
    prev = start
    for t in commit_times:
        gaps.append(t - prev)
        prev = t
    gaps.append(end - prev)
    return max(gaps)


def _window_graph(log_: EventLog, window: TimeWindow, directed: bool):
    g = nx.DiGraph() if directed else nx.Graph()
    for e in log_.coedits:
        if e.timestamp < window.start or e.timestamp >= window.end:
            continue
        if e.editor_id == e.edited_id:
            continue
        if g.has_edge(e.editor_id, e.edited_id):
            g[e.editor_id][e.edited_id]["weight"] += e.weight
        else:
            g.add_edge(e.editor_id, e.edited_id, weight=e.weight)
    return g


def extract_features(log_: EventLog, window: TimeWindow, projection: str,
                     history: Optional[CommitHistory] = None) -> list[DeveloperWindowRecord]:
    """One unlabeled record per developer with >= 1 commit in the window.

    Network features come from the co-editing graph induced by in-window
    co-edits (summed weights, self-loops dropped); inactivity features use
    window boundaries as virtual endpoints; distance/strength are measured
    against the author of the repository's earliest commit. Neighbor
    aggregation always uses the undirected neighborhood so the inactivity
    features stay comparable across projections.
    """
    names = feature_names(projection)
    directed = projection == "directed"
    if history is None:
        history = build_commit_history(log_)

    in_window: dict[str, list[int]] = {}
    for c in log_.commits:
        if window.start <= c.timestamp < window.end:
            in_window.setdefault(c.author_id, []).append(c.timestamp)

    graph = _window_graph(log_, window, directed)
    undirected = graph.to_undirected(as_view=False) if directed else graph
    all_nodes = set(graph.nodes()) | set(in_window)
    n_nodes = len(all_nodes)

    first_commit = min(log_.commits, key=lambda c: (c.timestamp, c.author_id, c.commit_id))
    founder = first_commit.author_id

    inactivity = {
        dev: float(max_inactivity_gap(sorted(in_window.get(dev, ())), window.start, window.end))
        for dev in all_nodes
    }

    if graph.number_of_nodes():
        closeness = nx.closeness_centrality(graph, wf_improved=False)
        betweenness = nx.betweenness_centrality(graph)
        if founder in graph:
            if directed:
                dist_to_founder = nx.shortest_path_length(graph.reverse(copy=False), source=founder)
            else:
                dist_to_founder = nx.shortest_path_length(graph, source=founder)
        else:
            dist_to_founder = {}
    else:
        closeness, betweenness, dist_to_founder = {}, {}, {}

    records = []
    for dev in sorted(in_window):
        commits = sorted(in_window[dev])
        feats: dict[str, float] = {}
        feats["max_inactivity"] = inactivity[dev]
        neighbor_vals = [inactivity[n] for n in undirected.neighbors(dev)] if dev in undirected else []
        if neighbor_vals:
            feats["neighbor_max_inactivity"] = float(max(neighbor_vals))
            feats["neighbor_mean_inactivity"] = float(np.mean(neighbor_vals))
            feats["neighbor_min_inactivity"] = float(min(neighbor_vals))
        else:
            # isolated developer: a silent neighborhood
            feats["neighbor_max_inactivity"] = float(window.length)
            feats["neighbor_mean_inactivity"] = float(window.length)
            feats["neighbor_min_inactivity"] = float(window.length)
        feats["developer_age"] = float(window.end - int(history.times[dev][0]))
        feats["unique_commits"] = float(len(commits))
        if dev == founder:
            feats["distance_to_first_contributor"] = 0.0
        else:
            feats["distance_to_first_contributor"] = float(dist_to_founder.get(dev, n_nodes))
        strength = 0.0
        if dev in graph:
            if graph.has_edge(dev, founder):
                strength += graph[dev][founder]["weight"]
            if directed and graph.has_edge(founder, dev):
                strength += graph[founder][dev]["weight"]
        feats["strength_to_first_contributor"] = float(strength)
        feats["closeness"] = float(closeness.get(dev, 0.0))
        feats["betweenness"] = float(betweenness.get(dev, 0.0))
        if directed:
            feats["out_degree"] = float(graph.out_degree(dev)) if dev in graph else 0.0
            feats["in_degree"] = float(graph.in_degree(dev)) if dev in graph else 0.0
        else:
            feats["degree"] = float(graph.degree(dev)) if dev in graph else 0.0
        records.append(DeveloperWindowRecord(
            developer=dev, repo_id=log_.repo_id, window=window, projection=projection,
            features={n: feats[n] for n in names}))
    return records


def label_churn(log_: EventLog, records: Sequence[DeveloperWindowRecord],
                horizon_seconds: Optional[int] = None) -> list[DeveloperWindowRecord]:
    """Label records; drop records of windows censored by the horizon.

    churned = 1 iff the developer has no commits in (window.end,
    window.end + horizon]. Windows whose horizon extends past the last
    observed commit are excluded entirely (right-censoring).
    """
    history = build_commit_history(log_)
    last = max(c.timestamp for c in log_.commits)
    out = []
    for r in records:
        if r.window is None:
            raise ValueError("cannot label a record without a window")
        horizon = horizon_seconds if horizon_seconds is not None else r.window.length
        if r.window.end + horizon > last:
            continue
        ts = history.times[r.developer]
        lo = int(np.searchsorted(ts, r.window.end, side="right"))
        hi = int(np.searchsorted(ts, r.window.end + horizon, side="right"))
        out.append(replace(r, label=int(hi == lo)))
    return out


def repo_records(log_: EventLog, projection: str, window_seconds: int = WINDOW_12M,
                 horizon_seconds: Optional[int] = None) -> list[DeveloperWindowRecord]:
    """Windowing, feature extraction and labeling for one repository."""
    history = build_commit_history(log_)
    records: list[DeveloperWindowRecord] = []
    for window in make_windows(log_, window_seconds):
        records.extend(extract_features(log_, window, projection, history=history))
    return label_churn(log_, records, horizon_seconds)


def smote_oversample(records: Sequence[DeveloperWindowRecord], k_neighbors: int = 5,
                     rng_seed: int = 0) -> list[DeveloperWindowRecord]:
    """Balance classes by interpolating synthetic minority rows.

    x_new = x_i + u * (x_nn - x_i) with u ~ U[0, 1] and x_nn one of the k
    nearest minority neighbors (Euclidean after z-scoring the minority
    rows). k is clamped to minority size - 1; a minority class of size < 2
    is returned unchanged with a warning.
    """
    if k_neighbors < 1:
        raise ValueError("k_neighbors must be >= 1")
    labels = np.asarray([r.label for r in records])
    if any(l is None for l in labels):
        raise ValueError("records must be labeled before oversampling")
    n_pos = int(np.sum(labels == 1))
    n_neg = int(np.sum(labels == 0))
    if n_pos == n_neg:
        return list(records)
    minority = 1 if n_pos < n_neg else 0
    need = abs(n_pos - n_neg)
    idx_min = [i for i, r in enumerate(records) if r.label == minority]
    if len(idx_min) < 2:
        log.warning("minority class has %d row(s); SMOTE skipped", len(idx_min))
        return list(records)
    k = min(k_neighbors, len(idx_min) - 1)

    X_min = np.stack([records[i].vector() for i in idx_min])
    mu = X_min.mean(axis=0)
    sd = X_min.std(axis=0)
    sd[sd == 0.0] = 1.0
    Z = (X_min - mu) / sd
    d2 = ((Z[:, None, :] - Z[None, :, :]) ** 2).sum(axis=2)
    np.fill_diagonal(d2, np.inf)
    nn = np.argsort(d2, kind="stable", axis=1)[:, :k]

    rng = np.random.default_rng(rng_seed)
    projection = records[0].projection
    names = feature_names(projection)
    out = list(records)
    for s in range(need):
        i = int(rng.integers(0, len(idx_min)))
        j = int(nn[i][int(rng.integers(0, k))])
        u = float(rng.uniform(0.0, 1.0))
        x_new = X_min[i] + u * (X_min[j] - X_min[i])
        out.append(DeveloperWindowRecord(
            developer=f"synthetic_{s}", repo_id="synthetic", window=None,
            projection=projection, features=dict(zip(names, map(float, x_new))),
            label=minority, synthetic=True))
    return out


def train_logistic(records: Sequence[DeveloperWindowRecord], l2: float = 1.0,
                   seed: int = 0, max_iter: int = 2000) -> LogisticModel:
    """Balanced, standardized logistic regression over labeled records.

    Class weight n_total / (2 * n_class); z-score standardization is fit on
    the training rows; zero-variance features are dropped (coefficient
    reported as 0). Deterministic full-batch lbfgs fit, gradient tolerance
    1e-8. The ridge penalty applies to the weighted *mean* log-loss, so the
    fit is invariant to duplicating the training set.
    """
    if not records:
        raise ValueError("no training records")
    projection = records[0].projection
    names = feature_names(projection)
    X = np.stack([r.vector() for r in records])
    y = np.asarray([r.label for r in records], dtype=int)
    if any(r.label is None for r in records):
        raise ValueError("records must be labeled")
    bad = np.where(~np.isfinite(X))
    if len(bad[0]):
        i, j = int(bad[0][0]), int(bad[1][0])
        raise ValueError(f"non-finite feature {names[j]!r} in record {i} ({records[i].developer})")
    classes = np.unique(y)
    if len(classes) < 2:
        raise ValueError("training set contains a single class")

    means = X.mean(axis=0)
    stds = X.std(axis=0)
    keep = stds > 0.0
    dropped = tuple(n for n, k in zip(names, keep) if not k)
    if dropped:
        log.info("dropping zero-variance features: %s", ", ".join(dropped))
    safe_stds = np.where(keep, stds, 1.0)
    Z = (X - means) / safe_stds

    # balanced weights sum to n, so C = 1/(l2*n) turns sklearn's summed loss
    # into a mean loss against the ridge term
    clf = LogisticRegression(
        penalty="l2", C=1.0 / (l2 * len(y)), class_weight="balanced", solver="lbfgs",
        tol=1e-8, max_iter=max_iter, random_state=seed)
    clf.fit(Z[:, keep], y)

    coef = np.zeros(len(names))
    coef[keep] = clf.coef_[0]
    n = len(y)
    weights = {int(c): n / (2.0 * int(np.sum(y == c))) for c in classes}
    return LogisticModel(
        projection=projection, feature_names_=names, coef=coef,
        intercept=float(clf.intercept_[0]), means=means, stds=safe_stds,
        dropped=dropped, class_weights=weights, seed=seed)


def balanced_accuracy(y_true: np.ndarray, y_pred: np.ndarray) -> float:
    """(TPR + TNR) / 2; requires both classes in y_true."""
    y_true = np.asarray(y_true, dtype=int)
    y_pred = np.asarray(y_pred, dtype=int)
    tpr = float(np.mean(y_pred[y_true == 1] == 1))
    tnr = float(np.mean(y_pred[y_true == 0] == 0))
    return 0.5 * (tpr + tnr)


def _window_groups(records: Sequence[DeveloperWindowRecord]):
    groups: dict[int, list[DeveloperWindowRecord]] = {}
    for r in records:
        groups.setdefault(r.window.index, []).append(r)
    return [groups[i] for i in sorted(groups)]


def evaluate_loo(per_repo: Mapping[str, Sequence[DeveloperWindowRecord]], n_seeds: int = 5,
                 base_seed: int = 42, k_neighbors: int = 5, l2: float = 1.0) -> EvaluationResult:
    """Leave-one-repo-out balanced accuracy, mean and std over n_seeds runs.

    For each held-out repo the model trains on the pooled labeled records
    of every other repo (SMOTE applied to the pooled set, seeded per run);
    each held-out window is scored separately and single-class windows are
    skipped.
    """
    repos = sorted(per_repo)
    if len(repos) < 2:
        raise ValueError("leave-one-out needs >= 2 repos")
    projections = {r.projection for recs in per_repo.values() for r in recs}
    if len(projections) != 1:
        raise ValueError("records must share one projection")
    projection = projections.pop()

    per_repo_mean: dict[str, float] = {}
    per_repo_std: dict[str, float] = {}
    per_repo_windows: dict[str, int] = {}
    for held_out in repos:
        train = [r for repo in repos if repo != held_out for r in per_repo[repo]]
        test_windows = [
            g for g in _window_groups(per_repo[held_out])
            if len({r.label for r in g}) == 2
        ]
        per_repo_windows[held_out] = len(test_windows)
        if not test_windows:
            log.warning("repo %s: no two-class windows to evaluate, repo skipped", held_out)
            continue
        scores = []
        for s in range(n_seeds):
            seed = base_seed + s
            balanced = smote_oversample(train, k_neighbors=k_neighbors, rng_seed=seed)
            model = train_logistic(balanced, l2=l2, seed=seed)
            window_scores = []
            for g in test_windows:
                y_true = np.asarray([r.label for r in g])
                y_pred = model.predict_records(g)
                window_scores.append(balanced_accuracy(y_true, y_pred))
            scores.append(float(np.mean(window_scores)))
        per_repo_mean[held_out] = float(np.mean(scores))
        per_repo_std[held_out] = float(np.std(scores))
    return EvaluationResult(
        projection=projection, per_repo_mean=per_repo_mean, per_repo_std=per_repo_std,
        per_repo_windows=per_repo_windows, n_seeds=n_seeds, base_seed=base_seed)


def feature_importance(directed_model: LogisticModel,
                       undirected_model: LogisticModel) -> list[tuple[str, float]]:
    """Mean absolute standardized coefficient across the two projections.

    Features present in only one projection (in/out-degree vs degree) use
    that single model's |coefficient|. Sorted descending.
    """
    if directed_model.projection != "directed" or undirected_model.projection != "undirected":
        raise ValueError("pass (directed, undirected) models in that order")
    abs_d = dict(zip(directed_model.feature_names_, np.abs(directed_model.coef)))
    abs_u = dict(zip(undirected_model.feature_names_, np.abs(undirected_model.coef)))
    importance = {}
    for name in set(abs_d) | set(abs_u):
        vals = [m[name] for m in (abs_d, abs_u) if name in m]
        importance[name] = float(np.mean(vals))
    return sorted(importance.items(), key=lambda kv: (-kv[1], kv[0]))
