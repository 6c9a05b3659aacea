"""Command-line surface.

Subcommands: mine, burstiness, cascades, validate, synth, churn, report.
Every emitted artifact carries the run config and toolkit version (a
leading '#' comment in CSVs, a top-level "config" object in JSON), and
contains no timestamps, so identical invocations on identical inputs are
byte-identical. Defaults can be overridden with CASCADE_LENS_<FLAG>
environment variables; explicit flags win.

Exit codes: 0 success, 1 input/usage error, 2 internal error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import math
import os
import sys
import traceback
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from dataclasses import replace

from . import __version__, burst, churn
from .cascade import CascadeStats, cascade_stats, detect_cascades_detailed
from .miner import MinerError, mine_repository
from .model import (ParseError, TopDevelopers, build_commit_history, load_event_log,
                    top_fraction_developers, write_event_log)
from .synth import default_cascade_config, default_random_config, \
    generate_cascade_network, generate_random_network
from .validate import (REPORT_HEADER, PermutationResult, ReportEntry, assemble_report,
                       permutation_test)

log = logging.getLogger(__name__)

ENV_PREFIX = "CASCADE_LENS_"


def derive_seed(base: int, stage: str, index: int = 0) -> int:
    """Stable per-stage seed in [0, 2^32): blake2b of (base, stage, index)."""
    digest = hashlib.blake2b(f"{base}:{stage}:{index}".encode(), digest_size=4).digest()
    return int.from_bytes(digest, "big")


def _env(name: str, cast, fallback):
    raw = os.environ.get(ENV_PREFIX + name)
    if raw is None:
        return fallback
    try:
        return cast(raw)
    except ValueError:
        raise SystemExit(f"invalid {ENV_PREFIX}{name}={raw!r}") from None


class _Parser(argparse.ArgumentParser):
    # the spec reserves exit code 2 for internal errors; usage errors are 1
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _config_of(args: argparse.Namespace) -> dict:
    cfg = {}
    for key, value in sorted(vars(args).items()):
        if key in ("func",):
            continue
        cfg[key] = str(value) if isinstance(value, Path) else value
    return cfg


def _config_line(config: dict) -> str:
    return f"cascade-lens {__version__} config={json.dumps(config, sort_keys=True)}"


def write_csv(path: Path, header, rows, config: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# {_config_line(config)}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _jsonable(value):
    if isinstance(value, float) and math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return value


def write_json(path: Path, payload: dict, config: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = {"tool": "cascade-lens", "version": __version__, "config": config}
    doc.update(payload)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, default=_jsonable, allow_nan=False)
        fh.write("\n")


def _load(args) -> tuple:
    log_ = load_event_log(args.commits, args.coedits)
    history = build_commit_history(log_)
    top = top_fraction_developers(history, args.top_fraction)
    return log_, history, top


def _cmd_mine(args) -> int:
    out = Path(args.out)
    log_ = mine_repository(args.repo, args.branch, repo_id=args.repo_id)
    out.mkdir(parents=True, exist_ok=True)
    write_event_log(log_, out / "commits.csv", out / "coedits.csv",
                    header_comment=_config_line(_config_of(args)))
    print(f"mined {len(log_.commits)} commits, {len(log_.coedits)} co-edits -> {out}")
    return 0


def _cmd_synth(args) -> int:
    out = Path(args.out)
    if args.network == "random":
        cfg = default_random_config(args.seed)
        log_, truth = generate_random_network(cfg)
    else:
        cfg = default_cascade_config(args.seed)
        if args.chains is not None:
            cfg = replace(cfg, n_planted_chains=args.chains)
        log_, truth = generate_cascade_network(cfg)
    out.mkdir(parents=True, exist_ok=True)
    config = _config_of(args)
    write_event_log(log_, out / "commits.csv", out / "coedits.csv",
                    header_comment=_config_line(config))
    write_json(out / "ground_truth.json", {
        "planted": [
            {"links": [list(l) for l in ch.links], "event_indices": list(ch.event_indices)}
            for ch in truth.planted
        ],
        "skipped_chains": truth.skipped_chains,
        "initiator_pool": list(truth.initiator_pool),
        "generator": cfg.__dict__,
    }, config)
    print(f"generated {len(log_.commits)} commits, {len(log_.coedits)} co-edits, "
          f"{len(truth.planted)} planted chains -> {out}")
    return 0


def _cmd_burstiness(args) -> int:
    out = Path(args.out)
    log_, history, top = _load(args)
    report = burst.burstiness_report(
        log_, top=None if args.all_developers else top,
        n_shuffles=args.shuffles, seed=derive_seed(args.seed, "burstiness"),
        min_commits=args.min_commits)
    config = _config_of(args)
    rows = []
    if report.project_b is not None:
        rows.append((log_.repo_id, "project", f"{report.project_b:.6f}", len(log_.commits)))
    for dev in sorted(report.individual):
        rows.append((dev, "developer", f"{report.individual[dev]:.6f}", history.count(dev)))
    write_csv(out / "burstiness.csv", ("subject", "level", "b", "n_events"), rows, config)
    shuffled_rows = [
        (dev, "developer", f"{report.shuffled_mean[dev]:.6f}", history.count(dev))
        for dev in sorted(report.shuffled_mean)
    ]
    write_csv(out / "burstiness_shuffled.csv", ("subject", "level", "b", "n_events"),
              shuffled_rows, config)
    print(f"burstiness: project={report.project_b}, {len(report.individual)} developers, "
          f"{len(report.skipped)} skipped -> {out}")
    return 0


def _cmd_cascades(args) -> int:
    out = Path(args.out)
    log_, history, top = _load(args)
    det = detect_cascades_detailed(history, log_.coedits, top, args.threshold)
    stats = cascade_stats(det.chains)
    config = _config_of(args)
    rows = []
    for chain_id, chain in enumerate(det.chains):
        for pos, te in enumerate(chain.events):
            rows.append((chain_id, pos, te.event.editor_id, te.event.edited_id,
                         te.event.timestamp, te.response_interval, f"{te.percentile_rank:.4f}"))
    write_csv(out / "cascades.csv",
              ("chain_id", "position", "editor", "edited", "timestamp", "response_interval", "rank"),
              rows, config)
    write_json(out / "cascade_summary.json", {
        "repo": log_.repo_id,
        "stats": {"n_cascades": stats.n_cascades, "avg_depth": stats.avg_depth,
                  "avg_devs": stats.avg_devs},
        "diagnostics": {
            "n_events": det.n_events,
            "n_self_edits_excluded": det.n_self_edits,
            "n_insufficient_history": det.n_insufficient_history,
            "n_triggers": det.n_triggers,
        },
        "top_developers": {"ids": list(top.ids), "commit_share_pct": top.commit_share},
    }, config)
    print(f"cascades: {stats.n_cascades} chains (avg depth {stats.avg_depth:.2f}) -> {out}")
    return 0


def _cmd_validate(args) -> int:
    out = Path(args.out)
    log_, history, top = _load(args)
    result = permutation_test(log_, top, n_shuffles=args.shuffles,
                              base_seed=derive_seed(args.seed, "validate"),
                              threshold=args.threshold, jobs=args.jobs, history=history)
    config = _config_of(args)
    rows = assemble_report([ReportEntry(log_.repo_id, top, result)])
    write_csv(out / "validation.csv", REPORT_HEADER, rows, config)
    write_json(out / "validation.json", {
        "repo": log_.repo_id,
        "top": {"ids": list(top.ids), "count": len(top.ids),
                "commit_share_pct": top.commit_share, "fraction": top.fraction},
        "observed": {"n_cascades": result.observed.n_cascades,
                     "avg_depth": result.observed.avg_depth,
                     "avg_devs": result.observed.avg_devs},
        "null": {"counts": list(result.null_counts),
                 "depths": list(result.null_depths),
                 "devs": list(result.null_devs),
                 "mean_count": result.null_mean_count,
                 "std_count": result.null_std_count,
                 "mean_depth": result.null_mean_depth,
                 "mean_devs": result.null_mean_devs},
        "p_value": result.p_value,
        "cohens_d": result.cohens_d,
        "n_shuffles": result.n_shuffles,
        "base_seed": result.base_seed,
        "threshold_percentile": result.threshold_percentile,
    }, config)
    print(f"validate: observed={result.observed.n_cascades} null={result.null_mean_count:.2f} "
          f"p={result.p_value:.4f} d={result.cohens_d:.2f} -> {out}")
    return 0


CHURN_CSV_FEATURES = churn.SHARED_FEATURES + ("degree", "out_degree", "in_degree")


def _chextract(task):
    repo_dir, projection, window_seconds = task
    log_ = load_event_log(repo_dir / "commits.csv", repo_dir / "coedits.csv")
    return repo_dir.name, churn.repo_records(log_, projection, window_seconds)


def _cmd_churn(args) -> int:
    out = Path(args.out)
    corpus = Path(args.corpus)
    repo_dirs = sorted(d for d in corpus.iterdir() if (d / "commits.csv").is_file())
    if len(repo_dirs) < 2:
        raise ValueError(f"churn needs >= 2 repos under {corpus}")
    projections = list(churn.PROJECTIONS) if args.projection == "both" else [args.projection]
    window_seconds = args.window_months * churn.SECONDS_PER_MONTH
    config = _config_of(args)

    tasks = [(d, proj, window_seconds) for proj in projections for d in repo_dirs]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            extracted = list(pool.map(_chextract, tasks))
    else:
        extracted = [_chextract(t) for t in tasks]

    per_projection: dict[str, dict[str, list]] = {p: {} for p in projections}
    for (repo_dir, proj, _), (repo_id, records) in zip(tasks, extracted):
        per_projection[proj][repo_id] = records

    record_rows = []
    eval_rows = []
    models = {}
    for proj in projections:
        per_repo = per_projection[proj]
        for repo_id in sorted(per_repo):
            for r in per_repo[repo_id]:
                row = [r.developer, r.repo_id, r.window.index, r.window.start, r.window.end, proj]
                row.extend(f"{r.features[n]:.6f}" if n in r.features else "" for n in CHURN_CSV_FEATURES)
                row.append(r.label)
                record_rows.append(tuple(row))
        result = churn.evaluate_loo(per_repo, n_seeds=args.eval_seeds,
                                    base_seed=derive_seed(args.seed, f"churn-{proj}"),
                                    k_neighbors=args.k_neighbors, l2=args.l2)
        for repo_id in sorted(result.per_repo_mean):
            eval_rows.append((repo_id, proj,
                              f"{result.per_repo_mean[repo_id]:.4f}",
                              f"{result.per_repo_std[repo_id]:.4f}",
                              result.per_repo_windows[repo_id]))
        pooled = [r for repo_id in sorted(per_repo) for r in per_repo[repo_id]]
        seed = derive_seed(args.seed, f"churn-model-{proj}")
        balanced = churn.smote_oversample(pooled, k_neighbors=args.k_neighbors, rng_seed=seed)
        models[proj] = churn.train_logistic(balanced, l2=args.l2, seed=seed)

    write_csv(out / "churn_records.csv",
              ("developer", "repo", "window_index", "window_start", "window_end", "projection")
              + CHURN_CSV_FEATURES + ("label",),
              record_rows, config)
    write_csv(out / "churn_eval.csv",
              ("repo", "projection", "balanced_accuracy_mean", "balanced_accuracy_std", "n_windows"),
              eval_rows, config)
    if set(projections) == set(churn.PROJECTIONS):
        importance = churn.feature_importance(models["directed"], models["undirected"])
        write_csv(out / "feature_importance.csv",
                  ("rank", "feature", "importance"),
                  [(i + 1, name, f"{value:.4f}") for i, (name, value) in enumerate(importance)],
                  config)
    print(f"churn: {len(record_rows)} records, {len(eval_rows)} repo evaluations -> {out}")
    return 0


def _cmd_report(args) -> int:
    in_dir = Path(args.input)
    out = Path(args.out)
    rows = []
    for path in sorted(in_dir.rglob("validation.json")):
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
        d = doc["cohens_d"]
        d = float(d) if not isinstance(d, str) else (math.inf if d == "inf" else -math.inf)
        result = PermutationResult(
            repo_id=doc["repo"],
            observed=CascadeStats(doc["observed"]["n_cascades"], doc["observed"]["avg_depth"],
                                  doc["observed"]["avg_devs"]),
            null_counts=tuple(doc["null"]["counts"]),
            null_depths=tuple(doc["null"]["depths"]),
            null_devs=tuple(doc["null"]["devs"]),
            null_mean_count=doc["null"]["mean_count"],
            null_std_count=doc["null"]["std_count"],
            null_mean_depth=doc["null"]["mean_depth"],
            null_mean_devs=doc["null"]["mean_devs"],
            p_value=doc["p_value"], cohens_d=d,
            n_shuffles=doc["n_shuffles"], base_seed=doc["base_seed"],
            threshold_percentile=doc["threshold_percentile"])
        top = TopDevelopers(ids=tuple(doc["top"]["ids"]),
                            commit_share=doc["top"]["commit_share_pct"],
                            fraction=doc["top"].get("fraction", 0.2))
        rows.append(ReportEntry(doc["repo"], top, result))
    table = assemble_report(rows)
    config = _config_of(args)
    if args.format == "json":
        write_json(out / "report.json",
                   {"rows": [dict(zip(REPORT_HEADER, row)) for row in table]}, config)
    else:
        write_csv(out / "report.csv", REPORT_HEADER, table, config)
    print(f"report: {len(table)} repositories -> {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cascade-lens",
                     description="Burstiness, activity cascades and churn prediction "
                                 "for temporal co-editing networks.")
    parser.add_argument("--version", action="version", version=f"cascade-lens {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, *, shuffles=False, threshold=False, jobs=False):
        p.add_argument("--seed", type=int, default=_env("SEED", int, 42))
        p.add_argument("--out", type=Path, default=_env("OUT", Path, Path(".")),
                       help="output directory")
        if shuffles:
            p.add_argument("--shuffles", type=int, default=_env("SHUFFLES", int, 100))
        if threshold:
            p.add_argument("--threshold", type=float, default=_env("THRESHOLD", float, 25.0),
                           help="trigger percentile-rank threshold")
        if jobs:
            p.add_argument("--jobs", type=int, default=_env("JOBS", int, 1))

    def inputs(p):
        p.add_argument("--commits", type=Path, required=True)
        p.add_argument("--coedits", type=Path, required=True)
        p.add_argument("--top-fraction", type=float, dest="top_fraction",
                       default=_env("TOP_FRACTION", float, 0.2))

    p = sub.add_parser("mine", help="extract commits/coedits CSVs from a git repository")
    p.add_argument("--repo", type=Path, required=True)
    p.add_argument("--branch", default="HEAD")
    p.add_argument("--repo-id", dest="repo_id", default=None)
    common(p)
    p.set_defaults(func=_cmd_mine)

    p = sub.add_parser("synth", help="generate a ground-truth validation network")
    p.add_argument("network", choices=("random", "cascade"))
    p.add_argument("--chains", type=int, default=None, help="planted chain count (cascade network)")
    common(p)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("burstiness", help="project/individual burstiness with shuffle null")
    inputs(p)
    p.add_argument("--min-commits", type=int, dest="min_commits",
                   default=_env("MIN_COMMITS", int, 3))
    p.add_argument("--all-developers", action="store_true", dest="all_developers",
                   help="rank all developers, not just the top fraction")
    common(p, shuffles=True)
    p.set_defaults(func=_cmd_burstiness)

    p = sub.add_parser("cascades", help="detect trigger events and cascade chains")
    inputs(p)
    common(p, threshold=True)
    p.set_defaults(func=_cmd_cascades)

    p = sub.add_parser("validate", help="permutation test against the temporal-shuffle null")
    inputs(p)
    common(p, shuffles=True, threshold=True, jobs=True)
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("churn", help="leave-one-repo-out churn prediction over a corpus")
    p.add_argument("--corpus", type=Path, required=True,
                   help="directory of <repo>/commits.csv+coedits.csv subdirectories")
    p.add_argument("--window-months", type=int, dest="window_months",
                   default=_env("WINDOW_MONTHS", int, 12))
    p.add_argument("--projection", choices=("directed", "undirected", "both"),
                   default=_env("PROJECTION", str, "both"))
    p.add_argument("--eval-seeds", type=int, dest="eval_seeds", default=5,
                   help="independent runs per held-out repo")
    p.add_argument("--k-neighbors", type=int, dest="k_neighbors", default=5)
    p.add_argument("--l2", type=float, default=1.0)
    common(p, jobs=True)
    p.set_defaults(func=_cmd_churn)

    p = sub.add_parser("report", help="assemble validation.json files into one table")
    p.add_argument("--in", dest="input", type=Path, required=True)
    p.add_argument("--format", choices=("csv", "json"), default=_env("FORMAT", str, "csv"))
    common(p)
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ParseError, MinerError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception:
        traceback.print_exc()
        return 2


if __name__ == "__main__":
    sys.exit(main())
