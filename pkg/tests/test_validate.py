import math

import numpy as np
import pytest

from cascade_lens.model import build_commit_history, top_fraction_developers
from cascade_lens.synth import SynthConfig, generate_cascade_network, generate_random_network
from cascade_lens.validate import (REPORT_HEADER, PermutationResult, ReportEntry, assemble_report,
                                   cohens_d, empirical_p, permutation_test, round_half_up,
                                   shuffle_coedit_timestamps, significance_stars)
from conftest import coedit, commit, make_log


class TestShuffleCoedits:
    def test_swap_example(self):
        events = [coedit("A", "B", 1), coedit("C", "D", 2)]
        for seed in range(50):
            shuffled = shuffle_coedit_timestamps(events, seed)
            if shuffled[0].timestamp != 1:
                break
        # the swap permutation puts (C,D) first after re-sorting
        assert [(e.editor_id, e.edited_id, e.timestamp) for e in shuffled] == \
            [("C", "D", 1), ("A", "B", 2)]

    def test_preserves_multisets(self):
        rng = np.random.default_rng(5)
        events = [coedit(f"d{rng.integers(5)}", f"e{rng.integers(5)}", int(rng.integers(100)),
                         weight=int(rng.integers(1, 4)))
                  for _ in range(60)]
        shuffled = shuffle_coedit_timestamps(events, 7)
        assert sorted(e.timestamp for e in shuffled) == sorted(e.timestamp for e in events)
        assert sorted((e.editor_id, e.edited_id) for e in shuffled) == \
            sorted((e.editor_id, e.edited_id) for e in events)
        assert sum(e.weight for e in shuffled) == sum(e.weight for e in events)
        assert len(shuffled) == len(events)

    def test_sorted_output(self):
        events = [coedit("A", "B", t) for t in (5, 1, 9, 3)]
        shuffled = shuffle_coedit_timestamps(events, 3)
        ts = [e.timestamp for e in shuffled]
        assert ts == sorted(ts)


class TestPValueAndEffectSize:
    def test_add_one_floor(self):
        assert empirical_p(0, 100) == pytest.approx(1 / 101)
        assert round_half_up(empirical_p(0, 100), 3) == 0.010

    def test_k_equals_n(self):
        assert empirical_p(100, 100) == 1.0

    def test_table_mid_range_value(self):
        # 42/101 in the add-one form: 41 exceedances over 100 shuffles
        assert round_half_up(empirical_p(41, 100), 3) == 0.416

    def test_cohens_d_plain(self):
        assert cohens_d(10.0, 4.0, 2.0) == 3.0

    def test_cohens_d_degenerate(self):
        assert cohens_d(0.0, 0.0, 0.0) == math.inf
        assert cohens_d(5.0, 0.0, 0.0) == math.inf
        assert cohens_d(0.0, 5.0, 0.0) == -math.inf

    def test_round_half_up(self):
        assert round_half_up(35 / 101, 3) == 0.347  # 0.3465... rounds up
        assert round_half_up(0.0099, 3) == 0.010

    def test_stars(self):
        assert significance_stars(0.04) == "*"
        assert significance_stars(0.009) == "**"
        assert significance_stars(0.0005) == "***"
        assert significance_stars(0.06) == ""


def small_rhythm_log(seed=0, n_devs=8, n_events=40):
    rng = np.random.default_rng(seed)
    commits = []
    for d in range(n_devs):
        t = int(rng.integers(0, 50))
        while t < 5000:
            commits.append(commit(f"d{d}", t))
            t += int(rng.integers(40, 120))
    devs = [f"d{i}" for i in range(n_devs)]
    events = []
    for _ in range(n_events):
        a, b = rng.choice(n_devs, size=2, replace=False)
        events.append(coedit(devs[a], devs[b], int(rng.integers(0, 5000))))
    return make_log(commits, events)


class TestPermutationTest:
    def test_p_bounds_and_reproducibility(self):
        log = small_rhythm_log()
        top = top_fraction_developers(build_commit_history(log), 0.5)
        r1 = permutation_test(log, top, n_shuffles=30, base_seed=5)
        r2 = permutation_test(log, top, n_shuffles=30, base_seed=5)
        assert r1 == r2
        assert 1 / 31 <= r1.p_value <= 1.0

    def test_jobs_do_not_change_result(self):
        log = small_rhythm_log(seed=2)
        top = top_fraction_developers(build_commit_history(log), 0.5)
        sequential = permutation_test(log, top, n_shuffles=24, base_seed=9, jobs=1)
        parallel = permutation_test(log, top, n_shuffles=24, base_seed=9, jobs=8)
        assert sequential == parallel

    def test_matches_public_shuffle_op(self):
        # shuffle i of the fast path must equal detect() on the public op's output
        from cascade_lens.cascade import cascade_stats, detect_cascades
        log = small_rhythm_log(seed=3)
        history = build_commit_history(log)
        top = top_fraction_developers(history, 0.5)
        res = permutation_test(log, top, n_shuffles=5, base_seed=77)
        for i in range(5):
            shuffled = shuffle_coedit_timestamps(log.coedits, 77 + i)
            chains = detect_cascades(history, shuffled, top)
            assert len(chains) == res.null_counts[i]
            stats = cascade_stats(chains)
            assert stats.avg_depth == res.null_depths[i]
            assert stats.avg_devs == res.null_devs[i]

    def test_null_depth_zero_for_cascade_free_shuffles(self):
        log = make_log([commit("a", t) for t in (0, 100, 200, 300)] + [commit("b", 50)],
                       [coedit("a", "b", 150)])
        top = top_fraction_developers(build_commit_history(log), 1.0)
        res = permutation_test(log, top, n_shuffles=10, base_seed=1)
        assert res.observed.n_cascades == 0
        assert res.null_mean_depth == 0.0
        assert res.cohens_d == math.inf  # observed == null mean == 0

    def test_calibration_uniformity(self):
        # p on data that is itself a fresh shuffle should be uniform-ish
        log = small_rhythm_log(seed=11, n_devs=6, n_events=30)
        top = top_fraction_developers(build_commit_history(log), 0.5)
        hits = 0
        n_runs = 200
        for i in range(n_runs):
            reshuffled = log.replace_coedits(shuffle_coedit_timestamps(log.coedits, 10_000 + i))
            p = permutation_test(reshuffled, top, n_shuffles=19, base_seed=20_000 + 37 * i).p_value
            hits += p <= 0.05
        assert 0.01 <= hits / n_runs <= 0.12


class TestAssembleReport:
    def _result(self, observed, counts, p, d):
        from cascade_lens.cascade import CascadeStats
        return PermutationResult(
            repo_id="demo", observed=CascadeStats(*observed), null_counts=tuple(counts),
            null_depths=(0.0,) * len(counts), null_devs=(0.0,) * len(counts),
            null_mean_count=float(np.mean(counts)), null_std_count=float(np.std(counts)),
            null_mean_depth=0.0, null_mean_devs=0.0, p_value=p, cohens_d=d,
            n_shuffles=len(counts), base_seed=0, threshold_percentile=25.0)

    def test_empty_report_is_header_only(self):
        assert assemble_report([]) == []
        assert len(REPORT_HEADER) == 12

    def test_star_and_rounding_rows(self):
        from cascade_lens.model import TopDevelopers
        top = TopDevelopers(ids=("a", "b"), commit_share=86.5, fraction=0.2)
        r1 = self._result((5, 2.0, 2.5), [1] * 100, empirical_p(0, 100), 4.2)
        r2 = self._result((0, 0.0, 0.0), [3] * 100, 1.0, -0.60)
        rows = assemble_report([ReportEntry("x", top, r1), ReportEntry("y", top, r2)])
        assert rows[0][7] == "0.010" and rows[0][8] == "**"
        assert rows[1][7] == "1.000" and rows[1][8] == "" and rows[1][9] == "-0.60"

    def test_infinite_d_formatting(self):
        from cascade_lens.model import TopDevelopers
        top = TopDevelopers(ids=("a",), commit_share=50.0, fraction=0.2)
        r = self._result((0, 0.0, 0.0), [0] * 10, 1.0, math.inf)
        rows = assemble_report([ReportEntry("kitlike", top, r)])
        assert rows[0][9] == "inf"
