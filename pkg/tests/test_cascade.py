import numpy as np
import pytest

from cascade_lens.cascade import (CascadeChain, TriggerEvent, cascade_stats, detect_cascades,
                                  detect_cascades_detailed, is_trigger)
from cascade_lens.model import CoEditEvent
from conftest import coedit, history_of
from oracles import brute_detect, brute_trigger


def random_instance(rng, max_devs=6, max_events=50, t_max=100):
    devs = [f"d{i}" for i in range(rng.integers(2, max_devs + 1))]
    history = {}
    for d in devs:
        n = int(rng.integers(0, 9))
        history[d] = sorted(int(t) for t in rng.integers(0, t_max, size=n, endpoint=True))
    events = []
    for _ in range(int(rng.integers(1, max_events + 1))):
        editor, edited = rng.choice(len(devs), size=2)  # self-edits allowed
        events.append((devs[int(editor)], devs[int(edited)], int(rng.integers(0, t_max, endpoint=True))))
    k = int(rng.integers(1, len(devs) + 1))
    initiators = set(rng.choice(devs, size=k, replace=False).tolist())
    return history, events, initiators


class TestIsTrigger:
    def test_fast_response_rank_zero(self):
        hist = history_of(B=[0, 10, 20, 30, 32])
        check = is_trigger(hist, coedit("A", "B", 31))
        assert check == (True, 0.0, 1)

    def test_insufficient_before_history(self):
        hist = history_of(B=[0, 10, 20])
        check = is_trigger(hist, coedit("A", "B", 5))
        assert not check.triggered and check.rank is None

    def test_midrank_tie_convention(self):
        # response 10 equals every one of the three intervals: rank 50
        hist = history_of(B=[0, 10, 20, 30, 41])
        check = is_trigger(hist, coedit("A", "B", 31))
        assert (check.triggered, check.rank) == (False, 50.0)

    def test_strict_ties_flag(self):
        hist = history_of(B=[0, 10, 20, 30, 41])
        check = is_trigger(hist, coedit("A", "B", 31), strict_ties=True)
        assert (check.triggered, check.rank) == (True, 0.0)

    def test_commit_at_edit_time_in_neither_set(self):
        # commits {0,10,20,31,32}: the commit at exactly t=31 is excluded,
        # B={0,10,20}, next commit 32
        hist = history_of(B=[0, 10, 20, 31, 32])
        check = is_trigger(hist, coedit("A", "B", 31))
        assert check.response == 1 and check.rank == 0.0

    def test_self_edit_rejected(self):
        with pytest.raises(ValueError):
            is_trigger(history_of(A=[1, 2, 3]), coedit("A", "A", 2))

    def test_no_commit_after_is_not_trigger(self):
        hist = history_of(B=[0, 10, 20])
        check = is_trigger(hist, coedit("A", "B", 25))
        assert not check.triggered and check.response is None

    def test_threshold_bounds(self):
        hist = history_of(B=[0, 10, 20, 30])
        for bad in (0.0, 100.0, -5.0):
            with pytest.raises(ValueError):
                is_trigger(hist, coedit("A", "B", 5), threshold_percentile=bad)

    def test_matches_brute_force_on_1000_micro_instances(self):
        rng = np.random.default_rng(42)
        agree = 0
        for _ in range(1000):
            times = sorted(int(t) for t in rng.integers(0, 60, size=int(rng.integers(0, 10))))
            t = int(rng.integers(0, 60))
            hist = history_of(B=times) if times else history_of(B=[])
            got = is_trigger(hist, coedit("A", "B", t))
            want = brute_trigger(times, t)
            assert got.triggered == want[0]
            if want[1] is None:
                assert got.rank is None
            else:
                assert got.rank == want[1]
            agree += 1
        assert agree == 1000

    def test_lower_threshold_never_more_triggers(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            history, events, initiators = random_instance(rng)
            hist = history_of(**history)
            evs = [coedit(*e) for e in events if e[0] != e[1]]
            counts = []
            for thr in (10.0, 25.0, 50.0, 90.0):
                counts.append(sum(1 for e in evs if is_trigger(hist, e, thr).triggered))
            assert counts == sorted(counts)


def chains_as_tuples(chains):
    return [tuple((te.event.editor_id, te.event.edited_id, te.event.timestamp) for te in c.events)
            for c in chains]


class TestDetectCascades:
    def test_simple_two_link_chain(self):
        hist = history_of(A=[0, 50, 100, 150], B=[0, 40, 80, 101, 160], C=[0, 70, 140, 201])
        events = [coedit("A", "B", 100), coedit("B", "C", 200)]
        chains = detect_cascades(hist, events, {"A"})
        assert chains_as_tuples(chains) == [(("A", "B", 100), ("B", "C", 200))]
        assert chains[0].depth == 2 and chains[0].devs == 3

    def test_non_trigger_next_event_discards_seed(self):
        # B's next event exists but is not a trigger (A responds at median
        # speed, mid-rank 50): the length-1 chain is dropped
        hist = history_of(A=[0, 40, 80, 190], B=[0, 40, 80, 101, 200])
        events = [coedit("A", "B", 100), coedit("B", "A", 150)]
        chains = detect_cascades(hist, events, {"A"})
        assert chains_as_tuples(chains) == []

    def test_revisits_allowed(self):
        hist = history_of(A=[0, 40, 80, 151, 240], B=[0, 40, 80, 101, 201])
        events = [coedit("A", "B", 100), coedit("B", "A", 150), coedit("A", "B", 200)]
        chains = detect_cascades(hist, events, {"A", "B"})
        tup = chains_as_tuples(chains)
        assert (("A", "B", 100), ("B", "A", 150), ("A", "B", 200)) in tup
        full = [c for c in chains if c.depth == 3][0]
        assert full.devs == 2

    def test_seed_only_initiator_filter(self):
        # only the seed's editor must be an initiator; downstream chain
        # participants are unrestricted, and filtering the seed out kills
        # the chain even though B->C alone would still be a trigger
        hist = history_of(A=[0, 50, 100, 150], B=[0, 40, 80, 101, 160], C=[0, 70, 140, 201])
        events = [coedit("A", "B", 100), coedit("B", "C", 200)]
        assert len(detect_cascades(hist, events, {"A"})) == 1
        assert chains_as_tuples(detect_cascades(hist, events, {"B"})) == []

    def test_matches_oracle_on_200_random_instances(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            history, events, initiators = random_instance(rng)
            hist = history_of(**history)
            got = chains_as_tuples(detect_cascades(hist, [coedit(*e) for e in events], initiators))
            want = brute_detect(history, events, initiators)
            assert got == [tuple(w) for w in want]

    def test_chain_invariants_on_random_instances(self):
        rng = np.random.default_rng(19)
        for _ in range(50):
            history, events, initiators = random_instance(rng, max_events=40)
            hist = history_of(**history)
            for chain in detect_cascades(hist, [coedit(*e) for e in events], initiators):
                assert chain.depth >= 2
                ts = [te.event.timestamp for te in chain.events]
                assert all(b > a for a, b in zip(ts, ts[1:]))
                for prev, cur in zip(chain.events, chain.events[1:]):
                    assert cur.event.editor_id == prev.event.edited_id

    def test_prefix_stability_when_appending_late_event(self):
        rng = np.random.default_rng(23)
        for _ in range(30):
            history, events, initiators = random_instance(rng)
            hist = history_of(**history)
            base = chains_as_tuples(detect_cascades(hist, [coedit(*e) for e in events], initiators))
            t_late = max([e[2] for e in events] + [max((max(v) for v in history.values() if v), default=0)]) + 1
            extended = events + [("d0", "d1", t_late)]
            after = chains_as_tuples(detect_cascades(hist, [coedit(*e) for e in extended], initiators))
            assert base == after

    def test_diagnostics_tallies(self):
        hist = history_of(A=[0, 50, 100, 150], B=[0, 40, 80, 101, 160], C=[0, 70, 140, 201])
        events = [coedit("A", "B", 100), coedit("B", "C", 200), coedit("A", "A", 10),
                  coedit("C", "B", 170, weight=3)]
        det = detect_cascades_detailed(hist, events, {"A"})
        assert det.n_events == 4
        assert det.n_self_edits == 1
        assert det.n_triggers >= 2

    def test_deterministic_under_equal_timestamps(self):
        hist = history_of(A=[0, 10, 20, 31], B=[0, 10, 20, 31], C=[0, 10, 20, 31])
        events = [coedit("A", "B", 30), coedit("A", "C", 30), coedit("B", "C", 30),
                  coedit("C", "A", 30), coedit("B", "A", 30)]
        runs = {tuple(chains_as_tuples(detect_cascades(hist, events, {"A", "B", "C"})))
                for _ in range(5)}
        assert len(runs) == 1


class TestCascadeStats:
    def test_empty(self):
        s = cascade_stats(())
        assert (s.n_cascades, s.avg_depth, s.avg_devs) == (0, 0.0, 0.0)

    def test_arithmetic_mean(self):
        def chain(*links):
            tes = [TriggerEvent(CoEditEvent(a, b, t), 1, 0.0) for a, b, t in links]
            return CascadeChain(tuple(tes))
        c1 = chain(("A", "B", 1), ("B", "C", 2))          # depth 2, devs 3
        c2 = chain(("A", "B", 1), ("B", "A", 2), ("A", "B", 3))  # depth 3, devs 2
        s = cascade_stats([c1, c2])
        assert s.n_cascades == 2
        assert s.avg_depth == pytest.approx(2.5)
        assert s.avg_devs == pytest.approx(2.5)

    def test_invalid_chain_rejected(self):
        te = TriggerEvent(CoEditEvent("A", "B", 5), 1, 0.0)
        with pytest.raises(ValueError):
            CascadeChain((te,))
        te2 = TriggerEvent(CoEditEvent("C", "D", 6), 1, 0.0)
        with pytest.raises(ValueError):
            CascadeChain((te, te2))  # linkage broken
