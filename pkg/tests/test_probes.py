import warnings

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from scipy import stats

from temporec import (ConfigurationError, EmptyProbeWarning, EventLog,
                      ProbeSampler, random_probe, sample_probe_times,
                      time_probe)


def sequential_log(n_events, n_users=20, n_items=30):
    idx = np.arange(n_events)
    users = np.asarray([f"u{v:05d}" for v in idx // n_items])
    items = np.asarray([f"i{v:05d}" for v in idx % n_items])
    return EventLog.from_arrays(users, items, idx.astype(np.int64))


class TestRandomProbe:
    def test_probe_size_rounding_small(self):
        log = sequential_log(10)
        split = random_probe(log, 0.1, seed=3)
        assert split.n_probe_events == 1
        assert split.training.n_events == 9

    def test_probe_size_rounding_at_corpus_scale(self):
        # 352,394 events at 10% round to 35,239
        log = sequential_log(352_394, n_users=600, n_items=600)
        split = random_probe(log, 0.1, seed=0)
        assert split.n_probe_events == 35_239
        assert split.training.n_events == 352_394 - 35_239

    def test_deterministic_given_seed(self):
        log = sequential_log(50)
        a = random_probe(log, 0.2, seed=11)
        b = random_probe(log, 0.2, seed=11)
        assert np.array_equal(a.probe_items, b.probe_items)
        assert np.array_equal(a.probe_times, b.probe_times)
        c = random_probe(log, 0.2, seed=12)
        assert not np.array_equal(a.probe_times, c.probe_times)

    def test_partition_covers_all_events(self):
        log = sequential_log(40)
        split = random_probe(log, 0.25, seed=5)
        train = {(e.user, e.item) for e in split.training.events}
        probe = set(zip(split.probe_users, split.probe_items))
        assert not train & probe
        assert len(train) + len(probe) == log.n_events

    def test_fraction_out_of_range(self):
        log = sequential_log(10)
        for bad in (0.0, 1.0, -0.1, 1.5):
            with pytest.raises(ConfigurationError):
                random_probe(log, bad, seed=0)

    def test_probe_degree_tracks_item_degree(self):
        # expected probe-link count per item is proportional to its degree
        rows = []
        for d, item in zip((1, 2, 3, 4, 5), "abcde"):
            for u in range(d):
                rows.append((f"u{u}", item, u + 1))
        log = EventLog.from_records(rows)
        degrees = np.asarray([1, 2, 3, 4, 5], dtype=float)
        counts = np.zeros(5)
        n_seeds = 400
        for seed in range(n_seeds):
            split = random_probe(log, 0.2, seed=seed)  # 3 of 15 events
            for item in split.probe_items:
                counts[ord(item) - ord("a")] += 1
        expected = 3 * n_seeds * degrees / degrees.sum()
        result = stats.chisquare(counts, f_exp=expected)
        assert result.pvalue > 1e-4


class TestTimeProbe:
    def test_half_open_window(self):
        log = EventLog.from_records(
            [(f"u{t}", f"i{t}", t) for t in (1, 3, 5, 7, 9, 11)]
        )
        split = time_probe(log, 6, 4)
        assert split.training.n_events == 3
        assert list(split.probe_times) == [7, 9]
        assert split.metadata["n_discarded_events"] == 1

    def test_empty_probe_is_flagged(self):
        log = EventLog.from_records(
            [(f"u{t}", f"i{t}", t) for t in (1, 3, 5, 9, 11)]
        )
        with pytest.warns(EmptyProbeWarning):
            split = time_probe(log, 6, 1)
        assert split.warning is not None
        assert split.n_probe_events == 0

    def test_cold_item_count(self):
        log = EventLog.from_records(
            [("u1", "a", 1), ("u2", "a", 2), ("u1", "new", 8)]
        )
        split = time_probe(log, 6, 4)
        assert split.cold_event_count == 1
        assert split.cold_fraction == 1.0

    def test_causality(self):
        rng = np.random.default_rng(2)
        rows = [(f"u{rng.integers(8)}", f"i{rng.integers(12)}",
                 int(rng.integers(0, 40))) for _ in range(120)]
        log = EventLog.from_records(rows)
        split = time_probe(log, 25, 5)
        train_times = [e.timestamp for e in split.training.events]
        assert max(train_times) < min(split.probe_times)
        assert all(25 <= t < 30 for t in split.probe_times)

    def test_training_probe_disjoint(self):
        rng = np.random.default_rng(3)
        rows = [(f"u{rng.integers(8)}", f"i{rng.integers(12)}",
                 int(rng.integers(0, 40))) for _ in range(150)]
        log = EventLog.from_records(rows)
        split = time_probe(log, 20, 10)
        train = {(e.user, e.item) for e in split.training.events}
        probe = set(zip(split.probe_users, split.probe_items))
        assert not train & probe

    def test_parameter_validation(self):
        log = sequential_log(10)
        with pytest.raises(ConfigurationError):
            time_probe(log, 0, 1)
        with pytest.raises(ConfigurationError):
            time_probe(log, 5, 0)
        with pytest.raises(ConfigurationError):
            time_probe(log, 100, 1)

    def test_descriptor_is_json_ready(self):
        import json
        log = sequential_log(30)
        split = time_probe(log, 20, 5)
        payload = json.dumps(split.descriptor(), sort_keys=True)
        assert '"kind": "time"' in payload
        assert '"t_p": 20' in payload


@st.composite
def random_logs(draw):
    n = draw(st.integers(min_value=4, max_value=80))
    rows = [(f"u{draw(st.integers(0, 9))}", f"i{draw(st.integers(0, 11))}",
             draw(st.integers(0, 40))) for _ in range(n)]
    return EventLog.from_records(rows)


@settings(max_examples=40, deadline=None)
@given(log=random_logs(), seed=st.integers(0, 1000),
       fraction=st.floats(0.05, 0.6))
def test_random_split_invariants(log, seed, fraction):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", EmptyProbeWarning)
        split = random_probe(log, fraction, seed)
    train = {(e.user, e.item) for e in split.training.events}
    probe = set(zip(split.probe_users, split.probe_items))
    assert not train & probe
    assert len(train) + len(probe) == log.n_events
    assert split.n_probe_events == int(round(fraction * log.n_events))


@settings(max_examples=40, deadline=None)
@given(log=random_logs(), t_p=st.integers(1, 40), delta=st.integers(1, 15))
def test_time_split_invariants(log, t_p, delta):
    assume(log.max_time >= 1)
    if t_p > log.max_time:
        t_p = log.max_time
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", EmptyProbeWarning)
        split = time_probe(log, t_p, delta)
    train = {(e.user, e.item) for e in split.training.events}
    probe = set(zip(split.probe_users, split.probe_items))
    assert not train & probe
    assert all(t_p <= t < t_p + delta for t in split.probe_times)
    assert all(e.timestamp < t_p for e in split.training.events)
    kept = split.training.n_events + split.n_probe_events
    assert kept + split.metadata["n_discarded_events"] == log.n_events


class TestSampleProbeTimes:
    def test_values_respect_range_and_cap(self):
        log = sequential_log(101)  # timestamps 0..100
        sampler = ProbeSampler(lo=0.9, hi=1.0, count=100, seed=4)
        values = sample_probe_times(log, sampler, delta_p=1)
        assert len(values) == 100
        assert all(90 <= v <= 99 for v in values)

    def test_degenerate_range_yields_single_value(self):
        log = sequential_log(101)
        sampler = ProbeSampler(lo=0.9, hi=0.9, count=1, seed=0)
        assert sample_probe_times(log, sampler, delta_p=1) == [90]

    def test_deterministic_given_seed(self):
        log = sequential_log(101)
        sampler = ProbeSampler(lo=0.8, hi=0.9, count=50, seed=9)
        assert sample_probe_times(log, sampler, 2) == \
            sample_probe_times(log, sampler, 2)

    def test_empty_feasible_range(self):
        log = sequential_log(11)
        sampler = ProbeSampler(lo=0.9, hi=1.0, count=5, seed=0)
        with pytest.raises(ConfigurationError):
            sample_probe_times(log, sampler, delta_p=10)

    def test_sampler_validation(self):
        with pytest.raises(ConfigurationError):
            ProbeSampler(lo=0.9, hi=0.8, count=10, seed=0)
        with pytest.raises(ConfigurationError):
            ProbeSampler(lo=0.1, hi=0.2, count=0, seed=0)
