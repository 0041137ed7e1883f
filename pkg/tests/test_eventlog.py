import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from temporec import (EmptyLogError, EventLog, IngestConfig, ParseError,
                      build_snapshot, degree_increase, load_events,
                      write_events)


def make_log(rows):
    return EventLog.from_records(rows)


class TestLoadEvents:
    def test_rating_threshold_drops_low_ratings(self, tmp_path):
        path = tmp_path / "events.tsv"
        path.write_text("u1\ta\t1\t5\nu2\ta\t2\t2\nu2\tb\t3\t3\n")
        config = IngestConfig(columns=("user", "item", "timestamp", "rating"),
                              rating_threshold=3.0)
        log = load_events(path, config)
        assert log.n_events == 2
        assert [e.user for e in log] == ["u1", "u2"]

    def test_duplicate_pair_keeps_earliest(self, tmp_path):
        path = tmp_path / "events.tsv"
        path.write_text("u1\ta\t9\nu1\ta\t5\n")
        log = load_events(path)
        assert log.n_events == 1
        assert log.events[0].timestamp == 5

    def test_unsorted_input_comes_out_sorted(self, tmp_path):
        path = tmp_path / "events.tsv"
        path.write_text("u1\ta\t9\nu2\tb\t2\nu3\tc\t5\n")
        log = load_events(path)
        assert [e.timestamp for e in log] == [2, 5, 9]

    def test_malformed_line_reports_line_number(self, tmp_path):
        path = tmp_path / "events.tsv"
        path.write_text("u1\ta\t1\nu2\tb\tnot_a_time\n")
        with pytest.raises(ParseError, match="line 2"):
            load_events(path)

    def test_short_line_reports_line_number(self, tmp_path):
        path = tmp_path / "events.tsv"
        path.write_text("u1\ta\t1\nu2\tb\n")
        with pytest.raises(ParseError, match="line 2"):
            load_events(path)

    def test_empty_result_is_an_error(self, tmp_path):
        path = tmp_path / "events.tsv"
        path.write_text("u1\ta\t1\t1\n")
        config = IngestConfig(columns=("user", "item", "timestamp", "rating"),
                              rating_threshold=3.0)
        with pytest.raises(EmptyLogError):
            load_events(path, config)

    def test_comma_delimiter_and_header(self, tmp_path):
        path = tmp_path / "events.csv"
        path.write_text("user,item,ts\nu1,a,1\nu2,b,2\n")
        config = IngestConfig(delimiter=",", header=True)
        log = load_events(path, config)
        assert log.n_events == 2

    def test_roundtrip_through_write_events(self, tmp_path, four_edge_log):
        path = tmp_path / "out.tsv"
        write_events(four_edge_log, path)
        again = load_events(path)
        assert [e.timestamp for e in again] == [1, 2, 3, 4]
        assert again.n_users == 2 and again.n_items == 3


class TestEventLog:
    def test_counts_and_span(self, four_edge_log):
        log = four_edge_log
        assert (log.n_events, log.n_users, log.n_items) == (4, 2, 3)
        assert log.max_time == 4

    def test_negative_timestamp_rejected(self):
        with pytest.raises(ValueError):
            make_log([("u1", "a", -1)])

    def test_empty_rejected(self):
        with pytest.raises(EmptyLogError):
            EventLog.from_records([])


class TestSnapshot:
    def test_strict_cut(self):
        log = make_log([("u1", "a", 1), ("u2", "b", 3), ("u3", "c", 5)])
        snap = build_snapshot(log, 3)
        assert snap.n_events == 1
        assert list(snap.user_items("u1")) == ["a"]

    def test_cut_zero_is_empty(self, four_edge_log):
        snap = build_snapshot(four_edge_log, 0)
        assert snap.n_events == 0
        assert snap.n_users == 0 and snap.n_items == 0
        assert snap.user_degrees.sum() == 0

    def test_full_cut_contains_everything(self, four_edge_log):
        snap = build_snapshot(four_edge_log, four_edge_log.max_time + 1)
        assert snap.n_events == four_edge_log.n_events
        assert snap.item_degrees.sum() == four_edge_log.n_events

    def test_orientations_agree(self, four_edge_snapshot):
        snap = four_edge_snapshot
        dense = snap.user_item_matrix.toarray()
        assert np.array_equal(dense.T, snap.item_user_matrix.toarray())
        assert list(snap.item_users("b")) == ["u1", "u2"]

    def test_degree_sums_match(self, four_edge_snapshot):
        snap = four_edge_snapshot
        assert snap.user_degrees.sum() == snap.item_degrees.sum() == 4

    def test_out_of_range_cut_clamps(self, four_edge_log):
        assert build_snapshot(four_edge_log, 1000).n_events == 4
        assert build_snapshot(four_edge_log, -5).n_events == 0


class TestDegreeIncrease:
    def test_window_count(self):
        log = make_log([("u1", "x", 2), ("u2", "x", 8), ("u3", "x", 9)])
        assert degree_increase(log, "x", 10, 3) == 2

    def test_unknown_item_is_zero(self, four_edge_log):
        assert degree_increase(four_edge_log, "nope", 10, 3) == 0

    def test_window_truncates_at_zero(self):
        log = make_log([("u1", "x", 2), ("u2", "x", 8), ("u3", "x", 9)])
        assert degree_increase(log, "x", 10, 100) == 3

    def test_snapshot_window_vector(self):
        log = make_log([("u1", "x", 2), ("u2", "x", 8), ("u3", "x", 9),
                        ("u1", "y", 1)])
        snap = log.snapshot(10)
        gains = snap.recent_degree_increase(3)
        assert gains[snap.item_index("x")] == 2
        assert gains[snap.item_index("y")] == 0


@st.composite
def event_rows(draw):
    n = draw(st.integers(min_value=1, max_value=60))
    rows = []
    for _ in range(n):
        rows.append((
            f"u{draw(st.integers(0, 7))}",
            f"i{draw(st.integers(0, 9))}",
            draw(st.integers(0, 50)),
        ))
    return rows


@settings(max_examples=60, deadline=None)
@given(rows=event_rows())
def test_log_invariants(rows):
    log = make_log(rows)
    times = log.timestamps
    assert np.all(np.diff(times) >= 0)
    pairs = list(zip(log.event_users(), log.event_items()))
    assert len(pairs) == len(set(pairs))
    assert log.n_users == len(set(u for u, _ in pairs))
    assert log.n_items == len(set(i for _, i in pairs))


@settings(max_examples=40, deadline=None)
@given(rows=event_rows(), t1=st.integers(0, 55), t2=st.integers(0, 55))
def test_snapshot_growth_is_monotone(rows, t1, t2):
    if t1 > t2:
        t1, t2 = t2, t1
    log = make_log(rows)
    early = {(e.user, e.item) for e in log.snapshot(t1).events}
    late = {(e.user, e.item) for e in log.snapshot(t2).events}
    assert early <= late


@settings(max_examples=40, deadline=None)
@given(rows=event_rows(), t=st.integers(1, 55), tau=st.integers(1, 20))
def test_degree_increase_matches_two_snapshots(rows, t, tau):
    log = make_log(rows)
    before, after = log.snapshot(t - tau), log.snapshot(t)
    for item in log.item_labels:
        expected = after.item_degree(item) - before.item_degree(item)
        assert degree_increase(log, item, t, tau) == expected


def test_degree_sums_equal_for_every_cut():
    rng = np.random.default_rng(7)
    rows = [(f"u{rng.integers(10)}", f"i{rng.integers(14)}",
             int(rng.integers(0, 30))) for _ in range(120)]
    log = make_log(rows)
    for t in range(0, 32):
        snap = log.snapshot(t)
        assert snap.user_degrees.sum() == snap.item_degrees.sum() == snap.n_events
