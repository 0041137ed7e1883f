import csv

import numpy as np
import pytest
from pytest import approx

from temporec import (EventLog, UndefinedMetricError, popularity_half_life,
                      probe_degree_correlations, time_probe, write_scatter)


def proportional_split():
    # training degrees 1, 2, 3; probe degrees exactly twice that; training
    # events land inside the gain window [5, 10) so gains have variance too
    rows = []
    for degree, item in zip((1, 2, 3), ("a", "b", "c")):
        rows += [(f"u{item}{j}", item, 6 + j) for j in range(degree)]
    probe_rows = []
    counter = 0
    for degree, item in zip((1, 2, 3), ("a", "b", "c")):
        for _ in range(2 * degree):
            probe_rows.append((f"p{counter}", item, 10))
            counter += 1
    log = EventLog.from_records(rows + probe_rows)
    return time_probe(log, 10, 1)


class TestCorrelations:
    def test_perfectly_proportional_probe(self):
        report = probe_degree_correlations(proportional_split(), tau=5)
        assert report.degree_vs_probe == approx(1.0)
        assert report.n_items == 3

    def test_bounds(self):
        report = probe_degree_correlations(proportional_split(), tau=5)
        assert -1.0 <= report.degree_vs_probe <= 1.0
        assert -1.0 <= report.increase_vs_probe <= 1.0

    def test_zero_variance_is_undefined(self):
        rows = [("u1", "a", 1), ("u2", "b", 1), ("p1", "a", 5), ("p2", "b", 5)]
        split = time_probe(EventLog.from_records(rows), 5, 1)
        with pytest.raises(UndefinedMetricError):
            probe_degree_correlations(split, tau=2)

    def test_empty_probe_is_undefined(self):
        rows = [("u1", "a", 1), ("u2", "b", 2), ("u3", "a", 9)]
        import warnings
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            split = time_probe(EventLog.from_records(rows), 5, 2)
        with pytest.raises(UndefinedMetricError):
            probe_degree_correlations(split, tau=2)


class TestHalfLife:
    def test_even_link_count(self):
        rows = [(f"u{j}", "x", t) for j, t in enumerate((0, 10, 20, 30))]
        stats = popularity_half_life(EventLog.from_records(rows))
        assert stats.mean == approx(10.0)  # 2nd of 4 links at t=10

    def test_single_link_item(self):
        stats = popularity_half_life(EventLog.from_records([("u1", "a", 7)]))
        assert stats.mean == 0.0
        assert stats.n_items == 1

    def test_mixed_items_and_floor(self):
        rows = [(f"u{j}", "x", t) for j, t in enumerate((0, 10, 20, 30))]
        rows += [("u9", "solo", 5)]
        log = EventLog.from_records(rows)
        both = popularity_half_life(log)
        assert sorted(both.values.tolist()) == [0.0, 10.0]
        floored = popularity_half_life(log, min_degree=2)
        assert floored.n_items == 1
        assert floored.mean == approx(10.0)

    def test_bounded_by_lifetime(self):
        rng = np.random.default_rng(5)
        rows = [(f"u{rng.integers(40)}", f"i{rng.integers(6)}",
                 int(rng.integers(0, 100))) for _ in range(150)]
        log = EventLog.from_records(rows)
        stats = popularity_half_life(log)
        ptr, times = log.item_time_index()
        lifetimes = [times[ptr[p + 1] - 1] - times[ptr[p]]
                     for p in range(log.n_items)]
        assert np.all(stats.values >= 0)
        assert np.all(stats.values <= np.asarray(lifetimes))

    def test_odd_link_count_uses_ceiling(self):
        # 3 links: ceil(3/2) = 2nd link
        rows = [(f"u{j}", "x", t) for j, t in enumerate((4, 9, 100))]
        stats = popularity_half_life(EventLog.from_records(rows))
        assert stats.mean == approx(5.0)


class TestScatterExport:
    def test_columns_and_rows(self, tmp_path):
        split = proportional_split()
        path = tmp_path / "scatter.csv"
        write_scatter(split, tau=5, path=path)
        with open(path) as handle:
            rows = list(csv.DictReader(handle))
        assert len(rows) == split.training.n_items
        assert set(rows[0]) == {"item_id", "age", "k_train",
                                "degree_increase", "k_probe"}
        by_item = {row["item_id"]: row for row in rows}
        assert by_item["c"]["k_train"] == "3"
        assert by_item["c"]["k_probe"] == "6"
