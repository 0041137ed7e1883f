import pytest

from temporec import EventLog

# the worked example: two users, three items, four links
FOUR_EDGES = [("u1", "a", 1), ("u1", "b", 2), ("u2", "b", 3), ("u2", "c", 4)]


@pytest.fixture
def four_edge_log():
    return EventLog.from_records(FOUR_EDGES)


@pytest.fixture
def four_edge_snapshot(four_edge_log):
    return four_edge_log.snapshot(5)
