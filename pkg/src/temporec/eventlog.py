"""Timestamped user-item event logs and immutable bipartite snapshots.

An :class:`EventLog` is the canonical, deduplicated, time-sorted record of
link-creation events between users and items. A :class:`Snapshot` freezes the
bipartite adjacency at a cut time ``t`` (events strictly before ``t``) and is
the training-side input of every recommender. Snapshots keep their own copy of
the included events, so windowed degree-increase queries never need to reach
back to data that postdates the cut.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Hashable, Iterable, Iterator, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import ConfigurationError, EmptyLogError, ParseError
from .timeunits import KNOWN_UNITS


@dataclass(frozen=True)
class Event:
    """A single user-item link creation at an integer timestamp."""

    user: Hashable
    item: Hashable
    timestamp: int


def map_labels(sorted_labels: np.ndarray, queries) -> np.ndarray:
    """Indices of ``queries`` in a sorted label table, -1 where absent."""
    queries = np.asarray(queries)
    if len(sorted_labels) == 0:
        return np.full(len(queries), -1, dtype=np.int64)
    pos = np.searchsorted(sorted_labels, queries)
    pos = np.minimum(pos, len(sorted_labels) - 1)
    hit = sorted_labels[pos] == queries
    return np.where(hit, pos, -1).astype(np.int64)


@dataclass(frozen=True)
class IngestConfig:
    """How to read a delimiter-separated event file.

    ``columns`` gives the column order in the file and must contain "user",
    "item" and "timestamp"; an optional "rating" column enables threshold
    filtering (records with rating below ``rating_threshold`` are dropped).
    ``time_unit`` labels the native resolution of the integer timestamps.
    """

    delimiter: str = "\t"
    columns: tuple[str, ...] = ("user", "item", "timestamp")
    rating_threshold: float | None = None
    time_unit: str = "step"
    header: bool = False

    def __post_init__(self):
        for required in ("user", "item", "timestamp"):
            if required not in self.columns:
                raise ConfigurationError(f"columns must include {required!r}")
        if self.rating_threshold is not None and "rating" not in self.columns:
            raise ConfigurationError(
                "rating_threshold set but no 'rating' column configured"
            )
        if self.time_unit not in KNOWN_UNITS:
            raise ConfigurationError(
                f"unknown time unit {self.time_unit!r}; expected one of {KNOWN_UNITS}"
            )


class EventLog:
    """Deduplicated sequence of events, sorted by (timestamp, input order).

    Duplicate (user, item) pairs keep their earliest occurrence: a link either
    exists or it does not, and it exists from first collection. Identifiers
    are opaque but must be mutually comparable (all strings or all ints).
    """

    def __init__(self, user_labels, item_labels, user_idx, item_idx,
                 timestamps, time_unit: str = "step"):
        # internal constructor; use from_records / from_arrays / load_events
        self._user_labels = user_labels
        self._item_labels = item_labels
        self._user_idx = user_idx
        self._item_idx = item_idx
        self._timestamps = timestamps
        self.time_unit = time_unit
        self._item_ptr = None
        self._item_times = None
        self._events_cache = None

    # -- construction ------------------------------------------------------

    @classmethod
    def from_records(cls, records: Iterable[tuple], time_unit: str = "step") -> "EventLog":
        """Build a log from (user, item, timestamp) tuples."""
        records = list(records)
        if not records:
            raise EmptyLogError("no events")
        users = np.asarray([r[0] for r in records])
        items = np.asarray([r[1] for r in records])
        times = np.asarray([r[2] for r in records], dtype=np.int64)
        return cls.from_arrays(users, items, times, time_unit=time_unit)

    @classmethod
    def from_arrays(cls, users, items, timestamps, time_unit: str = "step") -> "EventLog":
        """Build a log from parallel per-event arrays of labels and times."""
        users = np.asarray(users)
        items = np.asarray(items)
        timestamps = np.asarray(timestamps, dtype=np.int64)
        if not (len(users) == len(items) == len(timestamps)):
            raise ValueError("users, items and timestamps must have equal length")
        if len(timestamps) == 0:
            raise EmptyLogError("no events")
        if timestamps.min() < 0:
            raise ValueError("timestamps must be non-negative")

        order = np.argsort(timestamps, kind="stable")
        users, items, timestamps = users[order], items[order], timestamps[order]

        user_labels, user_idx = np.unique(users, return_inverse=True)
        item_labels, item_idx = np.unique(items, return_inverse=True)

        # keep the earliest event of each (user, item) pair; every label
        # keeps its first event, so the label tables remain exact
        pair = user_idx.astype(np.int64) * len(item_labels) + item_idx
        _, first = np.unique(pair, return_index=True)
        first.sort()
        if len(first) < len(pair):
            timestamps = timestamps[first]
            user_idx = user_idx[first]
            item_idx = item_idx[first]

        return cls(user_labels, item_labels, user_idx, item_idx, timestamps,
                   time_unit=time_unit)

    # -- basic accessors ----------------------------------------------------

    @property
    def n_events(self) -> int:
        return len(self._timestamps)

    @property
    def n_users(self) -> int:
        return len(self._user_labels)

    @property
    def n_items(self) -> int:
        return len(self._item_labels)

    @property
    def max_time(self) -> int:
        """Largest timestamp in the log (the end of the observed span)."""
        return int(self._timestamps[-1])

    @property
    def timestamps(self) -> np.ndarray:
        return self._timestamps

    @property
    def user_labels(self) -> np.ndarray:
        return self._user_labels

    @property
    def item_labels(self) -> np.ndarray:
        return self._item_labels

    def event_users(self) -> np.ndarray:
        """Per-event user labels, in log order."""
        return self._user_labels[self._user_idx]

    def event_items(self) -> np.ndarray:
        return self._item_labels[self._item_idx]

    @property
    def events(self) -> tuple[Event, ...]:
        if self._events_cache is None:
            self._events_cache = tuple(
                Event(u, i, int(t))
                for u, i, t in zip(self.event_users(), self.event_items(),
                                   self._timestamps)
            )
        return self._events_cache

    def __len__(self) -> int:
        return self.n_events

    def __iter__(self) -> Iterator[Event]:
        return iter(self.events)

    # -- degree queries ------------------------------------------------------

    def _item_index(self):
        # per-item sorted event-time lists, for binary-search degree queries
        if self._item_ptr is None:
            order = np.argsort(self._item_idx, kind="stable")
            counts = np.bincount(self._item_idx, minlength=self.n_items)
            ptr = np.zeros(self.n_items + 1, dtype=np.int64)
            np.cumsum(counts, out=ptr[1:])
            self._item_ptr = ptr
            self._item_times = self._timestamps[order]
        return self._item_ptr, self._item_times

    def item_time_index(self) -> tuple[np.ndarray, np.ndarray]:
        """CSR-style (pointer, times): sorted event times per item column."""
        return self._item_index()

    def _item_pos(self, item) -> int:
        pos = np.searchsorted(self._item_labels, item)
        if pos < self.n_items and self._item_labels[pos] == item:
            return int(pos)
        return -1

    def item_degree_at(self, item, t: int) -> int:
        """Number of links of ``item`` with timestamp strictly before ``t``."""
        pos = self._item_pos(item)
        if pos < 0:
            return 0
        ptr, times = self._item_index()
        lo, hi = ptr[pos], ptr[pos + 1]
        return int(np.searchsorted(times[lo:hi], t, side="left"))

    def degree_increase(self, item, t: int, tau: int) -> int:
        """Count of the item's links in the window [t - tau, t).

        Windows reaching below time zero truncate there; unknown items
        count zero.
        """
        if tau <= 0:
            raise ValueError("tau must be positive")
        pos = self._item_pos(item)
        if pos < 0:
            return 0
        ptr, times = self._item_index()
        window = times[ptr[pos]:ptr[pos + 1]]
        hi = np.searchsorted(window, t, side="left")
        lo = np.searchsorted(window, t - tau, side="left")
        return int(hi - lo)

    # -- snapshots -----------------------------------------------------------

    def snapshot(self, t: int) -> "Snapshot":
        """Freeze the bipartite adjacency over events with timestamp < ``t``.

        ``t`` outside [0, max_time + 1] clamps to the empty or the full log.
        """
        hi = int(np.searchsorted(self._timestamps, t, side="left"))
        u = self._user_idx[:hi]
        i = self._item_idx[:hi]
        ts = self._timestamps[:hi]

        present_users, u_s = np.unique(u, return_inverse=True)
        present_items, i_s = np.unique(i, return_inverse=True)
        n_u, n_i = len(present_users), len(present_items)

        matrix = sp.csr_matrix(
            (np.ones(hi, dtype=np.float64), (u_s, i_s)), shape=(n_u, n_i)
        )
        matrix.sort_indices()
        return Snapshot(
            cut_time=int(t),
            time_unit=self.time_unit,
            user_labels=self._user_labels[present_users],
            item_labels=self._item_labels[present_items],
            matrix=matrix,
            ev_user=u_s.astype(np.int64),
            ev_item=i_s.astype(np.int64),
            ev_time=ts,
        )


class Snapshot:
    """Immutable bipartite adjacency frozen at a cut time.

    Holds both orientations of the adjacency, user and item degrees, and the
    (training-side) events it was built from in time order. All arrays are
    aligned to label tables sorted ascending, which also defines the
    deterministic identifier tie-break used in ranking.
    """

    def __init__(self, cut_time, time_unit, user_labels, item_labels, matrix,
                 ev_user, ev_item, ev_time):
        self.cut_time = cut_time
        self.time_unit = time_unit
        self.user_labels = user_labels
        self.item_labels = item_labels
        self.user_item_matrix = matrix                   # U x I, CSR
        self.item_user_matrix = matrix.T.tocsr()         # I x U, CSR
        self.item_user_matrix.sort_indices()
        self.user_degrees = np.diff(matrix.indptr).astype(np.int64)
        self.item_degrees = np.diff(self.item_user_matrix.indptr).astype(np.int64)
        self._ev_user = ev_user
        self._ev_item = ev_item
        self._ev_time = ev_time

    @property
    def n_users(self) -> int:
        return len(self.user_labels)

    @property
    def n_items(self) -> int:
        return len(self.item_labels)

    @property
    def n_events(self) -> int:
        return len(self._ev_time)

    @property
    def events(self) -> tuple[Event, ...]:
        """The included events, in time order."""
        users = self.user_labels[self._ev_user]
        items = self.item_labels[self._ev_item]
        return tuple(Event(u, i, int(t))
                     for u, i, t in zip(users, items, self._ev_time))

    def user_index(self, user) -> int:
        """Row of ``user`` in the adjacency, or -1 if absent."""
        pos = np.searchsorted(self.user_labels, user)
        if pos < self.n_users and self.user_labels[pos] == user:
            return int(pos)
        return -1

    def item_index(self, item) -> int:
        pos = np.searchsorted(self.item_labels, item)
        if pos < self.n_items and self.item_labels[pos] == item:
            return int(pos)
        return -1

    def user_degree(self, user) -> int:
        row = self.user_index(user)
        return int(self.user_degrees[row]) if row >= 0 else 0

    def item_degree(self, item) -> int:
        col = self.item_index(item)
        return int(self.item_degrees[col]) if col >= 0 else 0

    def user_items(self, user) -> np.ndarray:
        """Labels of the items collected by ``user`` (empty if unknown)."""
        row = self.user_index(user)
        if row < 0:
            return self.item_labels[:0]
        m = self.user_item_matrix
        return self.item_labels[m.indices[m.indptr[row]:m.indptr[row + 1]]]

    def item_users(self, item) -> np.ndarray:
        col = self.item_index(item)
        if col < 0:
            return self.user_labels[:0]
        m = self.item_user_matrix
        return self.user_labels[m.indices[m.indptr[col]:m.indptr[col + 1]]]

    def collected_indices(self, user) -> np.ndarray:
        """Item columns collected by ``user`` (empty if unknown)."""
        row = self.user_index(user)
        if row < 0:
            return np.empty(0, dtype=np.int64)
        m = self.user_item_matrix
        return m.indices[m.indptr[row]:m.indptr[row + 1]].astype(np.int64)

    def recent_degree_increase(self, tau: int) -> np.ndarray:
        """Per-item link counts in the window [cut_time - tau, cut_time)."""
        if tau <= 0:
            raise ValueError("tau must be positive")
        lo = np.searchsorted(self._ev_time, self.cut_time - tau, side="left")
        return np.bincount(self._ev_item[lo:], minlength=self.n_items).astype(np.int64)

    def item_first_times(self) -> np.ndarray:
        """Timestamp of each item's first training link (snapshot item order)."""
        cols, first = np.unique(self._ev_item, return_index=True)
        out = np.zeros(self.n_items, dtype=np.int64)
        out[cols] = self._ev_time[first]
        return out


def build_snapshot(log: EventLog, t: int) -> Snapshot:
    """Snapshot of ``log`` containing exactly the events with timestamp < t."""
    return log.snapshot(t)


def degree_increase(log: EventLog, item, t: int, tau: int) -> int:
    """Item link count in [t - tau, t); see :meth:`EventLog.degree_increase`."""
    return log.degree_increase(item, t, tau)


def load_events(path: str | Path, config: IngestConfig | None = None) -> EventLog:
    """Read a delimiter-separated event file into an :class:`EventLog`.

    Records failing the rating threshold are dropped; duplicate (user, item)
    pairs keep the earliest timestamp. Raises :class:`ParseError` with a line
    number for malformed records and :class:`EmptyLogError` if nothing
    survives filtering.
    """
    config = config or IngestConfig()
    col = {name: idx for idx, name in enumerate(config.columns)}
    need = max(col.values()) + 1
    users: list = []
    items: list = []
    times: list[int] = []

    with open(path, "r", encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle, delimiter=config.delimiter)
        for lineno, row in enumerate(reader, start=1):
            if config.header and lineno == 1:
                continue
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) < need:
                raise ParseError(
                    f"expected at least {need} fields, got {len(row)}", lineno
                )
            try:
                timestamp = int(row[col["timestamp"]])
            except ValueError:
                raise ParseError(
                    f"bad timestamp {row[col['timestamp']]!r}", lineno
                ) from None
            if timestamp < 0:
                raise ParseError(f"negative timestamp {timestamp}", lineno)
            if config.rating_threshold is not None:
                try:
                    rating = float(row[col["rating"]])
                except ValueError:
                    raise ParseError(
                        f"bad rating {row[col['rating']]!r}", lineno
                    ) from None
                if rating < config.rating_threshold:
                    continue
            users.append(row[col["user"]])
            items.append(row[col["item"]])
            times.append(timestamp)

    if not users:
        raise EmptyLogError(f"no events loaded from {path}")
    return EventLog.from_arrays(np.asarray(users), np.asarray(items),
                                np.asarray(times, dtype=np.int64),
                                time_unit=config.time_unit)


def write_events(events: EventLog | Sequence[Event], path: str | Path,
                 delimiter: str = "\t") -> None:
    """Write events as delimiter-separated ``user item timestamp`` lines."""
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, delimiter=delimiter, lineterminator="\n")
        if isinstance(events, EventLog):
            rows = zip(events.event_users(), events.event_items(),
                       events.timestamps)
        else:
            rows = ((e.user, e.item, e.timestamp) for e in events)
        for user, item, timestamp in rows:
            writer.writerow([user, item, int(timestamp)])
