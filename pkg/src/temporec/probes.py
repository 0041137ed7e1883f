"""Construction of random probes and time probes from an event log.

A probe is a held-out set of events that evaluation tries to recover. The
random probe samples a fraction of all events uniformly; the time probe holds
out every event in a window [t_p, t_p + delta_p), trains on everything
strictly earlier, and discards anything later. Either way the training side
is exposed as an immutable :class:`~temporec.eventlog.Snapshot`.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, EmptyProbeWarning
from .eventlog import Event, EventLog, Snapshot, map_labels


@dataclass(frozen=True)
class ProbeSplit:
    """A training snapshot plus the held-out probe events.

    ``probe_users`` / ``probe_items`` / ``probe_times`` are parallel per-event
    label arrays in time order; ``probe`` materializes them as
    :class:`Event` objects. ``cold_event_count`` is the number of probe events
    whose item has zero training degree (unrecommendable by any
    network-based method).
    """

    training: Snapshot
    kind: str                       # "random" | "time"
    metadata: dict
    probe_users: np.ndarray
    probe_items: np.ndarray
    probe_times: np.ndarray
    seed: int | None = None
    cold_event_count: int = 0
    warning: str | None = None

    @property
    def probe(self) -> tuple[Event, ...]:
        return tuple(
            Event(u, i, int(t))
            for u, i, t in zip(self.probe_users, self.probe_items,
                               self.probe_times)
        )

    @property
    def n_probe_events(self) -> int:
        return len(self.probe_times)

    @property
    def cold_fraction(self) -> float:
        if self.n_probe_events == 0:
            return 0.0
        return self.cold_event_count / self.n_probe_events

    def descriptor(self) -> dict:
        """JSON-ready provenance record of how this split was built."""
        out = {
            "kind": self.kind,
            "seed": self.seed,
            "n_training_events": self.training.n_events,
            "n_probe_events": self.n_probe_events,
            "cold_event_count": self.cold_event_count,
            "cold_fraction": self.cold_fraction,
            "warning": self.warning,
        }
        out.update(self.metadata)
        return out


def _cold_events(training: Snapshot, probe_items: np.ndarray) -> int:
    if len(probe_items) == 0:
        return 0
    idx = map_labels(training.item_labels, probe_items)
    return int(np.count_nonzero(idx < 0))


def random_probe(log: EventLog, fraction: float, seed: int) -> ProbeSplit:
    """Move ``round(fraction * E)`` uniformly chosen events to the probe.

    The remaining events form the training snapshot (cut at max_time + 1).
    Deterministic for a given seed.
    """
    if not 0.0 < fraction < 1.0:
        raise ConfigurationError(f"fraction must be in (0, 1), got {fraction}")
    n_events = log.n_events
    size = int(round(fraction * n_events))
    if size >= n_events:
        raise ConfigurationError(
            f"probe of {size} events would consume the whole {n_events}-event log"
        )

    rng = np.random.default_rng(seed)
    chosen = np.sort(rng.choice(n_events, size=size, replace=False))
    mask = np.zeros(n_events, dtype=bool)
    mask[chosen] = True

    users, items, times = log.event_users(), log.event_items(), log.timestamps
    training_log = EventLog.from_arrays(users[~mask], items[~mask],
                                        times[~mask], time_unit=log.time_unit)
    training = training_log.snapshot(log.max_time + 1)

    warning = None
    if size == 0:
        warning = "empty probe: round(fraction * E) is zero for this log"
        warnings.warn(warning, EmptyProbeWarning)

    return ProbeSplit(
        training=training,
        kind="random",
        metadata={"fraction": fraction},
        probe_users=users[mask],
        probe_items=items[mask],
        probe_times=times[mask],
        seed=seed,
        cold_event_count=_cold_events(training, items[mask]),
        warning=warning,
    )


def time_probe(log: EventLog, t_p: int, delta_p: int) -> ProbeSplit:
    """Hold out the events in [t_p, t_p + delta_p); train on timestamps < t_p.

    Events at or after t_p + delta_p are discarded. An empty probe is legal
    but flagged (and warned about), since metrics on it are undefined.
    """
    if not 0 < t_p <= log.max_time:
        raise ConfigurationError(
            f"t_p must be in (0, {log.max_time}], got {t_p}"
        )
    if delta_p <= 0:
        raise ConfigurationError(f"delta_p must be positive, got {delta_p}")

    times = log.timestamps
    lo = int(np.searchsorted(times, t_p, side="left"))
    hi = int(np.searchsorted(times, t_p + delta_p, side="left"))
    training = log.snapshot(t_p)
    users, items = log.event_users(), log.event_items()

    warning = None
    if hi == lo:
        warning = f"empty probe: no events in [{t_p}, {t_p + delta_p})"
        warnings.warn(warning, EmptyProbeWarning)

    return ProbeSplit(
        training=training,
        kind="time",
        metadata={"t_p": int(t_p), "delta_p": int(delta_p),
                  "n_discarded_events": log.n_events - hi},
        probe_users=users[lo:hi],
        probe_items=items[lo:hi],
        probe_times=times[lo:hi],
        seed=None,
        cold_event_count=_cold_events(training, items[lo:hi]),
        warning=warning,
    )


@dataclass(frozen=True)
class ProbeSampler:
    """Uniform sampler of probe cut times over a fraction range of the span.

    ``lo`` and ``hi`` are fractions of the log's max time; draws are uniform
    integers with replacement, capped so a probe of length ``delta_p`` always
    fits inside the observed span.
    """

    lo: float
    hi: float
    count: int
    seed: int

    def __post_init__(self):
        if not 0.0 <= self.lo <= self.hi <= 1.0:
            raise ConfigurationError(
                f"need 0 <= lo <= hi <= 1, got [{self.lo}, {self.hi}]"
            )
        if self.count < 1:
            raise ConfigurationError("count must be at least 1")


def sample_probe_times(log: EventLog, sampler: ProbeSampler,
                       delta_p: int) -> list[int]:
    """Draw ``sampler.count`` probe cut times from the sampler's range.

    Values are integers in [lo * T, min(hi * T, T - delta_p)] where T is the
    log's max time; draws are independent and with replacement. Deterministic
    for a given sampler seed.
    """
    t_max = log.max_time
    lo_t = int(np.ceil(sampler.lo * t_max - 1e-9))
    hi_t = int(np.floor(min(sampler.hi * t_max, t_max - delta_p) + 1e-9))
    lo_t = max(lo_t, 1)
    if lo_t > hi_t:
        raise ConfigurationError(
            f"no feasible probe times in [{sampler.lo}, {sampler.hi}] "
            f"with delta_p={delta_p} and max_time={t_max}"
        )
    rng = np.random.default_rng(sampler.seed)
    return [int(v) for v in rng.integers(lo_t, hi_t + 1, size=sampler.count)]
