"""Recall, ranking score and recommended-item popularity over a probe.

Definitions:

* recall@L — per user, the fraction of the user's probe items appearing in
  the top L places of their recommendation list; the overall value is the
  unweighted mean over users with at least one probe entry.
* ranking score — per probe entry (user, item), the item's 1-based position
  among the user's uncollected items divided by the number of uncollected
  items; the overall value is the mean over probe entries. Near 0 is best;
  random scoring gives 0.5 in expectation.
* average top-degree — mean over users of the mean training degree of the
  user's top-L items; a popularity (inverse diversity) proxy.

Probe items with zero training degree cannot appear in any list; by default
they count as misses and take the worst relative rank 1.0. ``drop_cold=True``
removes them from the averages instead.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, Iterable, Mapping, Sequence

import numpy as np

from .errors import UndefinedMetricError
from .eventlog import Snapshot, map_labels
from .probes import ProbeSplit
from .recommenders import RecommendationList, full_ranking_indices


@dataclass(frozen=True)
class UserOutcome:
    """One user's evaluation against the probe."""

    user: Hashable
    probe_item_count: int
    hits_at_l: int
    relative_ranks: tuple


@dataclass(frozen=True)
class MetricsReport:
    """Aggregated metrics of one method on one probe split."""

    label: str
    params: dict
    top_length: int
    recall: float
    ranking_score: float
    avg_top_degree: float
    n_users: int
    n_entries: int
    cold_fraction: float
    probe: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "params": dict(self.params),
            "top_length": self.top_length,
            "recall": self.recall,
            "ranking_score": self.ranking_score,
            "avg_top_degree": self.avg_top_degree,
            "n_users": self.n_users,
            "n_entries": self.n_entries,
            "cold_fraction": self.cold_fraction,
            "probe": dict(self.probe),
        }


def _probe_pairs(probe) -> list[tuple]:
    if isinstance(probe, ProbeSplit):
        return list(zip(probe.probe_users, probe.probe_items))
    return [(e.user, e.item) for e in probe]


def _params_of(recommender) -> dict:
    get = getattr(recommender, "get_params", None)
    if get is None:
        return {}
    return {
        key: value if isinstance(value, (int, float, str, bool, type(None)))
        else repr(value)
        for key, value in sorted(get(deep=False).items())
    }


def _group_by_user(pairs: list[tuple]) -> dict:
    grouped: dict = {}
    for user, item in pairs:
        grouped.setdefault(user, []).append(item)
    return grouped


def recall_at_l(lists: Mapping[Hashable, RecommendationList], probe,
                length: int) -> float:
    """Mean per-user fraction of probe items found in the top ``length``.

    Users with no entry in ``lists`` contribute zero hits (their probe items
    cannot occur in an absent list). Raises on an empty probe.
    """
    if length < 1:
        raise ValueError("length must be at least 1")
    grouped = _group_by_user(_probe_pairs(probe))
    if not grouped:
        raise UndefinedMetricError("recall is undefined on an empty probe")
    per_user = []
    for user, items in grouped.items():
        rec = lists.get(user)
        top = set(rec.items[:length]) if rec is not None else set()
        hits = sum(1 for item in items if item in top)
        per_user.append(hits / len(items))
    return float(np.mean(per_user))


def ranking_score(rankings: Mapping[Hashable, Sequence], probe,
                  snapshot: Snapshot, total_items: int | None = None,
                  drop_cold: bool = False) -> float:
    """Mean relative rank of probe items among each user's uncollected items.

    ``rankings`` maps each user to the full ordering of their uncollected
    items (best first). An item absent from its user's ranking takes the
    worst value 1.0; with ``drop_cold`` items unknown to the snapshot are
    dropped instead. ``total_items`` overrides the denominator's item count
    (defaults to the snapshot's).
    """
    pairs = _probe_pairs(probe)
    if not pairs:
        raise UndefinedMetricError("ranking score is undefined on an empty probe")
    total = snapshot.n_items if total_items is None else total_items
    if total < snapshot.n_items:
        raise ValueError("total_items cannot be below the snapshot's item count")
    positions: dict = {}
    entries = []
    for user, item in pairs:
        if drop_cold and snapshot.item_index(item) < 0:
            continue
        if user not in positions:
            ranking = rankings.get(user, ())
            positions[user] = {it: pos for pos, it in enumerate(ranking, start=1)}
        pos = positions[user].get(item)
        if pos is None:
            entries.append(1.0)
            continue
        denominator = max(total - snapshot.user_degree(user), 1)
        entries.append(pos / denominator)
    if not entries:
        raise UndefinedMetricError("no probe entries left after dropping cold items")
    return float(np.mean(entries))


def avg_degree_top_l(lists: Iterable[RecommendationList], snapshot: Snapshot,
                     length: int) -> float:
    """Mean over users of the mean training degree of their top items."""
    if length < 1:
        raise ValueError("length must be at least 1")
    per_user = []
    for rec in lists:
        top = rec.items[:length]
        if not top:
            continue
        per_user.append(
            float(np.mean([snapshot.item_degree(item) for item in top]))
        )
    return float(np.mean(per_user)) if per_user else 0.0


def evaluate_split(recommender, split: ProbeSplit, top_length: int = 50,
                   label: str | None = None, include_unknown_users: bool = True,
                   drop_cold: bool = False, total_items: int | None = None,
                   ) -> tuple[MetricsReport, list[UserOutcome]]:
    """Score every probe user with ``recommender`` and aggregate the metrics.

    The recommender must already be fitted to ``split.training``. This is the
    vectorized equivalent of building per-user lists and feeding them through
    :func:`recall_at_l` / :func:`ranking_score` / :func:`avg_degree_top_l`.
    """
    snap = split.training
    if split.n_probe_events == 0:
        raise UndefinedMetricError("cannot evaluate on an empty probe")
    total = snap.n_items if total_items is None else total_items
    if total < snap.n_items:
        raise ValueError("total_items cannot be below the snapshot's item count")

    users = [u for u in np.unique(split.probe_users)]
    if not include_unknown_users:
        users = [u for u in users if snap.user_index(u) >= 0]
    grouped = _group_by_user(list(zip(split.probe_users, split.probe_items)))

    kept: list = []
    kept_items: list[np.ndarray] = []
    for user in users:
        items = np.asarray(grouped[user])
        cols = map_labels(snap.item_labels, items)
        if drop_cold:
            items, cols = items[cols >= 0], cols[cols >= 0]
        if len(items) == 0:
            continue
        kept.append(user)
        kept_items.append(cols)
    if not kept:
        raise UndefinedMetricError("no scoreable probe entries in this split")

    matrix = recommender.scores_matrix(kept)
    outcomes: list[UserOutcome] = []
    recalls = []
    all_ranks: list[float] = []
    top_degrees = []
    sentinel = snap.n_items + 1
    for row, (user, cols) in enumerate(zip(kept, kept_items)):
        values = matrix[row]
        order = full_ranking_indices(values, snap, user)
        position = np.full(snap.n_items, sentinel, dtype=np.int64)
        position[order] = np.arange(1, len(order) + 1)
        denominator = max(total - snap.user_degree(user), 1)

        hits = 0
        ranks = []
        for col in cols:
            if col < 0:
                ranks.append(1.0)
                continue
            rank = int(position[col])
            if rank <= top_length:
                hits += 1
            ranks.append(rank / denominator)
        top = order[:top_length]
        if len(top):
            top_degrees.append(float(np.mean(snap.item_degrees[top])))

        outcomes.append(UserOutcome(user=user, probe_item_count=len(cols),
                                    hits_at_l=hits, relative_ranks=tuple(ranks)))
        recalls.append(hits / len(cols))
        all_ranks.extend(ranks)

    report = MetricsReport(
        label=label if label is not None else type(recommender).__name__,
        params=_params_of(recommender),
        top_length=top_length,
        recall=float(np.mean(recalls)),
        ranking_score=float(np.mean(all_ranks)),
        avg_top_degree=float(np.mean(top_degrees)) if top_degrees else 0.0,
        n_users=len(kept),
        n_entries=len(all_ranks),
        cold_fraction=split.cold_fraction,
        probe=split.descriptor(),
    )
    return report, outcomes
