"""Network-diffusion recommenders over a training snapshot.

All personalized scorers are two-pass diffusions on the bipartite adjacency
(item side -> user side -> item side), implemented as chained sparse products
that never materialize the dense item-item weight matrix:

* :class:`ProbS` divides resource uniformly among neighbors in both passes
  and conserves total resource per user.
* :class:`HeatS` is the transpose-normalized counterpart (reconstructed from
  the standard hybrid-diffusion literature): each pass averages over the
  receiving node's neighbors, favoring low-degree items.
* :class:`Hybrid` interpolates the two via an exponent ``lam`` on the item
  degrees (lam=1 is ProbS, lam=0 is HeatS, exactly).
* :class:`SimS` weighs the user-side pass by the overlap similarity between
  the target user and each spreader, raised to ``theta``.

Time-aware variants multiply any base score by the item's recent link gain
relative to its total degree: :class:`DegreeIncrease` uses that gain alone
(non-personalized), :class:`TProbS` and :class:`THybrid` apply it on top of
ProbS and the hybrid, and :class:`TimeWeighted` wraps an arbitrary base.

Estimators follow the scikit-learn protocol: parameters in ``__init__``,
state learned by ``fit`` stored in trailing-underscore attributes,
``get_params``/``clone`` compatible.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Hashable, Iterable, Sequence

import numpy as np
from sklearn.base import BaseEstimator, clone
from sklearn.exceptions import NotFittedError

from .errors import ConfigurationError
from .eventlog import EventLog, Snapshot, map_labels

DEFAULT_EPSILON = 1e-9

# rows of the dense per-user score block processed at a time
_SCORE_CHUNK = 64


@dataclass(frozen=True)
class ScoreVector:
    """Per-user recommendation scores over the training snapshot's items.

    ``values`` is aligned to the snapshot's ascending-sorted item labels.
    Items absent from the snapshot have no entry (implicit score 0).
    ``user`` is None for non-personalized scorers.
    """

    user: Hashable | None
    items: np.ndarray
    values: np.ndarray

    def __len__(self) -> int:
        return len(self.values)

    def value(self, item) -> float:
        idx = map_labels(self.items, np.asarray([item]))[0]
        return float(self.values[idx]) if idx >= 0 else 0.0

    def as_dict(self) -> dict:
        return {item: float(v)
                for item, v in zip(self.items.tolist(), self.values)}


@dataclass(frozen=True)
class RecommendationList:
    """Top items for one user, best first, collected items excluded.

    Ordering is total and deterministic: score descending, then item
    identifier ascending.
    """

    user: Hashable | None
    items: tuple
    scores: tuple
    length: int


def _ranking_order(values: np.ndarray, candidates: np.ndarray) -> np.ndarray:
    # candidates are ascending item columns; stable sort on negated scores
    # gives the (score desc, identifier asc) total order
    return candidates[np.argsort(-values[candidates], kind="stable")]


def rank_items(scores: ScoreVector, snapshot: Snapshot, length: int,
               user: Hashable | None = None) -> RecommendationList:
    """Top ``length`` uncollected items for a user, deterministic order.

    ``user`` defaults to ``scores.user``; pass it explicitly when ranking a
    non-personalized score vector. The user's training items are excluded.
    """
    if length < 1:
        raise ValueError("length must be at least 1")
    if user is None:
        user = scores.user
    order = full_ranking_indices(scores.values, snapshot, user)
    top = order[:length]
    return RecommendationList(
        user=user,
        items=tuple(snapshot.item_labels[top]),
        scores=tuple(float(v) for v in scores.values[top]),
        length=length,
    )


def full_ranking_indices(values: np.ndarray, snapshot: Snapshot,
                         user: Hashable | None) -> np.ndarray:
    """All uncollected item columns for ``user``, in recommendation order."""
    collected = snapshot.collected_indices(user) if user is not None else \
        np.empty(0, dtype=np.int64)
    candidates = np.setdiff1d(np.arange(snapshot.n_items, dtype=np.int64),
                              collected, assume_unique=True)
    return _ranking_order(values, candidates)


def full_ranking(scores: ScoreVector, snapshot: Snapshot,
                 user: Hashable | None = None) -> np.ndarray:
    """Labels of all uncollected items in recommendation order."""
    if user is None:
        user = scores.user
    return snapshot.item_labels[full_ranking_indices(scores.values, snapshot, user)]


class SnapshotRecommender(BaseEstimator):
    """Base class: fit to a :class:`Snapshot`, score any user against it."""

    def fit(self, snapshot: Snapshot, y=None):
        if not isinstance(snapshot, Snapshot):
            raise TypeError(
                f"expected a Snapshot, got {type(snapshot).__name__}; "
                "build one with EventLog.snapshot(t)"
            )
        self._validate_params_against(snapshot)
        self.snapshot_ = snapshot
        self._prepare()
        return self

    # subclasses override
    def _validate_params_against(self, snapshot: Snapshot) -> None:
        pass

    def _prepare(self) -> None:
        pass

    def _score_block(self, block: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _check_fitted(self) -> None:
        if not hasattr(self, "snapshot_"):
            raise NotFittedError(
                f"{type(self).__name__} is not fitted; call fit(snapshot) first"
            )

    def scores_matrix(self, users: Sequence) -> np.ndarray:
        """Score matrix of shape (len(users), n_items).

        Users absent from the training snapshot get all-zero rows.
        """
        self._check_fitted()
        snap = self.snapshot_
        users = np.asarray(users)
        rows = map_labels(snap.user_labels, users)
        out = np.zeros((len(users), snap.n_items), dtype=np.float64)
        known = np.flatnonzero(rows >= 0)
        for start in range(0, len(known), _SCORE_CHUNK):
            sel = known[start:start + _SCORE_CHUNK]
            block = snap.user_item_matrix[rows[sel]].toarray()
            out[sel] = self._score_block(block)
        return out

    def scores(self, user) -> ScoreVector:
        self._check_fitted()
        values = self.scores_matrix([user])[0]
        return ScoreVector(user=user, items=self.snapshot_.item_labels,
                           values=values)

    def recommend(self, user, length: int = 50) -> RecommendationList:
        return rank_items(self.scores(user), self.snapshot_, length)


class ProbS(SnapshotRecommender):
    """Mass-conserving two-pass diffusion; per-user scores sum to the
    user's degree."""

    def _prepare(self):
        snap = self.snapshot_
        self._inv_ki = 1.0 / np.maximum(snap.item_degrees, 1)
        self._inv_ku = 1.0 / np.maximum(snap.user_degrees, 1)

    def _score_block(self, block):
        snap = self.snapshot_
        spread = snap.user_item_matrix @ (block * self._inv_ki).T
        spread *= self._inv_ku[:, None]
        return (snap.item_user_matrix @ spread).T


class HeatS(SnapshotRecommender):
    """Degree-averaging two-pass diffusion; favors low-degree items.

    Reconstructed transpose-normalized form: both passes divide by the
    receiving node's degree, so scores lie in [0, 1].
    """

    def _prepare(self):
        snap = self.snapshot_
        self._inv_ki = 1.0 / np.maximum(snap.item_degrees, 1)
        self._inv_ku = 1.0 / np.maximum(snap.user_degrees, 1)

    def _score_block(self, block):
        snap = self.snapshot_
        spread = snap.user_item_matrix @ block.T
        spread *= self._inv_ku[:, None]
        return (snap.item_user_matrix @ spread).T * self._inv_ki


class Hybrid(SnapshotRecommender):
    """Degree-exponent interpolation between ProbS (lam=1) and HeatS (lam=0)."""

    def __init__(self, lam: float = 0.5):
        self.lam = lam

    def _validate_params_against(self, snapshot):
        if not 0.0 <= self.lam <= 1.0:
            raise ConfigurationError(f"lam must be in [0, 1], got {self.lam}")

    def _prepare(self):
        snap = self.snapshot_
        ki = np.maximum(snap.item_degrees, 1).astype(np.float64)
        self._ki_in = ki ** (-self.lam)
        self._ki_out = ki ** (self.lam - 1.0)
        self._inv_ku = 1.0 / np.maximum(snap.user_degrees, 1)

    def _score_block(self, block):
        snap = self.snapshot_
        spread = snap.user_item_matrix @ (block * self._ki_in).T
        spread *= self._inv_ku[:, None]
        return (snap.item_user_matrix @ spread).T * self._ki_out


class SimS(SnapshotRecommender):
    """Similarity-preferential diffusion.

    The user-side pass is weighted by the overlap similarity between the
    target user and each spreading user (common items, each discounted by
    its degree), raised to ``theta``; ``lam`` interpolates the degree
    normalization exactly as in :class:`Hybrid`. With theta=1 and lam=1 this
    is identically ProbS. Similarity rows are computed on demand per scored
    user; no user-user matrix is ever built.
    """

    def __init__(self, theta: float = 1.0, lam: float = 1.0):
        self.theta = theta
        self.lam = lam

    def _validate_params_against(self, snapshot):
        if self.theta <= 0:
            raise ConfigurationError(f"theta must be positive, got {self.theta}")
        if not 0.0 <= self.lam <= 1.0:
            raise ConfigurationError(f"lam must be in [0, 1], got {self.lam}")

    def _prepare(self):
        snap = self.snapshot_
        ki = np.maximum(snap.item_degrees, 1).astype(np.float64)
        ku = np.maximum(snap.user_degrees, 1).astype(np.float64)
        self._inv_ki = 1.0 / ki
        self._ki_out = ki ** (self.lam - 1.0)
        self._ku_in = ku ** (-self.lam)

    def _score_block(self, block):
        snap = self.snapshot_
        sim = (snap.user_item_matrix @ (block * self._inv_ki).T).T
        if self.theta != 1.0:
            sim **= self.theta
        sim *= self._ku_in
        return (snap.item_user_matrix @ sim.T).T * self._ki_out


def _temporal_weights(snapshot: Snapshot, tau: int, epsilon: float):
    """(regularized gain, gain / degree) item vectors for time weighting.

    The regularized gain adds ``epsilon * degree`` to the windowed link
    count, small enough that items with different raw gains never swap
    order; dividing by the degree cancels the intrinsic popularity
    proportionality of diffusion scores.
    """
    if tau <= 0:
        raise ConfigurationError(f"tau must be positive, got {tau}")
    if epsilon <= 0:
        raise ConfigurationError(f"epsilon must be positive, got {epsilon}")
    degrees = snapshot.item_degrees.astype(np.float64)
    if snapshot.n_items and epsilon >= 1.0 / degrees.max():
        raise ConfigurationError(
            f"epsilon={epsilon} is not below 1/max_item_degree="
            f"{1.0 / degrees.max():.3e}; ordering by raw gain would not be preserved"
        )
    gain = snapshot.recent_degree_increase(tau).astype(np.float64)
    regularized = gain + epsilon * degrees
    with np.errstate(divide="ignore", invalid="ignore"):
        multiplier = np.where(degrees > 0, regularized / np.maximum(degrees, 1), 0.0)
    return regularized, multiplier


class DegreeIncrease(SnapshotRecommender):
    """Recent-gain popularity scorer (identical for every user).

    Scores each item by its link count in the window [cut - tau, cut),
    tie-broken among equal gains by total degree via the epsilon term.
    """

    def __init__(self, tau: int = 1, epsilon: float = DEFAULT_EPSILON):
        self.tau = tau
        self.epsilon = epsilon

    def _validate_params_against(self, snapshot):
        # raises on bad tau/epsilon, including the order-preservation bound
        _temporal_weights(snapshot, self.tau, self.epsilon)

    def _prepare(self):
        self.item_scores_, _ = _temporal_weights(
            self.snapshot_, self.tau, self.epsilon
        )

    def scores_matrix(self, users):
        self._check_fitted()
        return np.repeat(self.item_scores_[None, :], len(users), axis=0)

    def scores(self, user=None) -> ScoreVector:
        self._check_fitted()
        return ScoreVector(user=user, items=self.snapshot_.item_labels,
                           values=self.item_scores_.copy())


class _TimeWeightedBase(SnapshotRecommender):
    """Shared plumbing: score with a base diffusion, multiply by gain/degree."""

    tau: int
    epsilon: float

    def _base_estimator(self) -> SnapshotRecommender:
        raise NotImplementedError

    def _validate_params_against(self, snapshot):
        _temporal_weights(snapshot, self.tau, self.epsilon)

    def _prepare(self):
        self.base_ = self._base_estimator().fit(self.snapshot_)
        _, self.multiplier_ = _temporal_weights(
            self.snapshot_, self.tau, self.epsilon
        )

    def _score_block(self, block):
        return self.base_._score_block(block) * self.multiplier_


class TProbS(_TimeWeightedBase):
    """ProbS rescaled by each item's recent gain over its degree."""

    def __init__(self, tau: int = 1, epsilon: float = DEFAULT_EPSILON):
        self.tau = tau
        self.epsilon = epsilon

    def _base_estimator(self):
        return ProbS()


class THybrid(_TimeWeightedBase):
    """ProbS-HeatS hybrid rescaled by each item's recent gain over its degree."""

    def __init__(self, lam: float = 0.5, tau: int = 1,
                 epsilon: float = DEFAULT_EPSILON):
        self.lam = lam
        self.tau = tau
        self.epsilon = epsilon

    def _base_estimator(self):
        return Hybrid(lam=self.lam)


class TimeWeighted(_TimeWeightedBase):
    """Generic time weighting of any snapshot recommender (e.g. SimS)."""

    def __init__(self, base: SnapshotRecommender, tau: int = 1,
                 epsilon: float = DEFAULT_EPSILON):
        self.base = base
        self.tau = tau
        self.epsilon = epsilon

    def _base_estimator(self):
        return clone(self.base)


# -- functional surfaces -----------------------------------------------------

def probs_scores(snapshot: Snapshot, user) -> ScoreVector:
    """Two-pass conserving diffusion scores for one user."""
    return ProbS().fit(snapshot).scores(user)


def heats_scores(snapshot: Snapshot, user) -> ScoreVector:
    """Two-pass averaging diffusion scores for one user."""
    return HeatS().fit(snapshot).scores(user)


def hybrid_scores(snapshot: Snapshot, user, lam: float) -> ScoreVector:
    return Hybrid(lam=lam).fit(snapshot).scores(user)


def sims_scores(snapshot: Snapshot, user, theta: float, lam: float) -> ScoreVector:
    return SimS(theta=theta, lam=lam).fit(snapshot).scores(user)


def di_scores(log: EventLog, t: int, tau: int,
              epsilon: float = DEFAULT_EPSILON) -> ScoreVector:
    """Recent-gain scores over the items of the snapshot at cut time ``t``.

    Identical for all users (``user`` field is None).
    """
    return DegreeIncrease(tau=tau, epsilon=epsilon).fit(log.snapshot(t)).scores()


def temporal_reweight(base: ScoreVector, snapshot: Snapshot, tau: int,
                      epsilon: float = DEFAULT_EPSILON) -> ScoreVector:
    """Multiply base scores by each item's regularized gain over its degree.

    ``base`` must have been computed on ``snapshot``; items absent from it
    stay absent.
    """
    if len(base.values) != snapshot.n_items:
        raise ValueError("base score vector does not match the snapshot's items")
    _, multiplier = _temporal_weights(snapshot, tau, epsilon)
    return ScoreVector(user=base.user, items=base.items,
                       values=base.values * multiplier)


def write_recommendations(lists: Iterable[RecommendationList],
                          path: str | Path, delimiter: str = ",") -> None:
    """Export lists as ``user_id, rank, item_id, score`` rows."""
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, delimiter=delimiter, lineterminator="\n")
        writer.writerow(["user_id", "rank", "item_id", "score"])
        for rec in lists:
            for position, (item, score) in enumerate(zip(rec.items, rec.scores),
                                                     start=1):
                writer.writerow([rec.user, position, item, repr(float(score))])
