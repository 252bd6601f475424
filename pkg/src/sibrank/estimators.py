"""Neighbour-based collaborative ranking estimators with a scikit-learn interface.

Both estimators share one pipeline: user similarities, top-``K`` neighbours,
similarity-weighted preference matrix over the candidate items, exponential
ranking. They differ only in the similarity:

* :class:`SibRank` uses signed personalized PageRank on the preference network.
* :class:`EigenRank` uses Kendall correlation over common comparisons.

>>> import numpy as np
>>> X = np.array([[1, 10, 5], [1, 11, 3], [2, 10, 4], [2, 11, 2], [2, 12, 5]])
>>> SibRank(n_neighbors=5).fit(X).recommend(1, [10, 11, 12], n=2)
[12, 10]
"""

from __future__ import annotations

from typing import Iterable

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from sibrank.dataset import preference_arrays
from sibrank.inference import (
    DENOMINATORS,
    ItemRanking,
    Neighborhood,
    estimate_preferences,
    exponential_rank,
    select_neighbors,
    top_n,
)
from sibrank.kendall import kendall_similarity_matrix, profiles_from_ratings
from sibrank.metrics import EvaluationContext, macro_average, ndcg_at
from sibrank.sibrenet import build_sibrenet
from sibrank.srank import (
    DEFAULT_MAX_ITER,
    DEFAULT_TOL,
    build_transition,
    compute_srank_block,
    user_similarity_matrix,
)
from sibrank.validation import check_pairs, check_ratings

SOLVERS = ("exact", "power")


class NeighborRanker(BaseEstimator):
    """Shared fit/rank machinery; subclasses provide ``_fit_similarity``."""

    def __init__(self, n_neighbors=100, item_damping=0.85, denominator="judged"):
        self.n_neighbors = n_neighbors
        self.item_damping = item_damping
        self.denominator = denominator

    def _fit_similarity(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def fit(self, X, y=None):
        """Learn user similarities from ``(user, item, rating)`` rows."""
        if self.denominator not in DENOMINATORS:
            raise ValueError(f"denominator must be one of {DENOMINATORS}, got {self.denominator!r}")
        if not 0 < self.item_damping < 1:
            raise ValueError("item_damping must lie in (0, 1)")
        if int(self.n_neighbors) < 1:
            raise ValueError("n_neighbors must be >= 1")
        X = check_ratings(X)
        self.user_ids_ = np.unique(X[:, 0])
        self.profiles_ = profiles_from_ratings(X, self.user_ids_.tolist())
        idx = np.searchsorted(self.user_ids_, X[:, 0])
        means = np.bincount(idx, weights=X[:, 2]) / np.bincount(idx)
        self.user_means_ = dict(zip(self.user_ids_.tolist(), means.tolist()))
        self.similarity_ = self._fit_similarity(X)
        return self

    def _row(self, user: int) -> int:
        check_is_fitted(self, "similarity_")
        pos = int(np.searchsorted(self.user_ids_, user))
        if pos >= len(self.user_ids_) or self.user_ids_[pos] != user:
            raise KeyError(f"user {user} was not seen during fit")
        return pos

    def similarities(self, user: int) -> list[tuple[int, float]]:
        """``(other user, similarity)`` for every other fitted user."""
        pos = self._row(user)
        row = self.similarity_[pos]
        return [(int(v), float(s)) for v, s in zip(self.user_ids_, row) if v != user]

    def neighbors(self, user: int, K: int | None = None) -> Neighborhood:
        return select_neighbors(self.similarities(user), K or self.n_neighbors, target=user)

    def rank(self, user: int, candidates: Iterable[int]) -> ItemRanking:
        psi = estimate_preferences(user, self.neighbors(user), self.profiles_, candidates,
                                   self.denominator)
        return exponential_rank(psi, alpha=self.item_damping)

    def recommend(self, user: int, candidates: Iterable[int], n: int = 10) -> list[int]:
        return top_n(self.rank(user, candidates), n)

    def predict(self, X) -> np.ndarray:
        """Ranking score of each ``(user, item)`` row.

        The items given for a user form that user's candidate set, so scores
        are comparable only within a user.
        """
        X = check_pairs(X)
        out = np.empty(len(X))
        for user in np.unique(X[:, 0]):
            rows = np.flatnonzero(X[:, 0] == user)
            ranking = self.rank(int(user), X[rows, 1])
            out[rows] = ranking.scores[np.searchsorted(ranking.candidates, X[rows, 1])]
        return out

    def score(self, X, y=None, n: int = 10) -> float:
        """Mean NDCG@``n`` over users in held-out ``(user, item, rating)`` rows.

        Users with fewer than ``n`` held-out items are skipped.
        """
        X = check_ratings(X)
        values = []
        for user in np.unique(X[:, 0]):
            rows = X[X[:, 0] == user]
            if len(rows) < n:
                continue
            ctx = EvaluationContext(int(user), dict(zip(rows[:, 1].tolist(), rows[:, 2].tolist())),
                                    self.user_means_[int(user)])
            values.append(ndcg_at(self.recommend(int(user), rows[:, 1], n), ctx, n))
        return macro_average(values)


class SibRank(NeighborRanker):
    """Neighbour ranking with signed personalized PageRank similarity.

    ``solver="exact"`` solves the user block of the fixed point directly;
    ``solver="power"`` runs the signed power iteration on the whole network
    (slower, reports per-user iteration counts in ``iterations_``).
    """

    def __init__(self, n_neighbors=100, alpha=0.85, item_damping=0.85, denominator="judged",
                 solver="exact", tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
        super().__init__(n_neighbors=n_neighbors, item_damping=item_damping,
                         denominator=denominator)
        self.alpha = alpha
        self.solver = solver
        self.tol = tol
        self.max_iter = max_iter

    def _fit_similarity(self, X: np.ndarray) -> np.ndarray:
        if self.solver not in SOLVERS:
            raise ValueError(f"solver must be one of {SOLVERS}, got {self.solver!r}")
        self.graph_ = build_sibrenet(preference_arrays(X), users=self.user_ids_.tolist())
        if self.solver == "exact":
            return user_similarity_matrix(self.graph_, self.alpha)
        m = build_transition(self.graph_)
        nu = self.graph_.n_users
        S = np.empty((nu, nu))
        self.iterations_ = np.empty(nu, dtype=np.int64)
        for start in range(0, nu, 64):
            targets = np.arange(start, min(start + 64, nu))
            plus, minus, its = compute_srank_block(m, targets, self.alpha, self.tol, self.max_iter)
            plus, minus = plus[:nu], minus[:nu]
            mass = plus + minus
            S[targets] = np.divide(plus - minus, mass, out=np.zeros_like(mass), where=mass > 0).T
            self.iterations_[targets] = its
        return S


class EigenRank(NeighborRanker):
    """Neighbour ranking with Kendall correlation similarity."""

    def _fit_similarity(self, X: np.ndarray) -> np.ndarray:
        profiles = [self.profiles_[u] for u in self.user_ids_.tolist()]
        sim, self.common_counts_ = kendall_similarity_matrix(profiles)
        return sim
