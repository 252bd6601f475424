"""Top-N accuracy: NDCG, precision and recall against held-out ratings."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np


class MetricError(ValueError):
    pass


@dataclass(frozen=True)
class EvaluationContext:
    """Held-out ratings of one user.

    Items rated strictly above ``relevance_threshold`` (the user's mean
    training rating) count as relevant.
    """

    user: int
    test_ratings: Mapping[int, float]
    relevance_threshold: float

    @property
    def n_relevant(self) -> int:
        return sum(1 for r in self.test_ratings.values() if r > self.relevance_threshold)

    @property
    def has_relevant(self) -> bool:
        return self.n_relevant > 0


def _ratings(recommended: Sequence[int], ctx: EvaluationContext, N: int) -> np.ndarray:
    if N < 1:
        raise MetricError(f"N must be >= 1, got {N}")
    if len(recommended) < N:
        raise MetricError(f"need {N} recommendations, got {len(recommended)}")
    try:
        return np.array([ctx.test_ratings[i] for i in recommended[:N]], dtype=np.float64)
    except KeyError as exc:
        raise MetricError(f"recommended item {exc.args[0]} has no test rating for user {ctx.user}") from None


def _dcg(gains: np.ndarray) -> float:
    return float(np.sum((2.0**gains - 1.0) / np.log2(np.arange(2, len(gains) + 2))))


def ndcg_at(recommended: Sequence[int], ctx: EvaluationContext, N: int) -> float:
    got = _ratings(recommended, ctx, N)
    ideal = np.sort(np.fromiter(ctx.test_ratings.values(), dtype=np.float64))[::-1][:N]
    best = _dcg(ideal)
    return _dcg(got) / best if best > 0 else 1.0


def precision_at(recommended: Sequence[int], ctx: EvaluationContext, N: int) -> float:
    got = _ratings(recommended, ctx, N)
    return float(np.sum(got > ctx.relevance_threshold)) / N


def recall_at(recommended: Sequence[int], ctx: EvaluationContext, N: int) -> float:
    """0 when the user has no relevant test item; check ``ctx.has_relevant`` before averaging."""
    got = _ratings(recommended, ctx, N)
    n_rel = ctx.n_relevant
    return float(np.sum(got > ctx.relevance_threshold)) / n_rel if n_rel else 0.0


def macro_average(values: Iterable[float]) -> float:
    vals = list(values)
    if not vals:
        raise MetricError("cannot average an empty set of per-user values")
    return float(np.mean(vals))
