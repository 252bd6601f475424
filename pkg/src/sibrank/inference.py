"""Neighbour selection, preference-matrix estimation and exponential ranking."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from sibrank.kendall import UserPreferenceProfile
from sibrank.srank import ConvergenceError

DENOMINATORS = ("judged", "all")
TIE_DECIMALS = 12


@dataclass(frozen=True)
class Neighborhood:
    target: int
    members: tuple  # ((user, similarity), ...), best first

    @property
    def users(self) -> list[int]:
        return [u for u, _ in self.members]

    def __len__(self) -> int:
        return len(self.members)


def select_neighbors(
    similarities: Iterable[tuple[int, float]], K: int, target: int | None = None
) -> Neighborhood:
    """Top-``K`` users by similarity, ties broken by ascending user id."""
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K}")
    ranked = sorted(((u, float(s)) for u, s in similarities if u != target),
                    key=lambda us: (-us[1], us[0]))
    return Neighborhood(target=target, members=tuple(ranked[:K]))


@dataclass(frozen=True)
class EstimatedPreferenceMatrix:
    """Dense antisymmetric estimate over ``candidates`` (sorted item ids).

    ``values[a, b] > 0`` means item ``candidates[b]`` is estimated to be
    preferred over ``candidates[a]``.
    """

    target: int
    candidates: np.ndarray
    values: np.ndarray

    def __getitem__(self, pair: tuple[int, int]) -> float:
        a, b = (int(np.searchsorted(self.candidates, x)) for x in pair)
        for x, pos in zip(pair, (a, b)):
            if pos >= len(self.candidates) or self.candidates[pos] != x:
                raise KeyError(f"item {x} is not a candidate")
        return float(self.values[a, b])


class _Accumulator:
    """Running numerator/denominator of the similarity-weighted verdict mean."""

    def __init__(self, candidates: np.ndarray, denominator: str):
        if denominator not in DENOMINATORS:
            raise ValueError(f"denominator must be one of {DENOMINATORS}")
        self.candidates = candidates
        self.denominator = denominator
        c = len(candidates)
        self.num = np.zeros((c, c))
        self.den = np.zeros((c, c))
        self.total_weight = 0.0

    def _positions(self, items: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        pos = np.searchsorted(self.candidates, items)
        pos = np.minimum(pos, len(self.candidates) - 1)
        return pos, self.candidates[pos] == items

    def add(self, profile: UserPreferenceProfile, similarity: float) -> None:
        self.total_weight += abs(similarity)
        low, high, sign = profile.arrays
        if not len(low):
            return
        lo, ok_lo = self._positions(low)
        hi, ok_hi = self._positions(high)
        keep = ok_lo & ok_hi
        lo, hi, sign = lo[keep], hi[keep], sign[keep]
        contrib = similarity * sign
        np.add.at(self.num, (lo, hi), contrib)
        np.add.at(self.num, (hi, lo), -contrib)
        np.add.at(self.den, (lo, hi), abs(similarity))
        np.add.at(self.den, (hi, lo), abs(similarity))

    def matrix(self, target: int) -> EstimatedPreferenceMatrix:
        if self.denominator == "judged":
            den = self.den
        else:
            den = np.full_like(self.den, self.total_weight)
        values = np.divide(self.num, den, out=np.zeros_like(self.num), where=den > 0)
        return EstimatedPreferenceMatrix(target, self.candidates, values)


def _sorted_candidates(candidates: Iterable[int]) -> np.ndarray:
    cand = np.unique(np.fromiter(candidates, dtype=np.int64))
    if not len(cand):
        raise ValueError("candidate set is empty")
    return cand


def estimate_preferences(
    target: int,
    nbhd: Neighborhood,
    profiles: Mapping[int, UserPreferenceProfile],
    candidates: Iterable[int],
    denominator: str = "judged",
) -> EstimatedPreferenceMatrix:
    """Similarity-weighted mean of the neighbours' verdicts on candidate pairs.

    A neighbour's verdict on ``(i, j)`` is +1 if it prefers ``j`` over ``i``,
    -1 for the reverse and absent otherwise. With ``denominator="judged"``
    the weights are normalised over neighbours that judged the pair; with
    ``"all"`` over the whole neighbourhood.
    """
    acc = _Accumulator(_sorted_candidates(candidates), denominator)
    for user, sim in nbhd.members:
        acc.add(profiles[user], sim)
    return acc.matrix(target)


def estimate_preferences_prefixes(
    target: int,
    nbhd: Neighborhood,
    profiles: Mapping[int, UserPreferenceProfile],
    candidates: Iterable[int],
    sizes: Sequence[int],
    denominator: str = "judged",
) -> Iterator[tuple[int, EstimatedPreferenceMatrix]]:
    """:func:`estimate_preferences` for each leading ``K`` in ``sizes`` (ascending), sharing work."""
    acc = _Accumulator(_sorted_candidates(candidates), denominator)
    members = nbhd.members
    done = 0
    for K in sorted(sizes):
        for user, sim in members[done:K]:
            acc.add(profiles[user], sim)
        done = max(done, min(K, len(members)))
        yield K, acc.matrix(target)


@dataclass(frozen=True)
class ItemRanking:
    target: int
    candidates: np.ndarray
    scores: np.ndarray
    iterations: int = 0

    @cached_property
    def order(self) -> np.ndarray:
        """Candidates by descending score; scores equal to 12 decimals tie on item id."""
        return self.candidates[np.lexsort((self.candidates, -np.round(self.scores, TIE_DECIMALS)))]


def exponential_rank(
    psi: EstimatedPreferenceMatrix,
    alpha: float = 0.85,
    tol: float = 1e-12,
    max_iter: int = 1000,
) -> ItemRanking:
    """Stationary distribution of the chain with row-normalised ``exp(psi)`` transitions.

    From item ``i`` the walker moves to ``j != i`` with probability
    proportional to ``exp(psi[i, j])``, so mass flows toward preferred items;
    with probability ``1 - alpha`` it jumps to a uniformly random candidate.
    """
    c = len(psi.candidates)
    if c == 0:
        raise ValueError("no candidates to rank")
    if c == 1:
        return ItemRanking(psi.target, psi.candidates, np.ones(1))
    weights = np.exp(psi.values)
    np.fill_diagonal(weights, 0.0)
    phi = weights / weights.sum(axis=1, keepdims=True)
    p = np.full(c, 1.0 / c)
    for it in range(1, max_iter + 1):
        new = alpha * (phi.T @ p) + (1 - alpha) / c
        residual = np.abs(new - p).sum()
        p = new
        if residual < tol:
            return ItemRanking(psi.target, psi.candidates, p, it)
    raise ConvergenceError(
        f"exponential ranking for user {psi.target} did not converge (residual {residual:.3e})",
        float(residual), max_iter)


def top_n(r: ItemRanking, N: int) -> list[int]:
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    return [int(x) for x in r.order[:N]]
