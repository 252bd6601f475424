"""Kendall correlation between users over their common pairwise comparisons."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from sibrank.dataset import PreferenceTriple, preference_arrays
from sibrank.sibrenet import PreferenceKey


@dataclass(frozen=True)
class UserPreferenceProfile:
    """One user's verdicts keyed by canonical ``(low, high)`` item pair.

    Sign +1 means the user prefers ``high`` over ``low``, -1 the reverse,
    matching the edge signs of the preference network.
    """

    user: int
    verdicts: dict = field(default_factory=dict)

    @classmethod
    def from_triples(cls, user: int, triples: Iterable[PreferenceTriple]) -> "UserPreferenceProfile":
        verdicts = {}
        for t in triples:
            if t.user != user:
                raise ValueError(f"triple for user {t.user} passed to profile of {user}")
            key = PreferenceKey(min(t.preferred, t.other), max(t.preferred, t.other))
            sign = 1 if t.preferred == key.high else -1
            if verdicts.get(key, sign) != sign:
                raise ValueError(f"user {user} has contradicting verdicts on {key}")
            verdicts[key] = sign
        return cls(user, verdicts)

    def __len__(self) -> int:
        return len(self.verdicts)

    @cached_property
    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Parallel ``low, high, sign`` arrays in key order."""
        if not self.verdicts:
            e = np.empty(0, dtype=np.int64)
            return e, e.copy(), e.copy()
        keys = sorted(self.verdicts)
        arr = np.array([(k[0], k[1], self.verdicts[k]) for k in keys], dtype=np.int64)
        return arr[:, 0], arr[:, 1], arr[:, 2]


def profiles_from_ratings(trip: np.ndarray, users: Iterable[int] = ()) -> dict[int, UserPreferenceProfile]:
    """Profiles for every user in ``(n, 3)`` ``user, item, rating`` rows (plus ``users``)."""
    u, pref, other = preference_arrays(trip)
    low, high = np.minimum(pref, other), np.maximum(pref, other)
    sign = np.where(pref == high, 1, -1)
    out: dict[int, dict] = {int(x): {} for x in users}
    out.update((int(x), {}) for x in np.unique(trip[:, 0]) if int(x) not in out)
    for a, lo, hi, s in zip(u.tolist(), low.tolist(), high.tolist(), sign.tolist()):
        out.setdefault(a, {})[PreferenceKey(lo, hi)] = s
    return {k: UserPreferenceProfile(k, v) for k, v in sorted(out.items())}


def kendall_similarity(a: UserPreferenceProfile, b: UserPreferenceProfile) -> float:
    """``(Nc - Nd) / (Nc + Nd)`` over keys judged by both; 0 without overlap."""
    small, large = (a.verdicts, b.verdicts) if len(a) <= len(b) else (b.verdicts, a.verdicts)
    concordant = discordant = 0
    for key, sign in small.items():
        other = large.get(key)
        if other is None:
            continue
        if other == sign:
            concordant += 1
        else:
            discordant += 1
    total = concordant + discordant
    return (concordant - discordant) / total if total else 0.0


def similarities_to_target(
    target: UserPreferenceProfile, profiles: Sequence[UserPreferenceProfile]
) -> list[tuple[int, float]]:
    """Similarity of ``target`` to every other profile, in input order."""
    return [(p.user, kendall_similarity(target, p)) for p in profiles if p.user != target.user]


def kendall_similarity_matrix(
    profiles: Sequence[UserPreferenceProfile],
) -> tuple[np.ndarray, np.ndarray]:
    """All-pairs Kendall similarity and common-comparison counts.

    Stacks the profiles as rows of a sparse ``users x keys`` sign matrix ``V``;
    then ``V V^T`` counts ``Nc - Nd`` and ``|V| |V|^T`` counts ``Nc + Nd``.
    """
    index: dict = {}
    rows, cols, vals = [], [], []
    for r, p in enumerate(profiles):
        for key, sign in p.verdicts.items():
            rows.append(r)
            cols.append(index.setdefault(key, len(index)))
            vals.append(sign)
    V = sp.csr_matrix((np.asarray(vals, dtype=np.float64), (rows, cols)),
                      shape=(len(profiles), max(len(index), 1)))
    agree = (V @ V.T).toarray()
    common = (abs(V) @ abs(V).T).toarray()
    sim = np.divide(agree, common, out=np.zeros_like(agree), where=common > 0)
    return sim, common.astype(np.int64)
