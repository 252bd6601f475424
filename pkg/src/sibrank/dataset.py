"""Rating data: MovieLens ingestion, pairwise preferences and train/test splits."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Iterable, NamedTuple

import numpy as np

MIN_TEST_ITEMS = 10
VALID_RATINGS = (1, 2, 3, 4, 5)


class DatasetError(ValueError):
    """Raised for unreadable or inconsistent rating data."""


class RatingRecord(NamedTuple):
    user: int
    item: int
    rating: int
    timestamp: int = 0


class PreferenceTriple(NamedTuple):
    """User ``user`` rated ``preferred`` strictly above ``other``."""

    user: int
    preferred: int
    other: int


@dataclass(frozen=True)
class RatingDataset:
    """Columnar rating triples with dense internal indices.

    ``users``/``items`` hold internal ids in ``[0, n_users)``/``[0, n_items)``;
    ``user_ids``/``item_ids`` map them back to external ids (sorted ascending).
    """

    users: np.ndarray
    items: np.ndarray
    ratings: np.ndarray
    timestamps: np.ndarray
    user_ids: np.ndarray
    item_ids: np.ndarray

    @classmethod
    def from_records(cls, records: Iterable[RatingRecord]) -> "RatingDataset":
        rows = [tuple(r) for r in records]
        arr = np.asarray(rows, dtype=np.int64).reshape(-1, 4) if rows else np.empty((0, 4), np.int64)
        user_ids, users = np.unique(arr[:, 0], return_inverse=True)
        item_ids, items = np.unique(arr[:, 1], return_inverse=True)
        keys = users.astype(np.int64) * max(len(item_ids), 1) + items
        uniq, first, counts = np.unique(keys, return_index=True, return_counts=True)
        if len(uniq) != len(keys):
            at = first[np.argmax(counts > 1)]
            raise DatasetError(f"duplicate (user, item) pair ({arr[at, 0]}, {arr[at, 1]})")
        return cls(
            users=users.astype(np.int64),
            items=items.astype(np.int64),
            ratings=arr[:, 2].copy(),
            timestamps=arr[:, 3].copy(),
            user_ids=user_ids,
            item_ids=item_ids,
        )

    def __len__(self) -> int:
        return len(self.ratings)

    @property
    def n_users(self) -> int:
        return len(self.user_ids)

    @property
    def n_items(self) -> int:
        return len(self.item_ids)

    def records(self) -> list[RatingRecord]:
        return [
            RatingRecord(int(self.user_ids[u]), int(self.item_ids[i]), int(r), int(t))
            for u, i, r, t in zip(self.users, self.items, self.ratings, self.timestamps)
        ]

    def triples(self) -> np.ndarray:
        """``(n, 3)`` array of external ``user, item, rating``."""
        return np.column_stack(
            [self.user_ids[self.users], self.item_ids[self.items], self.ratings]
        ).astype(np.int64)

    def by_user(self) -> dict[int, np.ndarray]:
        """External user id -> ``(k, 2)`` array of ``item, rating`` sorted by item."""
        return _group(self.triples())


def load_movielens(path: str | Path) -> RatingDataset:
    """Read a tab-separated MovieLens ``u.data`` file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="ascii")
    except (OSError, UnicodeDecodeError) as exc:
        raise DatasetError(f"cannot read {path}: {exc}") from exc
    records = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        fields = line.split("\t")
        if len(fields) != 4:
            raise DatasetError(f"{path}:{lineno}: expected 4 tab-separated fields, got {len(fields)}")
        try:
            user, item, rating, ts = (int(f) for f in fields)
        except ValueError:
            raise DatasetError(f"{path}:{lineno}: non-integer field in {line!r}") from None
        if rating not in VALID_RATINGS:
            raise DatasetError(f"{path}:{lineno}: rating {rating} outside 1-5")
        records.append(RatingRecord(user, item, rating, ts))
    return RatingDataset.from_records(records)


def derive_preferences(user: int, ratings: Iterable[tuple[int, int]]) -> list[PreferenceTriple]:
    """All strict pairwise preferences implied by one user's ``(item, rating)`` pairs.

    Equal ratings yield nothing. Output is sorted for determinism.
    """
    out = []
    for (a, ra), (b, rb) in combinations(sorted(ratings), 2):
        if ra > rb:
            out.append(PreferenceTriple(user, a, b))
        elif rb > ra:
            out.append(PreferenceTriple(user, b, a))
    return sorted(out)


@dataclass(frozen=True)
class TrainTestSplit:
    """One random profile-size-``T`` split.

    ``train`` and ``test`` are ``(n, 3)`` arrays of external ``user, item, rating``.
    """

    T: int
    index: int
    seed: int
    train: np.ndarray
    test: np.ndarray
    eligible_users: frozenset = field(default_factory=frozenset)

    def train_by_user(self) -> dict[int, np.ndarray]:
        return _group(self.train)

    def test_by_user(self) -> dict[int, np.ndarray]:
        return _group(self.test)


def _group(trip: np.ndarray) -> dict[int, np.ndarray]:
    if len(trip) == 0:
        return {}
    order = np.lexsort((trip[:, 1], trip[:, 0]))
    trip = trip[order]
    bounds = np.flatnonzero(np.diff(trip[:, 0])) + 1
    return {int(c[0, 0]): c[:, 1:] for c in np.split(trip, bounds)}


def user_rng(seed: int, split_index: int, user: int) -> np.random.Generator:
    """Per-user generator keyed on ``(seed, split_index, user)``.

    Keying on the external user id keeps a user's sample independent of the
    order in which users are visited.
    """
    return np.random.default_rng([seed, split_index, user])


def make_splits(dataset: RatingDataset, T: int, n_splits: int, seed: int) -> list[TrainTestSplit]:
    """Sample ``T`` training ratings per eligible user, ``n_splits`` times.

    Users with fewer than ``T + 10`` ratings are dropped for this ``T``.
    """
    if T <= 0:
        raise ValueError(f"profile size T must be positive, got {T}")
    if n_splits < 1:
        raise ValueError(f"n_splits must be >= 1, got {n_splits}")
    if seed < 0:
        raise ValueError("seed must be non-negative")
    per_user = dataset.by_user()
    eligible = sorted(u for u, rows in per_user.items() if len(rows) >= T + MIN_TEST_ITEMS)
    if not eligible:
        raise DatasetError(f"no user has at least {T + MIN_TEST_ITEMS} ratings")
    splits = []
    for s in range(n_splits):
        train_parts, test_parts = [], []
        for u in eligible:
            rows = per_user[u]
            pick = np.zeros(len(rows), dtype=bool)
            pick[user_rng(seed, s, u).choice(len(rows), size=T, replace=False)] = True
            with_user = np.column_stack([np.full(len(rows), u), rows])
            train_parts.append(with_user[pick])
            test_parts.append(with_user[~pick])
        splits.append(
            TrainTestSplit(
                T=T,
                index=s,
                seed=seed,
                train=np.concatenate(train_parts).astype(np.int64),
                test=np.concatenate(test_parts).astype(np.int64),
                eligible_users=frozenset(eligible),
            )
        )
    return splits


SPLIT_HEADER = ["split", "user", "item", "rating", "role"]


def write_splits_csv(splits: list[TrainTestSplit], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SPLIT_HEADER)
        for sp in splits:
            for role, rows in (("train", sp.train), ("test", sp.test)):
                for u, i, r in rows:
                    w.writerow([sp.index, int(u), int(i), int(r), role])


def read_splits_csv(path: str | Path, T: int, seed: int = 0) -> list[TrainTestSplit]:
    """Inverse of :func:`write_splits_csv`; ``T`` and ``seed`` are not stored in the file."""
    parts: dict[int, dict[str, list]] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != SPLIT_HEADER:
            raise DatasetError(f"bad split header {header!r}")
        for lineno, row in enumerate(reader, start=2):
            try:
                s, u, i, r = (int(x) for x in row[:4])
                role = row[4]
            except (ValueError, IndexError):
                raise DatasetError(f"{path}:{lineno}: malformed row {row!r}") from None
            if role not in ("train", "test"):
                raise DatasetError(f"{path}:{lineno}: role must be train or test")
            parts.setdefault(s, {"train": [], "test": []})[role].append((u, i, r))
    out = []
    for s in sorted(parts):
        train = np.asarray(parts[s]["train"], dtype=np.int64).reshape(-1, 3)
        test = np.asarray(parts[s]["test"], dtype=np.int64).reshape(-1, 3)
        out.append(
            TrainTestSplit(T=T, index=s, seed=seed, train=train, test=test,
                           eligible_users=frozenset(int(u) for u in np.unique(train[:, 0])))
        )
    return out


def preference_arrays(trip: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized :func:`derive_preferences` over ``(n, 3)`` ``user, item, rating`` rows.

    Returns parallel ``user, preferred, other`` arrays.
    """
    users, preferred, other = [], [], []
    for u, rows in _group(np.asarray(trip, dtype=np.int64).reshape(-1, 3)).items():
        a, b = np.triu_indices(len(rows), k=1)
        ra, rb = rows[a, 1], rows[b, 1]
        strict = ra != rb
        a, b, ra, rb = a[strict], b[strict], ra[strict], rb[strict]
        hi = np.where(ra > rb, rows[a, 0], rows[b, 0])
        lo = np.where(ra > rb, rows[b, 0], rows[a, 0])
        users.append(np.full(len(hi), u))
        preferred.append(hi)
        other.append(lo)
    if not users:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty.copy(), empty.copy()
    return (np.concatenate(users).astype(np.int64), np.concatenate(preferred).astype(np.int64),
            np.concatenate(other).astype(np.int64))
