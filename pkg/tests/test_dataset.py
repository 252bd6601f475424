from itertools import combinations
from math import comb

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sibrank.dataset import (
    DatasetError,
    PreferenceTriple,
    RatingDataset,
    RatingRecord,
    derive_preferences,
    load_movielens,
    make_splits,
    preference_arrays,
    read_splits_csv,
    write_splits_csv,
)


def write(tmp_path, text):
    path = tmp_path / "u.data"
    path.write_text(text)
    return path


def test_load_single_row(tmp_path):
    ds = load_movielens(write(tmp_path, "196\t242\t3\t881250949\n"))
    assert ds.records() == [RatingRecord(196, 242, 3, 881250949)]
    assert ds.n_users == 1 and ds.n_items == 1


def test_load_empty(tmp_path):
    ds = load_movielens(write(tmp_path, ""))
    assert len(ds) == 0 and ds.n_users == 0 and ds.n_items == 0


def test_dense_ids(tmp_path):
    ds = load_movielens(write(tmp_path, "7\t30\t4\t0\n3\t30\t2\t0\n7\t5\t1\t0\n"))
    assert list(ds.user_ids) == [3, 7]
    assert list(ds.item_ids) == [5, 30]
    assert set(ds.users) == {0, 1} and set(ds.items) == {0, 1}
    assert sorted(ds.records()) == sorted(
        [RatingRecord(7, 30, 4, 0), RatingRecord(3, 30, 2, 0), RatingRecord(7, 5, 1, 0)])


@pytest.mark.parametrize(
    "text, message",
    [
        ("1\t2\t3\n", ":1: expected 4"),
        ("1\t2\t3\t0\n1\tx\t3\t0\n", ":2: non-integer"),
        ("1\t2\t6\t0\n", "outside 1-5"),
        ("1\t2\t0\t0\n", "outside 1-5"),
        ("1\t2\t3\t0\n1\t2\t4\t5\n", "duplicate"),
    ],
)
def test_load_errors(tmp_path, text, message):
    with pytest.raises(DatasetError, match=message):
        load_movielens(write(tmp_path, text))


def test_load_missing_file(tmp_path):
    with pytest.raises(DatasetError, match="cannot read"):
        load_movielens(tmp_path / "nope")


def test_full_movielens_counts(movielens):
    assert len(movielens) == 100_000
    assert movielens.n_users == 943
    assert movielens.n_items == 1682
    assert set(np.unique(movielens.ratings)) == {1, 2, 3, 4, 5}


def test_derive_single_pair():
    assert derive_preferences(1, [("A", 5), ("B", 3)]) == [PreferenceTriple(1, "A", "B")]


def test_derive_equal_ratings_give_nothing():
    assert derive_preferences(1, [("A", 4), ("B", 4)]) == []


def test_derive_three_items():
    ratings = [("A", 5), ("B", 3), ("C", 3)]
    expected = set()
    for (i, ri), (j, rj) in combinations(ratings, 2):
        if ri != rj:
            expected.add(PreferenceTriple(1, i, j) if ri > rj else PreferenceTriple(1, j, i))
    assert expected == {PreferenceTriple(1, "A", "B"), PreferenceTriple(1, "A", "C")}
    assert set(derive_preferences(1, ratings)) == expected


ratings_strategy = st.dictionaries(st.integers(0, 40), st.integers(1, 5), max_size=15)


@given(ratings_strategy)
def test_derive_invariants(ratings):
    prefs = derive_preferences(0, ratings.items())
    n = len(ratings)
    assert len(prefs) <= comb(n, 2)
    distinct = len(set(ratings.values())) == n
    assert (len(prefs) == comb(n, 2)) == distinct
    pairs = {(p.preferred, p.other) for p in prefs}
    assert not any((b, a) in pairs for a, b in pairs)
    assert all(ratings[p.preferred] > ratings[p.other] for p in prefs)


@given(st.dictionaries(st.integers(0, 3), ratings_strategy, max_size=4))
def test_vectorized_preferences_match(per_user):
    trip = np.array([(u, i, r) for u, rs in per_user.items() for i, r in rs.items()],
                    dtype=np.int64).reshape(-1, 3)
    u, pref, other = preference_arrays(trip)
    got = set(zip(u.tolist(), pref.tolist(), other.tolist()))
    expected = {tuple(t) for user, rs in per_user.items() for t in derive_preferences(user, rs.items())}
    assert got == expected


def small_dataset(counts, seed=0):
    rng = np.random.default_rng(seed)
    recs = []
    for u, n in enumerate(counts, start=1):
        for i in rng.choice(200, size=n, replace=False):
            recs.append(RatingRecord(u, int(i), int(rng.integers(1, 6)), 0))
    return RatingDataset.from_records(recs)


def test_split_sizes_and_partition():
    ds = small_dataset([25, 40, 15, 20])
    splits = make_splits(ds, T=10, n_splits=3, seed=7)
    assert len(splits) == 3
    per_user = ds.by_user()
    for sp in splits:
        assert sp.eligible_users == {1, 2, 4}  # user 3 has 15 < 10 + 10 ratings
        train, test = sp.train_by_user(), sp.test_by_user()
        for u in sp.eligible_users:
            assert len(train[u]) == 10
            assert len(test[u]) >= 10
            tr = {tuple(r) for r in train[u].tolist()}
            te = {tuple(r) for r in test[u].tolist()}
            assert not tr & te
            assert tr | te == {tuple(r) for r in per_user[u].tolist()}
        assert 3 not in train and 3 not in test


def test_split_deterministic():
    ds = small_dataset([30, 30, 50])
    a = make_splits(ds, 10, 2, seed=3)
    b = make_splits(ds, 10, 2, seed=3)
    for x, y in zip(a, b):
        assert x.train.tobytes() == y.train.tobytes()
        assert x.test.tobytes() == y.test.tobytes()
    c = make_splits(ds, 10, 2, seed=4)
    assert a[0].train.tobytes() != c[0].train.tobytes()
    assert a[0].train.tobytes() != a[1].train.tobytes()


def test_split_independent_of_other_users():
    """A user's sample depends only on (seed, split, user)."""
    ds = small_dataset([30, 30, 50])
    full = make_splits(ds, 10, 1, seed=3)[0].train_by_user()
    recs = [r for r in ds.records() if r.user != 2]
    partial = make_splits(RatingDataset.from_records(recs), 10, 1, seed=3)[0].train_by_user()
    np.testing.assert_array_equal(full[1], partial[1])
    np.testing.assert_array_equal(full[3], partial[3])


def test_split_errors():
    ds = small_dataset([12, 15])
    with pytest.raises(ValueError):
        make_splits(ds, 0, 1, 0)
    with pytest.raises(DatasetError, match="no user"):
        make_splits(ds, 10, 1, 0)


def test_movielens_t10_splits(movielens):
    splits = make_splits(movielens, 10, 5, seed=0)
    assert len(splits) == 5
    counts = np.bincount(movielens.users)
    assert len(splits[0].eligible_users) == int(np.sum(counts >= 20))
    for sp in splits:
        assert len(sp.train) == 10 * len(sp.eligible_users)
        assert len(sp.train) + len(sp.test) == 100_000


def test_split_csv_roundtrip(tmp_path):
    ds = small_dataset([25, 30])
    splits = make_splits(ds, 10, 2, seed=1)
    path = tmp_path / "splits.csv"
    write_splits_csv(splits, path)
    assert path.read_text().splitlines()[0] == "split,user,item,rating,role"
    back = read_splits_csv(path, T=10, seed=1)
    for a, b in zip(splits, back):
        np.testing.assert_array_equal(a.train, b.train)
        np.testing.assert_array_equal(a.test, b.test)
        assert a.eligible_users == b.eligible_users


def test_split_csv_bad_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("user,item\n")
    with pytest.raises(DatasetError, match="header"):
        read_splits_csv(path, T=10)
