import numpy as np
import pytest

from sibrank.dataset import PreferenceTriple
from sibrank.kendall import (
    UserPreferenceProfile,
    kendall_similarity,
    kendall_similarity_matrix,
    profiles_from_ratings,
    similarities_to_target,
)

from conftest import ITEM_A, ITEM_B, JACK, JOE, MARTIN, MIKE, four_user_triples


def four_user_profiles():
    by_user = {u: [] for u in (JACK, MIKE, JOE, MARTIN)}
    for t in four_user_triples():
        by_user[t.user].append(t)
    return [UserPreferenceProfile.from_triples(u, ts) for u, ts in by_user.items()]


def test_jack_mike_joe_martin():
    profiles = four_user_profiles()
    sims = dict(similarities_to_target(profiles[0], profiles))
    assert sims == {MIKE: -1.0, JOE: 0.0, MARTIN: 0.0}


def test_profile_orientation():
    p = UserPreferenceProfile.from_triples(JACK, [PreferenceTriple(JACK, ITEM_A, ITEM_B)])
    assert p.verdicts == {(ITEM_A, ITEM_B): -1}  # Jack prefers the lower id
    low, high, sign = p.arrays
    assert (low.tolist(), high.tolist(), sign.tolist()) == ([ITEM_A], [ITEM_B], [-1])


def test_profile_errors():
    with pytest.raises(ValueError, match="contradicting"):
        UserPreferenceProfile.from_triples(1, [PreferenceTriple(1, 2, 3), PreferenceTriple(1, 3, 2)])
    with pytest.raises(ValueError):
        UserPreferenceProfile.from_triples(1, [PreferenceTriple(2, 2, 3)])


def test_five_shared_four_agree():
    keys = [(i, i + 1) for i in range(5)]
    a = UserPreferenceProfile(1, {k: 1 for k in keys})
    b = UserPreferenceProfile(2, {**{k: 1 for k in keys[:4]}, keys[4]: -1, (20, 21): 1})
    assert kendall_similarity(a, b) == pytest.approx((4 - 1) / 5)


def test_identical_profiles():
    a = UserPreferenceProfile(1, {(1, 2): 1, (3, 4): -1})
    assert kendall_similarity(a, UserPreferenceProfile(2, dict(a.verdicts))) == 1.0
    assert kendall_similarity(a, a) == 1.0


def test_empty_profiles():
    e = UserPreferenceProfile(1)
    assert kendall_similarity(e, e) == 0.0
    assert similarities_to_target(e, [e]) == []


def random_profiles(rng, n_users, n_keys=30, density=0.3):
    out = []
    for u in range(n_users):
        keys = np.flatnonzero(rng.random(n_keys) < density)
        out.append(UserPreferenceProfile(u, {(int(k), int(k) + 100): int(rng.choice([-1, 1])) for k in keys}))
    return out


@pytest.mark.parametrize("seed", range(10))
def test_properties_and_matrix_form(seed):
    profiles = random_profiles(np.random.default_rng(seed), 12)
    sim, common = kendall_similarity_matrix(profiles)
    for i, a in enumerate(profiles):
        for j, b in enumerate(profiles):
            s = kendall_similarity(a, b)
            assert s == kendall_similarity(b, a)
            assert -1 <= s <= 1
            assert sim[i, j] == pytest.approx(s, abs=1e-15)
            assert common[i, j] == len(a.verdicts.keys() & b.verdicts.keys())
            if not common[i, j]:
                assert s == 0.0


def test_list_length():
    profiles = random_profiles(np.random.default_rng(0), 7)
    out = similarities_to_target(profiles[3], profiles)
    assert [u for u, _ in out] == [0, 1, 2, 4, 5, 6]


def test_profiles_from_ratings():
    trip = np.array([(1, 10, 5), (1, 11, 3), (1, 12, 3), (2, 10, 1)])
    profiles = profiles_from_ratings(trip, users=[3])
    assert sorted(profiles) == [1, 2, 3]
    assert profiles[1].verdicts == {(10, 11): -1, (10, 12): -1}
    assert len(profiles[2]) == 0 and len(profiles[3]) == 0


def test_movielens_t10_mostly_zero(t10_split):
    profiles = list(profiles_from_ratings(t10_split.train, t10_split.eligible_users).values())
    sim, _ = kendall_similarity_matrix(profiles)
    off = sim[~np.eye(len(profiles), dtype=bool)]
    assert np.mean(off == 0) >= 0.80
