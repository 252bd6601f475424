import os
from pathlib import Path

import numpy as np
import pytest

from sibrank.dataset import PreferenceTriple, load_movielens, make_splits, preference_arrays
from sibrank.sibrenet import build_sibrenet, signed_graph

ROOT = Path(__file__).resolve().parents[1]
ML100K = Path(os.environ.get("SIBRANK_ML100K", ROOT / "data" / "ml-100k" / "u.data"))

JACK, MIKE, JOE, MARTIN = 1, 2, 3, 4
ITEM_A, ITEM_B, ITEM_C = 10, 11, 12


def four_user_triples():
    """Jack and Mike disagree on (A, B); Mike and Joe disagree on (B, C); Martin judged nothing."""
    return [
        PreferenceTriple(JACK, ITEM_A, ITEM_B),
        PreferenceTriple(MIKE, ITEM_B, ITEM_A),
        PreferenceTriple(MIKE, ITEM_B, ITEM_C),
        PreferenceTriple(JOE, ITEM_C, ITEM_B),
    ]


@pytest.fixture
def four_users():
    return build_sibrenet(four_user_triples(), users=[MARTIN])


def random_bipartite(rng, n_users, n_prefs, density=0.3):
    """Random signed user/preference graph where every preference node has an edge."""
    edges = []
    for p in range(n_prefs):
        linked = np.flatnonzero(rng.random(n_users) < density)
        if not len(linked):
            linked = [rng.integers(n_users)]
        for u in linked:
            edges.append((int(u), n_users + p, int(rng.choice([-1, 1]))))
    return signed_graph(n_users + n_prefs, edges, n_users=n_users)


def random_signed(rng, n_nodes, density=0.4):
    """Random signed graph on ``n_nodes`` (not necessarily bipartite, may be disconnected)."""
    edges = []
    for i in range(n_nodes):
        for j in range(i + 1, n_nodes):
            if rng.random() < density:
                edges.append((i, j, int(rng.choice([-1, 1]))))
    return signed_graph(n_nodes, edges)


def requires_movielens():
    return pytest.mark.skipif(not ML100K.exists(),
                              reason=f"MovieLens-100K not found at {ML100K}; run scripts/fetch_movielens.py")


@pytest.fixture(scope="session")
def movielens():
    if not ML100K.exists():
        pytest.skip(f"MovieLens-100K not found at {ML100K}; run scripts/fetch_movielens.py")
    return load_movielens(ML100K)


@pytest.fixture(scope="session")
def t10_split(movielens):
    return make_splits(movielens, 10, 1, seed=0)[0]


@pytest.fixture(scope="session")
def t10_graph(t10_split):
    return build_sibrenet(preference_arrays(t10_split.train), users=t10_split.eligible_users)
