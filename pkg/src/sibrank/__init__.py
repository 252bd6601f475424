"""Neighbour-based collaborative ranking with signed bipartite preference networks."""

from sibrank.dataset import (
    PreferenceTriple,
    RatingDataset,
    RatingRecord,
    TrainTestSplit,
    derive_preferences,
    load_movielens,
    make_splits,
)
from sibrank.estimators import EigenRank, SibRank
from sibrank.kendall import UserPreferenceProfile, kendall_similarity
from sibrank.sibrenet import PreferenceKey, SiBreNet, build_sibrenet, signed_neighbors
from sibrank.srank import (
    SRankVector,
    TransitionMatrices,
    build_transition,
    compute_srank,
    unsigned_ppr,
    user_similarities,
    user_similarity_matrix,
)

__version__ = "0.1.0"

__all__ = [
    "EigenRank",
    "PreferenceKey",
    "PreferenceTriple",
    "RatingDataset",
    "RatingRecord",
    "SRankVector",
    "SiBreNet",
    "SibRank",
    "TrainTestSplit",
    "TransitionMatrices",
    "UserPreferenceProfile",
    "build_sibrenet",
    "build_transition",
    "compute_srank",
    "derive_preferences",
    "kendall_similarity",
    "load_movielens",
    "make_splits",
    "signed_neighbors",
    "unsigned_ppr",
    "user_similarities",
    "user_similarity_matrix",
]
