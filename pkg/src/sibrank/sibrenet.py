"""Signed bipartite preference network.

User nodes occupy ids ``[0, n_users)``; preference nodes follow. A preference
node keyed ``(low, high)`` (``low < high``) asserts "``high`` is preferred
over ``low``". A user who rated ``high`` above ``low`` links to it with sign
+1, a user who rated ``low`` above ``high`` with sign -1.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np
import scipy.sparse as sp

from sibrank.dataset import PreferenceTriple


class GraphError(ValueError):
    pass


class PreferenceKey(NamedTuple):
    low: int
    high: int


@dataclass(frozen=True)
class SiBreNet:
    """Immutable signed graph with a symmetric CSR adjacency of +1/-1 entries.

    ``user_ids[k]`` is the external id of user node ``k``; ``pref_keys[p]`` is
    the ``(low, high)`` item pair of node ``n_users + p``.
    """

    adjacency: sp.csr_matrix
    n_users: int
    user_ids: np.ndarray
    pref_keys: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.adjacency.shape[0]

    @property
    def n_prefs(self) -> int:
        return self.n_nodes - self.n_users

    @property
    def n_edges(self) -> int:
        return self.adjacency.nnz // 2

    @property
    def degree(self) -> np.ndarray:
        return np.diff(self.adjacency.indptr)

    def is_user(self, node: int) -> bool:
        return 0 <= node < self.n_users

    def user_node(self, user_id: int) -> int:
        pos = int(np.searchsorted(self.user_ids, user_id))
        if pos >= self.n_users or self.user_ids[pos] != user_id:
            raise KeyError(f"unknown user {user_id}")
        return pos

    def pref_node(self, key: tuple[int, int]) -> int:
        low, high = key
        keys = self.pref_keys
        pos = int(np.searchsorted(keys[:, 0] * _stride(keys) + keys[:, 1], low * _stride(keys) + high))
        if pos >= len(keys) or tuple(keys[pos]) != (low, high):
            raise KeyError(f"no preference node for {key}")
        return self.n_users + pos

    def node_label(self, node: int) -> str:
        if self.is_user(node):
            return f"user:{self.user_ids[node]}"
        low, high = self.pref_keys[node - self.n_users]
        return f"pref:{low}<{high}"


def _stride(keys: np.ndarray) -> int:
    return int(keys.max()) + 1 if len(keys) else 1


def _symmetric(n_nodes: int, rows: np.ndarray, cols: np.ndarray, signs: np.ndarray) -> sp.csr_matrix:
    adj = sp.coo_matrix(
        (np.concatenate([signs, signs]).astype(np.float64),
         (np.concatenate([rows, cols]), np.concatenate([cols, rows]))),
        shape=(n_nodes, n_nodes),
    ).tocsr()
    adj.sort_indices()
    return adj


def build_sibrenet(
    triples: Iterable[PreferenceTriple] | tuple[np.ndarray, np.ndarray, np.ndarray],
    users: Iterable[int] | None = None,
) -> SiBreNet:
    """Build the network from preference triples.

    ``triples`` is an iterable of :class:`PreferenceTriple` or parallel
    ``(user, preferred, other)`` arrays. ``users`` adds user nodes that have no
    preference (e.g. all-equal ratings). Only preference nodes with at least
    one edge are created.
    """
    if isinstance(triples, tuple) and len(triples) == 3 and isinstance(triples[0], np.ndarray):
        u, pref, other = (np.asarray(a, dtype=np.int64) for a in triples)
    else:
        arr = np.asarray([tuple(t) for t in triples], dtype=np.int64).reshape(-1, 3)
        u, pref, other = arr[:, 0], arr[:, 1], arr[:, 2]
    if np.any(pref == other):
        raise GraphError("a preference triple compares an item with itself")

    user_ids = np.unique(np.concatenate([u, np.fromiter(users or (), dtype=np.int64)]))
    low = np.minimum(pref, other)
    high = np.maximum(pref, other)
    sign = np.where(pref == high, 1, -1)

    edge_keys = np.column_stack([u, low, high])
    uniq, inverse = np.unique(edge_keys, axis=0, return_inverse=True)
    inverse = inverse.ravel()
    if len(uniq) != len(edge_keys):
        first_sign = np.zeros(len(uniq), dtype=np.int64)
        first_sign[inverse[::-1]] = sign[::-1]
        clash = np.flatnonzero(first_sign[inverse] != sign)
        if len(clash):
            k = clash[0]
            raise GraphError(
                f"user {u[k]} both prefers {pref[k]} over {other[k]} and the reverse"
            )
        keep = np.zeros(len(uniq), dtype=np.int64)
        keep[inverse[::-1]] = np.arange(len(inverse))[::-1]
        u, low, high, sign = u[keep], low[keep], high[keep], sign[keep]

    pref_keys, pref_idx = np.unique(np.column_stack([low, high]), axis=0, return_inverse=True)
    pref_keys = pref_keys.reshape(-1, 2)
    n_users = len(user_ids)
    rows = np.searchsorted(user_ids, u)
    cols = n_users + pref_idx.ravel()
    adj = _symmetric(n_users + len(pref_keys), rows, cols, sign)
    return SiBreNet(adjacency=adj, n_users=n_users, user_ids=user_ids, pref_keys=pref_keys)


def signed_graph(n_nodes: int, edges: Sequence[tuple[int, int, int]], n_users: int | None = None) -> SiBreNet:
    """Generic signed graph over node ids ``0..n_nodes-1`` (mostly for tests).

    Nodes below ``n_users`` (default: all) count as user nodes.
    """
    n_users = n_nodes if n_users is None else n_users
    arr = np.asarray(edges, dtype=np.int64).reshape(-1, 3)
    if np.any(arr[:, 0] == arr[:, 1]):
        raise GraphError("self loops are not allowed")
    if not np.isin(arr[:, 2], (-1, 1)).all():
        raise GraphError("edge signs must be +1 or -1")
    pair = np.sort(arr[:, :2], axis=1)
    if len(np.unique(pair, axis=0)) != len(pair):
        raise GraphError("duplicate edge")
    adj = _symmetric(n_nodes, arr[:, 0], arr[:, 1], arr[:, 2])
    pref_keys = np.full((n_nodes - n_users, 2), -1, dtype=np.int64)
    return SiBreNet(adjacency=adj, n_users=n_users, user_ids=np.arange(n_users), pref_keys=pref_keys)


def signed_neighbors(g: SiBreNet, node: int) -> list[tuple[int, int]]:
    """Incident ``(neighbor, sign)`` pairs in ascending neighbor order."""
    if not 0 <= node < g.n_nodes:
        raise GraphError(f"unknown node {node}")
    a = g.adjacency
    lo, hi = a.indptr[node], a.indptr[node + 1]
    return [(int(j), int(w)) for j, w in zip(a.indices[lo:hi], a.data[lo:hi])]


def flip_node_signs(g: SiBreNet, node: int) -> SiBreNet:
    """Copy of ``g`` with the sign of every edge at ``node`` negated."""
    d = sp.diags(np.where(np.arange(g.n_nodes) == node, -1.0, 1.0))
    adj = (d @ g.adjacency @ d).tocsr()
    adj.sort_indices()
    return SiBreNet(adjacency=adj, n_users=g.n_users, user_ids=g.user_ids, pref_keys=g.pref_keys)


def write_edge_list(g: SiBreNet, path: str | Path) -> None:
    """Debug dump: ``user<TAB>pref_low<TAB>pref_high<TAB>sign`` per edge."""
    coo = sp.triu(g.adjacency, format="coo")
    order = np.lexsort((coo.col, coo.row))
    with open(path, "w") as fh:
        for r, c, w in zip(coo.row[order], coo.col[order], coo.data[order]):
            user, pref = (r, c) if r < g.n_users else (c, r)
            low, high = g.pref_keys[pref - g.n_users]
            fh.write(f"{g.user_ids[user]}\t{low}\t{high}\t{'+1' if w > 0 else '-1'}\n")
