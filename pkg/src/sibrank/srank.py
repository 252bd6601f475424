"""Signed personalized PageRank (SRank) on a :class:`~sibrank.sibrenet.SiBreNet`.

A walker starts at the target user. At each step it restarts with
probability ``1 - alpha`` or moves to a uniformly chosen neighbour. Crossing
a negative edge swaps the walker's sign, so ``s_plus``/``s_minus`` hold the
stationary mass that arrived through walks whose sign product is +1/-1.

Convention: transition matrices are column-stochastic, entry ``(i, j)`` is the
probability of stepping from ``j`` to ``i``. A walker at a zero-degree node
returns to the target keeping its sign; on a bipartite preference network
only an isolated target can hold such mass, so this never leaks negative
mass into the target.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from sibrank.sibrenet import GraphError, SiBreNet

DEFAULT_ALPHA = 0.85
DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 200
MAX_ORACLE_NODES = 12


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


@dataclass(frozen=True)
class TransitionMatrices:
    T: sp.csr_matrix
    T_plus: sp.csr_matrix
    T_minus: sp.csr_matrix
    dangling: np.ndarray
    n_users: int

    @property
    def n_nodes(self) -> int:
        return self.T.shape[0]


@dataclass(frozen=True)
class SRankVector:
    s_plus: np.ndarray
    s_minus: np.ndarray
    s: np.ndarray
    target: int
    alpha: float
    iterations: int
    residual: float
    residuals: tuple = field(default=(), repr=False)


def build_transition(g: SiBreNet) -> TransitionMatrices:
    adj = g.adjacency
    deg = g.degree.astype(np.float64)
    inv = np.divide(1.0, deg, out=np.zeros_like(deg), where=deg > 0)
    T = (abs(adj) @ sp.diags(inv)).tocsr()
    T_plus = (adj.multiply(adj > 0) @ sp.diags(inv)).tocsr()
    T_minus = (-adj.multiply(adj < 0) @ sp.diags(inv)).tocsr()
    for mat in (T, T_plus, T_minus):
        mat.eliminate_zeros()
        mat.sort_indices()
    return TransitionMatrices(T=T, T_plus=T_plus, T_minus=T_minus,
                              dangling=np.flatnonzero(deg == 0), n_users=g.n_users)


def _check(m: TransitionMatrices, target: int, alpha: float, tol: float) -> None:
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if not 0 <= target < m.n_users:
        raise GraphError(f"target {target} is not a user node")


def _signed_to_overall(s_plus: np.ndarray, s_minus: np.ndarray) -> np.ndarray:
    mass = s_plus + s_minus
    return np.divide(s_plus - s_minus, mass, out=np.zeros_like(mass), where=mass > 0)


def compute_srank(
    m: TransitionMatrices,
    target: int,
    alpha: float = DEFAULT_ALPHA,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> SRankVector:
    """Iterate ``S+ = a(T+ S+ + T- S-) + (1-a) q`` and ``S- = a(T- S+ + T+ S-)``.

    Starts from ``S+ = q, S- = 0`` and stops when the L1 change of the stacked
    vector drops below ``tol``.
    """
    _check(m, target, alpha, tol)
    n = m.n_nodes
    q = np.zeros(n)
    q[target] = 1.0
    s_plus, s_minus = q.copy(), np.zeros(n)
    residuals = []
    for it in range(1, max_iter + 1):
        new_plus = alpha * (m.T_plus @ s_plus + m.T_minus @ s_minus) + (1 - alpha) * q
        new_minus = alpha * (m.T_minus @ s_plus + m.T_plus @ s_minus)
        if len(m.dangling):
            new_plus[target] += alpha * s_plus[m.dangling].sum()
            new_minus[target] += alpha * s_minus[m.dangling].sum()
        residual = float(np.abs(new_plus - s_plus).sum() + np.abs(new_minus - s_minus).sum())
        residuals.append(residual)
        s_plus, s_minus = new_plus, new_minus
        if residual < tol:
            return SRankVector(s_plus, s_minus, _signed_to_overall(s_plus, s_minus), target,
                               alpha, it, residual, tuple(residuals))
    raise ConvergenceError(
        f"SRank for target {target} did not converge in {max_iter} iterations "
        f"(residual {residual:.3e})", residual, max_iter)


def compute_srank_block(
    m: TransitionMatrices,
    targets: np.ndarray,
    alpha: float = DEFAULT_ALPHA,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Same iteration as :func:`compute_srank` for many targets at once.

    Returns ``(s_plus, s_minus, iterations)`` with one column per target and
    the per-target iteration count at which its residual first fell below
    ``tol``. Columns keep iterating until every target has converged, which
    only tightens the earlier ones.
    """
    targets = np.asarray(targets, dtype=np.int64)
    for t in targets:
        _check(m, int(t), alpha, tol)
    n, b = m.n_nodes, len(targets)
    Q = np.zeros((n, b))
    Q[targets, np.arange(b)] = 1.0
    s_plus, s_minus = Q.copy(), np.zeros((n, b))
    done = np.zeros(b, dtype=np.int64)
    for it in range(1, max_iter + 1):
        new_plus = alpha * (m.T_plus @ s_plus + m.T_minus @ s_minus) + (1 - alpha) * Q
        new_minus = alpha * (m.T_minus @ s_plus + m.T_plus @ s_minus)
        if len(m.dangling):
            new_plus[targets, np.arange(b)] += alpha * s_plus[m.dangling].sum(axis=0)
            new_minus[targets, np.arange(b)] += alpha * s_minus[m.dangling].sum(axis=0)
        residual = np.abs(new_plus - s_plus).sum(axis=0) + np.abs(new_minus - s_minus).sum(axis=0)
        s_plus, s_minus = new_plus, new_minus
        done[(done == 0) & (residual < tol)] = it
        if done.all():
            return s_plus, s_minus, done
    worst = int(np.argmax(residual))
    raise ConvergenceError(
        f"SRank for target {targets[worst]} did not converge in {max_iter} iterations "
        f"(residual {residual[worst]:.3e})", float(residual[worst]), max_iter)


def unsigned_ppr(
    m: TransitionMatrices,
    target: int,
    alpha: float = DEFAULT_ALPHA,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> np.ndarray:
    """Personalized PageRank ``p = a T p + (1-a) q`` on the unsigned graph."""
    _check(m, target, alpha, tol)
    q = np.zeros(m.n_nodes)
    q[target] = 1.0
    p = q.copy()
    for _ in range(max_iter):
        new = alpha * (m.T @ p) + (1 - alpha) * q
        if len(m.dangling):
            new[target] += alpha * p[m.dangling].sum()
        residual = float(np.abs(new - p).sum())
        p = new
        if residual < tol:
            return p
    raise ConvergenceError(
        f"PPR for target {target} did not converge in {max_iter} iterations "
        f"(residual {residual:.3e})", residual, max_iter)


def oracle_length(alpha: float, accuracy: float = 1e-9) -> int:
    """Smallest walk length ``L`` with ``alpha**L < accuracy``."""
    return math.floor(math.log(accuracy) / math.log(alpha)) + 1


def walk_oracle(g: SiBreNet, target: int, alpha: float, max_len: int) -> tuple[np.ndarray, np.ndarray]:
    """Brute-force signed walk distribution, for cross-checking :func:`compute_srank`.

    Propagates the probability of being at ``(node, sign)`` after ``k`` steps
    of the non-restarting walk straight from the adjacency lists and sums
    ``(1 - alpha) * alpha**k`` times it for ``k = 0..max_len``.
    """
    n = g.n_nodes
    if n > MAX_ORACLE_NODES:
        raise GraphError(f"walk_oracle is limited to {MAX_ORACLE_NODES} nodes, got {n}")
    if not 0 <= target < g.n_users:
        raise GraphError(f"target {target} is not a user node")
    dense = g.adjacency.toarray()
    nbrs = [[(j, int(dense[v, j])) for j in range(n) if dense[v, j] != 0] for v in range(n)]
    # state[v][0]: positive walks, state[v][1]: negative walks
    state = [[0.0, 0.0] for _ in range(n)]
    state[target][0] = 1.0
    pos, neg = [0.0] * n, [0.0] * n
    weight = 1.0 - alpha
    for _ in range(max_len + 1):
        for v in range(n):
            pos[v] += weight * state[v][0]
            neg[v] += weight * state[v][1]
        nxt = [[0.0, 0.0] for _ in range(n)]
        for v in range(n):
            if not nbrs[v]:
                nxt[target][0] += state[v][0]
                nxt[target][1] += state[v][1]
                continue
            share = 1.0 / len(nbrs[v])
            for j, w in nbrs[v]:
                if w > 0:
                    nxt[j][0] += share * state[v][0]
                    nxt[j][1] += share * state[v][1]
                else:
                    nxt[j][0] += share * state[v][1]
                    nxt[j][1] += share * state[v][0]
        state = nxt
        weight *= alpha
    return np.array(pos), np.array(neg)


def user_similarities(v: SRankVector, g: SiBreNet) -> list[tuple[int, float]]:
    """``(external user id, s)`` for every user except the target, by node id."""
    return [(int(g.user_ids[u]), float(v.s[u])) for u in range(g.n_users) if u != v.target]


def user_similarity_matrix(g: SiBreNet, alpha: float = DEFAULT_ALPHA) -> np.ndarray:
    """Overall SRank between every pair of users, ``S[t, v] = s_t(v)``.

    Solves the fixed point directly instead of iterating. On a bipartite
    graph the user block satisfies ``x_U = alpha**2 (A B) x_U + (1-alpha) q``
    where ``A`` (users x prefs) and ``B`` (prefs x users) are the two
    off-diagonal blocks of the transition matrix, so one dense
    ``n_users x n_users`` solve covers every target. Signed blocks give
    ``s_plus - s_minus``, unsigned blocks give ``s_plus + s_minus``.
    Unreachable users get 0.
    """
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    nu = g.n_users
    adj = g.adjacency.tocsr()
    user_block = adj[:nu, :nu]
    pref_block = adj[nu:, nu:]
    if user_block.nnz or pref_block.nnz:
        raise GraphError("user_similarity_matrix needs a bipartite user/preference graph")
    deg = g.degree.astype(np.float64)
    inv = np.divide(1.0, deg, out=np.zeros_like(deg), where=deg > 0)
    up = adj[:nu, nu:]
    A = (up @ sp.diags(inv[nu:])).tocsr()          # pref -> user
    B = (up.T @ sp.diags(inv[:nu])).tocsr()        # user -> pref
    eye = np.eye(nu)
    signed = (A @ B).toarray()
    unsigned = (abs(A) @ abs(B)).toarray()
    diff = (1 - alpha) * la.solve(eye - alpha**2 * signed, eye)
    mass = (1 - alpha) * la.solve(eye - alpha**2 * unsigned, eye)
    _, labels = connected_components(adj, directed=False)
    reach = labels[:nu, None] == labels[None, :nu]
    S = np.divide(diff, mass, out=np.zeros_like(diff), where=reach & (mass > 0))
    # column t holds target t; transpose so rows are targets
    return np.clip(S.T, -1.0, 1.0)


def write_srank_csv(v: SRankVector, g: SiBreNet, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["node_id", "kind", "s_plus", "s_minus", "s"])
        for node in range(len(v.s)):
            kind = "user" if node < g.n_users else "pref"
            w.writerow([node, kind, repr(float(v.s_plus[node])), repr(float(v.s_minus[node])),
                        repr(float(v.s[node]))])
