"""Experiment runner: splits x algorithms x neighbourhood sizes, plus similarity diagnostics."""

from __future__ import annotations

import csv
import logging
import time
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from joblib import Parallel, delayed

from sibrank.dataset import RatingDataset, TrainTestSplit, load_movielens, make_splits
from sibrank.estimators import EigenRank, NeighborRanker, SibRank
from sibrank.inference import estimate_preferences_prefixes, exponential_rank, top_n
from sibrank.metrics import EvaluationContext, ndcg_at, precision_at, recall_at

log = logging.getLogger(__name__)

ALGORITHMS = ("sibrank", "eigenrank")
METRIC_FUNCS = {"N": ndcg_at, "P": precision_at, "R": recall_at}
RESULT_FIELDS = ["algorithm", "T", "split", "K", "metric", "value", "n_users"]


class ExperimentError(RuntimeError):
    pass


@dataclass
class ExperimentConfig:
    data: str | Path = "data/ml-100k/u.data"
    T: Sequence[int] = (10, 30, 50)
    n_splits: int = 5
    K: Sequence[int] = tuple(range(10, 101, 10))
    topn: Sequence[int] = (3, 5, 10)
    alpha: float = 0.85
    item_damping: float = 0.85
    algorithms: Sequence[str] = ALGORITHMS
    seed: int = 0
    workers: int = 1
    out: str | Path | None = None
    sample_users: int | None = None
    denominator: str = "judged"

    def validate(self) -> "ExperimentConfig":
        for name in ("T", "K", "topn"):
            values = list(getattr(self, name))
            if not values or any(int(v) <= 0 for v in values):
                raise ValueError(f"{name} must be a non-empty list of positive integers")
        if self.n_splits < 1:
            raise ValueError("n_splits must be >= 1")
        if not self.algorithms:
            raise ValueError("at least one algorithm is required")
        unknown = set(self.algorithms) - set(ALGORITHMS)
        if unknown:
            raise ValueError(f"unknown algorithm(s) {sorted(unknown)}; choose from {ALGORITHMS}")
        if self.sample_users is not None and self.sample_users < 1:
            raise ValueError("sample_users must be positive")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        return self


@dataclass(frozen=True, order=True)
class ResultRow:
    algorithm: str
    T: int
    split: int
    K: int
    metric: str
    value: float = field(compare=False)
    n_users: int = field(compare=False)


def make_estimator(algorithm: str, cfg: ExperimentConfig) -> NeighborRanker:
    if algorithm == "sibrank":
        return SibRank(n_neighbors=max(cfg.K), alpha=cfg.alpha, item_damping=cfg.item_damping,
                       denominator=cfg.denominator)
    if algorithm == "eigenrank":
        return EigenRank(n_neighbors=max(cfg.K), item_damping=cfg.item_damping,
                         denominator=cfg.denominator)
    raise ValueError(f"unknown algorithm {algorithm!r}")


def sample_targets(split: TrainTestSplit, n: int | None, seed: int) -> list[int]:
    users = sorted(split.eligible_users)
    if n is None or n >= len(users):
        return users
    rng = np.random.default_rng([seed, split.T, split.index])
    return sorted(int(u) for u in rng.choice(users, size=n, replace=False))


def evaluate_user(est: NeighborRanker, user: int, test_rows: np.ndarray,
                  Ks: Sequence[int], topn: Sequence[int]) -> dict:
    """Metric values for one target at every ``K`` in ``Ks``.

    Returns ``{"relevant": bool, (K, "N@5"): value, ...}``.
    """
    ctx = EvaluationContext(user, dict(zip(test_rows[:, 0].tolist(), test_rows[:, 1].tolist())),
                            est.user_means_[user])
    nbhd = est.neighbors(user, max(Ks))
    out: dict = {"relevant": ctx.has_relevant}
    for K, psi in estimate_preferences_prefixes(user, nbhd, est.profiles_, test_rows[:, 0], Ks,
                                                est.denominator):
        recommended = top_n(exponential_rank(psi, alpha=est.item_damping), max(topn))
        for n in topn:
            for prefix, func in METRIC_FUNCS.items():
                out[K, f"{prefix}@{n}"] = func(recommended, ctx, n)
    return out


def _evaluate_batch(est, users, tests, Ks, topn):
    results = []
    for u in users:
        try:
            results.append((u, evaluate_user(est, u, tests[u], Ks, topn)))
        except Exception as exc:
            raise ExperimentError(f"user {u}: {exc}") from exc
    return results


def _aggregate(algorithm: str, split: TrainTestSplit, per_user: list, Ks, topn) -> list[ResultRow]:
    rows = []
    for K in sorted(Ks):
        for prefix in METRIC_FUNCS:
            for n in sorted(topn):
                metric = f"{prefix}@{n}"
                vals = [res[K, metric] for _, res in per_user if prefix != "R" or res["relevant"]]
                rows.append(ResultRow(algorithm, split.T, split.index, K, metric,
                                      float(np.mean(vals)) if vals else float("nan"), len(vals)))
    return rows


def evaluate_split(split: TrainTestSplit, algorithm: str, cfg: ExperimentConfig,
                   targets: Sequence[int] | None = None) -> list[ResultRow]:
    est = make_estimator(algorithm, cfg).fit(split.train)
    tests = split.test_by_user()
    targets = list(targets if targets is not None else sorted(split.eligible_users))
    chunks = [c.tolist() for c in np.array_split(np.asarray(targets), cfg.workers) if len(c)]
    try:
        if cfg.workers == 1:
            batches = [_evaluate_batch(est, targets, tests, cfg.K, cfg.topn)]
        else:
            batches = Parallel(n_jobs=cfg.workers)(
                delayed(_evaluate_batch)(est, c, tests, cfg.K, cfg.topn) for c in chunks)
    except ExperimentError as exc:
        raise ExperimentError(f"{algorithm} T={split.T} split={split.index}: {exc}") from exc
    per_user = sorted((r for b in batches for r in b), key=lambda r: r[0])
    return _aggregate(algorithm, split, per_user, cfg.K, cfg.topn)


def run_experiment(cfg: ExperimentConfig, dataset: RatingDataset | None = None) -> list[ResultRow]:
    cfg.validate()
    ds = dataset if dataset is not None else load_movielens(cfg.data)
    rows: list[ResultRow] = []
    for T in cfg.T:
        for split in make_splits(ds, int(T), cfg.n_splits, cfg.seed):
            targets = sample_targets(split, cfg.sample_users, cfg.seed)
            for algorithm in cfg.algorithms:
                start = time.perf_counter()
                rows.extend(evaluate_split(split, algorithm, cfg, targets))
                log.info("%s T=%d split=%d: %d users in %.1fs", algorithm, T, split.index,
                         len(targets), time.perf_counter() - start)
    return sorted(rows)


def summarize(rows: Sequence[ResultRow]) -> dict:
    """Mean over splits keyed by ``(algorithm, T, K, metric)``."""
    acc = defaultdict(list)
    for r in rows:
        acc[r.algorithm, r.T, r.K, r.metric].append(r.value)
    return {k: float(np.mean(v)) for k, v in sorted(acc.items())}


def emit_report(rows: Sequence[ResultRow], out_dir: str | Path, label: str = "") -> tuple[Path, Path]:
    """Write ``results.csv`` (one row per algorithm/T/split/K/metric) and ``summary.txt``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "results.csv"
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(RESULT_FIELDS)
        for r in rows:
            w.writerow([r.algorithm, r.T, r.split, r.K, r.metric, repr(r.value), r.n_users])
    summary = summarize(rows)
    metrics = sorted({k[3] for k in summary}, key=lambda m: (m[0] != "N", m[0], int(m[2:])))
    lines = [f"# {label}" if label else "# mean over splits"]
    lines.append(" ".join(["algorithm", "T", "K"] + metrics))
    for algo, T, K in sorted({k[:3] for k in summary}):
        vals = [f"{summary[algo, T, K, m]:.4f}" if (algo, T, K, m) in summary else "-" for m in metrics]
        lines.append(" ".join([algo, str(T), str(K)] + vals))
    summary_path = out_dir / "summary.txt"
    summary_path.write_text("\n".join(lines) + "\n")
    return csv_path, summary_path


def read_results_csv(path: str | Path) -> list[ResultRow]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != RESULT_FIELDS:
            raise ValueError(f"unexpected header {reader.fieldnames}")
        return [ResultRow(r["algorithm"], int(r["T"]), int(r["split"]), int(r["K"]), r["metric"],
                          float(r["value"]), int(r["n_users"])) for r in reader]


@dataclass(frozen=True)
class SimilarityDistribution:
    algorithm: str
    edges: np.ndarray
    counts: np.ndarray
    n_pairs: int
    zero_fraction: float
    near_zero_fraction: float
    sampled: bool

    def rows(self) -> list[dict]:
        frac = self.counts / max(self.n_pairs, 1)
        return [dict(algorithm=self.algorithm, bin_lo=float(lo), bin_hi=float(hi), count=int(c),
                     fraction=float(f))
                for lo, hi, c, f in zip(self.edges[:-1], self.edges[1:], self.counts, frac)]


def pair_similarities(S: np.ndarray, max_pairs: int | None = 10**6, seed: int = 0) -> tuple[np.ndarray, bool]:
    """Off-diagonal entries of ``S``; uniformly sampled when there are more than ``max_pairs``."""
    n = len(S)
    total = n * (n - 1)
    if max_pairs is None or total <= max_pairs:
        return S[~np.eye(n, dtype=bool)], False
    rng = np.random.default_rng(seed)
    i = rng.integers(0, n, size=max_pairs)
    j = (i + rng.integers(1, n, size=max_pairs)) % n
    return S[i, j], True


def similarity_distribution(split: TrainTestSplit, algorithm: str, cfg: ExperimentConfig | None = None,
                            bins: int = 20, near_zero: float = 0.01,
                            max_pairs: int | None = 10**6) -> SimilarityDistribution:
    """Histogram of user-user similarities over ``[-1, 1]`` for one split."""
    cfg = cfg or ExperimentConfig()
    est = make_estimator(algorithm, cfg).fit(split.train)
    return distribution_of(est.similarity_, algorithm, bins, near_zero, max_pairs, cfg.seed)


def distribution_of(S: np.ndarray, algorithm: str, bins: int = 20, near_zero: float = 0.01,
                    max_pairs: int | None = 10**6, seed: int = 0) -> SimilarityDistribution:
    vals, sampled = pair_similarities(S, max_pairs, seed)
    edges = np.linspace(-1.0, 1.0, bins + 1)
    counts, _ = np.histogram(vals, bins=edges)
    return SimilarityDistribution(
        algorithm=algorithm, edges=edges, counts=counts, n_pairs=len(vals),
        zero_fraction=float(np.mean(vals == 0)) if len(vals) else 0.0,
        near_zero_fraction=float(np.mean(np.abs(vals) < near_zero)) if len(vals) else 0.0,
        sampled=sampled,
    )


def kth_neighbor_curve(split: TrainTestSplit, algorithm: str, targets: Sequence[int], K_max: int,
                       cfg: ExperimentConfig | None = None) -> list[tuple[int, int, float]]:
    """``(target, k, similarity of k-th nearest neighbour)`` for ``k = 1..K_max``."""
    cfg = cfg or ExperimentConfig()
    est = make_estimator(algorithm, cfg).fit(split.train)
    return neighbor_curve_of(est, targets, K_max)


def neighbor_curve_of(est: NeighborRanker, targets: Sequence[int], K_max: int) -> list[tuple[int, int, float]]:
    rows = []
    for t in targets:
        for k, (_, s) in enumerate(est.neighbors(int(t), K_max).members, start=1):
            rows.append((int(t), k, s))
    return rows


def count_ties(curve: Sequence[tuple[int, int, float]]) -> int:
    """Adjacent equal similarities within each target's curve."""
    ties = 0
    by_target = defaultdict(list)
    for t, _, s in curve:
        by_target[t].append(s)
    for sims in by_target.values():
        ties += int(np.sum(np.diff(sims) == 0))
    return ties


def config_dict(cfg: ExperimentConfig) -> dict:
    d = asdict(cfg)
    return {k: (list(v) if isinstance(v, tuple) else str(v) if isinstance(v, Path) else v)
            for k, v in d.items()}
