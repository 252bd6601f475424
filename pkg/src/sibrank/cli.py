"""Command line entry point: ``sibrank run`` and ``sibrank diag ...``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from sibrank.dataset import DatasetError, load_movielens, make_splits
from sibrank.harness import (
    ALGORITHMS,
    ExperimentConfig,
    config_dict,
    count_ties,
    emit_report,
    kth_neighbor_curve,
    run_experiment,
    sample_targets,
    similarity_distribution,
)

log = logging.getLogger("sibrank")


def int_list(text: str) -> list[int]:
    """``"10,30,50"`` or ``"10:100:10"`` (inclusive stop) -> list of ints."""
    try:
        if ":" in text:
            parts = [int(p) for p in text.split(":")]
            if len(parts) == 2:
                parts.append(1)
            start, stop, step = parts
            if step <= 0:
                raise ValueError
            return list(range(start, stop + 1, step))
        return [int(p) for p in text.split(",") if p]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a list like 10,30,50 or 10:100:10, got {text!r}")


def algo_list(text: str) -> list[str]:
    algos = [a.strip().lower() for a in text.split(",") if a.strip()]
    bad = [a for a in algos if a not in ALGORITHMS]
    if bad or not algos:
        raise argparse.ArgumentTypeError(f"algorithms must be from {','.join(ALGORITHMS)}")
    return algos


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", required=True, help="MovieLens u.data file")
    p.add_argument("--alpha", type=float, default=0.85, help="SRank damping factor")
    p.add_argument("--algo", type=algo_list, default=list(ALGORITHMS))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sibrank", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="evaluate algorithms over splits and neighbourhood sizes")
    _common(run)
    run.add_argument("--T", type=int_list, default=[10, 30, 50])
    run.add_argument("--splits", type=int, default=5)
    run.add_argument("--K", type=int_list, default=list(range(10, 101, 10)))
    run.add_argument("--topn", type=int_list, default=[3, 5, 10])
    run.add_argument("--sample-users", type=int, default=None)
    run.add_argument("--eq11-denominator", choices=["judged", "all"], default="judged")
    run.add_argument("--workers", type=int, default=1)

    diag = sub.add_parser("diag", help="similarity diagnostics")
    dsub = diag.add_subparsers(dest="diag", required=True)
    dist = dsub.add_parser("similarity-dist", help="histogram of user-user similarities")
    _common(dist)
    dist.add_argument("--T", type=int, default=10)
    dist.add_argument("--split", type=int, default=0)
    dist.add_argument("--bins", type=int, default=20)
    dist.add_argument("--max-pairs", type=int, default=10**6, help="0 for exact all-pairs")
    knn = dsub.add_parser("knn-curve", help="similarity of the k-th nearest neighbour")
    _common(knn)
    knn.add_argument("--T", type=int, default=10)
    knn.add_argument("--split", type=int, default=0)
    knn.add_argument("--targets", type=int, default=3, help="number of random target users")
    knn.add_argument("--kmax", type=int, default=100)
    return parser


def _split(args):
    ds = load_movielens(args.data)
    return make_splits(ds, args.T, args.split + 1, args.seed)[args.split]


def cmd_run(args) -> int:
    cfg = ExperimentConfig(
        data=args.data, T=args.T, n_splits=args.splits, K=args.K, topn=args.topn,
        alpha=args.alpha, algorithms=args.algo, seed=args.seed, workers=args.workers,
        out=args.out, sample_users=args.sample_users, denominator=args.eq11_denominator,
    )
    rows = run_experiment(cfg)
    label = f"sampled run: {args.sample_users} users per split" if args.sample_users else "all eligible users"
    csv_path, summary_path = emit_report(rows, args.out, label=label)
    Path(args.out, "config.json").write_text(json.dumps(config_dict(cfg), indent=2) + "\n")
    print(summary_path.read_text(), end="")
    print(f"wrote {csv_path}")
    return 0


def cmd_similarity_dist(args) -> int:
    split = _split(args)
    cfg = ExperimentConfig(alpha=args.alpha, seed=args.seed)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["algorithm", "T", "split", "bin_lo", "bin_hi", "count", "fraction"])
        for algo in args.algo:
            dist = similarity_distribution(split, algo, cfg, bins=args.bins,
                                           max_pairs=args.max_pairs or None)
            for r in dist.rows():
                w.writerow([algo, args.T, args.split, r["bin_lo"], r["bin_hi"], r["count"], r["fraction"]])
            tag = " (sampled pairs)" if dist.sampled else ""
            print(f"{algo}: pairs={dist.n_pairs}{tag} zero={dist.zero_fraction:.4f} "
                  f"near_zero={dist.near_zero_fraction:.4f}")
    return 0


def cmd_knn_curve(args) -> int:
    split = _split(args)
    cfg = ExperimentConfig(alpha=args.alpha, seed=args.seed)
    targets = sample_targets(split, args.targets, args.seed)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["algorithm", "target", "k", "similarity"])
        for algo in args.algo:
            curve = kth_neighbor_curve(split, algo, targets, args.kmax, cfg)
            for t, k, s in curve:
                w.writerow([algo, t, k, repr(s)])
            print(f"{algo}: targets={targets} adjacent ties={count_ties(curve)}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handlers = {"run": cmd_run, "similarity-dist": cmd_similarity_dist, "knn-curve": cmd_knn_curve}
    try:
        return handlers[getattr(args, "diag", None) or args.command](args)
    except (DatasetError, ValueError, RuntimeError, OSError) as exc:
        print(f"sibrank: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
