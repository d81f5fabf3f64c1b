"""
Command-line entry point.

Exit codes: 0 success, 1 usage or config error, 2 data error.  Results go to
standard output, warnings to standard error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from collabknn.config import ConfigError, load_config
from collabknn.estimator import estimate
from collabknn.formats import (
    DataFormatError,
    format_row,
    parse_query,
    read_ratings_matrix,
    read_results,
    write_ratings_matrix,
    write_results,
)
from collabknn.harness import convergence_study, rate_fit, simulate_replication
from collabknn.similarity import PENALTY_MAPS, penalty_map

EXIT_USAGE = 1
EXIT_DATA = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def cmd_predict(args) -> int:
    ids, db = read_ratings_matrix(args.matrix, args.max_rating)
    query = parse_query(args.query, db.d, args.max_rating)
    n_resp = int(db.responders.sum())
    if args.k > n_resp:
        print(f"warning: k={args.k} exceeds the {n_resp} responders; prediction is 0", file=sys.stderr)
    print(f"{estimate(query, db, args.k, penalty_map(args.psi)):.6g}")
    return 0


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    exp = cfg.experiment(seed=args.seed)
    n = max(cfg.study.n_grid)
    query, db = simulate_replication(exp, n, 0)
    with open(args.out, "w", newline="") as fh:
        write_ratings_matrix(fh, db)
    # the query the snapshot was drawn for, in the format `predict --query` takes
    print(",".join(format_row(query.ratings)))
    return 0


def cmd_converge(args) -> int:
    cfg = load_config(args.config)
    exp = cfg.experiment(seed=args.seed, metric=args.metric)
    result = convergence_study(exp, cfg.study.n_grid, cfg.schedule(), cfg.study.replications,
                               workers=args.workers or cfg.study.workers)
    with open(args.out, "w", newline="") as fh:
        write_results(fh, result)
    f = result.fit
    print(f"slope={f.slope!r} intercept={f.intercept!r} r2={f.r_squared!r}")
    return 0


def cmd_ratefit(args) -> int:
    rows, _ = read_results(args.results)
    if len(rows) < 2:
        raise DataFormatError("rate fit needs at least 2 rows")
    try:
        f = rate_fit((r.n, r.mean_abs_err) for r in rows)
    except ValueError as e:
        raise DataFormatError(str(e)) from None
    print(f"slope={f.slope!r} intercept={f.intercept!r} r2={f.r_squared!r}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="collabknn", description="Cosine-type k-NN collaborative recommendation lab.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("predict", help="predict the target rating of one query user")
    sp.add_argument("matrix", type=Path, help="ratings matrix CSV")
    sp.add_argument("--query", required=True, help='comma-separated item ratings, e.g. "NA,3,3,4,5"')
    sp.add_argument("--k", type=int, default=1)
    sp.add_argument("--psi", choices=sorted(PENALTY_MAPS), default="identity")
    sp.add_argument("--max-rating", type=float, default=10.0, help="maximal rating s (default 10)")
    sp.set_defaults(func=cmd_predict)

    sp = sub.add_parser("simulate", help="export one simulated database at n = max(n_grid)")
    sp.add_argument("--config", required=True, type=Path)
    sp.add_argument("--out", required=True, type=Path)
    sp.add_argument("--seed", type=int, help="override study.master_seed")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("converge", help="Monte Carlo error over n_grid and log-log slope")
    sp.add_argument("--config", required=True, type=Path)
    sp.add_argument("--out", required=True, type=Path)
    sp.add_argument("--seed", type=int, help="override study.master_seed")
    sp.add_argument("--metric", choices=["l1", "l2"])
    sp.add_argument("--workers", type=int, help="override study.workers")
    sp.set_defaults(func=cmd_converge)

    sp = sub.add_parser("ratefit", help="fit a log-log slope to a results CSV")
    sp.add_argument("results", type=Path)
    sp.set_defaults(func=cmd_ratefit)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "k", 1) < 1:
        print("error: --k must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error:\n{e}", file=sys.stderr)
        return EXIT_USAGE
    except DataFormatError as e:
        print(f"data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
