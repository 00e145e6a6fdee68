"""Command-line interface.

Exit status: 0 on success, 1 on usage errors, 2 on runtime or numerical
errors (message on stderr).
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from .clustering import CLUSTERING_METHODS
from .dcmm import EXPERIMENT_GRIDS
from .errors import MixedIscError
from .harness import (DEFAULT_C_GRID, PROFILES, ExperimentConfig, ResultTable, ingest_network,
                      read_labels, read_membership_csv, read_params_config, run_experiment,
                      run_params, tau_sweep, write_membership_csv)
from .isc import NORM_MODES, MixedIscSettings, mixed_isc
from .linalg import D_MODES
from .metrics import MATRIX_SOURCES, classify_signal, hard_error_rate, mixed_hamming, summary_stats


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _str_list(text: str) -> list[str]:
    return [v for v in text.replace(",", " ").split()]


def _algorithm_flags(p):
    g = p.add_argument_group("algorithm")
    g.add_argument("--c", type=float, default=0.1, help="tau = c * d (default 0.1)")
    g.add_argument("--d-mode", choices=D_MODES, default="midrange")
    g.add_argument("--clustering", choices=CLUSTERING_METHODS, default="kmeans")
    g.add_argument("--norm", choices=NORM_MODES, default="l1")
    g.add_argument("--restarts", type=int, default=10)
    g.add_argument("--seed", type=int, default=42)


def _settings(args) -> MixedIscSettings:
    if args.restarts < 1:
        raise UsageError("--restarts must be >= 1")
    if args.c < 0:
        raise UsageError("--c must be nonnegative")
    return MixedIscSettings(c=args.c, d_mode=args.d_mode, clustering=args.clustering,
                            restarts=args.restarts, norm_mode=args.norm, seed=args.seed)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mixedisc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("detect", help="estimate memberships of a network")
    p.add_argument("network", help="edge-list file")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--out", help="membership CSV (default: stdout)")
    p.add_argument("--diagnostics", help="diagnostics JSON file (default: stderr)")
    _algorithm_flags(p)

    p = sub.add_parser("simulate", help="run a simulation design")
    p.add_argument("--experiment", type=int, choices=sorted(EXPERIMENT_GRIDS))
    p.add_argument("--params", help="DCMM config file instead of a published design")
    p.add_argument("--grid", type=_float_list, help="grid values (default: published grid)")
    p.add_argument("--reps", type=int)
    p.add_argument("--n", type=int, help="node count override")
    p.add_argument("--profile", choices=sorted(PROFILES), default="full")
    p.add_argument("--fix-theta", action="store_true", help="same theta across repetitions")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--timing", action="store_true", help="fill the seconds column")
    p.add_argument("--out", help="output directory (default: results CSV on stdout)")
    _algorithm_flags(p)

    p = sub.add_parser("classify", help="weak/strong signal classification")
    p.add_argument("network")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--matrix", choices=MATRIX_SOURCES, default="adjacency")
    p.add_argument("--c", type=float, default=0.1)
    p.add_argument("--d-mode", choices=D_MODES, default="midrange")

    p = sub.add_parser("stats", help="network summary statistics")
    p.add_argument("network")
    p.add_argument("--truth", help="ground-truth membership CSV")
    p.add_argument("--k", type=int)

    p = sub.add_parser("sweep-tau", help="sensitivity to the regularizer")
    p.add_argument("network", nargs="?", help="edge-list file (or use --experiment)")
    p.add_argument("--truth", help="ground-truth membership CSV")
    p.add_argument("--k", type=int)
    p.add_argument("--experiment", type=int, choices=sorted(EXPERIMENT_GRIDS))
    p.add_argument("--grid-value", type=float, help="design grid point to sweep at")
    p.add_argument("--reps", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--profile", choices=sorted(PROFILES), default="full")
    p.add_argument("--c-grid", type=_float_list, default=DEFAULT_C_GRID)
    p.add_argument("--d-modes", type=_str_list, default=["midrange"])
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--timing", action="store_true")
    p.add_argument("--out", help="output directory (default: results CSV on stdout)")
    _algorithm_flags(p)

    p = sub.add_parser("eval", help="score an estimate against ground truth")
    p.add_argument("estimate", help="membership CSV")
    p.add_argument("truth", nargs="?", help="ground-truth membership CSV")
    p.add_argument("--labels", help="hard-label file instead of a membership CSV")
    return parser


def _write_tables(table: ResultTable, args, stdout):
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "results.csv").write_text(table.results_csv(timing=args.timing))
        (out / "aggregate.csv").write_text(table.aggregate_csv())
        errors = table.errors()
        if errors:
            (out / "errors.json").write_text(json.dumps(errors, indent=2) + "\n")
    else:
        stdout.write(table.results_csv(timing=args.timing))
    for e in table.errors():
        print(f"warning: grid_value={e['grid_value']} rep={e['rep']}: {e['error']}", file=sys.stderr)


def cmd_detect(args, stdout):
    net = ingest_network(args.network)
    settings = _settings(args)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        res = mixed_isc(net.A, args.k, settings)
    diag = res.diagnostics()
    diag["fallback_nodes"] = [net.node_ids[i] for i in res.fallback_nodes]
    diag["zero_embedding_rows"] = [net.node_ids[i] for i in res.embedding.flagged]
    if caught:
        diag["warnings"] = [str(w.message) for w in caught]
    text = write_membership_csv(res.Pi_hat, node_ids=net.node_ids)
    if args.out:
        Path(args.out).write_text(text)
    else:
        stdout.write(text)
    block = json.dumps(diag, indent=2) + "\n"
    if args.diagnostics:
        Path(args.diagnostics).write_text(block)
    else:
        sys.stderr.write(block)


def cmd_simulate(args, stdout):
    settings = _settings(args)
    if args.params:
        reps = args.reps or PROFILES[args.profile]["repetitions"]
        params = read_params_config(args.params, seed=args.seed)
        table = run_params(params, reps, args.seed, settings, workers=args.workers)
    else:
        if args.experiment is None:
            raise UsageError("simulate: one of --experiment or --params is required")
        config = ExperimentConfig.from_profile(
            args.experiment, args.profile, grid=tuple(args.grid or ()), repetitions=args.reps,
            base_seed=args.seed, settings=settings, n=args.n, fix_theta=args.fix_theta,
        )
        table = run_experiment(config, workers=args.workers)
    _write_tables(table, args, stdout)


def cmd_classify(args, stdout):
    net = ingest_network(args.network)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        cls = classify_signal(net.A, args.k, args.matrix, args.c, args.d_mode)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    stdout.write(
        f"matrix={cls.matrix_source}\n"
        f"lambda_K={cls.lambda_K:.10g}\n"
        f"lambda_K+1={cls.lambda_K1:.10g}\n"
        f"gap={cls.ratio_gap:.4f}\n"
        f"signal={'weak' if cls.is_weak else 'strong'}\n"
    )


def cmd_stats(args, stdout):
    net = ingest_network(args.network, args.truth)
    s = summary_stats(net.A, net.Pi, args.k)
    lines = [f"n={s.n}", f"K={s.K if s.K is not None else ''}", f"mean_degree={s.mean_degree:.6g}",
             f"density={s.density:.6g}"]
    if s.overlap_fraction is not None:
        lines.append(f"overlap_fraction={s.overlap_fraction:.6g}")
    stdout.write("\n".join(lines) + "\n")


def cmd_sweep(args, stdout):
    settings = _settings(args)
    if args.experiment is not None:
        config = ExperimentConfig.from_profile(
            args.experiment, args.profile,
            grid=(args.grid_value,) if args.grid_value is not None else (),
            repetitions=args.reps, base_seed=args.seed, settings=settings, n=args.n,
        )
        table = tau_sweep(config, c_grid=args.c_grid, d_modes=args.d_modes,
                          settings=settings, workers=args.workers)
    elif args.network:
        if args.k is None:
            raise UsageError("sweep-tau: --k is required with a network")
        net = ingest_network(args.network, args.truth)
        table = tau_sweep(net.A, args.k, args.c_grid, args.d_modes, Pi=net.Pi,
                          settings=settings, workers=args.workers)
    else:
        raise UsageError("sweep-tau: give a network file or --experiment")
    _write_tables(table, args, stdout)


def cmd_eval(args, stdout):
    if not (args.labels or args.truth):
        raise UsageError("eval: give a truth CSV or --labels")
    # rows were rounded to 12 digits on write; renormalize both sides alike
    est_ids, est = read_membership_csv(args.estimate, normalize=True)
    if args.labels:
        labels = read_labels(args.labels, est_ids)
        truth = None
    else:
        truth_ids, truth = read_membership_csv(args.truth, normalize=True)
        index = {v: i for i, v in enumerate(truth_ids)}
        missing = [v for v in est_ids if v not in index]
        if missing or len(truth_ids) != len(est_ids):
            raise MixedIscError(f"node sets differ between estimate and truth (e.g. {missing[:5]})")
        truth = truth[[index[v] for v in est_ids]]
        labels = np.argmax(truth, axis=1)
    if truth is not None:
        stdout.write(f"mixed_hamming={mixed_hamming(est, truth):.10g}\n")
    count, rate = hard_error_rate(est, labels)
    stdout.write(f"hard_errors={count}/{len(labels)}\nhard_error_rate={rate:.10g}\n")


COMMANDS = {
    "detect": cmd_detect,
    "simulate": cmd_simulate,
    "classify": cmd_classify,
    "stats": cmd_stats,
    "sweep-tau": cmd_sweep,
    "eval": cmd_eval,
}


def main(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError(parser.format_usage().strip())
        COMMANDS[args.command](args, stdout)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except (MixedIscError, OSError, ValueError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
