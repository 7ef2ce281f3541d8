"""Command-line interface: run experiments, compare results, verify bounds.

Exit codes: 0 success, 1 usage error (bad flags, unknown algorithm,
non-comparable files), 2 runtime failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .bench import ExperimentConfig, run_experiment, summarize
from .core import COVERING_ZETA
from .verify import build_cover, check_concentration, check_design_bound

__all__ = ["main", "build_parser"]

# config-file key -> argparse dest; keys mirror the long flags
_CONFIG_KEYS = {
    "algo": "algo",
    "K": "K",
    "d": "d",
    "T": "T",
    "dist": "dist",
    "reps": "reps",
    "seed": "seed",
    "stride": "stride",
    "out": "out",
    "workers": "workers",
    "noise-sigma": "noise_sigma",
    "lambda": "lam",
    "c-rule": "c_rule",
    "delta": "delta",
    "design-tol": "design_tol",
    "rsoful-C": "rsoful_C",
    "rsoful-sigma": "rsoful_sigma",
    "theta-bound": "theta_bound",
    "ridge": "ridge",
}

_INT_DESTS = {"K", "d", "T", "reps", "seed", "stride", "workers"}
_FLOAT_DESTS = {
    "noise_sigma",
    "lam",
    "delta",
    "design_tol",
    "rsoful_C",
    "rsoful_sigma",
    "theta_bound",
    "ridge",
}


def build_parser(run_defaults: dict | None = None) -> argparse.ArgumentParser:
    """Build the CLI parser.

    ``run_defaults`` (values loaded from a ``--config`` file) replace the
    ``run`` subcommand's flag defaults, so explicit flags still win.
    """
    parser = argparse.ArgumentParser(
        prog="blae",
        description="Batched linear bandit benchmark: run, compare, verify.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one algorithm over replications")
    run_p.add_argument("--config", help="flat key=value file; flags override it")
    run_p.add_argument("--algo", default="blae", help="registered algorithm name")
    run_p.add_argument("--K", type=int, default=50, help="number of arms")
    run_p.add_argument("--d", type=int, default=5, help="feature dimension")
    run_p.add_argument("--T", type=int, default=100_000, help="horizon")
    run_p.add_argument("--dist", default="uniform", choices=("uniform", "normal"))
    run_p.add_argument("--reps", type=int, default=10, help="replications")
    run_p.add_argument("--seed", type=int, default=0, help="master seed")
    run_p.add_argument("--noise-sigma", type=float, default=1.0, dest="noise_sigma")
    run_p.add_argument("--stride", type=int, default=100, help="checkpoint stride")
    run_p.add_argument("--out", required=False, help="result file path")
    run_p.add_argument("--workers", type=int, default=None,
                       help="process count (default: BLAE_WORKERS or 1)")
    run_p.add_argument("--lambda", type=float, default=None, dest="lam",
                       help="ridge weight")
    run_p.add_argument("--c-rule", default=None, dest="c_rule",
                       help="exploration fraction rule: 'active-ratio' or a float")
    run_p.add_argument("--delta", type=float, default=None,
                       help="confidence level (default 1/T)")
    run_p.add_argument("--design-tol", type=float, default=None, dest="design_tol",
                       help="design certificate slack")
    run_p.add_argument("--rsoful-C", type=float, default=None, dest="rsoful_C",
                       help="rs-oful determinant trigger")
    run_p.add_argument("--rsoful-sigma", type=float, default=None, dest="rsoful_sigma",
                       help="rs-oful confidence-radius noise scale")
    run_p.add_argument("--theta-bound", type=float, default=None, dest="theta_bound",
                       help="rs-oful parameter-norm bound")
    run_p.add_argument("--ridge", type=float, default=None,
                       help="phaelim-d design regularization")
    if run_defaults:
        run_p.set_defaults(**run_defaults)

    sum_p = sub.add_parser("summarize", help="aligned comparison of result files")
    sum_p.add_argument("files", nargs="+", help="result files to compare")
    sum_p.add_argument("--out", help="also write the table to this path")

    ver_p = sub.add_parser("verify", help="run the bound and coverage checks")
    ver_p.add_argument("--check", default="all",
                       choices=("all", "concentration", "design", "cover"))
    ver_p.add_argument("--trials", type=int, default=10_000,
                       help="Monte Carlo trials per concentration cell")
    ver_p.add_argument("--instances", type=int, default=20,
                       help="random instances per design cell")
    ver_p.add_argument("--scale", type=float, default=1e4, help="design pull budget")
    ver_p.add_argument("--tol", type=float, default=1e-3, help="design slack")
    ver_p.add_argument("--zeta", type=float, default=COVERING_ZETA,
                       help="covering radius")
    ver_p.add_argument("--seed", type=int, default=0)

    rep_p = sub.add_parser("report", help="render comparison figures from result files")
    rep_p.add_argument("files", nargs="+", help="result files to render")
    rep_p.add_argument("--out-dir", dest="out_dir", default=None,
                       help="figure directory (default: beside the first file)")

    return parser


def _load_config_file(path: str) -> dict:
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key or not value:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        if key not in _CONFIG_KEYS:
            known = ", ".join(sorted(_CONFIG_KEYS))
            raise ValueError(f"{path}:{lineno}: unknown key {key!r} (known: {known})")
        dest = _CONFIG_KEYS[key]
        if dest in _INT_DESTS:
            values[dest] = int(value)
        elif dest in _FLOAT_DESTS:
            values[dest] = float(value)
        else:
            values[dest] = value
    return values


def _algo_params(args: argparse.Namespace) -> dict:
    """Collect only the algorithm options the user actually set."""
    algo = args.algo
    params: dict = {}
    if algo == "rs-oful":
        mapping = {"lam": "lam", "delta": "delta", "rsoful_C": "det_trigger",
                   "rsoful_sigma": "sigma", "theta_bound": "theta_bound"}
    elif algo == "phaelim-d":
        mapping = {"ridge": "ridge", "delta": "delta", "design_tol": "design_tol"}
    else:
        # blae and plug-ins share the core option names
        mapping = {"lam": "lam", "delta": "delta", "c_rule": "c_rule",
                   "design_tol": "design_tol"}
    for dest, key in mapping.items():
        value = getattr(args, dest, None)
        if value is not None:
            params[key] = value
    if "c_rule" in params:
        try:
            params["c_rule"] = float(params["c_rule"])
        except ValueError:
            pass
    return params


def _cmd_run(args: argparse.Namespace) -> int:
    config = ExperimentConfig(
        algorithm=args.algo,
        n_arms=args.K,
        dim=args.d,
        T=args.T,
        distribution=args.dist,
        replications=args.reps,
        master_seed=args.seed,
        noise_sigma=args.noise_sigma,
        checkpoint_stride=args.stride,
        output_path=args.out,
        algo_params=_algo_params(args),
    )
    records = run_experiment(config, workers=args.workers)
    final_round = max(r.round for r in records)
    finals = [r for r in records if r.round == final_round]
    mean_regret = float(np.mean([r.cum_regret for r in finals]))
    mean_batches = float(np.mean([r.batches for r in finals]))
    wall = float(sum(r.wall_time for r in finals))
    print(
        f"{args.algo}: {args.reps} replications of T={args.T} done in {wall:.2f}s; "
        f"mean final regret {mean_regret:.2f}, mean batches {mean_batches:.1f}"
    )
    if args.out:
        print(f"results written to {args.out} (+ .summary)")
    return 0


def _cmd_summarize(args: argparse.Namespace) -> int:
    table = summarize(args.files)
    print(table)
    if args.out:
        Path(args.out).write_text(table + "\n")
    return 0


def _cmd_verify(args: argparse.Namespace) -> int:
    failed = False

    if args.check in ("all", "concentration"):
        print("confidence-bound coverage:")
        for d in (2, 5, 10):
            for delta in (0.01, 0.05, 0.1):
                for lam in (0.1, 1.0):
                    rep = check_concentration(
                        d, 5 * d, lam, delta, args.trials, seed=args.seed
                    )
                    status = "pass" if rep.passed else "FAIL"
                    failed |= not rep.passed
                    print(
                        f"  d={d} delta={delta} lam={lam}: "
                        f"{rep.violations}/{rep.trials} violations "
                        f"(ceiling {rep.rate_ceiling:.4f}) {status}"
                    )

    if args.check in ("all", "design"):
        print("design leverage bound after rounding:")
        rng = np.random.default_rng(args.seed)
        for K, d in ((10, 2), (10, 5), (10, 10), (50, 2), (50, 5), (50, 10)):
            for c in (0.5, 1.0):
                sets = []
                for _ in range(args.instances):
                    X = rng.standard_normal((K, d))
                    sets.append(X / np.maximum(np.linalg.norm(X, axis=1, keepdims=True), 1.0))
                rep = check_design_bound(sets, lam=1.0, c=c, scale=args.scale, tol=args.tol)
                n_pass = sum(r.passed for r in rep.records)
                status = "pass" if rep.passed else "FAIL"
                failed |= not rep.passed
                print(f"  K={K} d={d} c={c}: {n_pass}/{len(rep.records)} instances {status}")

    if args.check in ("all", "cover"):
        print("sphere cover construction:")
        for d in (2, 3, 5):
            rep = build_cover(d, args.zeta, seed=args.seed)
            ok = rep.mc_coverage_ok and rep.status == "ok"
            failed |= not ok
            print(
                f"  d={d} zeta={args.zeta}: {rep.cardinality} centers "
                f"(size bound {rep.bound:.2f}), coverage "
                f"{'verified' if rep.mc_coverage_ok else 'FAILED'}, status {rep.status}"
            )

    return 2 if failed else 0


def _cmd_report(args: argparse.Namespace) -> int:
    from .plotting import render_report

    written = render_report(args.files, args.out_dir)
    for path in written:
        print(f"wrote {path}")
    return 0


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    try:
        # peek at --config so file values become the run flags' defaults;
        # explicit flags still override them
        peek = argparse.ArgumentParser(add_help=False)
        peek.add_argument("--config")
        config_path = peek.parse_known_args(argv)[0].config
        run_defaults = _load_config_file(config_path) if config_path else None
    except (ValueError, FileNotFoundError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    parser = build_parser(run_defaults)
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 0 for --help and 2 for usage problems; remap the latter
        return 0 if exc.code in (0, None) else 1
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "summarize":
            return _cmd_summarize(args)
        if args.command == "verify":
            return _cmd_verify(args)
        return _cmd_report(args)
    except (ValueError, FileNotFoundError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except (ArithmeticError, RuntimeError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
