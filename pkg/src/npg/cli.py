"""Command-line entry point: ``npg simulate | fit | bootstrap``.

Exit codes: 0 success, 2 usage or configuration error, 3 data error,
4 numerical failure.
"""

import argparse
import logging
import sys

import numpy as np

from . import __version__
from .errors import (ConfigError, ConstantColumnError, DataError, DimensionMismatch,
                     InvalidInput, LPError, NonpositiveResidual, NumericalFailure,
                     PilotRequired, PositiveDefinitenessError, SingularSubmatrix, NpgError)
from .estimators import ESTIMATOR_NAMES, get_estimator
from .harness import (bootstrap_stability, fit_data, header_lines, load_config, read_csv,
                      run_simulation, write_fit, write_simulation, write_stability)
from .tuning import FOLDS, GRID_RATIO, GRID_SIZE

log = logging.getLogger("npg")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _Usage("%s: error: %s" % (self.prog, message))


class _Usage(Exception):
    pass


def _exit_code(exc):
    if isinstance(exc, (_Usage, ConfigError, PilotRequired)):
        return EXIT_USAGE
    if isinstance(exc, (DataError, ConstantColumnError, DimensionMismatch)):
        return EXIT_DATA
    if isinstance(exc, (LPError, NumericalFailure, NonpositiveResidual,
                        PositiveDefinitenessError, SingularSubmatrix, np.linalg.LinAlgError)):
        return EXIT_NUMERIC
    if isinstance(exc, InvalidInput):
        return EXIT_USAGE
    return EXIT_NUMERIC


def _tuning_args(p):
    p.add_argument("--folds", type=int, default=FOLDS, help="CV folds (default %(default)s)")
    p.add_argument("--grid-size", type=int, default=GRID_SIZE)
    p.add_argument("--grid-ratio", type=float, default=GRID_RATIO)
    p.add_argument("--seed", type=int, default=0)


def build_parser():
    parser = _Parser(prog="npg", description="Rank-based sparse graphical model estimation.")
    parser.add_argument("--version", action="version", version="npg " + __version__)
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sim = sub.add_parser("simulate", help="run a simulation study from a JSON config")
    sim.add_argument("--config", required=True)
    sim.add_argument("--out", help="output directory (overrides the config's 'out')")
    sim.add_argument("--workers", type=int, help="parallel worker processes")

    fit = sub.add_parser("fit", help="fit one estimator to a CSV data file")
    fit.add_argument("--data", required=True)
    fit.add_argument("--estimator", required=True)
    how = fit.add_mutually_exclusive_group(required=True)
    how.add_argument("--lambda", dest="lam", type=float)
    how.add_argument("--cv", action="store_true", help="choose lambda by cross-validation")
    fit.add_argument("--lambda-pilot", type=float, help="pilot penalty of adaptive estimators")
    fit.add_argument("--hard-threshold", type=float, help="CLIME off-diagonal hard threshold")
    fit.add_argument("--log-transform", action="store_true", help="take logs of the data first")
    fit.add_argument("--kendall", action="store_true", help="use Kendall's tau instead of Spearman")
    fit.add_argument("--out", required=True, help="output prefix")
    _tuning_args(fit)

    boot = sub.add_parser("bootstrap", help="bootstrap edge-selection stability")
    boot.add_argument("--data", required=True)
    boot.add_argument("--estimator", required=True)
    boot.add_argument("--B", type=int, default=100, help="resamples (default %(default)s)")
    boot.add_argument("--keep", type=int, default=80,
                      help="minimum selection count for a stable edge (default %(default)s)")
    boot.add_argument("--log-transform", action="store_true")
    boot.add_argument("--out", help="output CSV (default: standard output)")
    _tuning_args(boot)
    return parser


def _estimator(args):
    if args.estimator.startswith("R-MB"):
        get_estimator(args.estimator)  # raises with the explanation
    if args.estimator not in ESTIMATOR_NAMES:
        raise _Usage("unknown estimator %r; expected one of %s"
                     % (args.estimator, ", ".join(ESTIMATOR_NAMES)))
    est = get_estimator(args.estimator)
    if est.oracle_only:
        raise _Usage("%s runs only on simulated latent Gaussian data (npg simulate)" % est.name)
    opts = {}
    if getattr(args, "hard_threshold", None) is not None:
        opts["hard_threshold"] = args.hard_threshold
    if getattr(args, "kendall", False):
        opts["rank_kind"] = "kendall"
    return get_estimator(args.estimator, **opts) if opts else est


def _cmd_simulate(args):
    cfg = load_config(args.config)
    from dataclasses import replace
    if args.workers:
        cfg = replace(cfg, workers=args.workers)
    out = args.out or cfg.out
    if not out:
        raise _Usage("no output directory: pass --out or set 'out' in the config")
    result = run_simulation(cfg)
    write_simulation(result, out)
    if result.failures:
        log.warning("%d estimator fits failed and were excluded", len(result.failures))
    return EXIT_OK


def _cmd_fit(args):
    est = _estimator(args)
    if est.adaptive and args.lam is not None and args.lambda_pilot is None:
        raise _Usage("--estimator %s with --lambda needs --lambda-pilot" % est.name)
    data = read_csv(args.data, args.log_transform)
    res = fit_data(data, est, lam=args.lam, pilot_lambda=args.lambda_pilot, folds=args.folds,
                   seed=args.seed, grid_size=args.grid_size, grid_ratio=args.grid_ratio)
    extra = ["estimator=%s lambda=%.6g" % (est.name, res.lam)]
    if res.pilot_lambda is not None:
        extra.append("lambda_pilot=%.6g" % res.pilot_lambda)
    write_fit(res, args.out, header_lines(_digest(vars(args)), args.seed, extra))
    return EXIT_OK


def _cmd_bootstrap(args):
    if args.B < 10:
        raise _Usage("--B must be at least 10")
    if not 0 < args.keep <= args.B:
        raise _Usage("--keep must lie in 1..B (got %d with B=%d)" % (args.keep, args.B))
    est = _estimator(args)
    data = read_csv(args.data, args.log_transform)
    res = bootstrap_stability(data, est, args.B, args.keep, args.seed, args.folds,
                              args.grid_size, args.grid_ratio)
    head = header_lines(_digest(vars(args)), args.seed,
                        ["estimator=%s B=%d keep=%d failures=%d"
                         % (est.name, args.B, args.keep, res.failures)])
    write_stability(res, args.out if args.out else sys.stdout, head)
    return EXIT_OK


def _digest(d):
    import hashlib
    import json
    keep = {k: v for k, v in d.items() if k not in ("out", "verbose")}
    return hashlib.sha256(json.dumps(keep, sort_keys=True, default=str).encode()).hexdigest()[:16]


_COMMANDS = {"simulate": _cmd_simulate, "fit": _cmd_fit, "bootstrap": _cmd_bootstrap}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _Usage as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _COMMANDS[args.command](args)
    except (_Usage, NpgError, np.linalg.LinAlgError, OSError) as exc:
        code = EXIT_DATA if isinstance(exc, OSError) else _exit_code(exc)
        print("npg %s: error: %s" % (args.command, exc), file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
