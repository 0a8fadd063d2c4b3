"""Command-line interface: simulate samples, estimate sensitivity
measures, run RMSE studies and print analytical values."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .measures import MEASURES
from .simulators import GAMMA_RATIO_2, LINEAR_21, oracle_values
from .study import (ESTIMATOR_TOKENS, RunConfig, _SIMULATORS, generate_sample,
                    persist, rmse_study, run, write_sample_csv)


def _comma_list(text):
    return tuple(part.strip() for part in text.split(",") if part.strip())


def _comma_ints(text):
    return tuple(int(part) for part in _comma_list(text))


def _add_common(parser, with_m=True):
    parser.add_argument("--simulator", choices=sorted(_SIMULATORS),
                        help="built-in simulator")
    parser.add_argument("--input-csv", metavar="PATH",
                        help="given-data sample CSV (x1,..,xk,y header)")
    parser.add_argument("--n", type=_comma_ints, default=(300,),
                        help="sample size (comma list allowed for study)")
    if with_m:
        parser.add_argument("--M", type=_comma_ints, default=(),
                            help="partition sizes, comma separated")
    parser.add_argument("--estimators", type=_comma_list,
                        default=("FreqPdf",),
                        help="subset of %s" % ",".join(ESTIMATOR_TOKENS))
    parser.add_argument("--measures", type=_comma_list, default=MEASURES,
                        help="subset of eta,delta,beta")
    parser.add_argument("--S", type=int, default=100, dest="n_draws",
                        help="posterior draws / augmentation replicates")
    parser.add_argument("--burn-in", type=int, default=None,
                        help="MCMC burn-in (default 10n)")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--inputs", type=_comma_ints, default=None,
                        help="1-based input numbers to analyze "
                             "(default all)")
    parser.add_argument("--out", metavar="DIR", default=None,
                        help="output directory for persisted artifacts")
    parser.add_argument("--resample", choices=("bootstrap", "fresh"),
                        default="bootstrap",
                        help="replication mode for studies")
    parser.add_argument("--sequence",
                        choices=("quasi-random", "pseudo-random"),
                        default="quasi-random")


def _config_from(args):
    inputs = None
    if args.inputs is not None:
        inputs = tuple(i - 1 for i in args.inputs)
        if any(i < 0 for i in inputs):
            raise SystemExit("--inputs are 1-based input numbers")
    return RunConfig(
        simulator=args.simulator,
        input_csv=args.input_csv,
        inputs=inputs,
        estimators=args.estimators,
        measures=args.measures,
        n=args.n if len(args.n) > 1 else args.n[0],
        m_list=getattr(args, "M", ()),
        n_draws=args.n_draws,
        burn_in=args.burn_in,
        seed=args.seed,
        out_dir=args.out,
        resample=args.resample,
        sequence=args.sequence.replace("-", "_"),
    )


def _print_rows(rows):
    header = ("estimator", "measure", "input", "n", "M", "point",
              "lo95", "hi95", "rmse_pct")
    print("  ".join("%-9s" % h for h in header))
    for row in rows:
        cells = []
        for name in header:
            value = getattr(row, name)
            if value is None:
                cells.append("%-9s" % "-")
            elif isinstance(value, float):
                cells.append("%-9.4f" % value)
            else:
                cells.append("%-9s" % value)
        print("  ".join(cells))


def cmd_simulate(args):
    if args.simulator is None:
        raise SystemExit("simulate needs --simulator")
    n = args.n[0]
    spec = _SIMULATORS[args.simulator]()
    sample = generate_sample(spec, n, seed=args.seed,
                             sequence=args.sequence.replace("-", "_"))
    out_dir = Path(args.out or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / ("sample_%s_n%d_seed%d.csv"
                      % (args.simulator, n, args.seed))
    write_sample_csv(sample, path)
    print(path)
    return 0


def cmd_estimate(args):
    config = _config_from(args)
    try:
        result = run(config)
    except Exception as exc:
        if config.out_dir is not None:
            from .study import StudyResult
            persist(config, StudyResult(), status="failed", error=exc)
        print("error: %s" % exc, file=sys.stderr)
        return 1
    _print_rows(result.rows)
    return 0


def cmd_study(args):
    config = _config_from(args)
    try:
        result = rmse_study(config, replicates=args.replicates)
    except Exception as exc:
        if config.out_dir is not None:
            from .study import StudyResult
            persist(config, StudyResult(), status="failed", error=exc)
        print("error: %s" % exc, file=sys.stderr)
        return 1
    _print_rows(result.rows)
    return 0


def cmd_oracle(args):
    if args.simulator is None:
        raise SystemExit("oracle needs --simulator")
    spec = _SIMULATORS[args.simulator]()
    table = oracle_values(spec)
    print("input  eta    delta  beta")
    for i in range(spec.k):
        print("x%-4d  %.3f  %.3f  %.3f"
              % (i + 1, table.eta[i], table.delta[i], table.beta[i]))
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="senskit",
        description="Probabilistic sensitivity measures from a single "
                    "input/output sample.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="emit a sample CSV")
    _add_common(p, with_m=False)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate",
                       help="run estimators on a simulator or CSV sample")
    _add_common(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("study", help="RMSE replication study over (n, M)")
    _add_common(p)
    p.add_argument("--replicates", type=int, default=100)
    p.set_defaults(func=cmd_study)

    p = sub.add_parser("oracle", help="print analytical measure values")
    p.add_argument("--simulator", choices=sorted(_SIMULATORS), required=True)
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
