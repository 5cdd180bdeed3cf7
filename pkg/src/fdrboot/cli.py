"""Command-line entry point.

    fdrboot simulate -s 1 -r 2000 -c 4 --seed 0
    fdrboot test -a US_tvalues.csv -x US_tvalues_null.csv --method ddb,bh
    fdrboot estimate --returns returns.csv --factors ff3.csv -a tvalues.csv -x nulls.csv
    fdrboot autocorr --returns returns.csv --max-lag 10

Exit codes: 0 success, 2 invalid input, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from fdrboot import io as fio
from fdrboot.factor_model import (
    DegeneratePortfolioError,
    autocorrelation,
    demean_factors,
    estimate_alphas,
    residual_bootstrap,
    residual_matrix,
)
from fdrboot.resampling import DdbootConfig
from fdrboot.simulation import (
    DISPLAY_NAMES,
    METHODS,
    apply_methods,
    get_scenario,
    run_monte_carlo,
    scenario_grid,
)

log = logging.getLogger("fdrboot")

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 2, 3


def _methods(value: str) -> list[str]:
    if value == "all":
        return list(METHODS)
    names = [m.strip().lower().replace("-", "_") for m in value.split(",") if m.strip()]
    for m in names:
        if m not in DISPLAY_NAMES:
            raise argparse.ArgumentTypeError(f"unknown method {m!r}; choose from {', '.join(METHODS)}")
    return names


def _level(value: str) -> float:
    q = float(value)
    if not 0 < q < 1:
        raise argparse.ArgumentTypeError("q must lie in (0, 1)")
    return q


def _positive(value: str) -> int:
    k = int(value)
    if k < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return k


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fdrboot", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--q", type=_level, default=0.05, help="target FDR level")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--method", type=_methods, default=list(METHODS),
                       help="comma-separated methods or 'all'")
        p.add_argument("--format", choices=("text", "csv", "json"), default="text")
        p.add_argument("-o", "--output", help="output file (default: stdout)")
        p.add_argument("-V", dest="V", type=_positive, default=20, help="outer samples for DDB")
        p.add_argument("-W", dest="W", type=_positive, default=500, help="inner samples for DDB")
        p.add_argument("-S", dest="S", type=_positive, default=20, help="bisection steps for DDB")
        p.add_argument("--boot-count", type=_positive, default=500, help="bootstrap size for YB and Storey-A")

    sim = sub.add_parser("simulate", help="Monte Carlo benchmark on synthetic scenarios")
    sim.add_argument("-s", "--scenario", default="1", help="scenario 1-9 or 'all'")
    sim.add_argument("-r", "--runs", type=_positive, default=2000)
    sim.add_argument("-c", "--workers", type=_positive, default=1)
    sim.add_argument("--pool-size", type=_positive, default=2000)
    common(sim)

    test = sub.add_parser("test", help="apply procedures to observed t-values and a null pool")
    test.add_argument("-a", "--alphas", required=True, help="CSV of observed t-values")
    test.add_argument("-x", "--nulls", required=True, help="CSV of null draws (rows = draws)")
    test.add_argument("--df", type=_positive, help="degrees of freedom if the alphas file has none")
    test.add_argument("--sidedness", choices=("one-sided", "two-sided"), default="two-sided")
    common(test)

    est = sub.add_parser("estimate", help="factor-model t-values and residual-bootstrap null draws")
    est.add_argument("--returns", required=True, help="CSV, rows = time, columns = portfolios")
    est.add_argument("--factors", required=True, help="CSV, rows = time, columns = factors")
    est.add_argument("-B", "--draws", type=_positive, default=10000)
    est.add_argument("--seed", type=int, default=0)
    est.add_argument("-a", "--alphas-out", required=True)
    est.add_argument("-x", "--nulls-out", required=True)

    ac = sub.add_parser("autocorr", help="lag correlations of return series")
    ac.add_argument("--returns", required=True, help="CSV, rows = time, columns = series")
    ac.add_argument("--max-lag", type=_positive, default=10)
    ac.add_argument("-o", "--output")
    return parser


def _emit(text: str, output) -> None:
    if output:
        fio.atomic_write_text(output, text)
    else:
        sys.stdout.write(text)


def _ddboot_config(args, sidedness="two-sided") -> DdbootConfig:
    return DdbootConfig(q=args.q, V=args.V, W=args.W, S=args.S, sidedness=sidedness)


def cmd_simulate(args) -> int:
    if args.scenario == "all":
        specs = scenario_grid()
    else:
        try:
            sid = int(args.scenario)
        except ValueError:
            raise ValueError(f"scenario must be 1-9 or 'all', got {args.scenario!r}") from None
        specs = [get_scenario(sid)]
    reports = []
    for spec in specs:
        if args.pool_size != spec.pool_size:
            spec = get_scenario(spec.scenario_id, pool_size=args.pool_size)
        log.info("scenario %s: %d runs", spec.scenario_id, args.runs)
        reports.append(run_monte_carlo(
            spec, args.method, args.runs, args.q, args.seed, args.workers,
            _ddboot_config(args), args.boot_count,
        ))
    if args.format == "json":
        text = json.dumps([r.to_dict() for r in reports], indent=2) + "\n"
    elif args.format == "csv":
        text = reports[0].to_csv() + "".join(r.to_csv().split("\n", 1)[1] for r in reports[1:])
    else:
        text = "\n".join(r.to_text() for r in reports)
    _emit(text, args.output)
    return EXIT_OK


def cmd_test(args) -> int:
    alphas = fio.load_tvalues(args.alphas, df=args.df)
    nulls = fio.load_nulls(args.nulls, alphas.df, n_expected=alphas.n)
    seed_seq = np.random.SeedSequence(args.seed)
    decisions = apply_methods(alphas, nulls, args.method, args.q, seed_seq,
                              _ddboot_config(args, args.sidedness), args.boot_count)
    records = []
    for method in args.method:
        dec = decisions[method]
        records.append({
            "method": DISPLAY_NAMES[method],
            "n_rejected": dec.n_rejected,
            "threshold_p": dec.threshold_p,
            "rejected": [int(i) for i in dec.rejected],
        })
    if args.format == "json":
        text = json.dumps({"n": alphas.n, "q": args.q, "decisions": records}, indent=2) + "\n"
    elif args.format == "csv":
        lines = ["method,n_rejected,threshold_p,rejected"]
        for r in records:
            thr = "" if r["threshold_p"] is None else repr(r["threshold_p"])
            lines.append(f'{r["method"]},{r["n_rejected"]},{thr},{" ".join(map(str, r["rejected"]))}')
        text = "\n".join(lines) + "\n"
    else:
        lines = [f"N={alphas.n}  q={args.q}", f"{'method':<10}{'# of Rej':>10}{'Thr-p':>12}"]
        for r in records:
            thr = "-" if r["threshold_p"] is None else f"{r['threshold_p']:.6f}"
            lines.append(f"{r['method']:<10}{r['n_rejected']:>10}{thr:>12}")
        text = "\n".join(lines) + "\n"
    _emit(text, args.output)
    return EXIT_OK


def cmd_estimate(args) -> int:
    _, returns = fio.load_panel(args.returns)
    _, factors = fio.load_panel(args.factors)
    if returns.shape[0] != factors.shape[0]:
        raise ValueError(f"returns have {returns.shape[0]} rows, factors have {factors.shape[0]}")
    panel = demean_factors(factors)
    alphas = estimate_alphas(panel, returns.T)
    resid, sigma = residual_matrix(panel, returns.T)
    nulls = residual_bootstrap(resid, sigma, args.draws, np.random.default_rng(args.seed), df=alphas.df)
    if nulls.redraws:
        log.info("%d zero-variance resamples redrawn", nulls.redraws)
    fio.write_tvalues(args.alphas_out, alphas)
    fio.write_nulls(args.nulls_out, nulls)
    return EXIT_OK


def cmd_autocorr(args) -> int:
    header, returns = fio.load_panel(args.returns)
    acf = np.array([autocorrelation(returns[:, j], args.max_lag) for j in range(returns.shape[1])])
    lines = ["lag,mean," + ",".join(header)]
    for lag in range(args.max_lag):
        cells = [f"{acf.mean(axis=0)[lag]:.17g}"] + [f"{v:.17g}" for v in acf[:, lag]]
        lines.append(f"{lag + 1}," + ",".join(cells))
    _emit("\n".join(lines) + "\n", args.output)
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "test": cmd_test, "estimate": cmd_estimate, "autocorr": cmd_autocorr}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (np.linalg.LinAlgError, DegeneratePortfolioError, FloatingPointError) as exc:
        print(f"fdrboot: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, OSError) as exc:
        print(f"fdrboot: error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
