"""Command line front end.

Four subcommands: solve (population optimum for a parametric demand model),
estimate (non-parametric estimate from a demand CSV), simulate (Monte-Carlo
grid), report (render tables from a summaries file). Results go to stdout as
JSON or CSV; logs go to stderr. Exit codes: 0 success, 1 usage or input
error, 2 validated input whose answer is "no solution exists".
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import os
import sys
import time

from .cost import SeverityCost, SingularCriticalRatioError
from .demand import ExponentialDemand, UniformDemand, load_demand_csv
from .estimator import estimate_optimal_q
from .foc import solve_population_foc
from .montecarlo import (
    SUMMARY_COLUMNS,
    CellSummary,
    ExperimentConfig,
    existence_table,
    mse_curves,
    run_grid,
    write_outputs,
    _fmt,
)

log = logging.getLogger("gennv")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NO_SOLUTION = 2


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors by default; the contract reserves 2
    # for validated-but-unsolvable inputs
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _round9(obj):
    if isinstance(obj, float):
        return float(format(obj, ".9g"))
    if isinstance(obj, dict):
        return {k: _round9(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round9(v) for v in obj]
    return obj


def _emit_json(payload: dict) -> None:
    json.dump(_round9(payload), sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")


def _severity_from_flags(args) -> SeverityCost:
    if args.lam is not None:
        if args.ce is not None or args.cs is not None:
            raise ValueError("give either --lambda or the --ce/--cs pair, not both")
        if args.lam == 1.0:
            raise ValueError("cost ratio 1.0 is excluded (model assumes c_e != c_s)")
        return SeverityCost(m=args.m, c_e=args.lam, c_s=1.0)
    if args.ce is None or args.cs is None:
        raise ValueError("give either --lambda or both --ce and --cs")
    if args.ce == args.cs:
        raise ValueError("cost ratio 1.0 is excluded (model assumes c_e != c_s)")
    return SeverityCost(m=args.m, c_e=args.ce, c_s=args.cs)


def _demand_from_flag(dist: str):
    if dist in ("uniform", "unif"):
        return UniformDemand(0.0, 1.0)
    if dist in ("exponential", "exp"):
        return ExponentialDemand(1.0)
    raise ValueError(f"unknown demand model {dist!r}")


def _cmd_solve(args) -> int:
    sc = _severity_from_flags(args)
    model = _demand_from_flag(args.dist)
    report = solve_population_foc(model, sc, q_max=args.q_max, tol=args.tol, select=args.select)
    payload = report.as_dict()
    payload["k_m"] = sc.critical_ratio()
    _emit_json(payload)
    return EXIT_OK if report.exists else EXIT_NO_SOLUTION


def _cmd_estimate(args) -> int:
    sc = SeverityCost(m=args.m, c_e=args.ce, c_s=args.cs)
    if sc.m % 2 == 0 and args.ce == args.cs:
        raise SingularCriticalRatioError("even severity requires c_e != c_s")
    demand = load_demand_csv(args.input)
    result = estimate_optimal_q(demand.values, sc, select=args.select)
    _emit_json(result.as_dict())
    return EXIT_OK if result.exists else EXIT_NO_SOLUTION


def _cmd_simulate(args) -> int:
    config = ExperimentConfig.from_file(args.config)
    env_seed = os.environ.get("GENNV_SEED")
    if env_seed is not None:
        config = dataclasses.replace(config, base_seed=int(env_seed))
        log.info("base_seed overridden by GENNV_SEED=%s", env_seed)
    t0 = time.monotonic()
    written = []
    try:
        summaries = run_grid(config, workers=args.workers)
        written = write_outputs(config, summaries, args.out, elapsed_s=time.monotonic() - t0)
    except Exception:
        for path in written:
            try:
                os.unlink(path)
            except OSError:
                pass
        raise
    for path in written:
        log.info("wrote %s", path)
    failed = [s for s in summaries if s.error is not None]
    if failed:
        log.error("%d of %d cells failed", len(failed), len(summaries))
        return EXIT_ERROR
    return EXIT_OK


def _read_summaries(path) -> list[CellSummary]:
    def opt(v):
        return float(v) if v not in ("", None) else None

    out = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(SUMMARY_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: missing columns {sorted(missing)}")
        for row in reader:
            out.append(CellSummary(
                dist=row["dist"], m=int(row["m"]), lam=float(row["lambda"]),
                n=int(row["n"]), M=int(row["M"]), count_exist=int(row["count_exist"]),
                p_exist=float(row["p_exist"]), q_true=opt(row["q_true"]),
                mse=opt(row["mse"]), bias=opt(row["bias"]),
                q05=opt(row["q05"]), q25=opt(row["q25"]), q50=opt(row["q50"]),
                q75=opt(row["q75"]), q95=opt(row["q95"]),
            ))
    return out


def _cmd_report(args) -> int:
    summaries = _read_summaries(args.summaries)
    writer = csv.writer(sys.stdout, lineterminator="\n")
    if args.table == "existence":
        if args.n is None:
            raise ValueError("existence table needs --n")
        if not any(s.n == args.n for s in summaries):
            raise ValueError(f"no cells with n={args.n} in {args.summaries}")
        lambdas, rows = existence_table(summaries, args.n, include_odd=args.include_odd)
        writer.writerow(["m"] + [_fmt(l) for l in lambdas])
        for row in rows:
            writer.writerow([row[0]] + [_fmt(v) if v != "" else "" for v in row[1:]])
        return EXIT_OK
    records, _ = mse_curves(summaries)
    writer.writerow(("dist", "m", "lambda", "n", "mse"))
    for d, m, lam, n, v in records:
        writer.writerow((d, m, _fmt(lam), n, _fmt(v)))
    return EXIT_OK


def _build_parser() -> _Parser:
    parser = _Parser(prog="gennv", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("solve", help="population optimal order quantity", parents=[])
    ps.add_argument("--dist", required=True, choices=["uniform", "unif", "exponential", "exp"])
    ps.add_argument("--m", type=int, required=True)
    ps.add_argument("--lambda", dest="lam", type=float, default=None,
                    help="excess-to-shortage cost ratio (sets c_e=lambda, c_s=1)")
    ps.add_argument("--ce", type=float, default=None)
    ps.add_argument("--cs", type=float, default=None)
    ps.add_argument("--tol", type=float, default=1e-10)
    ps.add_argument("--q-max", type=float, default=None)
    ps.add_argument("--select", choices=["max", "cost-min"], default="max")
    ps.set_defaults(func=_cmd_solve)

    pe = sub.add_parser("estimate", help="estimate from a demand CSV")
    pe.add_argument("--input", required=True, help="CSV with a single 'demand' column")
    pe.add_argument("--m", type=int, required=True)
    pe.add_argument("--ce", type=float, required=True)
    pe.add_argument("--cs", type=float, required=True)
    pe.add_argument("--select", choices=["max", "cost-min"], default="max")
    pe.set_defaults(func=_cmd_estimate)

    pm = sub.add_parser("simulate", help="run a Monte-Carlo grid")
    pm.add_argument("--config", required=True, help="JSON (or TOML) experiment config")
    pm.add_argument("--workers", type=int, default=1)
    pm.add_argument("--out", required=True, help="output directory")
    pm.set_defaults(func=_cmd_simulate)

    pr = sub.add_parser("report", help="render tables from summaries.csv")
    pr.add_argument("--summaries", required=True)
    pr.add_argument("--table", choices=["existence", "mse"], required=True)
    pr.add_argument("--n", type=int, default=None)
    pr.add_argument("--include-odd", action="store_true")
    pr.set_defaults(func=_cmd_report)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
