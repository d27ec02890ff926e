#!/usr/bin/env python3
"""
Command-line front end for censreg.

Subcommands:
  fit        fit one estimator to a delimited data file
  simulate   run the Monte Carlo tables
  breakdown  breakdown lower bound (and optional contamination probe) for a data file
  curve      ||gamma_hat(beta)|| and score over a slope grid, for plotting

Standard output carries JSON only; progress and summaries go to standard error.
Exit codes: 0 ok, 1 numerical or data failure, 2 usage error.

Usage:
  python main.py fit heart.csv --response time --status status --covariates age --log-response --estimator mm
  python main.py simulate --table 3 --replicates 200 --seed 7
"""

import argparse
import logging
import sys
import time
from dataclasses import replace

import numpy as np
import pandas as pd

from breakdown_analysis import breakdown_bound, empirical_breakdown_probe
from config import (
    B_OVER_A, C1, C2, DEFAULT_SEED, ESTIMATOR_NAMES, N_CANDIDATES, PROBE_MAGNITUDES, Q_BUDGET,
    SIM_FULL_REPLICATES, SIM_N_CANDIDATES, SIM_REPLICATES, TABLE_ESTIMATORS, TAU_C2, THREADS,
)
from data_model import CensoredSample, CensregError, UsageError
from estimators import EstimatorSettings, SearchConfig, fit_estimator, subsample_count
from loss_functions import bisquare
from simulation_harness import export_xlsx, load_scenario, objective_curve, run_table, table_scenarios
from utils import dumps, parse_index_list, parse_name_list


class CliArgumentParser(argparse.ArgumentParser):
    """argparse that raises instead of printing usage and exiting"""

    def error(self, message):
        raise UsageError(message)


def emit(obj):
    """Write one JSON record to stdout"""
    sys.stdout.write(dumps(obj) + "\n")
    sys.stdout.flush()


def candidate_count(text):
    """--n-candidates value: a positive count, or "auto" for the subsample-count rule"""
    if text == "auto":
        return text
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer or 'auto', got '{text}'")
    if value < 1:
        raise argparse.ArgumentTypeError(f"need at least one candidate, got {value}")
    return value


def _n_candidates(args, p):
    if args.n_candidates != "auto":
        return args.n_candidates
    n = subsample_count(p)
    logging.info(f"--n-candidates auto: {n} subsamples of size {p} (half contaminated, 99% confidence)")
    return n


def load_dataset(path, response, status, covariates=None, log_response=False, intercept=True,
                 delimiter=",", exclude_rows=None) -> CensoredSample:
    """Read a delimited file with a header into a CensoredSample"""
    try:
        df = pd.read_csv(path, sep=delimiter)
    except FileNotFoundError as e:
        raise UsageError(f"input file not found: {path}") from e
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise UsageError(f"cannot parse {path}: {e}") from e

    covariates = covariates or [c for c in df.columns if c not in (response, status)]
    missing = [c for c in [response, status, *covariates] if c not in df.columns]
    if missing:
        raise UsageError(f"missing column(s) {missing}; available: {list(df.columns)}")
    if exclude_rows:
        bad = [i for i in exclude_rows if not 0 <= i < len(df)]
        if bad:
            raise UsageError(f"--exclude-rows out of range: {bad}")
        df = df.drop(index=df.index[exclude_rows])
        logging.info(f"Excluded rows {exclude_rows}; {len(df)} rows remain")

    frame = df[[response, status, *covariates]]
    if frame.isna().any().any():
        raise UsageError("missing values in the selected columns")
    try:
        y = frame[response].to_numpy(dtype=float)
        delta = frame[status].to_numpy(dtype=float)
        X = frame[covariates].to_numpy(dtype=float)
    except ValueError as e:
        raise UsageError(f"non-numeric data in the selected columns: {e}") from e
    if not np.all(np.isin(delta, (0.0, 1.0))):
        raise UsageError(f"status column '{status}' must hold only 0 and 1")
    if log_response:
        if np.any(y <= 0):
            raise UsageError("--log-response needs a positive response")
        y = np.log(y)
    return CensoredSample.from_arrays(y, X, delta.astype(np.int8), add_intercept=intercept, names=covariates)


def _sample_from_args(args):
    return load_dataset(
        args.input, args.response, args.status, parse_name_list(args.covariates), args.log_response,
        args.intercept, args.delimiter, parse_index_list(getattr(args, "exclude_rows", None)),
    )


def _settings_from_args(args, p):
    search = SearchConfig(
        n_candidates=_n_candidates(args, p),
        seed=args.seed,
        a_n_kind="mad_diagonal" if getattr(args, "a_n", "identity") == "mad" else "identity",
        refine=getattr(args, "refine", False),
        threads=args.threads,
    )
    return EstimatorSettings(search=search, c1=args.c1, c2=args.c2,
                             tau_c2=getattr(args, "tau_c2", TAU_C2), b_over_a=args.b_over_a)


def cmd_fit(args):
    sample = _sample_from_args(args)
    settings = _settings_from_args(args, sample.p)
    started = time.perf_counter()
    fit = fit_estimator(args.estimator, sample, settings)
    elapsed = time.perf_counter() - started
    record = fit.to_dict(sample.names)
    record.update({"n": sample.n, "m": sample.m, "elapsed": elapsed, "diagnostics": fit.diagnostics})
    logging.info(
        f"{args.estimator}: " + ", ".join(f"{k}={v:.6g}" for k, v in record["beta"].items())
        + f" scale={fit.scale:.6g} (n={sample.n}, censored={sample.m}, {elapsed:.2f}s)"
    )
    emit(record)
    return 0


def cmd_simulate(args):
    names = parse_name_list(args.estimators) or list(TABLE_ESTIMATORS)
    unknown = [name for name in names if name not in ESTIMATOR_NAMES]
    if unknown:
        raise UsageError(f"unknown estimator(s) {unknown}; choose from {list(ESTIMATOR_NAMES)}")
    if args.scenario:
        scn = load_scenario(args.scenario)
        # file values stand unless overridden on the command line
        if args.full:
            scn = replace(scn, replicates=SIM_FULL_REPLICATES)
        elif args.replicates is not None:
            scn = replace(scn, replicates=args.replicates)
        if args.seed is not None:
            scn = replace(scn, seed=args.seed)
        scenarios = [scn]
    else:
        replicates = SIM_REPLICATES if args.replicates is None else args.replicates
        if args.full:
            replicates = SIM_FULL_REPLICATES
        seed = DEFAULT_SEED if args.seed is None else args.seed
        scenarios = table_scenarios(args.table, replicates, seed)
    results = []
    for scn in scenarios:
        search = SearchConfig(n_candidates=_n_candidates(args, len(scn.beta0)), seed=scn.seed)
        settings = EstimatorSettings(search=search, c1=args.c1, c2=args.c2, b_over_a=args.b_over_a)
        result = run_table(scn, names, settings, threads=args.threads, progress=not args.no_progress)
        for record in result.records():
            emit(record)
        results.append(result)
    if args.xlsx:
        export_xlsx(results, args.xlsx)
    return 0


def cmd_breakdown(args):
    sample = _sample_from_args(args)
    report = breakdown_bound(sample, args.b_over_a, args.q_budget)
    out = report.to_dict()
    if args.probe:
        if args.probe not in ESTIMATOR_NAMES:
            raise UsageError(f"unknown estimator '{args.probe}'")
        settings = _settings_from_args(args, sample.p)
        probe = empirical_breakdown_probe(
            sample, lambda s: fit_estimator(args.probe, s, settings), args.probe_k,
            PROBE_MAGNITUDES, scenario=args.probe_scenario,
        )
        out["probe"] = probe.to_dict()
    logging.info(f"Breakdown bound {report.gamma_bound:.4f} (q={report.q}, m={report.m}, exact q={report.q_exact})")
    emit(out)
    return 0


def cmd_curve(args):
    sample = _sample_from_args(args)
    if args.grid_steps < 1:
        raise UsageError("--grid-steps must be at least 1")
    grid = np.linspace(args.grid_min, args.grid_max, args.grid_steps)
    cfg = SearchConfig(n_candidates=_n_candidates(args, sample.p), seed=args.seed, threads=args.threads)
    curve = objective_curve(sample, grid, rho=bisquare(args.c2), cfg=cfg)
    emit(curve.to_dict())
    return 0


def _add_data_args(p):
    p.add_argument("input", help="Delimited text file with a header row")
    p.add_argument("--response", required=True, help="Response column (possibly censored)")
    p.add_argument("--status", required=True, help="Status column: 1 observed, 0 censored")
    p.add_argument("--covariates", default=None, help="Comma separated covariate columns (default: all others)")
    p.add_argument("--log-response", action="store_true", help="Fit log(response)")
    p.add_argument("--intercept", action=argparse.BooleanOptionalAction, default=True, help="Add an intercept column")


def _add_tuning_args(p, n_candidates=N_CANDIDATES):
    p.add_argument("--n-candidates", type=candidate_count, default=n_candidates,
                   help="Subsample candidates N, or 'auto' for the subsample-count rule")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED, help="Random seed")
    p.add_argument("--b-over-a", type=float, default=B_OVER_A, help="M-scale right-hand side as a fraction of sup rho")
    p.add_argument("--c1", type=float, default=C1, help="Bisquare constant of the S stage")
    p.add_argument("--c2", type=float, default=C2, help="Bisquare constant of the MM/M stage")


def build_parser():
    parser = CliArgumentParser(prog="censreg", description="High-breakdown regression with right-censored responses")
    parser.add_argument("--threads", type=int, default=THREADS, help="Worker threads (env CENSREG_THREADS)")
    parser.add_argument("--delimiter", default=",", help="Field delimiter of input files")
    sub = parser.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", help="Fit one estimator")
    _add_data_args(fit)
    _add_tuning_args(fit)
    fit.add_argument("--estimator", choices=ESTIMATOR_NAMES, default="mm")
    fit.add_argument("--tau-c2", type=float, default=TAU_C2, help="Second bisquare constant of the tau-scale")
    fit.add_argument("--refine", action="store_true", help="Polish the selected candidate")
    fit.add_argument("--a-n", choices=("identity", "mad"), default="identity", help="Metric for gamma")
    fit.add_argument("--exclude-rows", default=None, help="Comma separated 0-based data rows to drop")
    fit.set_defaults(handler=cmd_fit)

    sim = sub.add_parser("simulate", help="Monte Carlo tables")
    sim.add_argument("--table", type=int, choices=(1, 2, 3), default=1)
    sim.add_argument("--replicates", type=int, default=None, help=f"Replicates per scenario (default {SIM_REPLICATES})")
    sim.add_argument("--full", action="store_true", help=f"Use {SIM_FULL_REPLICATES} replicates")
    sim.add_argument("--seed", type=int, default=None)
    sim.add_argument("--estimators", default=None, help="Comma separated estimator names")
    sim.add_argument("--n-candidates", type=candidate_count, default=SIM_N_CANDIDATES)
    sim.add_argument("--b-over-a", type=float, default=B_OVER_A)
    sim.add_argument("--c1", type=float, default=C1)
    sim.add_argument("--c2", type=float, default=C2)
    sim.add_argument("--scenario", default=None, help="KEY=value scenario file instead of --table")
    sim.add_argument("--xlsx", default=None, help="Also write the records to this spreadsheet")
    sim.add_argument("--no-progress", action="store_true")
    sim.set_defaults(handler=cmd_simulate)

    bd = sub.add_parser("breakdown", help="Breakdown lower bound of a data file")
    _add_data_args(bd)
    _add_tuning_args(bd)
    bd.add_argument("--q-budget", type=int, default=Q_BUDGET, help="Hyperplane enumeration budget")
    bd.add_argument("--probe", default=None, help="Also run a contamination probe of this estimator")
    bd.add_argument("--probe-k", type=int, default=0, help="Rows replaced by the probe")
    bd.add_argument("--probe-scenario", choices=("leverage", "censored_between"), default="leverage")
    bd.set_defaults(handler=cmd_breakdown)

    cv = sub.add_parser("curve", help="Objective curve over a slope grid")
    _add_data_args(cv)
    _add_tuning_args(cv)
    cv.add_argument("--grid-min", type=float, default=0.0)
    cv.add_argument("--grid-max", type=float, default=3.0)
    cv.add_argument("--grid-steps", type=int, default=61)
    cv.set_defaults(handler=cmd_curve)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.handler(args)
    except UsageError as e:
        logging.error(f"Usage error: {e}")
        emit({"error": type(e).__name__, "message": str(e)})
        return 2
    except CensregError as e:
        logging.error(f"{type(e).__name__}: {e}")
        emit({"error": type(e).__name__, "message": str(e)})
        return 1
    except ValueError as e:
        logging.error(f"Invalid value: {e}")
        emit({"error": "UsageError", "message": str(e)})
        return 2
    except (np.linalg.LinAlgError, FloatingPointError) as e:
        logging.error(f"Numerical failure: {e}")
        emit({"error": "NumericalFailure", "message": str(e)})
        return 1


if __name__ == "__main__":
    sys.exit(main())
