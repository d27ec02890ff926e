#!/usr/bin/env python3
"""
Simulation Harness Module
Handles the seeded Monte Carlo study of the simple censored regression model
(clean, low-leverage and high-leverage contamination tables) and the
objective-curve experiment over a slope grid
"""

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import pandas as pd
from dotenv import dotenv_values
from tqdm import tqdm

from config import (
    C2, DEFAULT_SEED, SIM_MAX_FAILURE_RATE, SIM_N_CANDIDATES, SIM_REPLICATES, TABLE_ESTIMATORS,
)
from data_model import CensoredSample, FitResult, ResidualVector, SimulationError, UsageError
from estimators import EstimatorSettings, SearchConfig, fit_estimators, s_estimate, with_stream
from inner_fit import InnerProblem, irwls_minimize, score_vector
from km_redistribution import kaplan_meier, km_quantile
from loss_functions import bisquare
from utils import PURPOSE_DATA, RNG_ALGORITHM, make_rng

CONTAMINATION_SLOPES = (2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0)
TABLE_X0 = {2: 1.0, 3: 10.0}

# Reference slope MSEs, 1000 replicates of n = 100
CLEAN_MSE = {"s": 0.060, "lms": 0.164, "ls": 0.019, "mm": 0.027, "gm": 0.046, "l1": 0.025}
CONTAMINATED_MSE = {
    1.0: {
        "s": (0.10, 0.27, 0.38, 0.30, 0.20, 0.13, 0.10),
        "lms": (0.14, 0.30, 0.54, 0.69, 0.79, 0.76, 0.78),
        "ls": (0.03, 0.05, 0.10, 0.15, 0.23, 0.33, 0.43),
        "mm": (0.04, 0.11, 0.17, 0.18, 0.18, 0.19, 0.20),
        "gm": (0.09, 0.25, 0.40, 0.52, 0.62, 0.71, 0.78),
        "l1": (0.07, 0.16, 0.20, 0.21, 0.21, 0.21, 0.21),
    },
    10.0: {
        "s": (0.25, 0.50, 0.34, 0.20, 0.11, 0.08, 0.10),
        "lms": (0.31, 0.45, 0.58, 0.65, 0.49, 0.40, 0.38),
        "ls": (0.24, 0.90, 1.98, 3.44, 5.09, 6.61, 7.61),
        "mm": (0.23, 0.45, 0.30, 0.17, 0.08, 0.06, 0.07),
        "gm": (0.15, 0.39, 0.56, 0.69, 0.79, 0.92, 1.08),
        "l1": (0.25, 0.93, 2.04, 3.59, 5.63, 8.08, 11.03),
    },
}


def reference_mse(estimator, x0=None, slope_m=None):
    """Reference MSE for the cell, None when no reference exists"""
    if x0 is None:
        return CLEAN_MSE.get(estimator)
    row = CONTAMINATED_MSE.get(float(x0), {}).get(estimator)
    if row is None or float(slope_m) not in CONTAMINATION_SLOPES:
        return None
    return row[CONTAMINATION_SLOPES.index(float(slope_m))]


@dataclass(frozen=True)
class Contamination:
    """count rows replaced by the uncensored point (x0, m * x0)"""
    x0: float
    m: float
    count: int = 10
    delta: int = 1


@dataclass(frozen=True)
class SimulationScenario:
    n: int = 100
    beta0: tuple = (0.0, 1.5)
    error_sd: float = 1.0
    censor_mean: float = 1.0
    censor_sd: float = 1.0
    censored: bool = True
    contamination: Optional[Contamination] = None
    replicates: int = SIM_REPLICATES
    seed: int = DEFAULT_SEED
    table: int = 1

    def __post_init__(self):
        if self.contamination is not None and self.contamination.count > self.n:
            raise ValueError(f"cannot contaminate {self.contamination.count} of {self.n} rows")
        if self.replicates < 1:
            raise ValueError("replicates must be at least 1")

    @property
    def slope(self):
        return float(self.beta0[1])


@dataclass
class SimulationResult:
    scenario: SimulationScenario
    estimators: tuple
    mse: dict
    n_fail: dict
    censoring_rate: float
    runtime: float
    slopes: Optional[dict] = None
    fits: Optional[list] = field(default=None, repr=False)

    def records(self):
        """One JSON-ready record per estimator; runtime is kept out for byte-stable output"""
        scn = self.scenario
        x0 = scn.contamination.x0 if scn.contamination else None
        slope_m = scn.contamination.m if scn.contamination else None
        return [
            {
                "estimator": name,
                "mse": self.mse[name],
                "n_fail": self.n_fail[name],
                "replicates": scn.replicates,
                "seed": scn.seed,
                "table": scn.table,
                "x0": x0,
                "slope_m": slope_m,
                "reference_mse": reference_mse(name, x0, slope_m),
                "censoring_rate": self.censoring_rate,
                "rng": RNG_ALGORITHM,
            }
            for name in self.estimators
        ]


def generate_replicate(scn: SimulationScenario, replicate_index) -> CensoredSample:
    """y = alpha + beta x + u, y* = min(y, c); contaminated rows go in after censoring"""
    rng = make_rng(scn.seed, replicate_index, PURPOSE_DATA)
    n = scn.n
    x = rng.standard_normal(n)
    u = scn.error_sd * rng.standard_normal(n)
    c = scn.censor_mean + scn.censor_sd * rng.standard_normal(n)
    y = scn.beta0[0] + scn.beta0[1] * x + u
    if scn.censored:
        y_star = np.minimum(y, c)
        delta = (y <= c).astype(np.int8)
    else:
        y_star, delta = y, np.ones(n, dtype=np.int8)
    if scn.contamination is not None:
        k = scn.contamination.count
        x[:k] = scn.contamination.x0
        y_star[:k] = scn.contamination.m * scn.contamination.x0
        delta[:k] = scn.contamination.delta
    return CensoredSample.from_arrays(y_star, x, delta, add_intercept=True, names=["x"])


def empirical_censoring_rate(scn: SimulationScenario, replicates=None):
    """Mean censored fraction over replicates, without fitting"""
    replicates = scn.replicates if replicates is None else replicates
    return float(np.mean([generate_replicate(scn, i).m / scn.n for i in range(replicates)]))


def default_settings(seed=DEFAULT_SEED, n_candidates=SIM_N_CANDIDATES):
    return EstimatorSettings(search=SearchConfig(n_candidates=n_candidates, seed=seed))


def _run_replicate(scn, names, settings, idx):
    sample = generate_replicate(scn, idx)
    fits = fit_estimators(sample, names, with_stream(settings, idx, seed=scn.seed))
    return sample.m / sample.n, fits


def run_table(scn: SimulationScenario, names=TABLE_ESTIMATORS, settings: Optional[EstimatorSettings] = None,
              threads=1, retain=False, progress=True) -> SimulationResult:
    """
    Fit every estimator on every replicate and aggregate the slope MSE.
    Replicate i always uses data stream (seed, i) and candidate stream i, so the
    result does not depend on the worker count.
    """
    names = tuple(names)
    if not names:
        raise UsageError("at least one estimator is required")
    settings = settings or default_settings(scn.seed)
    started = time.perf_counter()
    indices = range(scn.replicates)

    def job(idx):
        return _run_replicate(scn, names, settings, idx)

    label = f"table {scn.table}" + (f" x0={scn.contamination.x0:g} m={scn.contamination.m:g}" if scn.contamination else "")
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(tqdm(pool.map(job, indices), total=scn.replicates, desc=label, disable=not progress))
    else:
        outcomes = [job(i) for i in tqdm(indices, desc=label, disable=not progress)]

    slopes = {name: [] for name in names}
    n_fail = {name: 0 for name in names}
    for _, fits in outcomes:
        for name in names:
            fit = fits[name]
            if isinstance(fit, FitResult) and np.isfinite(fit.beta[1]):
                slopes[name].append(float(fit.beta[1]))
            else:
                slopes[name].append(None)
                n_fail[name] += 1

    for name in names:
        rate = n_fail[name] / scn.replicates
        if rate > SIM_MAX_FAILURE_RATE:
            raise SimulationError(
                f"estimator '{name}' failed on {n_fail[name]} of {scn.replicates} replicates ({label})"
            )

    mse = {}
    for name in names:
        ok = np.array([s for s in slopes[name] if s is not None])
        mse[name] = float(np.mean((ok - scn.slope) ** 2)) if ok.size else float("nan")
    censoring_rate = float(np.mean([rate for rate, _ in outcomes]))
    runtime = time.perf_counter() - started
    logging.info(
        f"{label}: " + ", ".join(f"{name}={mse[name]:.4f}" for name in names)
        + f" | censoring {censoring_rate:.3f} | {runtime:.1f}s"
    )
    return SimulationResult(
        scenario=scn,
        estimators=names,
        mse=mse,
        n_fail=n_fail,
        censoring_rate=censoring_rate,
        runtime=runtime,
        slopes=slopes if retain else None,
        fits=[fits for _, fits in outcomes] if retain else None,
    )


def table_scenarios(table, replicates=SIM_REPLICATES, seed=DEFAULT_SEED, n=100):
    """Scenario list of one table: 1 clean, 2 with x0 = 1, 3 with x0 = 10"""
    if table == 1:
        return [SimulationScenario(n=n, replicates=replicates, seed=seed, table=1)]
    if table not in TABLE_X0:
        raise UsageError(f"unknown table {table}; expected 1, 2 or 3")
    return [
        SimulationScenario(n=n, replicates=replicates, seed=seed, table=table,
                           contamination=Contamination(x0=TABLE_X0[table], m=m))
        for m in CONTAMINATION_SLOPES
    ]


SCENARIO_KEYS = {
    "N": ("n", int),
    "ALPHA": ("alpha", float),
    "BETA": ("beta", float),
    "ERROR_SD": ("error_sd", float),
    "CENSOR_MEAN": ("censor_mean", float),
    "CENSOR_SD": ("censor_sd", float),
    "CENSORED": ("censored", lambda v: v.strip().lower() in ("1", "true", "yes")),
    "CONTAMINATION_COUNT": ("count", int),
    "X0": ("x0", float),
    "SLOPE_M": ("m", float),
    "REPLICATES": ("replicates", int),
    "SEED": ("seed", int),
    "TABLE": ("table", int),
}


def load_scenario(path) -> SimulationScenario:
    """Read a flat KEY=value scenario file"""
    raw = dotenv_values(path)
    values = {}
    for key, text in raw.items():
        if key.upper() not in SCENARIO_KEYS:
            raise UsageError(f"unknown scenario key '{key}' in {path}")
        name, cast = SCENARIO_KEYS[key.upper()]
        try:
            values[name] = cast(text)
        except (TypeError, ValueError) as e:
            raise UsageError(f"bad value for {key} in {path}: {text!r}") from e
    contamination = None
    if "x0" in values or "m" in values:
        if not ("x0" in values and "m" in values):
            raise UsageError("contaminated scenarios need both X0 and SLOPE_M")
        contamination = Contamination(x0=values.pop("x0"), m=values.pop("m"), count=values.pop("count", 10))
    values.pop("count", None)
    beta0 = (values.pop("alpha", 0.0), values.pop("beta", 1.5))
    return SimulationScenario(beta0=beta0, contamination=contamination, **values)


def results_frame(results):
    """All records of several runs as one table"""
    return pd.DataFrame([record for result in results for record in result.records()])


def export_xlsx(results, path):
    results_frame(results).to_excel(path, index=False)
    logging.info(f"Simulation table written to {path}")


@dataclass(frozen=True)
class CurveResult:
    rows: list
    argmin_beta: float
    edge: bool
    s_n: float

    def to_dict(self):
        return {"rows": self.rows, "argmin_beta": self.argmin_beta, "edge": self.edge, "s_n": self.s_n}


def objective_curve(sample: CensoredSample, beta_grid, rho=None, s_n=None, cfg: SearchConfig = SearchConfig()):
    """
    For each slope b on the grid, with intercept alpha(b) = median of the KM law of
    y* - b x: ||gamma_hat_n(beta)|| and the slope component of the score at gamma = 0.
    edge flags a minimum on the first or last grid point.
    """
    if sample.p != 2 or not np.all(sample.X[:, 0] == 1.0):
        raise UsageError("the objective curve needs simple regression with an intercept (p = 2)")
    grid = np.asarray(beta_grid, dtype=float)
    if grid.size == 0:
        raise UsageError("empty slope grid")
    rho = rho or bisquare(C2)
    if s_n is None:
        s_n = s_estimate(sample, cfg).scale
    if not s_n > 0:
        logging.warning("objective curve: S-scale is 0 (exact fit); using s_n = 1")
        s_n = 1.0
    x = sample.X[:, 1]
    rows = []
    for b in grid:
        w = kaplan_meier(ResidualVector(sample.y_star - b * x, sample.delta))
        beta = np.array([km_quantile(w, 0.5), b])
        prob = InnerProblem.at(sample, beta, rho, s_n)
        gamma = irwls_minimize(prob).gamma
        rows.append({
            "beta": float(b),
            "intercept": float(beta[0]),
            "gamma_norm": float(np.linalg.norm(gamma)),
            "score": float(score_vector(prob)[1]),
        })
    norms = np.array([row["gamma_norm"] for row in rows])
    best = int(np.argmin(norms))
    edge = grid.size > 1 and best in (0, grid.size - 1)
    if edge:
        logging.warning("objective curve minimum sits on the grid edge; widen the grid")
    return CurveResult(rows=rows, argmin_beta=float(grid[best]), edge=bool(edge), s_n=float(s_n))

