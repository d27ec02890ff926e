#!/usr/bin/env python3
"""
Breakdown Analysis Module
Handles the finite-sample breakdown lower bound under censoring and
empirical contamination probes of fitted estimators
"""

import itertools
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from config import DEFAULT_SEED, PROBE_MAGNITUDES, Q_BUDGET
from data_model import BreakdownProbeError, CensoredSample, CensregError, FitResult, UsageError
from utils import PURPOSE_Q_SAMPLING, make_rng

HYPERPLANE_RTOL = 1e-9


@dataclass(frozen=True)
class BreakdownReport:
    q: int
    m: int
    k0: float
    gamma_bound: float
    optimal_bound: float
    q_exact: bool
    n: int
    p: int
    b_over_a: float

    def to_dict(self):
        return asdict(self)


def _null_direction(rows):
    """Unit theta orthogonal to the p-1 given covariate vectors, None if they are dependent"""
    _, sv, vt = np.linalg.svd(rows)
    if sv.size and sv[-1] <= HYPERPLANE_RTOL * max(1.0, sv[0]):
        return None
    return vt[-1]


def compute_q(sample: CensoredSample, budget=Q_BUDGET):
    """
    q = max over unit theta of #{i : theta'x_i = 0}.
    Every maximizing hyperplane is spanned by p - 1 of the x_i, so enumerating
    (p-1)-subsets is exact; past the budget, random subsets give a lower bound.
    """
    X = sample.X
    n, p = X.shape
    norms = np.linalg.norm(X, axis=1)
    if p == 1:
        return int(np.sum(np.abs(X[:, 0]) == 0.0)), True

    def incident(theta):
        return int(np.sum(np.abs(X @ theta) <= HYPERPLANE_RTOL * np.maximum(norms, 1.0)))

    total = math.comb(n, p - 1)
    exact = total <= budget
    if exact:
        subsets = itertools.combinations(range(n), p - 1)
    else:
        rng = make_rng(DEFAULT_SEED, PURPOSE_Q_SAMPLING)
        draws = int(min(budget, 100000))
        subsets = (rng.choice(n, size=p - 1, replace=False) for _ in range(draws))
        logging.info(f"q: {total} hyperplanes exceed the budget {budget}; sampling {draws} (lower bound)")

    q = p - 1
    for subset in subsets:
        theta = _null_direction(X[list(subset)])
        if theta is not None:
            q = max(q, incident(theta))
            if q == n:
                break
    return q, exact


def k0_value(n, q, m, b_over_a):
    """min(n(1 - b/a) - q - m, n b/a - m)"""
    return min(n * (1.0 - b_over_a) - q - m, n * b_over_a - m)


def optimal_b_over_a(n, q):
    """The b/a maximizing k0"""
    return (1.0 - q / n) / 2.0


def breakdown_bound(sample: CensoredSample, b_over_a, budget=Q_BUDGET) -> BreakdownReport:
    if not 0.0 < b_over_a < 1.0:
        raise UsageError(f"b/a must lie strictly between 0 and 1, got {b_over_a}")
    n, p, m = sample.n, sample.p, sample.m
    q, exact = compute_q(sample, budget)
    k0 = k0_value(n, q, m, b_over_a)
    report = BreakdownReport(
        q=q,
        m=m,
        k0=float(k0),
        gamma_bound=max(k0, 0.0) / n,
        optimal_bound=(n - p + 1 - 2 * m) / (2.0 * n),
        q_exact=exact,
        n=n,
        p=p,
        b_over_a=float(b_over_a),
    )
    if not exact:
        logging.warning("q is a sampled lower bound; gamma_bound may overstate the breakdown point")
    return report


@dataclass(frozen=True)
class ProbeResult:
    k: int
    scenario: str
    magnitudes: tuple
    displacements: tuple
    base_beta: tuple = field(default_factory=tuple)

    @property
    def max_displacement(self):
        return max(self.displacements) if self.displacements else 0.0

    def to_dict(self):
        out = asdict(self)
        out["max_displacement"] = self.max_displacement
        return out


def contaminate(sample: CensoredSample, k, magnitude, leverage=10.0, scenario="leverage", base_beta=None):
    """
    Replace the first k rows. "leverage": uncensored points at x = leverage,
    y = magnitude. "censored_between": half of them (rounded up) as above,
    the rest censored halfway between the base fit and the outliers.
    """
    y = np.array(sample.y_star, dtype=float)
    X = np.array(sample.X, dtype=float)
    delta = np.array(sample.delta, dtype=np.int8)
    slopes = slice(1, None) if sample.has_intercept else slice(None)
    X[:k, slopes] = leverage
    y[:k] = magnitude
    delta[:k] = 1
    if scenario == "censored_between":
        n_out = (k + 1) // 2
        if base_beta is None:
            raise ValueError("censored_between needs the clean fit")
        fitted = X[n_out:k] @ np.asarray(base_beta, dtype=float)
        y[n_out:k] = 0.5 * (fitted + magnitude)
        delta[n_out:k] = 0
    elif scenario != "leverage":
        raise UsageError(f"unknown probe scenario '{scenario}'")
    return CensoredSample(y_star=y, X=X, delta=delta, has_intercept=sample.has_intercept, names=sample.names)


def empirical_breakdown_probe(sample: CensoredSample, fit_fn: Callable[[CensoredSample], FitResult], k,
                              magnitudes=PROBE_MAGNITUDES, leverage=10.0, scenario="leverage") -> ProbeResult:
    """max ||beta(Z*) - beta(Z)|| over outlier magnitudes, with k rows replaced"""
    if not 0 <= k < sample.n:
        raise UsageError(f"need 0 <= k < n, got k={k}, n={sample.n}")
    base = fit_fn(sample).beta
    if k == 0:
        return ProbeResult(k=0, scenario=scenario, magnitudes=tuple(magnitudes),
                           displacements=tuple(0.0 for _ in magnitudes), base_beta=tuple(base.tolist()))
    displacements = []
    for magnitude in magnitudes:
        dirty = contaminate(sample, k, magnitude, leverage, scenario, base_beta=base)
        try:
            beta = fit_fn(dirty).beta
        except CensregError as e:
            raise BreakdownProbeError(f"fit failed at magnitude {magnitude:g}: {e}") from e
        displacements.append(float(np.linalg.norm(beta - base)))
        logging.info(f"Probe k={k} ({scenario}) magnitude={magnitude:g}: displacement={displacements[-1]:.4g}")
    return ProbeResult(k=k, scenario=scenario, magnitudes=tuple(magnitudes),
                       displacements=tuple(displacements), base_beta=tuple(base.tolist()))
