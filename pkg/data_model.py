#!/usr/bin/env python3
"""
Data Model Module
Observed censored-data types, residuals, fit results and the error hierarchy
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from config import DEFAULT_SEED, ZERO_RTOL
from utils import PURPOSE_GENERAL_POSITION, make_rng


class CensregError(Exception):
    """Base class for every error raised by censreg"""


class DimensionMismatchError(CensregError, ValueError):
    pass


class RankDeficientError(CensregError, ValueError):
    pass


class AllCensoredError(CensregError, ValueError):
    pass


class CandidateGenerationError(CensregError):
    pass


class NumericalFailure(CensregError):
    pass


class UsageError(CensregError, ValueError):
    pass


class SimulationError(CensregError):
    pass


class BreakdownProbeError(CensregError):
    pass


def _frozen(array, dtype=float):
    arr = np.array(array, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class CensoredObservation:
    """One row z_i = (y*_i, x_i, delta_i); delta 1 means the response was observed"""
    y_star: float
    x: np.ndarray
    delta: int

    def __post_init__(self):
        if self.delta not in (0, 1):
            raise ValueError(f"delta must be 0 or 1, got {self.delta}")
        object.__setattr__(self, "x", _frozen(self.x))


@dataclass(frozen=True, eq=False)
class CensoredSample:
    """
    Column-oriented censored sample.

    y_star: (n,) possibly censored responses min(y, c)
    X:      (n, p) design; first column is 1 when has_intercept
    delta:  (n,) 1 = uncensored, 0 = censored
    """
    y_star: np.ndarray
    X: np.ndarray
    delta: np.ndarray
    has_intercept: bool = False
    names: tuple = ()

    def __post_init__(self):
        y = np.asarray(self.y_star, dtype=float)
        X = np.asarray(self.X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        d = np.asarray(self.delta)
        if y.ndim != 1 or X.ndim != 2 or d.ndim != 1:
            raise DimensionMismatchError("y_star and delta must be vectors and X a matrix")
        if X.shape[0] != y.shape[0] or d.shape[0] != y.shape[0]:
            raise DimensionMismatchError(
                f"row counts differ: y_star={y.shape[0]}, X={X.shape[0]}, delta={d.shape[0]}"
            )
        if not np.all(np.isin(d, (0, 1))):
            raise ValueError("delta values must be 0 or 1")
        if not (np.all(np.isfinite(y)) and np.all(np.isfinite(X))):
            raise ValueError("missing or non-finite values are not allowed")
        if y.shape[0] < X.shape[1]:
            raise DimensionMismatchError(f"need at least p={X.shape[1]} rows, got {y.shape[0]}")
        names = tuple(self.names) if self.names else tuple(f"x{j}" for j in range(X.shape[1]))
        if len(names) != X.shape[1]:
            raise DimensionMismatchError("one name per design column is required")
        object.__setattr__(self, "y_star", _frozen(y))
        object.__setattr__(self, "X", _frozen(X))
        object.__setattr__(self, "delta", _frozen(d, dtype=np.int8))
        object.__setattr__(self, "names", names)

    @classmethod
    def from_arrays(cls, y_star, X, delta, add_intercept=False, names=None):
        """Build a sample, prepending the column of ones when add_intercept is set"""
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        names = list(names) if names else [f"x{j + 1}" for j in range(X.shape[1])]
        if add_intercept:
            X = np.column_stack([np.ones(X.shape[0]), X])
            names = ["(Intercept)"] + names
        return cls(y_star=y_star, X=X, delta=delta, has_intercept=add_intercept, names=tuple(names))

    @classmethod
    def from_observations(cls, observations, has_intercept=False, names=None):
        observations = list(observations)
        if not observations:
            raise DimensionMismatchError("empty sample")
        X = np.vstack([np.asarray(o.x, dtype=float).ravel() for o in observations])
        return cls(
            y_star=[o.y_star for o in observations],
            X=X,
            delta=[o.delta for o in observations],
            has_intercept=has_intercept,
            names=tuple(names) if names else (),
        )

    @property
    def n(self):
        return int(self.y_star.shape[0])

    @property
    def p(self):
        return int(self.X.shape[1])

    @property
    def m(self):
        """Number of censored observations"""
        return int(np.sum(1 - self.delta))

    @property
    def observations(self):
        return [CensoredObservation(float(y), x, int(d)) for y, x, d in zip(self.y_star, self.X, self.delta)]

    @property
    def zero_tol(self):
        """Absolute threshold below which a residual is treated as exactly zero"""
        return ZERO_RTOL * float(np.max(np.abs(self.y_star))) if self.n else 0.0

    def with_response(self, y_star, delta=None):
        """Same design with new responses (and indicators, if given)"""
        return CensoredSample(
            y_star=y_star,
            X=self.X,
            delta=self.delta if delta is None else delta,
            has_intercept=self.has_intercept,
            names=self.names,
        )

    def subset(self, keep):
        """Rows selected by an index array or boolean mask"""
        keep = np.asarray(keep)
        return CensoredSample(
            y_star=self.y_star[keep],
            X=self.X[keep],
            delta=self.delta[keep],
            has_intercept=self.has_intercept,
            names=self.names,
        )


@dataclass(frozen=True, eq=False)
class ResidualVector:
    """Censored residuals r*_i(beta) = y*_i - beta'x_i with the inherited indicators"""
    r_star: np.ndarray
    delta: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.r_star, dtype=float)
        d = np.asarray(self.delta)
        if r.shape != d.shape:
            raise DimensionMismatchError("r_star and delta must have the same length")
        object.__setattr__(self, "r_star", _frozen(r))
        object.__setattr__(self, "delta", _frozen(d, dtype=np.int8))

    def __len__(self):
        return int(self.r_star.shape[0])


@dataclass(frozen=True)
class SampleDiagnostics:
    n: int
    p: int
    m: int
    rank: int
    general_position: bool

    def to_dict(self):
        return {"n": self.n, "p": self.p, "m": self.m, "rank": self.rank,
                "general_position": self.general_position}


@dataclass(frozen=True, eq=False)
class FitResult:
    """Outcome of one estimator run"""
    beta: np.ndarray
    scale: float
    objective: float
    n_candidates_evaluated: int = 0
    converged: bool = True
    exact_fit: bool = False
    estimator: str = ""
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "beta", _frozen(self.beta))
        scale = float(self.scale)
        if scale < 0 or np.isnan(scale):
            raise ValueError(f"scale must be nonnegative, got {scale}")
        if scale == 0.0 and not self.exact_fit:
            object.__setattr__(self, "exact_fit", True)
        object.__setattr__(self, "scale", scale)
        object.__setattr__(self, "objective", float(self.objective))

    def to_dict(self, names=None):
        names = list(names) if names else [f"x{j}" for j in range(len(self.beta))]
        return {
            "estimator": self.estimator,
            "beta": {name: float(b) for name, b in zip(names, self.beta)},
            "scale": self.scale,
            "objective": self.objective,
            "n_candidates_evaluated": int(self.n_candidates_evaluated),
            "converged": bool(self.converged),
            "exact_fit": bool(self.exact_fit),
        }

    @classmethod
    def from_dict(cls, record):
        return cls(
            beta=list(record["beta"].values()),
            scale=record["scale"],
            objective=record["objective"],
            n_candidates_evaluated=record.get("n_candidates_evaluated", 0),
            converged=record.get("converged", True),
            exact_fit=record.get("exact_fit", False),
            estimator=record.get("estimator", ""),
        )


def residuals(sample: CensoredSample, beta) -> ResidualVector:
    """r*_i = y*_i - beta'x_i, delta copied unchanged"""
    beta = np.asarray(beta, dtype=float).ravel()
    if beta.shape[0] != sample.p:
        raise DimensionMismatchError(f"beta has length {beta.shape[0]}, expected p={sample.p}")
    return ResidualVector(r_star=sample.y_star - sample.X @ beta, delta=sample.delta)


def _general_position(X, seed=DEFAULT_SEED, draws=200):
    """Heuristic: no sampled p-subset of rows is singular"""
    n, p = X.shape
    if p == 1:
        return bool(np.all(X[:, 0] != 0))
    if p == 2 and np.allclose(X[:, 0], 1.0):
        return bool(np.unique(X[:, 1]).shape[0] == n)
    rng = make_rng(seed, PURPOSE_GENERAL_POSITION)
    for _ in range(draws):
        rows = rng.choice(n, size=p, replace=False)
        if np.linalg.matrix_rank(X[rows]) < p:
            return False
    return True


def validate(sample: CensoredSample) -> SampleDiagnostics:
    """Fit-time checks: n >= p + 1, full column rank, at least one uncensored row"""
    n, p, m = sample.n, sample.p, sample.m
    if n < p + 1:
        raise DimensionMismatchError(f"need n >= p + 1, got n={n}, p={p}")
    rank = int(np.linalg.matrix_rank(sample.X))
    if rank < p:
        raise RankDeficientError(f"design has rank {rank} < p={p}")
    if m >= n:
        raise AllCensoredError("all observations are censored")
    diag = SampleDiagnostics(n=n, p=p, m=m, rank=rank, general_position=_general_position(sample.X))
    logging.debug(f"Sample validated: {diag.to_dict()}")
    return diag
