#!/usr/bin/env python3
"""
Inner Fit Module
For a fixed outer beta: the M objective C_n(beta, gamma), its IRWLS minimizer,
and candidate selection for the S- and tau-scale inner regressions
"""

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from config import IRWLS_MAX_ITER, IRWLS_RIDGE, IRWLS_TOL, L1_SMOOTHING, REFINE_STEPS
from data_model import CensoredSample, residuals
from km_redistribution import RedistributionWeights, kaplan_meier
from loss_functions import LossFunction, absolute
from scale_estimators import ScaleConfig, m_scale_rows, shifted_residuals, tau_scale_rows

DESCENT_SLACK = 1e-12


@dataclass(frozen=True, eq=False)
class InnerProblem:
    weights: RedistributionWeights
    sample: CensoredSample
    s_n: float
    rho: LossFunction
    beta_outer: np.ndarray
    rho2: Optional[LossFunction] = None

    @classmethod
    def at(cls, sample, beta, rho, s_n=1.0, rho2=None):
        """Build the weights from residuals(sample, beta)"""
        beta = np.asarray(beta, dtype=float)
        w = kaplan_meier(residuals(sample, beta))
        return cls(weights=w, sample=sample, s_n=float(s_n), rho=rho, beta_outer=beta, rho2=rho2)

    @property
    def atom_u(self):
        return self.weights.atom_u

    @property
    def atom_x(self):
        return self.sample.X[self.weights.rows]


@dataclass(frozen=True)
class IRWLSConfig:
    tol: float = IRWLS_TOL
    max_iter: int = IRWLS_MAX_ITER
    ridge: float = IRWLS_RIDGE
    smoothing: float = L1_SMOOTHING

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("IRWLS tol must be positive")


@dataclass(frozen=True, eq=False)
class IRWLSResult:
    gamma: np.ndarray
    objective: float
    iterations: int
    converged: bool
    history: tuple = field(default_factory=tuple)

    def __iter__(self):
        return iter((self.gamma, self.objective, self.iterations))


@dataclass(frozen=True, eq=False)
class InnerSolution:
    gamma: np.ndarray
    criterion: float
    index: int
    refined: bool = False

    def __iter__(self):
        return iter((self.gamma, self.criterion))


def _objective(u, Xa, mass, s, loss, gamma):
    return float(np.sum(loss.rho((u - Xa @ gamma) / s) * mass))


def _irwls(u, Xa, mass, s, loss, cfg, max_iter):
    p = Xa.shape[1]
    gamma = np.zeros(p)
    obj = _objective(u, Xa, mass, s, loss, gamma)
    history = [obj]
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        wts = loss.weight((u - Xa @ gamma) / s, cfg.smoothing) * mass
        A = (Xa * wts[:, None]).T @ Xa
        A[np.diag_indices(p)] += cfg.ridge * max(1.0, float(np.max(np.abs(np.diag(A)))))
        try:
            proposal = np.linalg.solve(A, Xa.T @ (wts * u))
        except np.linalg.LinAlgError:
            logging.warning("IRWLS normal equations are singular; returning current iterate")
            return IRWLSResult(gamma, obj, it, False, tuple(history))
        step = proposal - gamma
        slack = DESCENT_SLACK * max(1.0, abs(obj))
        new_obj = _objective(u, Xa, mass, s, loss, gamma + step)
        halvings = 0
        while new_obj > obj + slack and halvings < 30:
            step = step / 2.0
            new_obj = _objective(u, Xa, mass, s, loss, gamma + step)
            halvings += 1
        if new_obj > obj + slack:
            break
        gamma = gamma + step
        obj = new_obj
        history.append(obj)
        if np.linalg.norm(step) <= cfg.tol * (1.0 + np.linalg.norm(gamma)):
            converged = True
            break
    return IRWLSResult(gamma, obj, it, converged, tuple(history))


def c_objective(prob: InnerProblem, gamma, loss=None):
    """sum_ij rho((r_j - gamma'x_i)/s_n) pi_ij"""
    if not prob.s_n > 0:
        raise ValueError("the M objective needs a positive scale s_n")
    return _objective(prob.atom_u, prob.atom_x, prob.weights.mass, prob.s_n,
                      loss or prob.rho, np.asarray(gamma, dtype=float))


def score_vector(prob: InnerProblem, gamma=None, loss=None):
    """sum_ij psi((r_j - gamma'x_i)/s_n) x_i pi_ij"""
    loss = loss or prob.rho
    gamma = np.zeros(prob.sample.p) if gamma is None else np.asarray(gamma, dtype=float)
    t = (prob.atom_u - prob.atom_x @ gamma) / prob.s_n
    return (loss.psi(t) * prob.weights.mass) @ prob.atom_x


def irwls_minimize(prob: InnerProblem, cfg: IRWLSConfig = IRWLSConfig(), loss=None, max_iter=None):
    """
    Weighted least squares iterations from gamma = 0 with weights
    psi(t)/t * pi_ij on the nonzero atoms. Each accepted step does not increase
    the objective; a step that would is halved until it does.
    """
    if not prob.s_n > 0:
        raise ValueError("IRWLS needs a positive scale s_n")
    return _irwls(prob.atom_u, prob.atom_x, prob.weights.mass, prob.s_n, loss or prob.rho, cfg,
                  cfg.max_iter if max_iter is None else max_iter)


def weighted_l1(prob: InnerProblem, cfg: IRWLSConfig = IRWLSConfig()):
    """gamma minimizing sum_ij |r_j - gamma'x_i| pi_ij by smoothed IRLS; s_n sets the smoothing unit"""
    l1_cfg = IRWLSConfig(tol=min(cfg.tol, 1e-10), max_iter=max(cfg.max_iter, 1000),
                         ridge=cfg.ridge, smoothing=cfg.smoothing)
    return irwls_minimize(prob, l1_cfg, loss=absolute())


def s_inner(prob: InnerProblem, candidates, cfg: ScaleConfig, refine=False, irwls_cfg=IRWLSConfig()):
    """
    Pick the candidate gamma with the smallest M-scale (lowest index on ties);
    with refine, follow with up to REFINE_STEPS IRWLS steps on rho1 at the
    winning scale, kept only if the scale does not increase.
    """
    candidates = np.atleast_2d(np.asarray(candidates, dtype=float))
    if candidates.shape[0] == 0:
        raise ValueError("candidate list is empty")
    w, sample = prob.weights, prob.sample
    scales, _ = m_scale_rows(shifted_residuals(w, sample, candidates), w.mass, cfg, sample.zero_tol)
    best = int(np.argmin(scales))
    gamma, scale = candidates[best].copy(), float(scales[best])
    if refine and scale > 0 and cfg.rho1.differentiable:
        Xa = prob.atom_x
        step = _irwls(prob.atom_u - Xa @ gamma, Xa, w.mass, scale, cfg.rho1, irwls_cfg, REFINE_STEPS)
        trial = gamma + step.gamma
        new_scale, _ = m_scale_rows(shifted_residuals(w, sample, trial), w.mass, cfg, sample.zero_tol)
        if new_scale[0] <= scale:
            return InnerSolution(trial, float(new_scale[0]), best, True)
    return InnerSolution(gamma, scale, best, False)


def tau_inner(prob: InnerProblem, candidates, cfg: ScaleConfig, rho2: Optional[LossFunction] = None):
    """Pick the candidate gamma with the smallest tau-scale"""
    rho2 = rho2 or prob.rho2
    if rho2 is None:
        raise ValueError("tau_inner needs a second loss rho2")
    candidates = np.atleast_2d(np.asarray(candidates, dtype=float))
    if candidates.shape[0] == 0:
        raise ValueError("candidate list is empty")
    w, sample = prob.weights, prob.sample
    taus, _ = tau_scale_rows(shifted_residuals(w, sample, candidates), w.mass, cfg, rho2, sample.zero_tol)
    best = int(np.argmin(taus))
    return InnerSolution(candidates[best].copy(), float(taus[best]), best, False)
