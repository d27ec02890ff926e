#!/usr/bin/env python3
"""
Scale Estimators Module
M-scale and tau-scale of the shifted residuals u - gamma'x under H*
"""

import logging
from dataclasses import dataclass

import numpy as np

from config import SCALE_MAX_ITER, SCALE_TOL
from data_model import CensoredSample, NumericalFailure
from km_redistribution import RedistributionWeights
from loss_functions import LossFunction, LossKind, dominates

SCALE_CAP_FACTOR = 1e12   # bracket expansion stops here; the capped value is returned as a sentinel


@dataclass(frozen=True)
class ScaleConfig:
    rho1: LossFunction
    b: float
    tol: float = SCALE_TOL
    max_iter: int = SCALE_MAX_ITER

    def __post_init__(self):
        if not self.rho1.bounded:
            raise ValueError(f"M-scale needs a bounded loss, got {self.rho1.describe()}")
        if not 0.0 < self.b < self.rho1.sup:
            raise ValueError(f"need 0 < b < a = {self.rho1.sup:g}, got b = {self.b:g}")
        if self.tol <= 0:
            raise ValueError("tol must be positive")

    @property
    def b_over_a(self):
        return self.b / self.rho1.sup


def shifted_residuals(w: RedistributionWeights, sample: CensoredSample, gammas):
    """(k, atoms) matrix of r*_j - gamma'x_i for a stack of gammas (k, p)"""
    gammas = np.atleast_2d(np.asarray(gammas, dtype=float))
    fitted = sample.X @ gammas.T                      # (n, k)
    return (w.atom_u[:, None] - fitted[w.rows, :]).T


def _weighted_row_quantiles(abs_v, mass, alphas):
    order = np.argsort(abs_v, axis=1, kind="mergesort")
    sorted_v = np.take_along_axis(abs_v, order, axis=1)
    cum = np.cumsum(mass[order], axis=1)
    out = []
    for alpha in alphas:
        idx = np.minimum((cum < alpha - 1e-12).sum(axis=1), abs_v.shape[1] - 1)
        out.append(sorted_v[np.arange(abs_v.shape[0]), idx])
    return out


def _mean_rho(loss, v, s, mass):
    return (loss.rho(v / s[:, None]) * mass[None, :]).sum(axis=1)


def m_scale_rows(v, mass, cfg: ScaleConfig, zero_tol=0.0):
    """
    Solve sum_k mass_k rho1(v_rk / s_r) = b for every row r of v.
    Returns (scales, capped) where capped flags rows whose bracket hit the cap.
    """
    v = np.atleast_2d(np.asarray(v, dtype=float))
    if not np.all(np.isfinite(v)):
        raise NumericalFailure("non-finite residuals in the scale equation")
    loss, b = cfg.rho1, cfg.b
    abs_v = np.abs(v)
    abs_v[abs_v <= zero_tol] = 0.0
    k = abs_v.shape[0]
    scales = np.zeros(k)
    capped = np.zeros(k, dtype=bool)

    mass0 = (mass[None, :] * (abs_v == 0.0)).sum(axis=1)
    # at mass0 = 1 - b/a the root sits at s = 0 in the limit
    exact = mass0 >= 1.0 - cfg.b_over_a - 1e-12

    if loss.kind == LossKind.JUMP:
        # h(s) = mass{|v| >= s}: the root is the lower (1 - b) quantile of |v|
        (q,) = _weighted_row_quantiles(abs_v, mass, [1.0 - b])
        return np.where(exact, 0.0, q), capped

    live = np.flatnonzero(~exact)
    if live.size == 0:
        return scales, capped
    av = abs_v[live]
    q_lo, q_hi = _weighted_row_quantiles(av, mass, [0.10, 0.999])
    positive_min = np.where(av > 0, av, np.inf).min(axis=1)
    lo = np.where(q_lo > 0, q_lo, positive_min) / 10.0
    hi = 10.0 * np.maximum(q_hi, positive_min)

    for _ in range(200):
        low_bad = _mean_rho(loss, av, lo, mass) < b
        if not low_bad.any():
            break
        lo = np.where(low_bad, lo / 10.0, lo)
    ceiling = SCALE_CAP_FACTOR * hi
    for _ in range(200):
        high_bad = (_mean_rho(loss, av, hi, mass) > b) & (hi < ceiling)
        if not high_bad.any():
            break
        hi = np.where(high_bad, hi * 10.0, hi)
    cap = _mean_rho(loss, av, hi, mass) > b
    if cap.any():
        logging.warning(f"M-scale bracket capped for {int(cap.sum())} row(s); returning sentinel scale")

    for _ in range(cfg.max_iter):
        active = hi / lo - 1.0 > cfg.tol
        if not active.any():
            break
        mid = np.sqrt(lo * hi)
        above = _mean_rho(loss, av, mid, mass) > b
        lo = np.where(active & above, mid, lo)
        hi = np.where(active & ~above, mid, hi)

    scales[live] = np.sqrt(lo * hi)
    capped[live] = cap
    return scales, capped


def m_scale(w: RedistributionWeights, sample: CensoredSample, gamma, cfg: ScaleConfig):
    """S_n(beta, gamma): the M-scale of u - gamma'x under H*; 0 signals an exact fit"""
    scales, _ = m_scale_rows(shifted_residuals(w, sample, gamma), w.mass, cfg, sample.zero_tol)
    return float(scales[0])


def tau_scale_rows(v, mass, cfg: ScaleConfig, rho2: LossFunction, zero_tol=0.0):
    v = np.atleast_2d(np.asarray(v, dtype=float))
    s, _ = m_scale_rows(v, mass, cfg, zero_tol)
    tau = np.zeros_like(s)
    pos = s > 0
    if pos.any():
        tau[pos] = s[pos] * np.sqrt(_mean_rho(rho2, v[pos], s[pos], mass))
    return tau, s


def tau_scale(w: RedistributionWeights, sample: CensoredSample, gamma, cfg: ScaleConfig, rho2: LossFunction):
    """tau = s * sqrt(E_{H*}[rho2((u - gamma'x)/s)]) with s the M-scale"""
    dominates(cfg.rho1, rho2)
    tau, _ = tau_scale_rows(shifted_residuals(w, sample, gamma), w.mass, cfg, rho2, sample.zero_tol)
    return float(tau[0])
