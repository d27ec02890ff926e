#!/usr/bin/env python3
"""
Kaplan-Meier Redistribution Module
Product-limit masses of the censored residuals and the redistribution-of-mass
weights pi_ij that define the weighted joint distribution H* of (u, x)
"""

from dataclasses import dataclass

import numpy as np

from data_model import AllCensoredError, CensoredSample, ResidualVector, _frozen
from utils import weighted_lower_quantile


@dataclass(frozen=True, eq=False)
class RedistributionWeights:
    """
    pi:    (n,) KM point masses, zero at censored rows
    order: permutation sorting r_star ascending, uncensored first at ties
    rows, cols, mass: nonzero pi_ij entries; atom k puts mass[k] on (r*_{cols[k]}, x_{rows[k]})
    """
    r_star: np.ndarray
    delta: np.ndarray
    effective_delta: np.ndarray
    pi: np.ndarray
    order: np.ndarray
    rows: np.ndarray
    cols: np.ndarray
    mass: np.ndarray

    @property
    def n(self):
        return int(self.r_star.shape[0])

    @property
    def pairs(self):
        """Sparse map (i, j) -> pi_ij"""
        return {(int(i), int(j)): float(w) for i, j, w in zip(self.rows, self.cols, self.mass)}

    @property
    def atom_u(self):
        return self.r_star[self.cols]

    def tail_mass(self, i):
        """sum_{k in M_i} pi_k with M_i = {k : r_k > r_i, effective delta_k = 1}"""
        return float(np.sum(self.pi[self.r_star > self.r_star[i]]))


@dataclass(frozen=True, eq=False)
class WeightedJointDistribution:
    """Atoms (u, x, mass) of H*; u is a residual r*_j and x the covariates of row i"""
    u: np.ndarray
    x: np.ndarray
    mass: np.ndarray

    def __len__(self):
        return int(self.mass.shape[0])

    @property
    def atoms(self):
        return [(float(u), x, float(w)) for u, x, w in zip(self.u, self.x, self.mass)]


def kaplan_meier(res: ResidualVector) -> RedistributionWeights:
    """
    KM masses by a single pass over the sorted residuals, then pi_ij by
    spreading each censored 1/n over the uncensored points strictly to its
    right, proportionally to their KM masses.
    """
    r = np.asarray(res.r_star, dtype=float)
    delta = np.asarray(res.delta, dtype=np.int8)
    n = r.shape[0]
    if n == 0 or not np.any(delta == 1):
        raise AllCensoredError("Kaplan-Meier needs at least one uncensored residual")

    # censored points at the largest residual have nothing to their right:
    # treat them as uncensored so the total mass stays 1
    eff = delta.copy()
    eff[(eff == 0) & (r >= r.max())] = 1

    order = np.lexsort((1 - eff, r))
    pi = np.zeros(n)
    surv = 1.0
    for pos, idx in enumerate(order):
        if eff[idx] == 1:
            jump = surv / (n - pos)
            pi[idx] = jump
            surv -= jump

    # tail sums over strictly larger residuals
    sorted_r = r[order]
    suffix = np.concatenate([np.cumsum(pi[order][::-1])[::-1], [0.0]])
    uncensored = np.flatnonzero(eff == 1)
    rows = [uncensored]
    cols = [uncensored]
    mass = [np.full(uncensored.shape[0], 1.0 / n)]
    for i in np.flatnonzero(eff == 0):
        start = int(np.searchsorted(sorted_r, r[i], side="right"))
        right = order[start:]
        right = right[eff[right] == 1]
        tail = suffix[start]
        rows.append(np.full(right.shape[0], i))
        cols.append(right)
        mass.append(pi[right] / (n * tail))

    return RedistributionWeights(
        r_star=_frozen(r),
        delta=_frozen(delta, dtype=np.int8),
        effective_delta=_frozen(eff, dtype=np.int8),
        pi=_frozen(pi),
        order=_frozen(order, dtype=np.int64),
        rows=_frozen(np.concatenate(rows), dtype=np.int64),
        cols=_frozen(np.concatenate(cols), dtype=np.int64),
        mass=_frozen(np.concatenate(mass)),
    )


def joint_distribution(w: RedistributionWeights, sample: CensoredSample) -> WeightedJointDistribution:
    return WeightedJointDistribution(u=w.atom_u, x=sample.X[w.rows], mass=w.mass)


def conditional_expectation(w: RedistributionWeights, g, i):
    """E_{F*}[g(u) | w_i]: g(r_i) when observed, the KM tail average of g beyond r_i otherwise"""
    if w.effective_delta[i] == 1:
        return float(g(w.r_star[i]))
    right = (w.r_star > w.r_star[i]) & (w.pi > 0)
    if not np.any(right):
        raise ValueError(f"no uncensored residual to the right of row {i}")
    values = np.asarray([g(u) for u in w.r_star[right]], dtype=float)
    return float(np.sum(values * w.pi[right]) / np.sum(w.pi[right]))


def conditional_expectations(w: RedistributionWeights, values):
    """Vectorized conditional_expectation for every row, with values[j] = g(r*_j)"""
    values = np.asarray(values, dtype=float)
    order = w.order
    sorted_r = w.r_star[order]
    suffix_gv = np.concatenate([np.cumsum((w.pi * values)[order][::-1])[::-1], [0.0]])
    suffix_pi = np.concatenate([np.cumsum(w.pi[order][::-1])[::-1], [0.0]])
    out = values.copy()
    cens = np.flatnonzero(w.effective_delta == 0)
    if cens.size:
        start = np.searchsorted(sorted_r, w.r_star[cens], side="right")
        out[cens] = suffix_gv[start] / suffix_pi[start]
    return out


def weighted_expectation(w: RedistributionWeights, sample: CensoredSample, g):
    """
    E_{H*}[g(u, x)] = sum_ij g(r_j, x_i) pi_ij.
    g is called once with the atom arrays: u of shape (k,) and x of shape (k, p).
    """
    values = np.asarray(g(w.atom_u, sample.X[w.rows]), dtype=float)
    return float(np.sum(values * w.mass))


def km_cdf(w: RedistributionWeights, t):
    """Right-continuous F*(t) = sum_{r_j <= t} pi_j"""
    return float(min(1.0, np.sum(w.pi[w.r_star <= t])))


def km_survival(w: RedistributionWeights, t):
    return 1.0 - km_cdf(w, t)


def km_quantile(w: RedistributionWeights, alpha):
    """Lower quantile of F*"""
    support = w.pi > 0
    return weighted_lower_quantile(w.r_star[support], w.pi[support], alpha)
