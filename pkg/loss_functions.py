#!/usr/bin/env python3
"""
Loss Functions Module
Bounded and monotone rho/psi family (bisquare, jump, absolute, square)
plus tuning-constant calibration against the standard normal law
"""

import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import integrate, optimize
from scipy.stats import norm


class LossKind(str, Enum):
    BISQUARE = "bisquare"
    JUMP = "jump"
    ABSOLUTE = "absolute"   # psi = sign, used by L1 and GM
    SQUARE = "square"       # least squares


@dataclass(frozen=True)
class LossFunction:
    kind: LossKind
    c: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", LossKind(self.kind))
        if self.kind == LossKind.BISQUARE and not self.c > 0:
            raise ValueError(f"bisquare tuning constant must be positive, got {self.c}")

    @property
    def sup(self):
        """a = sup_u rho(u)"""
        if self.kind == LossKind.BISQUARE:
            return self.c ** 2 / 6.0
        if self.kind == LossKind.JUMP:
            return 1.0
        return np.inf

    @property
    def bounded(self):
        return self.kind in (LossKind.BISQUARE, LossKind.JUMP)

    @property
    def differentiable(self):
        return self.kind != LossKind.JUMP

    def rho(self, u):
        u = np.asarray(u, dtype=float)
        if self.kind == LossKind.BISQUARE:
            w = np.clip(1.0 - (u / self.c) ** 2, 0.0, None)
            return (self.c ** 2 / 6.0) * (1.0 - w ** 3)
        if self.kind == LossKind.JUMP:
            return (np.abs(u) >= 1.0).astype(float)
        if self.kind == LossKind.ABSOLUTE:
            return np.abs(u)
        return u ** 2

    def psi(self, u):
        if self.kind == LossKind.JUMP:
            raise ValueError("the jump loss has no derivative; use the closed-form median scale")
        u = np.asarray(u, dtype=float)
        if self.kind == LossKind.BISQUARE:
            w = np.clip(1.0 - (u / self.c) ** 2, 0.0, None)
            return u * w ** 2
        if self.kind == LossKind.ABSOLUTE:
            return np.sign(u)
        return 2.0 * u

    def weight(self, t, eps=1e-6):
        """psi(t)/t with the limit psi'(0) at t = 0; eps floors |t| for the absolute kind"""
        if self.kind == LossKind.JUMP:
            raise ValueError("the jump loss has no IRWLS weights")
        t = np.asarray(t, dtype=float)
        if self.kind == LossKind.BISQUARE:
            return np.clip(1.0 - (t / self.c) ** 2, 0.0, None) ** 2
        if self.kind == LossKind.ABSOLUTE:
            return 1.0 / np.maximum(np.abs(t), eps)
        return np.full_like(t, 2.0)

    def describe(self):
        return f"{self.kind.value}(c={self.c:g})" if self.kind == LossKind.BISQUARE else self.kind.value


def bisquare(c):
    """Tukey bisquare with tuning constant c; sup rho = c^2 / 6"""
    return LossFunction(LossKind.BISQUARE, float(c))


def jump():
    """rho(u) = I(|u| >= 1); the M-scale under it is a weighted median"""
    return LossFunction(LossKind.JUMP)


def absolute():
    return LossFunction(LossKind.ABSOLUTE)


def square():
    return LossFunction(LossKind.SQUARE)


def rho(f: LossFunction, u):
    value = f.rho(u)
    return float(value) if np.ndim(value) == 0 else value


def psi(f: LossFunction, u):
    value = f.psi(u)
    return float(value) if np.ndim(value) == 0 else value


def calibrate_b(f: LossFunction, target_bdp):
    """Right-hand side b of the M-scale equation: target_bdp * a"""
    if not f.bounded:
        raise ValueError(f"{f.describe()} is unbounded; b is only defined for bounded losses")
    if not 0.0 <= target_bdp < 1.0:
        raise ValueError(f"target breakdown must lie in [0, 1), got {target_bdp}")
    return float(target_bdp) * f.sup


def calibrate_consistency(f: LossFunction):
    """E_Phi[rho(u)] for u standard normal"""
    if f.kind == LossKind.JUMP:
        return float(2.0 * norm.sf(1.0))
    if f.kind == LossKind.SQUARE:
        return 1.0
    if f.kind == LossKind.ABSOLUTE:
        return float(np.sqrt(2.0 / np.pi))
    value, _ = integrate.quad(lambda u: f.rho(u) * norm.pdf(u), -f.c, f.c)
    return float(value + f.sup * 2.0 * norm.sf(f.c))


def tune_bisquare_for_breakdown(target=0.5):
    """c such that E_Phi[rho_c] / a_c = target"""
    return float(optimize.brentq(
        lambda c: calibrate_consistency(bisquare(c)) / bisquare(c).sup - target, 0.1, 50.0, xtol=1e-12
    ))


def bisquare_efficiency(c):
    """Normal-law asymptotic efficiency (E psi')^2 / E psi^2 of the bisquare location M-estimate"""
    def dpsi(u):
        w = 1.0 - (u / c) ** 2
        return w ** 2 - 4.0 * (u / c) ** 2 * w
    num, _ = integrate.quad(lambda u: dpsi(u) * norm.pdf(u), -c, c)
    den, _ = integrate.quad(lambda u: (u * (1.0 - (u / c) ** 2) ** 2) ** 2 * norm.pdf(u), -c, c)
    return float(num ** 2 / den)


def tune_bisquare_for_efficiency(eff=0.95):
    return float(optimize.brentq(lambda c: bisquare_efficiency(c) - eff, 1.0, 20.0, xtol=1e-12))


def dominates(rho1: LossFunction, rho2: LossFunction, grid=None):
    """Grid check of rho2/a2 <= rho1/a1 (normalized, so differing bisquare constants compare)"""
    if not (rho1.bounded and rho2.bounded):
        return False
    if grid is None:
        span = 3.0 * max(rho1.c, rho2.c, 1.0)
        grid = np.linspace(-span, span, 4001)
    ok = bool(np.all(rho2.rho(grid) / rho2.sup <= rho1.rho(grid) / rho1.sup + 1e-12))
    if not ok:
        logging.warning(f"{rho2.describe()} is not dominated by {rho1.describe()} on the check grid")
    return ok
