#!/usr/bin/env python3
"""
Estimators Module
Candidate generation by p-subsampling, the kappa-pruned resampling search,
and the public estimators: S, LMS, MM, tau, M, Buckley-James LS, L1 and GM
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from config import (
    B_OVER_A, BJ_MAX_ITER, BJ_TOL, C1, C2, DEFAULT_SEED, N_CANDIDATES, POLISH_STEPS,
    PRUNE_CHUNK, TAU_C2, THREADS,
)
from data_model import (
    CandidateGenerationError, CensoredSample, CensregError, DimensionMismatchError, FitResult,
    ResidualVector, residuals, validate,
)
from inner_fit import (
    InnerProblem, IRWLSConfig, c_objective, irwls_minimize, s_inner, score_vector, weighted_l1,
)
from km_redistribution import conditional_expectations, kaplan_meier, km_quantile
from loss_functions import LossFunction, absolute, bisquare, calibrate_b, dominates, jump
from scale_estimators import ScaleConfig, m_scale_rows, shifted_residuals, tau_scale_rows
from utils import PURPOSE_CANDIDATES, mad, make_rng, weighted_lower_quantile

SINGULAR_COND = 1e12


@dataclass(frozen=True)
class SearchConfig:
    n_candidates: int = N_CANDIDATES
    seed: int = DEFAULT_SEED
    a_n_kind: str = "identity"          # or "mad_diagonal"
    refine: bool = False
    rng_stream_id: int = 0
    prune: bool = True
    threads: int = THREADS
    chunk: int = PRUNE_CHUNK

    def __post_init__(self):
        if self.n_candidates < 1:
            raise ValueError("n_candidates must be at least 1")
        if self.a_n_kind not in ("identity", "mad_diagonal"):
            raise ValueError(f"unknown A_n kind '{self.a_n_kind}'")


@dataclass(frozen=True, eq=False)
class CandidateSet:
    betas: np.ndarray
    provenance: np.ndarray
    rejected: int = 0

    def __len__(self):
        return int(self.betas.shape[0])


@dataclass(frozen=True)
class EstimatorSettings:
    """Loss tuning plus search settings shared by every estimator in one run"""
    search: SearchConfig = field(default_factory=SearchConfig)
    c1: float = C1
    c2: float = C2
    tau_c2: float = TAU_C2
    b_over_a: float = B_OVER_A

    @property
    def rho1(self):
        return bisquare(self.c1)

    @property
    def b(self):
        return calibrate_b(self.rho1, self.b_over_a)


def subsample_count(p, contamination=0.5, confidence=0.99):
    """Subsamples of size p needed to draw a clean one with the given confidence"""
    clean = (1.0 - contamination) ** p
    if clean >= 1.0:
        return 1
    return int(math.ceil(math.log(1.0 - confidence) / math.log(1.0 - clean)))


def generate_candidates(sample: CensoredSample, cfg: SearchConfig) -> CandidateSet:
    """Exact fits of uniformly drawn nonsingular p-subsamples; singular draws are redrawn"""
    n, p, N = sample.n, sample.p, cfg.n_candidates
    rng = make_rng(cfg.seed, cfg.rng_stream_id, PURPOSE_CANDIDATES)
    betas = np.empty((N, p))
    provenance = np.empty((N, p), dtype=np.int64)
    found, rejected, attempts = 0, 0, 0
    while found < N:
        if attempts >= 100 * N:
            raise CandidateGenerationError(
                f"found only {found} nonsingular subsamples of size {p} in {attempts} draws"
            )
        attempts += 1
        rows = np.sort(rng.choice(n, size=p, replace=False))
        Xs = sample.X[rows]
        if np.linalg.cond(Xs) > SINGULAR_COND:
            rejected += 1
            continue
        betas[found] = np.linalg.solve(Xs, sample.y_star[rows])
        provenance[found] = rows
        found += 1
    if rejected > n - p:
        logging.warning(f"{rejected} singular subsamples rejected (n - p = {n - p}); design may be degenerate")
    return CandidateSet(betas=betas, provenance=provenance, rejected=rejected)


def a_n_matrix(sample: CensoredSample, kind="identity"):
    """Metric for gamma'A_n gamma: identity, or squared MADs of the covariates (1 for constant columns)"""
    p = sample.p
    if kind == "identity":
        return np.eye(p)
    diag = np.ones(p)
    for j in range(p):
        col = sample.X[:, j]
        if np.ptp(col) == 0:
            continue
        spread = mad(col)
        diag[j] = spread ** 2 if spread > 0 else 1.0
    return np.diag(diag)


def _quad(gammas, A):
    gammas = np.atleast_2d(gammas)
    return np.einsum("ij,jk,ik->i", gammas, A, gammas)


def _scale_criterion(cfg: ScaleConfig):
    def criterion(w, sample, gammas):
        scales, _ = m_scale_rows(shifted_residuals(w, sample, gammas), w.mass, cfg, sample.zero_tol)
        return scales
    return criterion


def _tau_criterion(cfg: ScaleConfig, rho2: LossFunction):
    def criterion(w, sample, gammas):
        taus, _ = tau_scale_rows(shifted_residuals(w, sample, gammas), w.mass, cfg, rho2, sample.zero_tol)
        return taus
    return criterion


@dataclass(frozen=True, eq=False)
class SearchOutcome:
    index: int
    beta: np.ndarray
    gamma: np.ndarray
    criterion: float
    objective: float
    evaluations: int
    visited: int


def _full_scan(sample, betas, j, criterion, A):
    w = kaplan_meier(residuals(sample, betas[j]))
    gammas = betas - betas[j]
    crit = criterion(w, sample, gammas)
    k = int(np.argmin(crit))
    return k, float(crit[k]), float(_quad(gammas[k], A)[0])


def _search(sample, cands: CandidateSet, cfg: SearchConfig, criterion):
    """
    beta_j minimizing gamma_hat(beta_j)'A_n gamma_hat(beta_j), where gamma_hat(beta_j)
    is the best of {beta_r - beta_j} under the inner criterion. Candidates are
    ranked by (objective, criterion at gamma_hat, index), so the many exact
    subsample fits with gamma_hat = 0 are told apart by their scale.
    With pruning, beta_j is skipped as soon as a gamma outside the kappa-ball
    beats the best gamma inside it.
    """
    betas = cands.betas
    N = betas.shape[0]
    A = a_n_matrix(sample, cfg.a_n_kind)
    kappa, best_crit = np.inf, np.inf
    best = None
    evaluations = 0
    visited = 0

    if not cfg.prune:
        if cfg.threads > 1:
            with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
                scans = list(pool.map(lambda j: _full_scan(sample, betas, j, criterion, A), range(N)))
        else:
            scans = [_full_scan(sample, betas, j, criterion, A) for j in range(N)]
        for j, (k, crit, objective) in enumerate(scans):
            if (objective, crit) < (kappa, best_crit):
                kappa, best_crit = objective, crit
                best = (j, k, crit)
        evaluations, visited = N * N, N
    else:
        # indices that won or beat before are scanned first; the exit test does not depend on order
        hot = np.zeros(N, dtype=bool)
        for j in range(N):
            gammas = betas - betas[j]
            norms = _quad(gammas, A)
            small = np.flatnonzero(norms <= kappa)
            if small.size == 0:
                continue
            visited += 1
            w = kaplan_meier(residuals(sample, betas[j]))
            crit_small = criterion(w, sample, gammas[small])
            evaluations += small.size
            pos = int(np.argmin(crit_small))
            omega, k_small = float(crit_small[pos]), int(small[pos])
            hot[k_small] = True
            if norms[k_small] == kappa and not omega < best_crit:
                # gamma_hat is k_small or lies outside the ball: no improvement either way
                continue
            large = np.flatnonzero(norms > kappa)
            large = np.concatenate([large[hot[large]], large[~hot[large]]])
            beaten = False
            for start in range(0, large.size, cfg.chunk):
                block = large[start:start + cfg.chunk]
                crit = criterion(w, sample, gammas[block])
                evaluations += block.size
                beats = (crit < omega) | ((crit == omega) & (block < k_small))
                if np.any(beats):
                    hot[block[beats]] = True
                    beaten = True
                    break
            if beaten:
                continue
            kappa, best_crit = float(norms[k_small]), omega
            best = (j, k_small, omega)

    j, k, crit = best
    gamma = betas[k] - betas[j]
    return SearchOutcome(index=j, beta=betas[j].copy(), gamma=gamma, criterion=crit,
                         objective=float(_quad(gamma, A)[0]), evaluations=evaluations, visited=visited)


def _polish(beta, gamma_fn, A, steps=POLISH_STEPS):
    """beta <- beta + gamma_hat(beta) while ||gamma_hat||_A keeps decreasing"""
    gamma = gamma_fn(beta)
    norm = float(_quad(gamma, A)[0])
    for _ in range(steps):
        trial = beta + gamma
        trial_gamma = gamma_fn(trial)
        trial_norm = float(_quad(trial_gamma, A)[0])
        if not trial_norm < norm:
            break
        beta, gamma, norm = trial, trial_gamma, trial_norm
    return beta, gamma, norm


def _scale_search_fit(sample, cfg, scale_cfg, criterion, label, extra=None):
    validate(sample)
    cands = generate_candidates(sample, cfg)
    out = _search(sample, cands, cfg, criterion)
    beta, gamma, objective = out.beta, out.gamma, out.objective
    if cfg.refine:
        A = a_n_matrix(sample, cfg.a_n_kind)

        def gamma_fn(b):
            prob = InnerProblem.at(sample, b, scale_cfg.rho1)
            return s_inner(prob, cands.betas - b, scale_cfg, refine=scale_cfg.rho1.differentiable).gamma
        beta, gamma, objective = _polish(beta, gamma_fn, A)
    w = kaplan_meier(residuals(sample, beta))
    scales, capped = m_scale_rows(shifted_residuals(w, sample, gamma), w.mass, scale_cfg, sample.zero_tol)
    s_n, capped = float(scales[0]), bool(capped[0])
    diagnostics = {
        "gamma_hat": gamma.tolist(),
        "candidate_index": out.index,
        "criterion": out.criterion,
        "criterion_evaluations": out.evaluations,
        "pruned": cfg.prune,
        "scale_capped": bool(capped),
        "rejected_subsamples": cands.rejected,
    }
    if extra:
        diagnostics.update(extra(w, gamma, s_n))
    logging.info(
        f"{label}: beta={np.round(beta, 6).tolist()} s_n={s_n:.6g} "
        f"({out.evaluations} criterion evaluations over {out.visited} candidates)"
    )
    return FitResult(beta=beta, scale=s_n, objective=objective, n_candidates_evaluated=out.visited,
                     converged=True, exact_fit=s_n == 0.0, estimator=label, diagnostics=diagnostics)


def s_estimate(sample: CensoredSample, cfg: SearchConfig = SearchConfig(), rho1=None, b=None) -> FitResult:
    """S-estimator for censored responses"""
    rho1 = rho1 or bisquare(C1)
    b = calibrate_b(rho1, B_OVER_A) if b is None else b
    scale_cfg = ScaleConfig(rho1=rho1, b=b)
    return _scale_search_fit(sample, cfg, scale_cfg, _scale_criterion(scale_cfg), "s")


def lms_estimate(sample: CensoredSample, cfg: SearchConfig = SearchConfig()) -> FitResult:
    """LMS: the jump loss with b = 1/2, scale is the weighted median of |u - gamma'x|"""
    scale_cfg = ScaleConfig(rho1=jump(), b=0.5)
    return _scale_search_fit(sample, cfg, scale_cfg, _scale_criterion(scale_cfg), "lms")


def tau_estimate(sample: CensoredSample, cfg: SearchConfig = SearchConfig(), rho1=None, rho2=None, b=None) -> FitResult:
    """tau-estimator: same outer search with the tau-scale as inner criterion"""
    rho1 = rho1 or bisquare(C1)
    rho2 = rho2 or bisquare(TAU_C2)
    b = calibrate_b(rho1, B_OVER_A) if b is None else b
    dominates(rho1, rho2)
    scale_cfg = ScaleConfig(rho1=rho1, b=b)

    def tau_value(w, gamma, s_n):
        taus, _ = tau_scale_rows(shifted_residuals(w, sample, gamma), w.mass, scale_cfg, rho2, sample.zero_tol)
        return {"tau": float(taus[0])}
    return _scale_search_fit(sample, cfg, scale_cfg, _tau_criterion(scale_cfg, rho2), "tau", extra=tau_value)


def mm_estimate(sample: CensoredSample, cfg: SearchConfig = SearchConfig(), rho1=None, rho2=None, b=None,
                initial: Optional[FitResult] = None, irwls_cfg: IRWLSConfig = IRWLSConfig()) -> FitResult:
    """S-estimate, then the local minimum of R(gamma) reached by IRWLS from gamma = 0"""
    rho1 = rho1 or bisquare(C1)
    rho2 = rho2 or bisquare(C2)
    dominates(rho1, rho2)
    s_fit = initial if initial is not None else s_estimate(sample, cfg, rho1, b)
    if s_fit.exact_fit:
        return FitResult(beta=s_fit.beta, scale=0.0, objective=0.0,
                         n_candidates_evaluated=s_fit.n_candidates_evaluated, converged=True,
                         exact_fit=True, estimator="mm", diagnostics={"s_beta": s_fit.beta.tolist()})
    prob = InnerProblem.at(sample, s_fit.beta, rho2, s_fit.scale)
    res = irwls_minimize(prob, irwls_cfg)
    r0 = c_objective(prob, np.zeros(sample.p))
    gamma = res.gamma if res.objective <= r0 else np.zeros(sample.p)
    if not res.converged:
        logging.warning(f"MM: IRWLS stopped after {res.iterations} iterations without converging")
    beta = s_fit.beta + gamma
    return FitResult(beta=beta, scale=s_fit.scale, objective=min(res.objective, r0),
                     n_candidates_evaluated=s_fit.n_candidates_evaluated, converged=res.converged,
                     exact_fit=False, estimator="mm",
                     diagnostics={"s_beta": s_fit.beta.tolist(), "gamma_tilde": gamma.tolist(),
                                  "irwls_iterations": res.iterations, "R0": r0})


def _m_gamma(sample, beta, rho, s_n, irwls_cfg):
    return irwls_minimize(InnerProblem.at(sample, beta, rho, s_n), irwls_cfg).gamma


def m_estimate(sample: CensoredSample, cfg: SearchConfig = SearchConfig(), rho=None, s_n=None,
               irwls_cfg: IRWLSConfig = IRWLSConfig(), initial: Optional[FitResult] = None) -> FitResult:
    """
    M-estimator at fixed scale: over the candidates, minimize gamma_hat'A_n gamma_hat
    where gamma_hat(beta) is the IRWLS minimizer of C_n(beta, .) from 0
    """
    rho = rho or bisquare(C2)
    if s_n is None:
        initial = initial if initial is not None else s_estimate(sample, cfg)
        s_n = initial.scale
    if s_n == 0.0 and initial is not None and initial.exact_fit:
        return FitResult(beta=initial.beta, scale=0.0, objective=0.0, exact_fit=True, estimator="m",
                         n_candidates_evaluated=initial.n_candidates_evaluated)
    if not s_n > 0:
        raise ValueError("the M-estimator needs a positive scale s_n")
    validate(sample)
    cands = generate_candidates(sample, cfg)
    A = a_n_matrix(sample, cfg.a_n_kind)

    def gamma_fn(b):
        return _m_gamma(sample, b, rho, s_n, irwls_cfg)

    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            gammas = list(pool.map(gamma_fn, cands.betas))
    else:
        gammas = [gamma_fn(b) for b in cands.betas]
    norms = _quad(np.vstack(gammas), A)
    tied = np.flatnonzero(norms == norms.min())
    if tied.size > 1:
        # equal objectives fall back to C_n(beta, gamma_hat), then to the index
        fits = [c_objective(InnerProblem.at(sample, cands.betas[t], rho, s_n), gammas[t]) for t in tied]
        j = int(tied[int(np.argmin(fits))])
    else:
        j = int(tied[0])
    beta, gamma, objective = cands.betas[j].copy(), gammas[j], float(norms[j])
    if cfg.refine:
        beta, gamma, objective = _polish(beta, gamma_fn, A)
    prob = InnerProblem.at(sample, beta, rho, s_n)
    score = score_vector(prob, gamma)
    return FitResult(beta=beta, scale=s_n, objective=objective, n_candidates_evaluated=len(cands),
                     converged=True, exact_fit=False, estimator="m",
                     diagnostics={"gamma_hat": gamma.tolist(), "candidate_index": j,
                                  "score_norm": float(np.linalg.norm(score))})


def _km_spread(w):
    mean = float(np.sum(w.pi * w.r_star))
    return math.sqrt(max(0.0, float(np.sum(w.pi * (w.r_star - mean) ** 2))))


def buckley_james_ls(sample: CensoredSample, cfg: Optional[SearchConfig] = None) -> FitResult:
    """Least squares with censored responses replaced by KM conditional expectations, iterated"""
    validate(sample)
    X, y = sample.X, sample.y_star
    beta = np.linalg.lstsq(X, y, rcond=None)[0]
    start_norm = float(np.linalg.norm(beta))
    previous = None
    converged, oscillating, diverged = False, False, False
    it = 0
    for it in range(1, BJ_MAX_ITER + 1):
        res = residuals(sample, beta)
        w = kaplan_meier(res)
        y_hat = X @ beta + conditional_expectations(w, res.r_star)
        new = np.linalg.lstsq(X, y_hat, rcond=None)[0]
        if np.linalg.norm(new - beta) <= BJ_TOL * (1.0 + np.linalg.norm(beta)):
            beta, converged = new, True
            break
        if previous is not None and np.linalg.norm(new - previous) <= BJ_TOL * (1.0 + np.linalg.norm(new)):
            beta, converged, oscillating = (new + beta) / 2.0, True, True
            break
        if np.linalg.norm(new) > 1e8 * (1.0 + start_norm):
            diverged = True
            logging.warning("Buckley-James iterates are diverging")
            beta = new
            break
        previous, beta = beta, new
    w = kaplan_meier(residuals(sample, beta))
    spread = _km_spread(w)
    return FitResult(beta=beta, scale=spread, objective=spread ** 2, n_candidates_evaluated=0,
                     converged=converged, exact_fit=spread == 0.0, estimator="ls",
                     diagnostics={"iterations": it, "oscillating": oscillating, "diverged": diverged})


def l1_estimate(sample: CensoredSample, cfg: Optional[SearchConfig] = None) -> FitResult:
    """
    Fixed point beta <- beta + gamma_hat(beta), gamma_hat the weighted-L1 fit of the
    KM-redistributed residuals; smoothing unit is the mean absolute OLS residual
    """
    validate(sample)
    X, y = sample.X, sample.y_star
    beta = np.linalg.lstsq(X, y, rcond=None)[0]
    unit = float(np.mean(np.abs(y - X @ beta)))
    if unit <= sample.zero_tol:
        return FitResult(beta=beta, scale=0.0, objective=0.0, exact_fit=True, estimator="l1",
                         diagnostics={"iterations": 0})
    previous = None
    converged = False
    it = 0
    for it in range(1, BJ_MAX_ITER + 1):
        prob = InnerProblem.at(sample, beta, absolute(), unit)
        gamma = weighted_l1(prob).gamma
        new = beta + gamma
        if np.linalg.norm(gamma) <= BJ_TOL * (1.0 + np.linalg.norm(beta)):
            beta, converged = new, True
            break
        if previous is not None and np.linalg.norm(new - previous) <= BJ_TOL * (1.0 + np.linalg.norm(new)):
            beta, converged = (new + beta) / 2.0, True
            break
        previous, beta = beta, new
    w = kaplan_meier(residuals(sample, beta))
    spread = float(np.sum(w.pi * np.abs(w.r_star)))
    return FitResult(beta=beta, scale=spread, objective=spread, converged=converged,
                     exact_fit=spread == 0.0, estimator="l1", diagnostics={"iterations": it})


def _gm_score(sample, slope, x_sign):
    r = sample.y_star - slope * sample.X[:, 1]
    w = kaplan_meier(ResidualVector(r, sample.delta))
    alpha = km_quantile(w, 0.5)
    cond = conditional_expectations(w, np.sign(r - alpha))
    return float(np.sum(cond * x_sign)), alpha, w


def gm_estimate(sample: CensoredSample, cfg: SearchConfig = SearchConfig()) -> FitResult:
    """
    Simple-regression GM (Mood-Brown type) estimator: the slope solving
    sum_i E[sign(u - alpha(beta)) | w_i] sign(x_i - med x) = 0, by bisection
    """
    if sample.p != 2 or not np.all(sample.X[:, 0] == 1.0):
        raise DimensionMismatchError("GM needs simple regression with an intercept column (p = 2)")
    validate(sample)
    x = sample.X[:, 1]
    x_sign = np.sign(x - np.median(x))
    slopes = generate_candidates(sample, cfg).betas[:, 1]
    lo, hi = float(np.min(slopes)), float(np.max(slopes))
    if hi - lo <= 0:
        lo, hi = lo - 1.0, hi + 1.0

    def score(b):
        return _gm_score(sample, b, x_sign)[0]

    s_lo, s_hi = score(lo), score(hi)
    for _ in range(60):
        if s_lo > 0 and s_hi <= 0:
            break
        width = hi - lo
        if s_lo <= 0:
            lo -= width
            s_lo = score(lo)
        if s_hi > 0:
            hi += width
            s_hi = score(hi)
    converged = s_lo > 0 and s_hi <= 0
    if converged:
        for _ in range(200):
            if hi - lo <= 1e-13 * (1.0 + abs(lo) + abs(hi)):
                break
            mid = 0.5 * (lo + hi)
            if score(mid) > 0:
                lo = mid
            else:
                hi = mid
        slope = 0.5 * (lo + hi)
    else:
        logging.warning("GM: no sign change of the score in the bracket; returning the better endpoint")
        slope = lo if abs(s_lo) <= abs(s_hi) else hi
    value, alpha, w = _gm_score(sample, slope, x_sign)
    r = w.r_star - alpha
    support = w.pi > 0
    spread = weighted_lower_quantile(np.abs(r[support]), w.pi[support], 0.5)
    return FitResult(beta=np.array([alpha, slope]), scale=spread, objective=abs(value) / sample.n,
                     converged=converged, exact_fit=spread == 0.0, estimator="gm",
                     diagnostics={"score": value, "bracket": [lo, hi]})


def fit_estimator(name, sample, settings: EstimatorSettings = EstimatorSettings(), initial=None):
    """Dispatch one estimator by CLI name"""
    cfg = settings.search
    if name == "s":
        return s_estimate(sample, cfg, settings.rho1, settings.b)
    if name == "lms":
        return lms_estimate(sample, cfg)
    if name == "mm":
        return mm_estimate(sample, cfg, settings.rho1, bisquare(settings.c2), settings.b, initial=initial)
    if name == "tau":
        return tau_estimate(sample, cfg, settings.rho1, bisquare(settings.tau_c2), settings.b)
    if name == "m":
        if initial is None:
            initial = s_estimate(sample, cfg, settings.rho1, settings.b)
        return m_estimate(sample, cfg, bisquare(settings.c2), initial.scale, initial=initial)
    if name == "ls":
        return buckley_james_ls(sample, cfg)
    if name == "l1":
        return l1_estimate(sample, cfg)
    if name == "gm":
        return gm_estimate(sample, cfg)
    raise ValueError(f"unknown estimator '{name}'")


def fit_estimators(sample, names, settings: EstimatorSettings = EstimatorSettings()):
    """
    Fit several estimators on one sample; the S fit is shared by S, MM and M.
    Failures are returned in place of the FitResult.
    """
    results = {}
    s_fit = None
    if any(name in ("s", "mm", "m") for name in names):
        try:
            s_fit = s_estimate(sample, settings.search, settings.rho1, settings.b)
        except CensregError as e:
            s_fit = e
    for name in names:
        try:
            if name == "s":
                if isinstance(s_fit, Exception):
                    raise s_fit
                results[name] = s_fit
            elif name in ("mm", "m"):
                if isinstance(s_fit, Exception):
                    raise s_fit
                results[name] = fit_estimator(name, sample, settings, initial=s_fit)
            else:
                results[name] = fit_estimator(name, sample, settings)
        except (CensregError, ValueError, np.linalg.LinAlgError) as e:
            logging.error(f"Estimator '{name}' failed: {e}")
            results[name] = e
    return results


def with_stream(settings: EstimatorSettings, stream_id, seed=None):
    """Same settings on another candidate stream"""
    search = replace(settings.search, rng_stream_id=int(stream_id),
                     seed=settings.search.seed if seed is None else int(seed))
    return replace(settings, search=search)
