"""Thermodynamic-integration estimators and run drivers.

Equilibrium TI runs a chain at each rung of a fixed ladder and integrates
the rung means; NETI-DIFF makes a single non-equilibrium sweep from one
model's posterior to the other's and integrates the log-likelihood ratio
along the way.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Optional, Sequence

import numpy as np
from scipy.special import logsumexp

from .core import EvidenceEstimate, Method, PathKernel, RngStream, Trace
from .ladders import LadderConfig, LadderKind, make_ladder, optimal_insert, power_law_ladder

logger = logging.getLogger(__name__)

MIN_STEPS_PER_RUNG = 10


@dataclass(frozen=True)
class EquilibriumRungSummary:
    tau: float
    mean_loglik: float
    var_loglik: float
    n_samples: int


@dataclass(frozen=True)
class RunConfig:
    """Settings shared by the estimator drivers.

    For NETI-DIFF the ladder length is derived from ``n_iter`` and the
    kernel cost, so ``ladder.count`` is ignored; for equilibrium TI it is
    the number of rungs ``K``.
    """

    method: Method = Method.NETI_DIFF
    n_iter: int = 10_000
    ladder: LadderConfig = field(default_factory=LadderConfig)
    burn_in_steps: int = 1000
    burn_in_fraction: float = 0.2
    pilot_fraction: float = 0.1
    seed: int = 0
    repeats: int = 1

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        if self.n_iter <= 0:
            raise ValueError("n_iter must be positive")
        if not 0.0 <= self.burn_in_fraction < 1.0:
            raise ValueError("burn_in_fraction must lie in [0, 1)")
        if self.method is Method.NETI_DIFF and self.n_iter < 2:
            raise ValueError("NETI-DIFF needs at least two rungs")


def trapezoid_integral(taus: Sequence[float], values: Sequence[float]) -> float:
    """Trapezoid rule for the integral over ``[taus[0], taus[-1]]``."""
    taus = np.asarray(taus, dtype=float)
    values = np.asarray(values, dtype=float)
    if taus.shape != values.shape or taus.ndim != 1:
        raise ValueError("taus and values must be 1-d arrays of equal length")
    if taus.size < 2:
        raise ValueError("need at least two points to integrate")
    dt = np.diff(taus)
    if np.any(dt < 0):
        raise ValueError("taus must be non-decreasing")
    return float(np.sum(0.5 * dt * (values[1:] + values[:-1])))


def corrected_trapezoid_integral(taus: Sequence[float], means: Sequence[float],
                                 variances: Sequence[float]) -> float:
    """Trapezoid rule minus the curvature correction.

    The derivative of the rung mean with respect to tau equals the rung
    variance, so ``sum (dtau**2/12) * (V_k - V_{k-1})`` estimates the
    leading trapezoid error, which is subtracted.
    """
    taus = np.asarray(taus, dtype=float)
    variances = np.asarray(variances, dtype=float)
    base = trapezoid_integral(taus, means)
    if variances.shape != taus.shape:
        raise ValueError("variances must match taus")
    dt = np.diff(taus)
    return float(base - np.sum(dt ** 2 / 12.0 * np.diff(variances)))


def _check_trace(trace: Trace) -> None:
    if len(trace) < 2:
        raise ValueError("trace needs at least two points")
    if np.any(np.diff(trace.tau) < 0):
        raise ValueError("trace taus must be non-decreasing")


def neti_path_integral(trace: Trace) -> float:
    """Trapezoid integral of ``phi`` against ``tau`` along a sweep."""
    _check_trace(trace)
    if trace.tau[0] != 0.0 or trace.tau[-1] != 1.0:
        raise ValueError("trace must start at tau=0 and end at tau=1")
    return trapezoid_integral(trace.tau, trace.phi)


def estimator_variance(trace: Trace) -> float:
    """Trace-based variance ``sum dphi * dtau``; may come out negative."""
    _check_trace(trace)
    return float(np.sum(np.diff(trace.phi) * np.diff(trace.tau)))


def _make_estimate(method, value, raw_var, n_iter, seed, stream, t0):
    flags = ()
    if raw_var < 0:
        flags = ("negative-variance",)
        logger.warning("trace variance estimate is negative (%.3g); reporting 0", raw_var)
    return EvidenceEstimate(method, float(value), max(float(raw_var), 0.0), int(n_iter), int(seed),
                            int(stream), 1e3 * (time.perf_counter() - t0), float(raw_var), flags)


def run_neti_diff(kernel: PathKernel, config: RunConfig, stream: int = 0,
                  rng: Optional[np.random.Generator] = None) -> tuple[EvidenceEstimate, Trace]:
    """One non-equilibrium sweep from model 1 (tau=0) to model 2 (tau=1).

    After ``burn_in_steps`` transitions at tau=0 the chain takes exactly
    one transition per ladder rung. Ladders that stop short of 0 or 1
    (the sigmoid ladder) are closed with the burn-in end state at tau=0
    and one extra transition at tau=1.
    """
    t0 = time.perf_counter()
    if rng is None:
        rng = RngStream(config.seed, stream).generator()
    n_rungs = config.n_iter // max(int(getattr(kernel, "cost_per_step", 1)), 1)
    if n_rungs < 2:
        raise ValueError("n_iter too small for a NETI-DIFF sweep")
    lcfg = replace(config.ladder, count=n_rungs)
    if lcfg.kind is LadderKind.OPTIMAL:
        raise ValueError("NETI-DIFF uses a power or sigmoid ladder")
    taus = make_ladder(lcfg).taus
    state = kernel.init_state(rng)
    if config.burn_in_steps > 0:
        kernel.advance(state, np.zeros(config.burn_in_steps), rng)
    head_tau, head_phi = [], []
    if taus[0] > 0.0:
        head_tau, head_phi = [0.0], [kernel.log_lik_ratio(state)]
    phis = kernel.advance(state, taus, rng)
    tail = np.array([1.0]) if taus[-1] < 1.0 else np.zeros(0)
    tail_phi = kernel.advance(state, tail, rng) if tail.size else np.zeros(0)
    all_tau = np.concatenate([head_tau, taus, tail])
    all_phi = np.concatenate([head_phi, phis, tail_phi])
    offset = 0 if head_tau else 1
    trace = Trace(np.arange(all_tau.size) + offset, all_tau, all_phi)
    est = _make_estimate(Method.NETI_DIFF, neti_path_integral(trace), estimator_variance(trace),
                         config.n_iter, config.seed, stream, t0)
    return est, trace


def run_neti(kernel: PathKernel, config: RunConfig, stream: int = 0,
             rng: Optional[np.random.Generator] = None) -> tuple[EvidenceEstimate, Trace]:
    """Log marginal likelihood from one prior-to-posterior sweep.

    ``kernel`` must have a null first model, so ``phi`` is the plain
    log-likelihood of the second.
    """
    est, trace = run_neti_diff(kernel, config, stream, rng)
    return replace(est, method=Method.NETI), trace


def _split_budget(total: int, K: int) -> np.ndarray:
    per = total // K
    if per < MIN_STEPS_PER_RUNG:
        raise ValueError(f"n_iter/K = {per} is below the minimum of {MIN_STEPS_PER_RUNG} steps per rung")
    counts = np.full(K, per, dtype=np.int64)
    counts[-1] += total - per * K
    return counts


def _rung(kernel, state, tau, steps, burn_fraction, rng) -> EquilibriumRungSummary:
    phis = kernel.advance(state, np.full(int(steps), tau), rng)
    kept = phis[int(burn_fraction * steps):]
    var = float(np.var(kept, ddof=1)) if kept.size > 1 else 0.0
    return EquilibriumRungSummary(float(tau), float(np.mean(kept)), var, int(kept.size))


def _sweep_rungs(kernel, state, taus, counts, burn_fraction, rng):
    return [_rung(kernel, state, t, c, burn_fraction, rng) for t, c in zip(taus, counts)]


def _naive_variance(taus, summaries) -> float:
    # treats draws as independent; repeat-to-repeat spread is the real uncertainty
    taus = np.asarray(taus)
    w = np.zeros(taus.size)
    dt = np.diff(taus)
    w[:-1] += 0.5 * dt
    w[1:] += 0.5 * dt
    v = np.array([s.var_loglik / max(s.n_samples, 1) for s in summaries])
    return float(np.sum(w ** 2 * v))


def optimal_ladder(kernel: PathKernel, state, K: int, alpha: float, pilot_steps: int,
                   burn_fraction: float, rng: np.random.Generator) -> np.ndarray:
    """Refine a power ladder with tangent-intersection placement.

    Pilot chains at every rung give mean and variance estimates; the
    odd interior rungs are then moved to the intersection point of the
    tangents at their neighbours, re-piloted, and the even interior rungs
    are moved the same way. Each move stays inside the bracket formed by
    fixed neighbours, so the ladder stays strictly increasing.
    """
    taus = power_law_ladder(K, alpha)
    summ = _sweep_rungs(kernel, state, taus, np.full(K, pilot_steps), burn_fraction, rng)
    f = np.array([s.mean_loglik for s in summ])
    v = np.array([s.var_loglik for s in summ])
    for start in (1, 2):
        moved = list(range(start, K - 1, 2))
        for k in moved:
            taus[k] = optimal_insert(taus[k - 1], taus[k + 1], f[k - 1], f[k + 1], v[k - 1], v[k + 1])
        for k in moved:
            s = _rung(kernel, state, taus[k], pilot_steps, burn_fraction, rng)
            f[k], v[k] = s.mean_loglik, s.var_loglik
    return taus


def run_equilibrium_ti(kernel: PathKernel, config: RunConfig, stream: int = 0,
                       rng: Optional[np.random.Generator] = None
                       ) -> tuple[EvidenceEstimate, list[EquilibriumRungSummary]]:
    """Equilibrium TI along a fixed ladder.

    The chain visits the rungs in increasing order, continuing from the
    state left by the previous rung; the first ``burn_in_fraction`` of the
    draws at each rung are discarded. With a kernel whose first model is
    a null model the result is a log marginal likelihood.
    """
    t0 = time.perf_counter()
    if config.method not in (Method.TI_STANDARD, Method.TI_OPTIMAL):
        raise ValueError(f"run_equilibrium_ti does not handle {config.method}")
    if rng is None:
        rng = RngStream(config.seed, stream).generator()
    K = config.ladder.count
    if K < 2:
        raise ValueError("equilibrium TI needs at least two rungs")
    state = kernel.init_state(rng)
    budget = config.n_iter
    if config.method is Method.TI_STANDARD:
        taus = power_law_ladder(K, config.ladder.alpha)
    else:
        pilot_total = int(config.pilot_fraction * config.n_iter)
        pilot_steps = pilot_total // (2 * K - 2)
        if pilot_steps < MIN_STEPS_PER_RUNG:
            raise ValueError("n_iter too small for TI-optimal pilot chains")
        taus = optimal_ladder(kernel, state, K, config.ladder.alpha, pilot_steps,
                              config.burn_in_fraction, rng)
        budget -= pilot_steps * (2 * K - 2)
    counts = _split_budget(budget, K)
    summaries = _sweep_rungs(kernel, state, taus, counts, config.burn_in_fraction, rng)
    means = [s.mean_loglik for s in summaries]
    if config.method is Method.TI_STANDARD:
        value = trapezoid_integral(taus, means)
    else:
        value = corrected_trapezoid_integral(taus, means, [s.var_loglik for s in summaries])
    est = _make_estimate(config.method, value, _naive_variance(taus, summaries), config.n_iter,
                         config.seed, stream, t0)
    return est, summaries


def ti_log_bayes_factor(kernel1: PathKernel, kernel2: PathKernel, config: RunConfig,
                        stream: int = 0) -> EvidenceEstimate:
    """``log p(D|M2) - log p(D|M1)`` from two independent equilibrium runs.

    Each kernel must walk from its model's prior to its posterior; each
    run receives the full ``n_iter`` budget on its own substream.
    """
    t0 = time.perf_counter()
    rs = RngStream(config.seed, stream)
    e1, _ = run_equilibrium_ti(kernel1, config, stream, rs.substream(1))
    e2, _ = run_equilibrium_ti(kernel2, config, stream, rs.substream(2))
    return EvidenceEstimate(config.method, e2.estimate - e1.estimate, e1.variance + e2.variance,
                            config.n_iter, config.seed, stream, 1e3 * (time.perf_counter() - t0),
                            e1.variance + e2.variance)


class JarzynskiResult(NamedTuple):
    log_evidence: float
    log_bayes_factor: float


def jarzynski_log_evidence(log_likelihoods: Sequence[float]) -> float:
    """``log p(D)`` from the posterior identity ``p(D) = 1 / E_post[1/L]``."""
    ll = np.asarray(log_likelihoods, dtype=float)
    if ll.size == 0:
        raise ValueError("need at least one posterior sample")
    return float(-(logsumexp(-ll) - np.log(ll.size)))


def jarzynski_log_bayes_factor(log_ratios: Sequence[float]) -> float:
    """``log E_1[exp(log L2 - log L1)]`` over draws from model 1's posterior.

    With a prior shared by both models the exponent reduces to the
    log-likelihood ratio; otherwise include the log prior ratio in
    ``log_ratios``.
    """
    r = np.asarray(log_ratios, dtype=float)
    if r.size == 0:
        raise ValueError("need at least one posterior sample")
    if np.all(r == 0):
        return 0.0
    return float(logsumexp(r) - np.log(r.size))


def jarzynski_estimates(target, posterior_samples: Sequence[np.ndarray]) -> JarzynskiResult:
    """Both identities evaluated on draws from model 1's posterior."""
    samples = list(posterior_samples)
    if not samples:
        raise ValueError("need at least one posterior sample")
    ll1 = np.array([target.model1.log_likelihood(s) for s in samples])
    if target.model1 is target.model2:
        ratio = np.zeros_like(ll1)
    else:
        ratio = np.array([target.model2.log_likelihood(s) for s in samples]) - ll1
    return JarzynskiResult(jarzynski_log_evidence(ll1), jarzynski_log_bayes_factor(ratio))


def model_posteriors_from_bfs(log_bf_to_reference: Sequence[float],
                              priors: Sequence[float]) -> np.ndarray:
    """Posterior model probabilities from log Bayes factors against one reference.

    ``log_bf_to_reference[i]`` is ``log p(D|M_i) - log p(D|M_0)``; the
    reference itself appears with value 0.
    """
    lb = np.asarray(log_bf_to_reference, dtype=float)
    pr = np.asarray(priors, dtype=float)
    if lb.shape != pr.shape:
        raise ValueError("log Bayes factors and priors must have equal length")
    if np.any(pr <= 0):
        raise ValueError("prior model probabilities must be positive")
    if abs(pr.sum() - 1.0) > 1e-9:
        raise ValueError(f"prior model probabilities must sum to 1, got {pr.sum()}")
    logw = lb + np.log(pr)
    return np.exp(logw - logsumexp(logw))
