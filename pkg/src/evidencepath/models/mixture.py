"""Univariate Gaussian mixtures compared across component counts.

Each model is tempered through its complete-data likelihood
``p(y | z, mu, sigma2)`` while the allocation prior ``p(z | w)`` stays
untempered. Summing over allocations at exponent 1 recovers the usual
mixture likelihood and at exponent 0 the prior, so the path has the
correct endpoints.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numba import njit
from scipy.special import logsumexp

from ._kernels import LOG_2PI


@dataclass(frozen=True)
class MixturePrior:
    dirichlet: float = 1.0
    mean_loc: float = 0.0
    mean_var: float = 1000.0
    prec_shape: float = 1.0
    prec_rate: float = 1.0


@dataclass
class MixtureModel:
    """State of one ``K``-component mixture with allocations ``z`` in ``0..K-1``."""

    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    z: np.ndarray

    @property
    def K(self) -> int:
        return self.weights.size

    def validate(self) -> None:
        if abs(self.weights.sum() - 1.0) > 1e-9 or np.any(self.weights < 0):
            raise ValueError("weights must lie on the simplex")
        if np.any(self.variances <= 0):
            raise ValueError("component variances must be positive")
        if np.any((self.z < 0) | (self.z >= self.K)):
            raise ValueError("allocations out of range")


def mixture_log_likelihood(y: np.ndarray, weights: np.ndarray, means: np.ndarray,
                           variances: np.ndarray) -> float:
    """Observed-data log likelihood ``sum_i log sum_k w_k N(y_i | mu_k, s2_k)``."""
    y = np.asarray(y, dtype=float)[:, None]
    logpdf = -0.5 * (LOG_2PI + np.log(variances)) - 0.5 * (y - means) ** 2 / variances
    return float(np.sum(logsumexp(logpdf + np.log(weights), axis=1)))


def complete_log_likelihood(y: np.ndarray, state: MixtureModel) -> float:
    """``sum_i log N(y_i | mu_{z_i}, s2_{z_i})``."""
    mu = state.means[state.z]
    s2 = state.variances[state.z]
    return float(np.sum(-0.5 * (LOG_2PI + np.log(s2)) - 0.5 * (y - mu) ** 2 / s2))


@njit(cache=True, nogil=True)
def _complete_ll(y, mu, s2, z):
    s = 0.0
    for i in range(y.shape[0]):
        k = z[i]
        d = y[i] - mu[k]
        s += -0.5 * (LOG_2PI + math.log(s2[k])) - 0.5 * d * d / s2[k]
    return s


@njit(cache=True, nogil=True)
def _power_gibbs(y, w, mu, s2, z, power, alpha, m0, v0, a0, b0, rng):
    n = y.shape[0]
    K = w.shape[0]
    logp = np.empty(K)
    for i in range(n):
        for k in range(K):
            d = y[i] - mu[k]
            logp[k] = math.log(w[k]) + power * (-0.5 * math.log(s2[k]) - 0.5 * d * d / s2[k])
        m = logp.max()
        tot = 0.0
        for k in range(K):
            logp[k] = math.exp(logp[k] - m)
            tot += logp[k]
        u = rng.random() * tot
        acc = 0.0
        pick = K - 1
        for k in range(K):
            acc += logp[k]
            if u < acc:
                pick = k
                break
        z[i] = pick
    counts = np.zeros(K)
    sums = np.zeros(K)
    for i in range(n):
        counts[z[i]] += 1.0
        sums[z[i]] += y[i]
    tot = 0.0
    for k in range(K):
        g = rng.gamma(alpha + counts[k], 1.0)
        w[k] = g
        tot += g
    for k in range(K):
        w[k] = max(w[k] / tot, 1e-300)
    for k in range(K):
        prec = 1.0 / v0 + power * counts[k] / s2[k]
        mean = (m0 / v0 + power * sums[k] / s2[k]) / prec
        mu[k] = mean + rng.standard_normal() / math.sqrt(prec)
    ss = np.zeros(K)
    for i in range(n):
        d = y[i] - mu[z[i]]
        ss[z[i]] += d * d
    for k in range(K):
        lam = rng.gamma(a0 + 0.5 * power * counts[k], 1.0 / (b0 + 0.5 * power * ss[k]))
        s2[k] = 1.0 / lam


@njit(cache=True, nogil=True)
def _mixture_advance(taus, y, wa, mua, s2a, za, wb, mub, s2b, zb, has_a, has_b, alpha, m0, v0, a0, b0, rng):
    out = np.empty(taus.shape[0])
    for t in range(taus.shape[0]):
        tau = taus[t]
        la = 0.0
        lb = 0.0
        if has_a:
            _power_gibbs(y, wa, mua, s2a, za, 1.0 - tau, alpha, m0, v0, a0, b0, rng)
            la = _complete_ll(y, mua, s2a, za)
        if has_b:
            _power_gibbs(y, wb, mub, s2b, zb, tau, alpha, m0, v0, a0, b0, rng)
            lb = _complete_ll(y, mub, s2b, zb)
        out[t] = lb - la
    return out


def mixture_power_gibbs_step(y: np.ndarray, state: MixtureModel, power: float, rng: np.random.Generator,
                             prior: MixturePrior = MixturePrior()) -> MixtureModel:
    """One tempered Gibbs sweep (allocations, weights, means, variances) in place.

    Components that end up empty draw their parameters from the prior.
    """
    if not 0.0 <= power <= 1.0:
        raise ValueError("power must lie in [0, 1]")
    _power_gibbs(np.asarray(y, dtype=float), state.weights, state.means, state.variances, state.z,
                 float(power), prior.dirichlet, prior.mean_loc, prior.mean_var, prior.prec_shape,
                 prior.prec_rate, rng)
    return state


def initial_mixture(y: np.ndarray, K: int) -> MixtureModel:
    """Deterministic start: means at data quantiles, nearest-mean allocations."""
    y = np.asarray(y, dtype=float)
    means = np.quantile(y, (np.arange(K) + 0.5) / K)
    variances = np.full(K, np.var(y) / K)
    z = np.argmin(np.abs(y[:, None] - means[None, :]), axis=1).astype(np.int64)
    return MixtureModel(np.full(K, 1.0 / K), means, variances, z)


@dataclass(frozen=True)
class MixturePair:
    """Mixtures with ``K1`` and ``K2`` components on the same data.

    Model 2 receives exponent ``tau`` and model 1 ``1 - tau``. A count of
    0 marks a null side. The two parameter sets are disjoint, so every
    rung updates both models and costs two sweeps.
    """

    y: np.ndarray
    K1: int
    K2: int
    prior: MixturePrior = MixturePrior()

    def __post_init__(self):
        object.__setattr__(self, "y", np.ascontiguousarray(self.y, dtype=float))
        if self.K1 < 0 or self.K2 < 0 or (self.K1 == 0 and self.K2 == 0):
            raise ValueError("component counts must be non-negative and not both zero")

    def swapped(self) -> "MixturePair":
        return MixturePair(self.y, self.K2, self.K1, self.prior)

    def side(self, k: int) -> "MixturePair":
        return MixturePair(self.y, 0, self.K1 if k == 1 else self.K2, self.prior)

    def kernel(self) -> "MixturePairKernel":
        return MixturePairKernel(self)


@dataclass
class MixturePairState:
    a: Optional[MixtureModel]
    b: Optional[MixtureModel]


def _arrays(m: Optional[MixtureModel]):
    if m is None:
        return np.ones(1), np.zeros(1), np.ones(1), np.zeros(1, dtype=np.int64)
    return m.weights, m.means, m.variances, m.z


class MixturePairKernel:
    def __init__(self, pair: MixturePair):
        self.pair = pair
        self.cost_per_step = int(pair.K1 > 0) + int(pair.K2 > 0)

    def init_state(self, rng: np.random.Generator) -> MixturePairState:
        y = self.pair.y
        a = initial_mixture(y, self.pair.K1) if self.pair.K1 else None
        b = initial_mixture(y, self.pair.K2) if self.pair.K2 else None
        return MixturePairState(a, b)

    def advance(self, state: MixturePairState, taus: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        taus = np.ascontiguousarray(taus, dtype=float)
        if taus.size == 0:
            return np.zeros(0)
        pr = self.pair.prior
        return _mixture_advance(taus, self.pair.y, *_arrays(state.a), *_arrays(state.b), state.a is not None,
                                state.b is not None, pr.dirichlet, pr.mean_loc, pr.mean_var, pr.prec_shape,
                                pr.prec_rate, rng)

    def log_lik_ratio(self, state: MixturePairState) -> float:
        y = self.pair.y
        la = complete_log_likelihood(y, state.a) if state.a is not None else 0.0
        lb = complete_log_likelihood(y, state.b) if state.b is not None else 0.0
        return lb - la

    def swapped(self) -> "MixturePairKernel":
        return MixturePairKernel(self.pair.swapped())
