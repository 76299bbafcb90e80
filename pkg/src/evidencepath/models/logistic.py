"""Logistic regression pair with a random-walk Metropolis kernel."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numba import njit

from ..core import NullModel, TemperedTarget
from ._kernels import LOG_2PI


def _log1pexp(x):
    return np.logaddexp(0.0, x)


@dataclass(frozen=True)
class LogisticModel:
    """Bernoulli responses with ``P(y=1) = exp(-x'theta) / (1 + exp(-x'theta))``.

    ``X`` carries a leading intercept column; ``mask`` selects which
    coefficients of a longer shared vector the model uses.
    """

    X: np.ndarray
    y: np.ndarray
    mask: Optional[np.ndarray] = None
    prior_var: float = 100.0

    def log_likelihood(self, theta: np.ndarray) -> float:
        return logistic_log_likelihood(self, theta)


def logistic_log_likelihood(model: LogisticModel, theta: np.ndarray) -> float:
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (model.X.shape[1],):
        raise ValueError(f"expected {model.X.shape[1]} coefficients, got shape {theta.shape}")
    if model.mask is not None:
        theta = theta * model.mask
    eta = model.X @ theta
    return float(np.sum(-model.y * eta - _log1pexp(-eta)))


@njit(cache=True, nogil=True)
def _loglik(X, y, theta, mask):
    n, p = X.shape
    s = 0.0
    for i in range(n):
        eta = 0.0
        for j in range(p):
            if mask[j]:
                eta += X[i, j] * theta[j]
        m = -eta
        # log(1 + exp(m)) without overflow
        if m > 0:
            l1p = m + math.log1p(math.exp(-m))
        else:
            l1p = math.log1p(math.exp(m))
        s += -y[i] * eta - l1p
    return s


@njit(cache=True, nogil=True)
def _logistic_advance(taus, theta, ll, X, y, m1, m2, has1, has2, annealed, prior_var, base_var,
                      max_var, accepted, rng):
    p = theta.shape[0]
    out = np.empty(taus.shape[0])
    prop = np.empty(p)
    for t in range(taus.shape[0]):
        tau = taus[t]
        w1 = (1.0 - tau) if has1 else 0.0
        w2 = tau if has2 else 0.0
        tvar = max_var if tau <= 0.0 else min(base_var / tau, max_var)
        for j in range(p):
            d = tvar if annealed[j] else base_var
            prop[j] = theta[j] + math.sqrt(d) * rng.standard_normal()
        n1 = _loglik(X, y, prop, m1) if has1 else 0.0
        n2 = _loglik(X, y, prop, m2) if has2 else 0.0
        lp_new = 0.0
        lp_old = 0.0
        for j in range(p):
            lp_new -= 0.5 * prop[j] * prop[j] / prior_var
            lp_old -= 0.5 * theta[j] * theta[j] / prior_var
        log_r = w1 * (n1 - ll[0]) + w2 * (n2 - ll[1]) + lp_new - lp_old
        if log_r >= 0.0 or math.log(rng.random()) < log_r:
            theta[:] = prop
            ll[0] = n1
            ll[1] = n2
            accepted[0] += 1
        out[t] = ll[1] - ll[0]
    return out


@dataclass(frozen=True)
class LogisticPair:
    """Two logistic regressions on a shared coefficient vector.

    ``mask1``/``mask2`` mark the coefficients each model uses. Proposal
    variances follow ``min(base_var/tau, max_var)`` for coordinates in
    exactly one model and stay at ``base_var`` for shared ones.
    """

    X: np.ndarray
    y: np.ndarray
    mask1: np.ndarray
    mask2: np.ndarray
    prior_var: float = 100.0
    has1: bool = True
    has2: bool = True
    base_var: float = 0.01
    max_var: float = 100.0
    columns: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "X", np.ascontiguousarray(self.X, dtype=float))
        object.__setattr__(self, "y", np.asarray(self.y, dtype=float))
        object.__setattr__(self, "mask1", np.asarray(self.mask1, dtype=bool))
        object.__setattr__(self, "mask2", np.asarray(self.mask2, dtype=bool))
        p = self.X.shape[1]
        if self.mask1.shape != (p,) or self.mask2.shape != (p,):
            raise ValueError("masks must have one entry per column")

    @property
    def annealed(self) -> np.ndarray:
        m1 = self.mask1 if self.has1 else np.zeros_like(self.mask1)
        m2 = self.mask2 if self.has2 else np.zeros_like(self.mask2)
        return m1 != m2

    def swapped(self) -> "LogisticPair":
        return LogisticPair(self.X, self.y, self.mask2, self.mask1, self.prior_var, self.has2, self.has1,
                            self.base_var, self.max_var, self.columns)

    def side(self, k: int) -> "LogisticPair":
        mask = self.mask1 if k == 1 else self.mask2
        X = self.X[:, mask]
        cols = tuple(c for c, m in zip(self.columns, mask) if m) if self.columns else ()
        q = X.shape[1]
        return LogisticPair(X, self.y, np.zeros(q, bool), np.ones(q, bool), self.prior_var, False, True,
                            self.base_var, self.max_var, cols)

    def log_prior(self, theta: np.ndarray) -> float:
        p = theta.size
        return float(-0.5 * p * (LOG_2PI + math.log(self.prior_var)) - 0.5 * theta @ theta / self.prior_var)

    def target(self) -> TemperedTarget:
        m1 = LogisticModel(self.X, self.y, self.mask1.astype(float)) if self.has1 else NullModel()
        m2 = LogisticModel(self.X, self.y, self.mask2.astype(float)) if self.has2 else NullModel()
        return TemperedTarget(m1, m2, self.log_prior, self.X.shape[1], (),
                              self.columns or None)

    def kernel(self) -> "LogisticPairKernel":
        return LogisticPairKernel(self)


@dataclass
class LogisticState:
    theta: np.ndarray
    ll: np.ndarray
    accepted: np.ndarray


class LogisticPairKernel:
    cost_per_step = 1

    def __init__(self, pair: LogisticPair):
        self.pair = pair
        self._annealed = pair.annealed

    def _ll(self, theta):
        pr = self.pair
        l1 = _loglik(pr.X, pr.y, theta, pr.mask1) if pr.has1 else 0.0
        l2 = _loglik(pr.X, pr.y, theta, pr.mask2) if pr.has2 else 0.0
        return np.array([l1, l2])

    def init_state(self, rng: np.random.Generator) -> LogisticState:
        theta = np.zeros(self.pair.X.shape[1])
        return LogisticState(theta, self._ll(theta), np.zeros(1, dtype=np.int64))

    def advance(self, state: LogisticState, taus: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        taus = np.ascontiguousarray(taus, dtype=float)
        if taus.size == 0:
            return np.zeros(0)
        pr = self.pair
        return _logistic_advance(taus, state.theta, state.ll, pr.X, pr.y, pr.mask1, pr.mask2, pr.has1,
                                 pr.has2, self._annealed, pr.prior_var, pr.base_var, pr.max_var,
                                 state.accepted, rng)

    def log_lik_ratio(self, state: LogisticState) -> float:
        ll = self._ll(state.theta)
        return float(ll[1] - ll[0])

    def swapped(self) -> "LogisticPairKernel":
        return LogisticPairKernel(self.pair.swapped())
