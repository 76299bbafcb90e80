"""Reference MCMC building blocks written with plain numpy.

The benchmark chains in :mod:`evidencepath.models` use compiled versions
of the same updates; these functions are the readable references they are
tested against.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import stats

from .core import check_tau

logger = logging.getLogger(__name__)

MAX_REJECTION_TRIES = 100


@dataclass(frozen=True)
class ProposalSpec:
    """Random-walk proposal.

    ``kind`` is ``"gaussian"`` (``scale`` holds per-coordinate variances)
    or ``"uniform"`` (``scale`` holds half-widths).
    """

    kind: str
    scale: np.ndarray

    def draw(self, x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        scale = np.broadcast_to(np.asarray(self.scale, dtype=float), x.shape)
        if self.kind == "gaussian":
            return x + np.sqrt(scale) * rng.standard_normal(x.shape)
        if self.kind == "uniform":
            return x + rng.uniform(-scale, scale)
        raise ValueError(f"unknown proposal kind {self.kind!r}")


def mh_accept_prob(log_target_new: float, log_target_old: float,
                   log_q_forward: float = 0.0, log_q_backward: float = 0.0) -> float:
    """Metropolis-Hastings acceptance probability ``min(1, ratio)``.

    ``log_q_forward`` is ``log q(new | old)`` and ``log_q_backward`` is
    ``log q(old | new)``. A target value of ``-inf`` at the proposal gives
    probability 0.
    """
    if np.isneginf(log_target_new):
        return 0.0
    if np.isnan(log_target_new) or np.isnan(log_target_old):
        raise ValueError("NaN log density")
    log_r = (log_target_new - log_target_old) + (log_q_backward - log_q_forward)
    if log_r >= 0:
        return 1.0
    return float(math.exp(log_r))


@dataclass(frozen=True)
class GaussianConditional:
    mean: np.ndarray
    cov: np.ndarray


@dataclass(frozen=True)
class InverseGammaConditional:
    """Inverse-gamma law of a variance; ``1/variance ~ Gamma(shape, rate)``."""

    shape: float
    rate: float


def linear_coefficient_conditional(D1: np.ndarray, D2: np.ndarray, y: np.ndarray,
                                   sigma2: float, delta2: float, mu0: np.ndarray,
                                   tau: float) -> GaussianConditional:
    """Full conditional of shared coefficients under the tempered pair.

    Precision ``H = tau D2'D2 + (1-tau) D1'D1 + I/delta2`` and mean
    ``H^{-1}((tau D2 + (1-tau) D1)'y + mu0/delta2)``; the covariance is
    ``sigma2 * H^{-1}``.
    """
    tau = check_tau(tau)
    if sigma2 <= 0 or delta2 <= 0:
        raise ValueError("sigma2 and delta2 must be positive")
    D1 = np.asarray(D1, dtype=float)
    D2 = np.asarray(D2, dtype=float)
    if D1.shape != D2.shape:
        raise ValueError(f"design matrices must share a shape, got {D1.shape} and {D2.shape}")
    p = D1.shape[1]
    H = tau * D2.T @ D2 + (1 - tau) * D1.T @ D1 + np.eye(p) / delta2
    rhs = (tau * D2 + (1 - tau) * D1).T @ y + np.asarray(mu0, dtype=float) / delta2
    cov_unit = np.linalg.inv(H)
    cov_unit = 0.5 * (cov_unit + cov_unit.T)
    return GaussianConditional(cov_unit @ rhs, sigma2 * cov_unit)


def gibbs_linear_coefficients(D1: np.ndarray, D2: np.ndarray, y: np.ndarray, sigma2: float,
                              delta2: float, mu0: np.ndarray, tau: float,
                              rng: np.random.Generator, size: Optional[int] = None) -> np.ndarray:
    """Draw coefficients from :func:`linear_coefficient_conditional`."""
    cond = linear_coefficient_conditional(D1, D2, y, sigma2, delta2, mu0, tau)
    L = np.linalg.cholesky(cond.cov)
    shape = (cond.mean.size,) if size is None else (size, cond.mean.size)
    z = rng.standard_normal(shape)
    return cond.mean + z @ L.T


def noise_variance_conditional(residuals1: np.ndarray, residuals2: np.ndarray, theta: np.ndarray,
                               mu0: np.ndarray, delta2: float, tau: float,
                               a: float, b: float) -> InverseGammaConditional:
    """Conditional of the shared noise variance.

    Prior ``1/sigma2 ~ Gamma(a/2, b/2)``; coefficients carry the scaled
    prior ``N(mu0, sigma2*delta2*I)``.
    """
    tau = check_tau(tau)
    r1 = np.asarray(residuals1, dtype=float)
    r2 = np.asarray(residuals2, dtype=float)
    if r1.shape != r2.shape:
        raise ValueError("residual vectors differ in length")
    d = np.asarray(theta, dtype=float) - np.asarray(mu0, dtype=float)
    n, p = r1.size, d.size
    shape = 0.5 * (a + n + p)
    rate = 0.5 * (b + (1 - tau) * r1 @ r1 + tau * r2 @ r2 + d @ d / delta2)
    return InverseGammaConditional(shape, rate)


def gibbs_noise_variance(residuals1: np.ndarray, residuals2: np.ndarray, theta: np.ndarray,
                         mu0: np.ndarray, delta2: float, tau: float, a: float, b: float,
                         rng: np.random.Generator, size: Optional[int] = None):
    """Draw the noise variance from :func:`noise_variance_conditional`."""
    cond = noise_variance_conditional(residuals1, residuals2, theta, mu0, delta2, tau, a, b)
    return 1.0 / rng.gamma(cond.shape, 1.0 / cond.rate, size=size)


def _truncated_normal_1d(mean, sd, rng: np.random.Generator):
    return stats.truncnorm.rvs(-np.asarray(mean) / sd, np.inf, loc=mean, scale=sd, random_state=rng)


def sample_truncated_normal(mean: np.ndarray, cov: np.ndarray, rng: np.random.Generator,
                            gibbs_sweeps: int = 50) -> np.ndarray:
    """Draw from ``N(mean, cov)`` restricted to the non-negative orthant.

    ``cov`` is either a full matrix or a vector of variances. A diagonal
    covariance is sampled exactly coordinate by coordinate. Otherwise up
    to 100 rejection attempts are made; if all fail, the draw comes from
    ``gibbs_sweeps`` coordinate-wise Gibbs sweeps started at the
    projection of the mean, which is approximate.
    """
    mean = np.asarray(mean, dtype=float)
    cov = np.asarray(cov, dtype=float)
    p = mean.size
    if cov.ndim == 1:
        if cov.shape != (p,) or np.any(cov <= 0):
            raise ValueError("variance vector must be positive and match the mean")
        return np.asarray(_truncated_normal_1d(mean, np.sqrt(cov), rng), dtype=float).reshape(p)
    if cov.shape != (p, p):
        raise ValueError("covariance shape does not match mean")
    diag = np.diag(cov)
    if np.any(diag <= 0):
        raise ValueError("covariance must have a positive diagonal")
    if np.count_nonzero(cov - np.diag(diag)) == 0:
        return np.asarray(_truncated_normal_1d(mean, np.sqrt(diag), rng), dtype=float).reshape(p)
    L = np.linalg.cholesky(cov)
    for _ in range(MAX_REJECTION_TRIES):
        x = mean + L @ rng.standard_normal(p)
        if np.all(x >= 0):
            return x
    logger.debug("rejection sampling failed after %d tries, using Gibbs sweeps", MAX_REJECTION_TRIES)
    prec = np.linalg.inv(cov)
    x = np.maximum(mean, 0.0)
    for _ in range(gibbs_sweeps):
        for j in range(p):
            others = np.arange(p) != j
            cond_var = 1.0 / prec[j, j]
            cond_mean = mean[j] - cond_var * prec[j, others] @ (x[others] - mean[others])
            x[j] = float(_truncated_normal_1d(cond_mean, math.sqrt(cond_var), rng))
    return x
