"""Shared types for two-model tempered targets, traces and evidence estimates."""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional, Protocol, Sequence

import numpy as np

logger = logging.getLogger(__name__)


class DomainError(ValueError):
    """Raised when a parameter value lies outside the support of a density."""


def check_tau(tau: float) -> float:
    """Validate an inverse temperature and return it as a float."""
    tau = float(tau)
    if not np.isfinite(tau) or tau < 0.0 or tau > 1.0:
        raise ValueError(f"inverse temperature must lie in [0, 1], got {tau!r}")
    return tau


class Method(str, enum.Enum):
    NETI_DIFF = "neti-diff"
    TI_STANDARD = "ti-standard"
    TI_OPTIMAL = "ti-optimal"
    NETI = "neti"
    JARZYNSKI = "jarzynski"


@dataclass(frozen=True)
class Dataset:
    """Response vector plus named covariate columns.

    ``covariates`` is an ``(n, q)`` array whose columns are labelled by
    ``names``. Some benchmarks carry no response (``y`` may be empty) or
    extra arrays in ``extra``.
    """

    y: np.ndarray
    covariates: np.ndarray
    names: tuple[str, ...]
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        cov = np.asarray(self.covariates, dtype=float)
        if cov.ndim == 1:
            cov = cov[:, None]
        object.__setattr__(self, "covariates", cov)
        object.__setattr__(self, "y", np.asarray(self.y, dtype=float))
        if cov.shape[1] != len(self.names):
            raise ValueError("number of covariate names does not match columns")
        if self.y.size and self.y.shape[0] != cov.shape[0]:
            raise ValueError("response and covariates differ in length")

    @property
    def n(self) -> int:
        return self.covariates.shape[0]

    def column(self, name: str) -> np.ndarray:
        return self.covariates[:, self.names.index(name)]


class LikelihoodModel(Protocol):
    def log_likelihood(self, theta: np.ndarray) -> float: ...


class NullModel:
    """Model whose likelihood is identically one.

    Pairing it with a real model turns the tempered path into the usual
    prior-to-posterior path for a single marginal likelihood.
    """

    def log_likelihood(self, theta: np.ndarray) -> float:
        return 0.0


@dataclass(frozen=True)
class TemperedTarget:
    """Geometric bridge ``tau*log L2 + (1-tau)*log L1 + log prior``.

    Both models read the same parameter vector. ``positive`` lists
    coordinates that must be strictly positive (variances, rates).
    """

    model1: LikelihoodModel
    model2: LikelihoodModel
    log_prior: Callable[[np.ndarray], float]
    dim: int
    positive: tuple[int, ...] = ()
    labels: Optional[tuple[str, ...]] = None

    def swapped(self) -> "TemperedTarget":
        return TemperedTarget(self.model2, self.model1, self.log_prior, self.dim,
                              self.positive, self.labels)

    def _label(self, i: int) -> str:
        if self.labels is not None:
            return self.labels[i]
        return f"theta[{i}]"

    def check_domain(self, theta: np.ndarray) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.dim,):
            raise ValueError(f"expected parameter vector of length {self.dim}, got shape {theta.shape}")
        for i in self.positive:
            if not theta[i] > 0.0:
                raise DomainError(f"{self._label(i)} must be positive, got {theta[i]!r}")
        return theta


def tempered_log_density(target: TemperedTarget, theta: np.ndarray, tau: float) -> float:
    """Unnormalised log density of the tempered two-model target."""
    tau = check_tau(tau)
    theta = target.check_domain(theta)
    lp = target.log_prior(theta)
    if not np.isfinite(lp):
        raise DomainError("joint prior density is zero or undefined at theta")
    out = lp
    # skip a zero-weight term so that tau in {0, 1} ignores the other model entirely
    if tau < 1.0:
        out += (1.0 - tau) * target.model1.log_likelihood(theta)
    if tau > 0.0:
        out += tau * target.model2.log_likelihood(theta)
    if not np.isfinite(out):
        raise DomainError("tempered log density is not finite at theta")
    return float(out)


def log_lik_ratio(target: TemperedTarget, theta: np.ndarray) -> float:
    """``log L2(theta) - log L1(theta)``, the thermodynamic integrand."""
    theta = target.check_domain(theta)
    if target.model1 is target.model2:
        return 0.0
    return float(target.model2.log_likelihood(theta) - target.model1.log_likelihood(theta))


@dataclass(frozen=True)
class TracePoint:
    step: int
    tau: float
    phi: float


@dataclass
class Trace:
    """Sequence of (step, tau, phi) records stored column-wise."""

    step: np.ndarray
    tau: np.ndarray
    phi: np.ndarray

    def __post_init__(self):
        self.step = np.asarray(self.step, dtype=np.int64)
        self.tau = np.asarray(self.tau, dtype=float)
        self.phi = np.asarray(self.phi, dtype=float)
        if not (self.step.shape == self.tau.shape == self.phi.shape):
            raise ValueError("trace columns must have equal length")

    def __len__(self) -> int:
        return self.tau.shape[0]

    def __iter__(self) -> Iterator[TracePoint]:
        for s, t, p in zip(self.step, self.tau, self.phi):
            yield TracePoint(int(s), float(t), float(p))

    def downsample(self, max_rows: int) -> "Trace":
        """Evenly thinned copy keeping the first and last points."""
        m = len(self)
        if m <= max_rows:
            return self
        idx = np.unique(np.linspace(0, m - 1, max_rows).round().astype(np.int64))
        return Trace(self.step[idx], self.tau[idx], self.phi[idx])


@dataclass(frozen=True)
class EvidenceEstimate:
    """Result of one estimator run.

    ``variance`` is never negative; the raw trace-based value is kept in
    ``raw_variance`` and ``flags`` records ``"negative-variance"`` when the
    raw value had to be clipped.
    """

    method: Method
    estimate: float
    variance: float
    n_iter: int
    seed: int
    stream: int = 0
    wall_ms: float = 0.0
    raw_variance: Optional[float] = None
    flags: tuple[str, ...] = ()

    def negated(self) -> "EvidenceEstimate":
        return EvidenceEstimate(self.method, -self.estimate, self.variance, self.n_iter,
                                self.seed, self.stream, self.wall_ms, self.raw_variance, self.flags)


class RngStream:
    """Reproducible random stream keyed by ``(master_seed, stream_id)``.

    Streams with different ids are statistically independent; the same
    key always yields the same draws.
    """

    def __init__(self, master_seed: int, stream_id: int = 0):
        if master_seed < 0 or stream_id < 0:
            raise ValueError("seeds and stream ids must be non-negative")
        self.master_seed = int(master_seed)
        self.stream_id = int(stream_id)
        self._seq = np.random.SeedSequence(self.master_seed, spawn_key=(self.stream_id,))

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(self._seq))

    def substream(self, index: int) -> np.random.Generator:
        seq = np.random.SeedSequence(self.master_seed, spawn_key=(self.stream_id, int(index)))
        return np.random.Generator(np.random.PCG64(seq))


class PathKernel(Protocol):
    """Transition kernel that walks a tempered target along a tau schedule.

    ``advance`` applies one transition per entry of ``taus`` to ``state``
    in place and returns the log-likelihood ratio after each transition.
    """

    cost_per_step: int

    def init_state(self, rng: np.random.Generator): ...

    def advance(self, state, taus: np.ndarray, rng: np.random.Generator) -> np.ndarray: ...

    def log_lik_ratio(self, state) -> float: ...

    def swapped(self) -> "PathKernel": ...


def as_float_array(values: Sequence[float], name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr
