"""Gaussian graphical models written as Gaussian belief networks.

Node ``i`` is regressed on earlier nodes,
``x_i = m_i + sum_{j<i} B[i, j] (x_j - m_j) + e_i`` with ``e_i ~ N(0, sigma2_i)``,
so ``B`` is strictly lower triangular and ``B[i, j]`` is the coefficient
of parent ``j`` for child ``i``. The precision matrix is
``W = (I - B)' diag(1/sigma2) (I - B)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from numba import njit

from ..core import DomainError, NullModel, TemperedTarget
from ._kernels import LOG_2PI


@dataclass(frozen=True)
class GaussianBeliefNetwork:
    mean: np.ndarray
    cond_vars: np.ndarray
    coeffs: np.ndarray

    def __post_init__(self):
        B = np.asarray(self.coeffs, dtype=float)
        s2 = np.asarray(self.cond_vars, dtype=float)
        M = s2.size
        if B.shape != (M, M):
            raise ValueError("coefficient matrix must be M x M")
        if np.any(np.triu(B) != 0):
            raise ValueError("coefficient matrix must be strictly lower triangular")
        object.__setattr__(self, "coeffs", B)
        object.__setattr__(self, "cond_vars", s2)
        object.__setattr__(self, "mean", np.asarray(self.mean, dtype=float))

    @property
    def M(self) -> int:
        return self.cond_vars.size

    def covariance(self) -> np.ndarray:
        """Covariance built from the regression form, ``A diag(sigma2) A'`` with ``A = (I-B)^{-1}``."""
        A = np.linalg.inv(np.eye(self.M) - self.coeffs)
        return A @ np.diag(self.cond_vars) @ A.T

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Ancestral sampling, one node at a time."""
        X = np.empty((n, self.M))
        for i in range(self.M):
            parents = (X[:, :i] - self.mean[:i]) @ self.coeffs[i, :i]
            X[:, i] = self.mean[i] + parents + rng.normal(0.0, math.sqrt(self.cond_vars[i]), n)
        return X


def gbn_precision(gbn: GaussianBeliefNetwork) -> np.ndarray:
    """Precision matrix by adding one node at a time.

    Starting from ``W = [1/sigma2_1]``, node ``i+1`` with coefficient
    vector ``b`` on the previous nodes extends ``W`` to
    ``[[W + b b'/s, -b/s], [-b'/s, 1/s]]`` with ``s = sigma2_{i+1}``.
    """
    s2 = gbn.cond_vars
    if np.any(s2 <= 0):
        raise ValueError("conditional variances must be positive")
    W = np.array([[1.0 / s2[0]]])
    for i in range(1, gbn.M):
        b = gbn.coeffs[i, :i][:, None]
        s = s2[i]
        W = np.block([[W + b @ b.T / s, -b / s], [-b.T / s, np.array([[1.0 / s]])]])
    return 0.5 * (W + W.T)


def gbn_submodel_coeffs(union_B: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Union coefficients kept where ``mask`` has an edge, zero elsewhere."""
    union_B = np.asarray(union_B, dtype=float)
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != union_B.shape:
        raise ValueError("mask and coefficient matrix differ in shape")
    support = np.tril(np.ones_like(mask), -1).astype(bool)
    if np.any(mask & ~support):
        raise ValueError("mask requests an edge outside the strictly lower triangle")
    return np.where(mask, union_B, 0.0)


def wishart_log_density(W: np.ndarray, df: float, scale: np.ndarray) -> float:
    """Wishart log density up to its normalising constant."""
    M = W.shape[0]
    sign, logdet = np.linalg.slogdet(W)
    if sign <= 0:
        return -np.inf
    return float(0.5 * (df - M - 1) * logdet - 0.5 * np.trace(np.linalg.solve(scale, W)))


def gaussian_log_likelihood(X: np.ndarray, mean: np.ndarray, W: np.ndarray) -> float:
    """``sum_w log N(x_w | mean, W^{-1})`` for rows of ``X``."""
    n, M = X.shape
    sign, logdet = np.linalg.slogdet(W)
    if sign <= 0:
        raise DomainError("precision matrix is not positive definite")
    R = X - mean
    quad = np.einsum("ij,jk,ik->", R, W, R)
    return float(-0.5 * n * M * LOG_2PI + 0.5 * n * logdet - 0.5 * quad)


# Arabidopsis clock genes used for the simulated networks; node order is
# the belief-network order, so parents always precede children.
ARABIDOPSIS_GENES = ("LHY", "TOC1", "PRR9", "PRR7", "GI", "ELF4", "NI")
# (parent, child) pairs present in both networks
SHARED_EDGES = ((0, 1), (0, 2), (1, 4), (0, 5), (4, 5), (4, 6))
# edges lost in the PRR7/PRR9 mutant: PRR9 -> PRR7 and PRR7 -> NI
WILDTYPE_ONLY_EDGES = ((2, 3), (3, 6))


def edge_mask(M: int, edges: Sequence[tuple[int, int]]) -> np.ndarray:
    mask = np.zeros((M, M), dtype=bool)
    for parent, child in edges:
        if not parent < child:
            raise ValueError(f"edge {parent}->{child} violates the node order")
        mask[child, parent] = True
    return mask


def arabidopsis_masks() -> tuple[np.ndarray, np.ndarray]:
    """``(wildtype, mutant)`` edge masks over :data:`ARABIDOPSIS_GENES`."""
    M = len(ARABIDOPSIS_GENES)
    wild = edge_mask(M, SHARED_EDGES + WILDTYPE_ONLY_EDGES)
    mutant = edge_mask(M, SHARED_EDGES)
    return wild, mutant


def simulate_ggm_data(beta: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draws from the wildtype network with shared coefficients 1.

    Wildtype-only edges get coefficient ``beta``; ``beta = 0`` makes the
    data indistinguishable from the mutant network.
    """
    wild, mutant = arabidopsis_masks()
    B = np.where(mutant, 1.0, 0.0) + np.where(wild & ~mutant, beta, 0.0)
    M = len(ARABIDOPSIS_GENES)
    gbn = GaussianBeliefNetwork(np.zeros(M), np.ones(M), B)
    return gbn.sample(n, rng)


@njit(cache=True, nogil=True)
def _node_rss(S, A, s2):
    # residual sums of squares per node from the scatter matrix S = X'X
    M = S.shape[0]
    out = np.empty(M)
    for i in range(M):
        r = 0.0
        for j in range(M):
            aij = (1.0 if i == j else 0.0) - A[i, j]
            if aij == 0.0:
                continue
            for k in range(M):
                aik = (1.0 if i == k else 0.0) - A[i, k]
                if aik != 0.0:
                    r += aij * S[j, k] * aik
        out[i] = r
    return out


@njit(cache=True, nogil=True)
def _gbn_loglik(S, n, A, logs2):
    M = S.shape[0]
    rss = _node_rss(S, A, logs2)
    ll = -0.5 * n * M * LOG_2PI
    for i in range(M):
        ll += -0.5 * n * logs2[i] - 0.5 * rss[i] * math.exp(-logs2[i])
    return ll


@njit(cache=True, nogil=True)
def _wishart_logpdf(A, logs2, df, scale_inv):
    # W = (I - A)' D (I - A); log det W = -sum log sigma2
    M = A.shape[0]
    IA = np.eye(M) - A
    W = IA.T @ np.diag(np.exp(-logs2)) @ IA
    tr = 0.0
    for i in range(M):
        for j in range(M):
            tr += scale_inv[i, j] * W[j, i]
    return -0.5 * (df - M - 1) * np.sum(logs2) - 0.5 * tr


@njit(cache=True, nogil=True)
def _fill(A, rows, cols, values, use):
    A[:, :] = 0.0
    for e in range(values.shape[0]):
        if use[e]:
            A[rows[e], cols[e]] = values[e]


@njit(cache=True, nogil=True)
def _gbn_advance(taus, beta, logs2, ll, S, n, rows, cols, in1, in2, all_edges, has1, has2, df,
                 scale_inv, eps, accepted, rng):
    M = S.shape[0]
    E = beta.shape[0]
    A1 = np.zeros((M, M))
    A2 = np.zeros((M, M))
    Au = np.zeros((M, M))
    out = np.empty(taus.shape[0])
    nb = np.empty(E)
    ns = np.empty(M)
    _fill(Au, rows, cols, beta, all_edges)
    lp = _wishart_logpdf(Au, logs2, df, scale_inv)
    for t in range(taus.shape[0]):
        tau = taus[t]
        w1 = (1.0 - tau) if has1 else 0.0
        w2 = tau if has2 else 0.0
        for e in range(E):
            nb[e] = beta[e] + rng.uniform(-eps, eps)
        for i in range(M):
            ns[i] = logs2[i] + rng.uniform(-eps, eps)
        _fill(A1, rows, cols, nb, in1)
        _fill(A2, rows, cols, nb, in2)
        _fill(Au, rows, cols, nb, all_edges)
        n1 = _gbn_loglik(S, n, A1, ns) if has1 else 0.0
        n2 = _gbn_loglik(S, n, A2, ns) if has2 else 0.0
        nlp = _wishart_logpdf(Au, ns, df, scale_inv)
        log_r = w1 * (n1 - ll[0]) + w2 * (n2 - ll[1]) + nlp - lp
        if log_r >= 0.0 or math.log(rng.random()) < log_r:
            beta[:] = nb
            logs2[:] = ns
            ll[0] = n1
            ll[1] = n2
            lp = nlp
            accepted[0] += 1
        out[t] = ll[1] - ll[0]
    return out


@dataclass(frozen=True)
class GBNPair:
    """Two belief networks over the same nodes, differing in edge masks.

    The free parameters are the coefficients on the union of edges and
    the log conditional variances. A Wishart prior is placed on the
    precision implied by the union network, with density taken with
    respect to these coordinates. Data are centred at ``mean``.
    """

    X: np.ndarray
    mask1: np.ndarray
    mask2: np.ndarray
    df: float = 10.0
    scale: Optional[np.ndarray] = None
    mean: Optional[np.ndarray] = None
    has1: bool = True
    has2: bool = True
    epsilon: float = 0.1

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        M = X.shape[1]
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "mask1", np.asarray(self.mask1, dtype=bool))
        object.__setattr__(self, "mask2", np.asarray(self.mask2, dtype=bool))
        if self.scale is None:
            object.__setattr__(self, "scale", np.eye(M))
        if self.mean is None:
            object.__setattr__(self, "mean", np.zeros(M))
        for m in (self.mask1, self.mask2):
            gbn_submodel_coeffs(np.zeros((M, M)), m)
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")

    @property
    def M(self) -> int:
        return self.X.shape[1]

    @property
    def union(self) -> np.ndarray:
        m1 = self.mask1 if self.has1 else np.zeros_like(self.mask1)
        m2 = self.mask2 if self.has2 else np.zeros_like(self.mask2)
        return m1 | m2

    def edges(self) -> tuple[np.ndarray, np.ndarray]:
        rows, cols = np.nonzero(self.union)
        return rows.astype(np.int64), cols.astype(np.int64)

    def swapped(self) -> "GBNPair":
        return GBNPair(self.X, self.mask2, self.mask1, self.df, self.scale, self.mean, self.has2,
                       self.has1, self.epsilon)

    def side(self, k: int) -> "GBNPair":
        mask = self.mask1 if k == 1 else self.mask2
        return GBNPair(self.X, np.zeros_like(mask), mask, self.df, self.scale, self.mean, False, True,
                       self.epsilon)

    def unpack(self, params: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Split ``[union coefficients, log sigma2]`` into ``(B_union, sigma2)``."""
        rows, cols = self.edges()
        E = rows.size
        B = np.zeros((self.M, self.M))
        B[rows, cols] = params[:E]
        return B, np.exp(params[E:])

    def network(self, params: np.ndarray, k: int) -> GaussianBeliefNetwork:
        B, s2 = self.unpack(params)
        return GaussianBeliefNetwork(self.mean, s2, gbn_submodel_coeffs(B, self.mask1 if k == 1 else self.mask2))

    def log_prior(self, params: np.ndarray) -> float:
        B, s2 = self.unpack(params)
        W = gbn_precision(GaussianBeliefNetwork(self.mean, s2, B))
        return wishart_log_density(W, self.df, self.scale)

    def target(self) -> TemperedTarget:
        pair = self

        class _Side:
            def __init__(self, k):
                self.k = k

            def log_likelihood(self, params):
                W = gbn_precision(pair.network(params, self.k))
                return gaussian_log_likelihood(pair.X, pair.mean, W)

        m1 = _Side(1) if self.has1 else NullModel()
        m2 = _Side(2) if self.has2 else NullModel()
        E = int(self.union.sum())
        return TemperedTarget(m1, m2, self.log_prior, E + self.M)

    def kernel(self) -> "GBNPairKernel":
        return GBNPairKernel(self)


@dataclass
class GBNState:
    beta: np.ndarray
    logs2: np.ndarray
    ll: np.ndarray
    accepted: np.ndarray

    def params(self) -> np.ndarray:
        return np.concatenate([self.beta, self.logs2])


class GBNPairKernel:
    """Joint uniform random-walk Metropolis on coefficients and log variances."""

    cost_per_step = 1

    def __init__(self, pair: GBNPair):
        self.pair = pair
        R = pair.X - pair.mean
        self._S = R.T @ R
        self._n = float(pair.X.shape[0])
        self._rows, self._cols = pair.edges()
        self._in1 = pair.mask1[self._rows, self._cols] if pair.has1 else np.zeros(self._rows.size, bool)
        self._in2 = pair.mask2[self._rows, self._cols] if pair.has2 else np.zeros(self._rows.size, bool)
        self._all = np.ones(self._rows.size, dtype=bool)
        self._scale_inv = np.linalg.inv(pair.scale)

    def _lls(self, beta, logs2):
        M = self.pair.M
        A1, A2 = np.zeros((M, M)), np.zeros((M, M))
        _fill(A1, self._rows, self._cols, beta, self._in1)
        _fill(A2, self._rows, self._cols, beta, self._in2)
        l1 = _gbn_loglik(self._S, self._n, A1, logs2) if self.pair.has1 else 0.0
        l2 = _gbn_loglik(self._S, self._n, A2, logs2) if self.pair.has2 else 0.0
        return np.array([l1, l2])

    def init_state(self, rng: np.random.Generator) -> GBNState:
        beta = np.zeros(self._rows.size)
        logs2 = np.zeros(self.pair.M)
        return GBNState(beta, logs2, self._lls(beta, logs2), np.zeros(1, dtype=np.int64))

    def advance(self, state: GBNState, taus: np.ndarray, rng: np.random.Generator,
                epsilon: Optional[float] = None) -> np.ndarray:
        taus = np.ascontiguousarray(taus, dtype=float)
        if taus.size == 0:
            return np.zeros(0)
        eps = self.pair.epsilon if epsilon is None else epsilon
        pr = self.pair
        return _gbn_advance(taus, state.beta, state.logs2, state.ll, self._S, self._n, self._rows,
                            self._cols, self._in1, self._in2, self._all, pr.has1, pr.has2, pr.df,
                            self._scale_inv, eps, state.accepted, rng)

    def log_lik_ratio(self, state: GBNState) -> float:
        ll = self._lls(state.beta, state.logs2)
        return float(ll[1] - ll[0])

    def swapped(self) -> "GBNPairKernel":
        return GBNPairKernel(self.pair.swapped())


def gbn_mh_step(kernel: GBNPairKernel, state: GBNState, tau: float, rng: np.random.Generator,
                epsilon: float = 0.1) -> GBNState:
    """One Metropolis move at inverse temperature ``tau``; updates ``state`` in place."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    kernel.advance(state, np.array([float(tau)]), rng, epsilon)
    return state
