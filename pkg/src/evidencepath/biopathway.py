"""Michaelis-Menten gradient regression for transcriptional networks.

For gene ``i`` with regulators ``pi_i`` the concentration gradient is

    dx_i/dt = -v0 x_i + sum_u v_u * (I_u x_u + (1 - I_u) k_u) / (x_u + k_u)

with ``I_u = 1`` for an activator and ``0`` for an inhibitor. For fixed
``k`` this is linear in ``V = (v0, v_u...)``, which gives a Gibbs update
for ``V``; ``k`` moves by Metropolis-Hastings.

Priors: ``V ~ N(1, sigma2*delta2*I)`` and ``k ~ N(1, nu*I)``, both truncated
to the non-negative orthant, with inverse-gamma hyperpriors on ``sigma2``
and ``delta2``. The truncation constants of the ``V`` prior are left out of
the variance updates, so the sampler targets a proper joint prior that
differs from the untruncated one only by that factor.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
from numba import njit

from .core import check_tau
from .models._kernels import LOG_2PI, back_substitute_upper_t, truncated_std_normal_lower

logger = logging.getLogger(__name__)

MAX_REJECTION_TRIES = 100


@dataclass(frozen=True)
class GeneNetwork:
    """Genes and, per gene, a mapping ``regulator index -> is_activator``."""

    genes: tuple[str, ...]
    regulators: tuple[dict, ...]

    def __post_init__(self):
        if len(self.regulators) != len(self.genes):
            raise ValueError("one regulator mapping per gene is required")
        G = len(self.genes)
        for i, regs in enumerate(self.regulators):
            for u, sign in regs.items():
                if not 0 <= u < G:
                    raise ValueError(f"gene {self.genes[i]} has invalid regulator index {u}")
                if sign not in (0, 1, True, False):
                    raise ValueError("regulator signs must be 1 (activator) or 0 (inhibitor)")

    def index(self, name: str) -> int:
        return self.genes.index(name)

    def parents(self, gene: int) -> list[int]:
        return sorted(self.regulators[gene])

    def signs(self, gene: int) -> list[int]:
        return [int(self.regulators[gene][u]) for u in self.parents(gene)]


@dataclass
class KineticState:
    V: np.ndarray
    K: np.ndarray
    sigma2: float = 1.0
    delta2: float = 1.0
    accepted: int = 0

    @classmethod
    def initial(cls, n_regulators: int) -> "KineticState":
        return cls(np.ones(n_regulators + 1), np.ones(n_regulators), 1.0, 1.0)


@dataclass(frozen=True)
class GradientData:
    """Concentrations (rows = observations, columns = genes) and gradients."""

    concentrations: np.ndarray
    gradients: np.ndarray
    genes: tuple[str, ...]
    condition: np.ndarray
    time: np.ndarray

    def __post_init__(self):
        if np.any(self.concentrations < 0):
            raise ValueError("concentrations must be non-negative")
        if self.concentrations.shape != self.gradients.shape:
            raise ValueError("concentrations and gradients must share a shape")

    @property
    def n(self) -> int:
        return self.concentrations.shape[0]

    def to_csv(self, path: Union[str, Path]) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["gene", "condition", "timepoint", "concentration", "gradient"])
            for r in range(self.n):
                for g, name in enumerate(self.genes):
                    w.writerow([name, int(self.condition[r]), repr(float(self.time[r])),
                                repr(float(self.concentrations[r, g])), repr(float(self.gradients[r, g]))])

    @classmethod
    def from_csv(cls, path: Union[str, Path]) -> "GradientData":
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        if not rows:
            raise ValueError("empty gradient file")
        genes = tuple(dict.fromkeys(r["gene"] for r in rows))
        keys = list(dict.fromkeys((int(r["condition"]), float(r["timepoint"])) for r in rows))
        pos = {k: i for i, k in enumerate(keys)}
        X = np.zeros((len(keys), len(genes)))
        Y = np.zeros_like(X)
        for r in rows:
            i = pos[(int(r["condition"]), float(r["timepoint"]))]
            g = genes.index(r["gene"])
            X[i, g] = float(r["concentration"])
            Y[i, g] = float(r["gradient"])
        cond = np.array([k[0] for k in keys])
        t = np.array([k[1] for k in keys])
        return cls(X, Y, genes, cond, t)


def mm_design_row(network: GeneNetwork, gene: int, x: np.ndarray, K: Sequence[float]) -> np.ndarray:
    """Regression row ``(-x_i, f_u(x_u, k_u) ...)`` for one time point."""
    x = np.asarray(x, dtype=float)
    K = np.asarray(K, dtype=float)
    parents = network.parents(gene)
    if K.shape != (len(parents),):
        raise ValueError(f"expected {len(parents)} Michaelis-Menten constants, got {K.size}")
    if np.any(K < 0) or np.any(x < 0):
        raise ValueError("concentrations and Michaelis-Menten constants must be non-negative")
    row = [-x[gene]]
    for u, sign, k in zip(parents, network.signs(gene), K):
        denom = x[u] + k
        if denom == 0:
            raise ValueError(f"regulator {network.genes[u]} has x + k = 0 for gene {network.genes[gene]}")
        row.append((x[u] if sign else k) / denom)
    return np.array(row)


def mm_gradient(network: GeneNetwork, gene: int, x: np.ndarray, V: Sequence[float],
                K: Sequence[float]) -> float:
    """Michaelis-Menten gradient of ``gene`` at concentrations ``x``."""
    return float(mm_design_row(network, gene, x, K) @ np.asarray(V, dtype=float))


def network_gradients(network: GeneNetwork, x: np.ndarray, params: Sequence[tuple]) -> np.ndarray:
    """Gradients of all genes; ``params[i] = (V_i, K_i)``."""
    return np.array([mm_gradient(network, i, x, *params[i]) for i in range(len(network.genes))])


def random_kinetics(network: GeneNetwork, rng: np.random.Generator) -> list[tuple[np.ndarray, np.ndarray]]:
    """Kinetic parameters for simulation: degradation 0.2-0.5, rates 0.5-1.5, constants 0.5-1.5."""
    out = []
    for i in range(len(network.genes)):
        m = len(network.parents(i))
        V = np.concatenate([rng.uniform(0.2, 0.5, 1), rng.uniform(0.5, 1.5, m)])
        out.append((V, rng.uniform(0.5, 1.5, m)))
    return out


def _rk4_step(f, x, h):
    k1 = f(x)
    k2 = f(x + 0.5 * h * k1)
    k3 = f(x + 0.5 * h * k2)
    k4 = f(x + h * k3)
    return x + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def bp_synthesize_data(network: GeneNetwork, true_params: Sequence[tuple], timepoints: Sequence[float],
                       conditions: int, noise_sd: float, rng: np.random.Generator,
                       initial_states: Optional[np.ndarray] = None, step: float = 0.05,
                       finite_difference: bool = False) -> GradientData:
    """Simulate the network and record noisy gradients.

    Each condition starts from its own initial state (uniform on
    ``[0.2, 3]`` unless given) and is integrated with fixed-step RK4. The
    recorded gradient is the exact model gradient at the sampled state,
    or with ``finite_difference`` a forward difference of the trajectory,
    plus ``N(0, noise_sd**2)`` noise.
    """
    G = len(network.genes)
    timepoints = np.asarray(timepoints, dtype=float)
    if np.any(np.diff(timepoints) <= 0):
        raise ValueError("timepoints must be increasing")
    if initial_states is None:
        initial_states = rng.uniform(0.2, 3.0, (conditions, G))
    initial_states = np.asarray(initial_states, dtype=float)
    if initial_states.shape != (conditions, G):
        raise ValueError("initial states must be conditions x genes")

    def f(x):
        return network_gradients(network, np.maximum(x, 0.0), true_params)

    def advance(x, t_from, t_to):
        t = t_from
        while t < t_to - 1e-12:
            h = min(step, t_to - t)
            nxt = _rk4_step(f, x, h)
            halvings = 0
            while np.any(nxt < 0):
                halvings += 1
                if halvings > 20:
                    raise RuntimeError("integration produced negative concentrations")
                h *= 0.5
                nxt = _rk4_step(f, x, h)
            x, t = nxt, t + h
        return x

    X, Y, cond, times = [], [], [], []
    for c in range(conditions):
        x = initial_states[c].copy()
        t_prev = timepoints[0]
        for tp in timepoints:
            x = advance(x, t_prev, tp)
            t_prev = tp
            if finite_difference:
                h = 1e-3
                grad = (advance(x, tp, tp + h) - x) / h
            else:
                grad = f(x)
            X.append(x.copy())
            Y.append(grad)
            cond.append(c)
            times.append(tp)
    Y = np.array(Y) + rng.normal(0.0, noise_sd, (len(Y), G))
    return GradientData(np.array(X), Y, network.genes, np.array(cond), np.array(times))


# reduced Arabidopsis clock network: wildtype and PRR7/PRR9 mutant
CLOCK_GENES = ("LHY", "TOC1", "PRR9", "PRR7", "GI", "ELF4", "NI")


def clock_networks() -> tuple[GeneNetwork, GeneNetwork]:
    """``(wildtype, mutant)``; the mutant lacks PRR9 -> PRR7 and PRR7 -> NI."""
    g = {name: i for i, name in enumerate(CLOCK_GENES)}
    wild = [
        {g["TOC1"]: 1},
        {g["LHY"]: 0, g["GI"]: 1},
        {g["LHY"]: 1, g["TOC1"]: 0},
        {g["LHY"]: 1, g["PRR9"]: 0},
        {g["LHY"]: 0, g["ELF4"]: 1},
        {g["LHY"]: 0},
        {g["PRR7"]: 0, g["GI"]: 1},
    ]
    mutant = [dict(r) for r in wild]
    del mutant[g["PRR7"]][g["PRR9"]]
    del mutant[g["NI"]][g["PRR7"]]
    return GeneNetwork(CLOCK_GENES, tuple(wild)), GeneNetwork(CLOCK_GENES, tuple(mutant))


@dataclass(frozen=True)
class BiopathwayHyper:
    a_sigma: float = 0.01
    b_sigma: float = 0.01
    a_delta: float = 0.01
    b_delta: float = 0.01
    nu: float = 1.0
    k_step_var: float = 0.1


@njit(cache=True, nogil=True)
def _design(Xc, target, regs, signs, K, live, out):
    n = Xc.shape[0]
    for r in range(n):
        out[r, 0] = -Xc[r, target]
        for j in range(regs.shape[0]):
            if live[j]:
                xu = Xc[r, regs[j]]
                out[r, j + 1] = (xu if signs[j] else K[j]) / (xu + K[j])
            else:
                out[r, j + 1] = 0.0


@njit(cache=True, nogil=True)
def _rss(D, y, V):
    s = 0.0
    for r in range(D.shape[0]):
        e = y[r] - D[r] @ V
        s += e * e
    return s


@njit(cache=True, nogil=True)
def _sample_truncated_v(mean, H, scale, V, rng):
    # draw from N(mean, scale^2 H^{-1}) on V >= 0: rejection, else one Gibbs sweep
    p = mean.shape[0]
    L = np.linalg.cholesky(H)
    for _ in range(MAX_REJECTION_TRIES):
        z = rng.standard_normal(p)
        cand = mean + scale * back_substitute_upper_t(L, z)
        ok = True
        for j in range(p):
            if cand[j] < 0.0:
                ok = False
                break
        if ok:
            V[:] = cand
            return
    for j in range(p):
        # conditional of coordinate j given the rest, from the precision form
        cvar = scale * scale / H[j, j]
        s = 0.0
        for m in range(p):
            if m != j:
                s += H[j, m] * (V[m] - mean[m])
        cmean = mean[j] - s / H[j, j]
        sd = math.sqrt(cvar)
        V[j] = cmean + sd * truncated_std_normal_lower(-cmean / sd, rng)


@njit(cache=True, nogil=True)
def _v_moments(D1, D2, y, w1, w2, delta2):
    # mean and unit-noise precision of the tempered V conditional (prior mean 1)
    p = D1.shape[1]
    H = w1 * (D1.T @ D1) + w2 * (D2.T @ D2)
    for j in range(p):
        H[j, j] += 1.0 / delta2
    rhs = w1 * (D1.T @ y) + w2 * (D2.T @ y) + np.ones(p) / delta2
    return np.linalg.solve(H, rhs), H


@njit(cache=True, nogil=True)
def _sigma2_shape_rate(n, p, w1, w2, r1, r2, dv, delta2, a_s, b_s):
    # inverse-gamma parameters of the noise variance; dv = |V - 1|^2
    return a_s + 0.5 * (n * (w1 + w2) + p), b_s + 0.5 * (w1 * r1 + w2 * r2 + dv / delta2)


@njit(cache=True, nogil=True)
def _delta2_shape_rate(p, dv, sigma2, a_d, b_d):
    return a_d + 0.5 * p, b_d + 0.5 * dv / sigma2


@njit(cache=True, nogil=True)
def _bp_advance(taus, V, K, hyp_state, Xc, y, target, regs, signs, live1, live2, has1, has2,
                a_s, b_s, a_d, b_d, nu, k_var, accepted, rng):
    n = Xc.shape[0]
    s = regs.shape[0]
    p = s + 1
    D1 = np.empty((n, p))
    D2 = np.empty((n, p))
    P1 = np.empty((n, p))
    P2 = np.empty((n, p))
    _design(Xc, target, regs, signs, K, live1, D1)
    _design(Xc, target, regs, signs, K, live2, D2)
    Kp = np.empty(s)
    out = np.empty(taus.shape[0])
    for t in range(taus.shape[0]):
        tau = taus[t]
        w1 = (1.0 - tau) if has1 else 0.0
        w2 = tau if has2 else 0.0
        sigma2 = hyp_state[0]
        delta2 = hyp_state[1]
        # (1) V given everything else
        mean, H = _v_moments(D1, D2, y, w1, w2, delta2)
        _sample_truncated_v(mean, H, math.sqrt(sigma2), V, rng)
        r1 = _rss(D1, y, V)
        r2 = _rss(D2, y, V)
        dv = 0.0
        for j in range(p):
            dv += (V[j] - 1.0) ** 2
        # (2) noise variance
        shape, rate = _sigma2_shape_rate(n, p, w1, w2, r1, r2, dv, delta2, a_s, b_s)
        sigma2 = 1.0 / rng.gamma(shape, 1.0 / rate)
        # (3) signal-to-noise hyperparameter
        shape, rate = _delta2_shape_rate(p, dv, sigma2, a_d, b_d)
        delta2 = 1.0 / rng.gamma(shape, 1.0 / rate)
        hyp_state[0] = sigma2
        hyp_state[1] = delta2
        # (4) Michaelis-Menten constants by random-walk Metropolis-Hastings
        neg = False
        for j in range(s):
            Kp[j] = K[j] + math.sqrt(k_var) * rng.standard_normal()
            if Kp[j] < 0.0:
                neg = True
        if not neg:
            _design(Xc, target, regs, signs, Kp, live1, P1)
            _design(Xc, target, regs, signs, Kp, live2, P2)
            q1 = _rss(P1, y, V)
            q2 = _rss(P2, y, V)
            if np.isfinite(q1) and np.isfinite(q2):
                log_r = -0.5 * (w1 * (q1 - r1) + w2 * (q2 - r2)) / sigma2
                for j in range(s):
                    log_r += -0.5 * ((Kp[j] - 1.0) ** 2 - (K[j] - 1.0) ** 2) / nu
                if log_r >= 0.0 or math.log(rng.random()) < log_r:
                    K[:] = Kp
                    D1[:, :] = P1
                    D2[:, :] = P2
                    r1 = q1
                    r2 = q2
                    accepted[0] += 1
        l1 = -0.5 * n * (LOG_2PI + math.log(sigma2)) - 0.5 * r1 / sigma2
        l2 = -0.5 * n * (LOG_2PI + math.log(sigma2)) - 0.5 * r2 / sigma2
        out[t] = (l2 if has2 else 0.0) - (l1 if has1 else 0.0)
    return out


@dataclass(frozen=True)
class GenePair:
    """Two candidate regulator sets for one gene, on the union of regulators.

    Both designs have the union layout; a regulator missing from one set
    gives a zero column in that model's design.
    """

    data: GradientData
    gene: int
    regulators: tuple[int, ...]
    signs: tuple[int, ...]
    live1: tuple[bool, ...]
    live2: tuple[bool, ...]
    hyper: BiopathwayHyper = field(default_factory=BiopathwayHyper)
    has1: bool = True
    has2: bool = True

    @classmethod
    def from_networks(cls, data: GradientData, net1: GeneNetwork, net2: GeneNetwork, gene: int,
                      hyper: Optional[BiopathwayHyper] = None) -> "GenePair":
        r1, r2 = net1.regulators[gene], net2.regulators[gene]
        for u in set(r1) & set(r2):
            if bool(r1[u]) != bool(r2[u]):
                raise ValueError(f"regulator {net1.genes[u]} has conflicting signs")
        union = sorted(set(r1) | set(r2))
        signs = tuple(int(r1.get(u, r2.get(u))) for u in union)
        return cls(data, gene, tuple(union), signs, tuple(u in r1 for u in union),
                   tuple(u in r2 for u in union), hyper or BiopathwayHyper())

    def swapped(self) -> "GenePair":
        return GenePair(self.data, self.gene, self.regulators, self.signs, self.live2, self.live1,
                        self.hyper, self.has2, self.has1)

    def side(self, k: int) -> "GenePair":
        """Prior-to-posterior pair for one of the two regulator sets."""
        live = self.live1 if k == 1 else self.live2
        return GenePair(self.data, self.gene, self.regulators, self.signs, (False,) * len(live), live,
                        self.hyper, False, True)

    def designs(self, K: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        n, p = self.data.n, len(self.regulators) + 1
        D1, D2 = np.empty((n, p)), np.empty((n, p))
        args = (np.ascontiguousarray(self.data.concentrations), self.gene,
                np.array(self.regulators, dtype=np.int64), np.array(self.signs, dtype=np.int64))
        _design(*args, np.asarray(K, dtype=float), np.array(self.live1), D1)
        _design(*args, np.asarray(K, dtype=float), np.array(self.live2), D2)
        return D1, D2

    def kernel(self) -> "GenePairKernel":
        return GenePairKernel(self)


@dataclass
class GeneChainState:
    kinetic: KineticState
    hyp: np.ndarray
    accepted: np.ndarray


class GenePairKernel:
    cost_per_step = 1

    def __init__(self, pair: GenePair):
        self.pair = pair
        self._X = np.ascontiguousarray(pair.data.concentrations)
        self._y = np.ascontiguousarray(pair.data.gradients[:, pair.gene])
        self._regs = np.array(pair.regulators, dtype=np.int64)
        self._signs = np.array(pair.signs, dtype=np.int64)
        self._l1 = np.array(pair.live1, dtype=np.bool_)
        self._l2 = np.array(pair.live2, dtype=np.bool_)

    def init_state(self, rng: np.random.Generator) -> GeneChainState:
        ks = KineticState.initial(len(self.pair.regulators))
        return GeneChainState(ks, np.array([ks.sigma2, ks.delta2]), np.zeros(1, dtype=np.int64))

    def advance(self, state: GeneChainState, taus: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        taus = np.ascontiguousarray(taus, dtype=float)
        if taus.size == 0:
            return np.zeros(0)
        h = self.pair.hyper
        ks = state.kinetic
        out = _bp_advance(taus, ks.V, ks.K, state.hyp, self._X, self._y, self.pair.gene, self._regs,
                          self._signs, self._l1, self._l2, self.pair.has1, self.pair.has2, h.a_sigma,
                          h.b_sigma, h.a_delta, h.b_delta, h.nu, h.k_step_var, state.accepted, rng)
        ks.sigma2, ks.delta2 = float(state.hyp[0]), float(state.hyp[1])
        ks.accepted = int(state.accepted[0])
        return out

    def log_lik_ratio(self, state: GeneChainState) -> float:
        ks = state.kinetic
        D1, D2 = self.pair.designs(ks.K)
        s2 = ks.sigma2
        n = self._y.size

        def ll(D):
            r = self._y - D @ ks.V
            return -0.5 * n * (LOG_2PI + math.log(s2)) - 0.5 * (r @ r) / s2

        return (ll(D2) if self.pair.has2 else 0.0) - (ll(D1) if self.pair.has1 else 0.0)

    def swapped(self) -> "GenePairKernel":
        return GenePairKernel(self.pair.swapped())


def bp_gibbs_sweep(pair: GenePair, state: KineticState, tau: float, rng: np.random.Generator) -> KineticState:
    """One sweep at ``tau``: V, then sigma2, then delta2, then an MH move on K.

    ``state`` is updated in place and returned.
    """
    tau = check_tau(tau)
    kernel = GenePairKernel(pair)
    chain = GeneChainState(state, np.array([state.sigma2, state.delta2]), np.array([state.accepted]))
    kernel.advance(chain, np.array([tau]), rng)
    return state


def network_log_bayes_factor_genes(net1: GeneNetwork, net2: GeneNetwork) -> list[int]:
    """Genes whose regulator sets differ; only these contribute to the log Bayes factor."""
    return [i for i in range(len(net1.genes)) if net1.regulators[i] != net2.regulators[i]]
