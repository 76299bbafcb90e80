"""Benchmark definitions, reference values, repeat runners and metrics."""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np

from .biopathway import (BiopathwayHyper, GenePair, bp_synthesize_data, clock_networks,
                         network_log_bayes_factor_genes, random_kinetics)
from .core import EvidenceEstimate, Method, Trace
from .datasets import load_dataset
from .estimators import RunConfig, run_neti_diff, ti_log_bayes_factor
from .ladders import LadderConfig, LadderKind
from .models.gbn import GBNPair, arabidopsis_masks, simulate_ggm_data
from .models.linear import pad_design_matrix_pair, polynomial_pair
from .models.logistic import LogisticPair
from .models.mixture import MixturePair

logger = logging.getLogger(__name__)

BENCHMARKS = ("radiata", "pima", "radiocarbon", "galaxy", "ggm", "biopathway")

# version 1 of the reference table; every value is log p(D|M2) - log p(D|M1)
REFERENCE_VALUES = {
    "radiata": (8.8571, "published closed-form value for the pine-strength regressions"),
    "pima": (-2.6177, "difference of published long-run TI log evidences -259.8519 and -257.2342"),
    "galaxy": (0.4685, "published gold-standard log Bayes factor, 4 vs 3 components"),
}
REFERENCE_TABLE_VERSION = 1

MODEL_LABELS = {
    "radiata": ("density", "adjusted density"),
    "pima": ("npreg+glu+bmi+ped", "npreg+glu+bmi+ped+age"),
    "radiocarbon": ("order {0}", "order {1}"),
    "galaxy": ("3 components", "4 components"),
    "ggm": ("mutant network", "wildtype network"),
    "biopathway": ("wildtype network", "mutant network"),
}

RADIATA_PRIOR = dict(prior_mean=np.array([3000.0, 185.0, 185.0]), scaled=True,
                     prior_cov=np.diag([1 / 0.06, 1 / 6.0, 1 / 6.0]),
                     noise_shape=3.0, noise_rate=2 * 300.0 ** 2, delta2=None)


@dataclass(frozen=True)
class BenchmarkSpec:
    """Which benchmark to run and with which model selectors.

    ``orders`` applies to the polynomial benchmark; ``beta``, ``n_obs``
    and ``data_seed`` to the simulated GGM; ``variant``, ``data_seed`` and
    ``noise_sd`` to the simulated biopathway data.
    """

    name: str
    orders: tuple[int, int] = (1, 2)
    data_path: Optional[str] = None
    beta: float = 1.0
    n_obs: int = 100
    data_seed: int = 0
    variant: str = "wildtype"
    noise_sd: float = 0.05

    def __post_init__(self):
        if self.name not in BENCHMARKS:
            raise ValueError(f"unknown benchmark {self.name!r}; choose from {', '.join(BENCHMARKS)}")
        i, l = self.orders
        if not (0 <= i <= 9 and 0 <= l <= 9) or i == l:
            raise ValueError(f"polynomial orders must be distinct integers in 0..9, got {self.orders}")
        if self.variant not in ("wildtype", "mutant"):
            raise ValueError("variant must be 'wildtype' or 'mutant'")

    def labels(self) -> tuple[str, str]:
        a, b = MODEL_LABELS[self.name]
        return a.format(*self.orders), b.format(*self.orders)


class ProductPair:
    """Independent pairs run side by side; their log Bayes factors add up."""

    def __init__(self, parts: Sequence):
        self.parts = list(parts)

    def swapped(self) -> "ProductPair":
        return ProductPair([p.swapped() for p in self.parts])

    def side(self, k: int) -> "ProductPair":
        return ProductPair([p.side(k) for p in self.parts])

    def kernel(self) -> "ProductKernel":
        return ProductKernel([p.kernel() for p in self.parts])


class ProductKernel:
    def __init__(self, kernels):
        self.kernels = kernels
        self.cost_per_step = max(getattr(k, "cost_per_step", 1) for k in kernels)

    def init_state(self, rng):
        return [k.init_state(rng) for k in self.kernels]

    def advance(self, state, taus, rng):
        out = np.zeros(len(taus))
        for k, s in zip(self.kernels, state):
            out += k.advance(s, taus, rng)
        return out

    def log_lik_ratio(self, state):
        return float(sum(k.log_lik_ratio(s) for k, s in zip(self.kernels, state)))

    def swapped(self):
        return ProductKernel([k.swapped() for k in self.kernels])


def biopathway_data(spec: BenchmarkSpec):
    wild, mutant = clock_networks()
    net = wild if spec.variant == "wildtype" else mutant
    rng = np.random.default_rng(spec.data_seed)
    params = random_kinetics(net, rng)
    return bp_synthesize_data(net, params, np.arange(0.0, 25.0, 2.0), 11, spec.noise_sd, rng)


def build_pair(spec: BenchmarkSpec):
    """Model pair for ``spec`` exposing ``kernel()``, ``side(k)`` and ``swapped()``."""
    name = spec.name
    if name == "radiata":
        data = load_dataset(spec.data_path, "radiata")
        return pad_design_matrix_pair(data, ("intercept", "density"), ("intercept", "adjusted_density"),
                                      **RADIATA_PRIOR)
    if name == "radiocarbon":
        data = load_dataset(spec.data_path, "radiocarbon")
        return polynomial_pair(data.column("x"), data.y, *spec.orders)
    if name == "pima":
        data = load_dataset(spec.data_path, "pima")
        m2 = np.ones(len(data.names), dtype=bool)
        m1 = m2.copy()
        m1[data.names.index("age")] = False
        return LogisticPair(data.covariates, data.y, m1, m2, columns=data.names)
    if name == "galaxy":
        data = load_dataset(spec.data_path, "galaxy")
        return MixturePair(data.y, 3, 4)
    if name == "ggm":
        wild, mutant = arabidopsis_masks()
        X = simulate_ggm_data(spec.beta, spec.n_obs, np.random.default_rng(spec.data_seed))
        return GBNPair(X, mutant, wild)
    if name == "biopathway":
        wild, mutant = clock_networks()
        data = biopathway_data(spec)
        genes = network_log_bayes_factor_genes(wild, mutant)
        return ProductPair([GenePair.from_networks(data, wild, mutant, g) for g in genes])
    raise ValueError(name)


def reference_truth(spec: BenchmarkSpec) -> Optional[float]:
    """Ground truth in the ``M2 vs M1`` orientation, if one is known."""
    if spec.name in REFERENCE_VALUES:
        return REFERENCE_VALUES[spec.name][0]
    if spec.name == "radiocarbon":
        return build_pair(spec).log_bayes_factor()
    return None


def resolved_settings(spec: BenchmarkSpec) -> dict:
    """Model defaults that a run depends on, for the report."""
    s: dict = {"benchmark": asdict(spec), "models": spec.labels()}
    if spec.name == "radiata":
        s["prior"] = {"mean": [3000.0, 185.0, 185.0], "variances": [1 / 0.06, 1 / 6.0, 1 / 6.0],
                      "precision_gamma": [3.0, 2 * 300.0 ** 2],
                      "covariance_scaled_by_noise_variance": True}
    elif spec.name == "radiocarbon":
        s["prior"] = {"a": 0.2, "b": 0.2, "delta2": 1.0}
    elif spec.name == "pima":
        s["prior"] = {"variance": 100.0}
        s["proposal"] = {"base_var": 0.01, "max_var": 100.0, "rule": "min(base_var/tau, max_var)"}
    elif spec.name == "galaxy":
        s["prior"] = {"dirichlet": 1.0, "mean_var": 1000.0, "precision_gamma": [1.0, 1.0]}
    elif spec.name == "ggm":
        s["prior"] = {"wishart_df": 10.0, "wishart_scale": "identity"}
        s["proposal"] = {"uniform_half_width": 0.1}
    elif spec.name == "biopathway":
        s["hyper"] = asdict(BiopathwayHyper())
    return s


def worker_slots(requested: Optional[int] = None) -> int:
    env = os.environ.get("EVIDENCEPATH_THREADS")
    cap = int(env) if env else (os.cpu_count() or 1)
    if cap < 1:
        raise ValueError("EVIDENCEPATH_THREADS must be a positive integer")
    return max(1, min(cap, requested or cap))


def run_repeats(spec: BenchmarkSpec, config: RunConfig, reversed_direction: bool = False,
                keep_traces: bool = False, pair=None) -> list[tuple[EvidenceEstimate, Optional[Trace]]]:
    """Run ``config.repeats`` independent estimates, repeat ``r`` on stream ``r``."""
    if pair is None:
        pair = build_pair(spec)
    if reversed_direction:
        pair = pair.swapped()

    def one(r):
        if config.method is Method.NETI_DIFF:
            est, trace = run_neti_diff(pair.kernel(), config, stream=r)
            return est, (trace if keep_traces else None)
        return ti_log_bayes_factor(pair.side(1).kernel(), pair.side(2).kernel(), config, stream=r), None

    slots = worker_slots(config.repeats)
    if slots == 1 or config.repeats == 1:
        return [one(r) for r in range(config.repeats)]
    with ThreadPoolExecutor(max_workers=slots) as pool:
        return list(pool.map(one, range(config.repeats)))


@dataclass(frozen=True)
class EvaluationReport:
    estimates: tuple[float, ...]
    mean: float
    variance: Optional[float]
    mean_abs_error: Optional[float]
    runtimes_ms: tuple[float, ...] = ()

    @property
    def sd(self) -> Optional[float]:
        return None if self.variance is None else float(np.sqrt(self.variance))


def eval_metrics(estimates: Sequence[float], truth: Optional[float] = None,
                 runtimes_ms: Sequence[float] = (), require_variance: bool = True) -> EvaluationReport:
    """Across-repeat variance (``1/(N-1)`` normaliser) and mean absolute error."""
    b = np.asarray(estimates, dtype=float)
    if b.size == 0:
        raise ValueError("no estimates")
    if b.size < 2 and require_variance:
        raise ValueError("the across-repeat variance needs at least two estimates")
    var = float(np.var(b, ddof=1)) if b.size >= 2 else None
    mae = float(np.mean(np.abs(b - truth))) if truth is not None else None
    return EvaluationReport(tuple(float(v) for v in b), float(b.mean()), var, mae,
                            tuple(float(t) for t in runtimes_ms))


def default_config(method: str, n_iter: int, K: int = 20, alpha: float = 5.0, ladder: Optional[str] = None,
                   seed: int = 0, repeats: int = 5) -> RunConfig:
    method = Method(method)
    if method is Method.NETI_DIFF:
        lcfg = LadderConfig(LadderKind(ladder or "sigmoid"), 2, alpha)
    else:
        lcfg = LadderConfig(LadderKind(ladder or "power"), K, alpha)
    return RunConfig(method=method, n_iter=n_iter, ladder=lcfg, seed=seed, repeats=repeats)
