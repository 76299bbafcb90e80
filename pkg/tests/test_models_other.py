import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from evidencepath.core import log_lik_ratio
from evidencepath.datasets import load_galaxy, load_pima
from evidencepath.models.gbn import (ARABIDOPSIS_GENES, GaussianBeliefNetwork, GBNPair, _wishart_logpdf,
                                     arabidopsis_masks, gbn_mh_step, gbn_precision, gbn_submodel_coeffs,
                                     simulate_ggm_data, wishart_log_density)
from evidencepath.models.logistic import LogisticModel, LogisticPair, _loglik, logistic_log_likelihood
from evidencepath.models.mixture import (MixtureModel, MixturePair, MixturePrior, complete_log_likelihood,
                                         initial_mixture, mixture_log_likelihood, mixture_power_gibbs_step)


# logistic regression

def test_logistic_zero_coefficients():
    X = np.column_stack([np.ones(7), np.arange(7.0)])
    y = np.array([0, 1, 1, 0, 1, 0, 0], dtype=float)
    assert logistic_log_likelihood(LogisticModel(X, y), np.zeros(2)) == pytest.approx(-7 * math.log(2))


def test_logistic_single_point_balanced():
    X = np.array([[1.0, 2.0]])
    theta = np.array([2.0, -1.0])
    for y in (0.0, 1.0):
        assert logistic_log_likelihood(LogisticModel(X, np.array([y])), theta) == pytest.approx(-math.log(2))


def test_logistic_extreme_linear_predictor():
    X = np.array([[1.0], [1.0]])
    y = np.array([1.0, 0.0])
    ll = logistic_log_likelihood(LogisticModel(X, y), np.array([1000.0]))
    assert np.isfinite(ll)
    # P(y=1) = 1/(1+e^{1000}) so the first term is about -1000, the second about 0
    assert ll == pytest.approx(-1000.0, abs=1e-9)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 1000))
def test_logistic_compiled_matches_reference(seed):
    rng = np.random.default_rng(seed)
    X = np.column_stack([np.ones(20), rng.normal(size=(20, 3))])
    y = (rng.random(20) < 0.5).astype(float)
    theta = rng.normal(0, 3, 4)
    mask = np.array([True, True, False, True])
    ref = logistic_log_likelihood(LogisticModel(X, y, mask.astype(float)), theta)
    assert _loglik(X, y, theta, mask) == pytest.approx(ref, rel=1e-12)


def pima_pair():
    data = load_pima()
    m2 = np.ones(len(data.names), bool)
    m1 = m2.copy()
    m1[data.names.index("age")] = False
    return LogisticPair(data.covariates, data.y, m1, m2, columns=data.names)


def test_logistic_annealed_coordinates():
    pair = pima_pair()
    assert pair.annealed.tolist() == [False] * 5 + [True]
    assert pair.side(1).annealed.all() and pair.side(1).X.shape[1] == 5
    assert pair.side(2).X.shape[1] == 6


def test_logistic_kernel_phi_matches_target():
    pair = pima_pair()
    k = pair.kernel()
    rng = np.random.default_rng(0)
    s = k.init_state(rng)
    phi = k.advance(s, np.linspace(0, 1, 200), rng)
    assert phi[-1] == pytest.approx(log_lik_ratio(pair.target(), s.theta), rel=1e-10)


# Gaussian belief networks

def test_gbn_precision_examples():
    assert gbn_precision(GaussianBeliefNetwork(np.zeros(1), np.array([4.0]), np.zeros((1, 1)))).tolist() == [[0.25]]
    s2 = np.array([1.0, 2.0, 4.0])
    W = gbn_precision(GaussianBeliefNetwork(np.zeros(3), s2, np.zeros((3, 3))))
    assert np.allclose(W, np.diag(1 / s2), atol=0)
    b = 0.7
    W = gbn_precision(GaussianBeliefNetwork(np.zeros(2), np.ones(2), np.array([[0, 0], [b, 0]])))
    assert np.allclose(W, [[1 + b * b, -b], [-b, 1]], atol=1e-15)


def test_gbn_two_node_monte_carlo():
    b = 0.7
    g = GaussianBeliefNetwork(np.zeros(2), np.ones(2), np.array([[0, 0], [b, 0]]))
    X = g.sample(1_000_000, np.random.default_rng(8))
    emp = np.cov(X.T)
    assert np.allclose(np.linalg.inv(gbn_precision(g)), emp, atol=0.01)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 100_000))
def test_gbn_precision_inverts_covariance(seed):
    rng = np.random.default_rng(seed)
    B = np.tril(rng.normal(0, 1, (4, 4)), -1)
    g = GaussianBeliefNetwork(rng.normal(size=4), rng.uniform(0.2, 3.0, 4), B)
    W = gbn_precision(g)
    assert np.allclose(W, W.T, atol=0)
    C = g.covariance()
    assert np.max(np.abs(W - np.linalg.inv(C))) < 1e-10
    assert np.max(np.abs(np.linalg.inv(W) - C)) < 1e-12 * np.linalg.cond(C) * np.max(np.abs(C))


def test_gbn_rejects_bad_input():
    with pytest.raises(ValueError):
        GaussianBeliefNetwork(np.zeros(2), np.ones(2), np.array([[0, 1.0], [0, 0]]))
    with pytest.raises(ValueError):
        gbn_precision(GaussianBeliefNetwork(np.zeros(2), np.array([1.0, 0.0]), np.zeros((2, 2))))


def test_submodel_coeffs():
    rng = np.random.default_rng(1)
    B = np.tril(rng.normal(size=(5, 5)), -1)
    full = np.tril(np.ones((5, 5), bool), -1)
    assert np.array_equal(gbn_submodel_coeffs(B, full), B)
    assert np.array_equal(gbn_submodel_coeffs(B, np.zeros((5, 5), bool)), np.zeros((5, 5)))
    with pytest.raises(ValueError):
        gbn_submodel_coeffs(B, np.eye(5, dtype=bool))


def test_arabidopsis_masks_differ_by_two_edges():
    wild, mutant = arabidopsis_masks()
    g = {name: i for i, name in enumerate(ARABIDOPSIS_GENES)}
    diff = sorted(zip(*np.nonzero(wild & ~mutant)))
    assert diff == sorted([(g["PRR7"], g["PRR9"]), (g["NI"], g["PRR7"])])
    assert not np.any(mutant & ~wild)


def test_gbn_kernel_agrees_with_dense_evaluation():
    wild, mutant = arabidopsis_masks()
    X = simulate_ggm_data(1.0, 50, np.random.default_rng(2))
    pair = GBNPair(X, mutant, wild)
    k = pair.kernel()
    rng = np.random.default_rng(3)
    s = k.init_state(rng)
    k.advance(s, np.full(300, 0.5), rng)
    params = s.params()
    target = pair.target()
    assert k.log_lik_ratio(s) == pytest.approx(log_lik_ratio(target, params), rel=1e-9)
    B, s2 = pair.unpack(params)
    dense = wishart_log_density(gbn_precision(GaussianBeliefNetwork(pair.mean, s2, B)), 10.0, np.eye(7))
    A = np.zeros((7, 7))
    A[pair.edges()] = params[:B[pair.edges()].size]
    assert _wishart_logpdf(A, s.logs2, 10.0, np.eye(7)) == pytest.approx(dense, rel=1e-10)


def test_gbn_null_move_always_accepted():
    wild, mutant = arabidopsis_masks()
    pair = GBNPair(simulate_ggm_data(1.0, 30, np.random.default_rng(0)), mutant, wild)
    k = pair.kernel()
    rng = np.random.default_rng(1)
    s = k.init_state(rng)
    for _ in range(20):
        gbn_mh_step(k, s, 0.5, rng, epsilon=1e-300)
    assert s.accepted[0] == 20


def test_gbn_identical_masks_tau_free():
    wild, _ = arabidopsis_masks()
    pair = GBNPair(simulate_ggm_data(1.0, 40, np.random.default_rng(4)), wild, wild)
    runs = []
    for tau in (0.0, 0.4, 1.0):
        k = pair.kernel()
        rng = np.random.default_rng(5)
        s = k.init_state(rng)
        k.advance(s, np.full(500, tau), rng)
        runs.append((s.params(), int(s.accepted[0])))
    for p, a in runs[1:]:
        assert np.array_equal(p, runs[0][0]) and a == runs[0][1]


def test_gbn_mh_step_rejects_bad_epsilon():
    wild, mutant = arabidopsis_masks()
    pair = GBNPair(np.zeros((3, 7)), mutant, wild)
    k = pair.kernel()
    with pytest.raises(ValueError):
        gbn_mh_step(k, k.init_state(np.random.default_rng(0)), 0.5, np.random.default_rng(0), epsilon=0)


# Gaussian mixtures

def test_single_component_is_gaussian():
    y = np.array([-1.0, 0.5, 2.0, 3.3])
    ll = mixture_log_likelihood(y, np.array([1.0]), np.array([0.7]), np.array([2.5]))
    assert ll == pytest.approx(np.sum(stats.norm.logpdf(y, 0.7, math.sqrt(2.5))), abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_mixture_label_permutation_invariant(seed):
    rng = np.random.default_rng(seed)
    K = 4
    y = rng.normal(0, 3, 25)
    w = rng.dirichlet(np.ones(K))
    mu = rng.normal(0, 3, K)
    s2 = rng.uniform(0.3, 4, K)
    z = rng.integers(0, K, 25)
    perm = rng.permutation(K)
    inv = np.argsort(perm)
    a = mixture_log_likelihood(y, w, mu, s2)
    b = mixture_log_likelihood(y, w[perm], mu[perm], s2[perm])
    assert a == pytest.approx(b, abs=1e-10)
    ca = complete_log_likelihood(y, MixtureModel(w, mu, s2, z))
    cb = complete_log_likelihood(y, MixtureModel(w[perm], mu[perm], s2[perm], inv[z]))
    assert ca == pytest.approx(cb, abs=1e-10)


def test_power_zero_samples_prior():
    y = load_galaxy().y
    prior = MixturePrior()
    state = initial_mixture(y, 3)
    rng = np.random.default_rng(0)
    mus, counts = [], np.zeros(3)
    for _ in range(4000):
        mixture_power_gibbs_step(y, state, 0.0, rng, prior)
        mus.append(state.means.copy())
        counts += np.bincount(state.z, minlength=3)
    mus = np.array(mus)
    assert abs(mus.var() / prior.mean_var - 1) < 0.1
    assert abs(mus.mean()) < 4 * math.sqrt(prior.mean_var / mus.size)


def test_power_one_recovers_clusters():
    rng = np.random.default_rng(1)
    y = np.concatenate([rng.normal(-5, 0.5, 100), rng.normal(5, 0.5, 100)])
    state = initial_mixture(y, 2)
    for _ in range(200):
        mixture_power_gibbs_step(y, state, 1.0, rng)
    assert np.allclose(np.sort(state.means), [-5, 5], atol=0.3)
    state.validate()


def test_mixture_power_range():
    with pytest.raises(ValueError):
        mixture_power_gibbs_step(np.zeros(3), initial_mixture(np.arange(3.0), 2), 1.5, np.random.default_rng(0))


def test_mixture_pair_cost_and_sides():
    pair = MixturePair(load_galaxy().y, 3, 4)
    assert pair.kernel().cost_per_step == 2
    assert pair.side(1).kernel().cost_per_step == 1
    assert (pair.swapped().K1, pair.swapped().K2) == (4, 3)
    with pytest.raises(ValueError):
        MixturePair(np.zeros(3), 0, 0)


def test_mixture_kernel_phi_is_complete_data_ratio():
    pair = MixturePair(load_galaxy().y, 3, 4)
    k = pair.kernel()
    rng = np.random.default_rng(2)
    s = k.init_state(rng)
    phi = k.advance(s, np.linspace(0, 1, 50), rng)
    assert phi[-1] == pytest.approx(k.log_lik_ratio(s), rel=1e-10)
    s.a.validate()
    s.b.validate()
