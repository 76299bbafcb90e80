import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, stats
from scipy.special import gammaln

from evidencepath.benchmarks import RADIATA_PRIOR, BenchmarkSpec, build_pair
from evidencepath.core import Dataset, Method, log_lik_ratio
from evidencepath.estimators import RunConfig, run_neti_diff
from evidencepath.ladders import LadderConfig, LadderKind
from evidencepath.models.linear import (LinearModelPair, linear_log_marginal,
                                        pad_design_matrix_pair, polynomial_pair, radiata_log_marginal)


def four_column_data(n=5, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 4))
    return Dataset(rng.normal(size=n), X, ("x1", "x2", "x3", "x4"))


def test_padding_overlap_pattern():
    data = four_column_data()
    pair = pad_design_matrix_pair(data, ("x1", "x2"), ("x1", "x3", "x4"))
    assert pair.design1.shape == pair.design2.shape == (5, 4)
    assert pair.columns == ("x1", "x2", "x3", "x4")
    X = data.covariates
    assert np.array_equal(pair.design1, np.column_stack([X[:, 0], X[:, 1], 0 * X[:, 2], 0 * X[:, 3]]))
    assert np.array_equal(pair.design2, np.column_stack([X[:, 0], 0 * X[:, 1], X[:, 2], X[:, 3]]))


def test_padding_full_overlap_and_disjoint():
    data = four_column_data()
    same = pad_design_matrix_pair(data, ("x2", "x3"), ("x2", "x3"))
    assert np.array_equal(same.design1, same.design2)
    assert np.all(np.any(same.design1 != 0, axis=0))
    dis = pad_design_matrix_pair(data, ("x1",), ("x4",))
    assert dis.design1.shape == (5, 2)
    assert np.all(dis.design1[:, 1] == 0) and np.all(dis.design2[:, 0] == 0)
    assert np.all(dis.design1[:, 0] != 0) and np.all(dis.design2[:, 1] != 0)


def test_padding_unknown_column():
    with pytest.raises(KeyError, match="x9"):
        pad_design_matrix_pair(four_column_data(), ("x1",), ("x9",))


@given(dead=st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=2))
def test_dead_coordinates_do_not_matter(dead):
    pair = pad_design_matrix_pair(four_column_data(), ("x1", "x2"), ("x1", "x3", "x4"))
    target = pair.target()
    base = np.array([0.3, -0.4, 0.0, 0.0, 1.7])
    moved = base.copy()
    moved[2:4] = dead
    assert target.model1.log_likelihood(moved) == pytest.approx(target.model1.log_likelihood(base), abs=1e-9)


def t_oracle_n1(y, d, a, b, delta2):
    # integrate the precision out numerically after the analytic coefficient integral
    def dens(lam):
        var = (1 + delta2 * d * d) / lam
        return stats.norm.pdf(y, 0, math.sqrt(var)) * stats.gamma.pdf(lam, a / 2, scale=2 / b)
    val = integrate.quad(dens, 0, np.inf, epsabs=0, epsrel=1e-13, limit=400)[0]
    return math.log(val)


@pytest.mark.parametrize("y,d", [(0.0, 1.0), (1.7, 0.4), (-3.0, 2.0)])
def test_linear_marginal_quadrature_oracle(y, d):
    got = linear_log_marginal(np.array([[d]]), np.array([y]), 0.2, 0.2, 1.0)
    assert got == pytest.approx(t_oracle_n1(y, d, 0.2, 0.2, 1.0), abs=1e-8)


def test_determinant_exponent_is_half():
    # with a full determinant instead of its square root the value is off by 0.5*log(2)
    got = linear_log_marginal(np.array([[1.0]]), np.array([0.0]), 0.2, 0.2, 1.0)
    assert got - t_oracle_n1(0.0, 1.0, 0.2, 0.2, 1.0) == pytest.approx(0, abs=1e-8)
    assert abs((got - 0.5 * math.log(2)) - t_oracle_n1(0.0, 1.0, 0.2, 0.2, 1.0)) > 0.3


@pytest.mark.parametrize("order", [0, 1, 3])
def test_conjugate_closed_form_against_quadrature(order):
    rng = np.random.default_rng(order)
    x = rng.uniform(-1, 1, 5)
    y = rng.normal(size=5)
    D = np.column_stack([x ** j for j in range(order + 1)])
    closed = linear_log_marginal(D, y, 0.2, 0.2, 1.0)
    quad = radiata_log_marginal(D, y, np.zeros(order + 1), np.eye(order + 1), 0.1, 0.1, scaled=True)
    assert closed == pytest.approx(quad, abs=1e-8)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_marginal_row_permutation_invariant(seed):
    rng = np.random.default_rng(seed)
    D = rng.normal(size=(8, 3))
    y = rng.normal(size=8)
    perm = rng.permutation(8)
    a = linear_log_marginal(D, y, 0.2, 0.2, 1.0)
    b = linear_log_marginal(D[perm], y[perm], 0.2, 0.2, 1.0)
    assert a == pytest.approx(b, abs=1e-10)


def test_linear_marginal_rejects_bad_hyper():
    with pytest.raises(ValueError):
        linear_log_marginal(np.ones((2, 1)), np.zeros(2), 0.2, 0.2, 0.0)


def test_radiata_value():
    pair = build_pair(BenchmarkSpec("radiata"))
    assert abs(pair.log_bayes_factor() - 8.8571) < 5e-4
    # the quadrature route agrees with the closed form
    for k in (1, 2):
        side = pair.side(k)
        quad = radiata_log_marginal(side.design2, pair.y, side.prior_mean, side.prior_cov,
                                    pair.noise_shape, pair.noise_rate, scaled=True)
        assert quad == pytest.approx(pair.log_marginal(k), abs=1e-7)


def test_radiata_empty_data():
    assert radiata_log_marginal(np.zeros((0, 2)), np.zeros(0), np.zeros(2), np.eye(2), 3.0, 1.0) == 0.0


def test_radiata_degenerate_prior_is_likelihood_at_mean():
    D = np.array([[1.0, 0.5], [1.0, -0.2]])
    y = np.array([1.2, 0.1])
    mu0 = np.array([0.4, 0.9])
    a, b = 3.0, 2.0
    got = radiata_log_marginal(D, y, mu0, 1e-14 * np.eye(2), a, b)
    r = y - D @ mu0
    n = 2
    # Gaussian likelihood at the prior mean with the precision integrated out
    want = (a * math.log(b) - gammaln(a) + gammaln(a + n / 2) - n / 2 * math.log(2 * math.pi)
            - (a + n / 2) * math.log(b + r @ r / 2))
    assert got == pytest.approx(want, abs=1e-8)


def test_fixed_prior_chain_matches_quadrature():
    base = build_pair(BenchmarkSpec("radiata"))
    fixed = base._replace(scaled=False)
    truth = fixed.log_bayes_factor()
    assert abs(truth - base.log_bayes_factor()) > 5e-3
    cfg = RunConfig(Method.NETI_DIFF, 64_000, LadderConfig(LadderKind.SIGMOID, 2, 5.0))
    est = [run_neti_diff(fixed.kernel(), cfg, stream=s)[0].estimate for s in range(4)]
    assert np.mean(est) == pytest.approx(truth, abs=0.08)


def test_gibbs_at_tau_one_posterior_mean(radiocarbon_pair):
    side = radiocarbon_pair.side(1)
    D, y = side.design2, side.y
    S0inv = np.linalg.inv(side.prior_cov)
    post_mean = np.linalg.solve(D.T @ D + S0inv, D.T @ y + S0inv @ side.prior_mean)
    k = side.kernel()
    rng = np.random.default_rng(11)
    state = k.init_state(rng)
    k.advance(state, np.ones(500), rng)
    draws = []
    for _ in range(20_000):
        k.advance(state, np.ones(1), rng)
        draws.append(state.theta.copy())
    draws = np.array(draws)
    # batch means for the Monte Carlo standard error
    batches = draws.reshape(40, -1, draws.shape[1]).mean(axis=1)
    se = batches.std(axis=0, ddof=1) / math.sqrt(40)
    assert np.all(np.abs(draws.mean(axis=0) - post_mean) < 4 * se)


def test_kernel_phi_matches_target(radiocarbon_pair):
    k = radiocarbon_pair.kernel()
    rng = np.random.default_rng(0)
    state = k.init_state(rng)
    phi = k.advance(state, np.array([0.3, 0.6]), rng)
    params = np.concatenate([state.theta, state.sigma2])
    assert phi[-1] == pytest.approx(log_lik_ratio(radiocarbon_pair.target(), params), rel=1e-10)
    assert k.log_lik_ratio(state) == pytest.approx(phi[-1], rel=1e-10)


def test_polynomial_pair_structure():
    x = np.linspace(-1, 1, 7)
    pair = polynomial_pair(x, x ** 2, 1, 3)
    assert pair.columns == ("x^0", "x^1", "x^2", "x^3")
    assert np.all(pair.design1[:, 2:] == 0) and np.all(pair.design2[:, 2] == x ** 2)
    assert pair.side(1).design2.shape == (7, 2)
    assert pair.swapped().log_bayes_factor() == pytest.approx(-pair.log_bayes_factor())


def test_pair_validation():
    with pytest.raises(ValueError):
        LinearModelPair(np.ones((3, 2)), np.ones((3, 1)), np.zeros(3), np.zeros(2), 1, 1)
    with pytest.raises(ValueError):
        LinearModelPair(np.ones((3, 2)), np.ones((3, 2)), np.zeros(3), np.zeros(2), 1, 1,
                        prior_cov=-np.eye(2))


def test_radiata_prior_settings():
    assert RADIATA_PRIOR["scaled"] is True
    assert RADIATA_PRIOR["noise_shape"] == 3.0 and RADIATA_PRIOR["noise_rate"] == 180_000.0
