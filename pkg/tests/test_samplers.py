import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from evidencepath.models._kernels import gaussian_from_precision, truncated_std_normal_lower
from evidencepath.samplers import (ProposalSpec, gibbs_linear_coefficients, gibbs_noise_variance,
                                   linear_coefficient_conditional, mh_accept_prob,
                                   noise_variance_conditional, sample_truncated_normal)


def test_accept_identical_states():
    assert mh_accept_prob(-3.2, -3.2) == 1.0


def test_accept_ratio_below_one():
    assert mh_accept_prob(np.log(0.25), 0.0) == pytest.approx(0.25)
    assert mh_accept_prob(-np.inf, 0.0) == 0.0


def test_accept_includes_proposal_correction():
    # target ratio 1, q(old|new)/q(new|old) = 0.5
    assert mh_accept_prob(0.0, 0.0, log_q_forward=np.log(2.0), log_q_backward=0.0) == pytest.approx(0.5)


def test_accept_nan_is_error():
    with pytest.raises(ValueError):
        mh_accept_prob(np.nan, 0.0)


@given(a=st.floats(-50, 50), b=st.floats(-50, 50))
def test_detailed_balance(a, b):
    # pi(x) a(x -> y) = pi(y) a(y -> x) for a symmetric proposal, in log space
    lhs = a + np.log(max(mh_accept_prob(b, a), 1e-300))
    rhs = b + np.log(max(mh_accept_prob(a, b), 1e-300))
    if mh_accept_prob(b, a) > 1e-300 and mh_accept_prob(a, b) > 1e-300:
        assert lhs == pytest.approx(rhs, abs=1e-9)


def test_proposal_kinds(rng):
    x = np.zeros(4)
    g = ProposalSpec("gaussian", np.full(4, 0.01)).draw(x, rng)
    u = ProposalSpec("uniform", np.full(4, 0.1)).draw(x, rng)
    assert g.shape == (4,) and np.all(np.abs(u) <= 0.1)
    with pytest.raises(ValueError):
        ProposalSpec("cauchy", np.ones(4)).draw(x, rng)


def test_coefficient_conditional_oracle():
    D1 = np.array([[1.0], [1.0]])
    D2 = np.array([[2.0], [2.0]])
    y = np.array([1.0, 1.0])
    c = linear_coefficient_conditional(D1, D2, y, 1.0, 1.0, np.zeros(1), 0.5)
    assert c.cov[0, 0] == pytest.approx(1 / 6, abs=1e-15)
    assert c.mean[0] == pytest.approx(0.5, abs=1e-15)


def test_coefficient_conditional_endpoints(rng):
    D1 = rng.normal(size=(6, 3))
    D2 = rng.normal(size=(6, 3))
    y = rng.normal(size=6)
    mu0 = np.array([0.1, -0.2, 0.3])
    c0 = linear_coefficient_conditional(D1, D2, y, 2.0, 1.5, mu0, 0.0)
    c0_other = linear_coefficient_conditional(D1, D2 * 100, y, 2.0, 1.5, mu0, 0.0)
    assert np.allclose(c0.mean, c0_other.mean) and np.allclose(c0.cov, c0_other.cov)
    H = D1.T @ D1 + np.eye(3) / 1.5
    assert np.allclose(c0.cov, 2.0 * np.linalg.inv(H))
    cs = [linear_coefficient_conditional(D1, D1, y, 2.0, 1.5, mu0, t) for t in (0.0, 0.4, 1.0)]
    for c in cs[1:]:
        assert np.allclose(c.mean, cs[0].mean, atol=1e-12) and np.allclose(c.cov, cs[0].cov, atol=1e-12)


def _moment_check(draws, mean, cov):
    n = draws.shape[0]
    se = np.sqrt(np.diag(cov) / n)
    assert np.all(np.abs(draws.mean(axis=0) - mean) < 3 * se)
    emp = np.cov(draws.T)
    # standard error of a sample covariance entry: sqrt((S_ii S_jj + S_ij^2) / n)
    d = np.diag(cov)
    se_cov = np.sqrt((np.outer(d, d) + cov ** 2) / n)
    assert np.all(np.abs(emp - cov) < 3 * se_cov)


def test_gibbs_coefficients_moments():
    rng = np.random.default_rng(2024)
    D1 = np.array([[1.0, 0.0], [1.0, 0.5], [1.0, 1.0]])
    D2 = np.array([[1.0, 0.2], [1.0, -0.4], [1.0, 1.5]])
    y = np.array([0.3, 1.1, 2.0])
    mu0 = np.array([0.5, -0.5])
    tau, s2, d2 = 0.35, 0.7, 2.0
    cond = linear_coefficient_conditional(D1, D2, y, s2, d2, mu0, tau)
    draws = gibbs_linear_coefficients(D1, D2, y, s2, d2, mu0, tau, rng, size=100_000)
    _moment_check(draws, cond.mean, cond.cov)


def test_compiled_gaussian_matches_conditional():
    rng = np.random.default_rng(99)
    D1 = np.array([[1.0, 0.0], [1.0, 0.5], [1.0, 1.0]])
    D2 = np.array([[1.0, 0.2], [1.0, -0.4], [1.0, 1.5]])
    y = np.array([0.3, 1.1, 2.0])
    mu0 = np.array([0.5, -0.5])
    tau, s2, d2 = 0.8, 1.3, 0.5
    cond = linear_coefficient_conditional(D1, D2, y, s2, d2, mu0, tau)
    H = tau * D2.T @ D2 + (1 - tau) * D1.T @ D1 + np.eye(2) / d2
    rhs = (tau * D2 + (1 - tau) * D1).T @ y + mu0 / d2
    draws = np.array([gaussian_from_precision(H, rhs, math.sqrt(s2), rng) for _ in range(100_000)])
    _moment_check(draws, cond.mean, cond.cov)


def test_noise_conditional_hand_case():
    c = noise_variance_conditional(np.array([2.0]), np.array([2.0]), np.zeros(1), np.zeros(1), 1.0, 0.3, 2.0, 2.0)
    assert (c.shape, c.rate) == (2.0, 3.0)


def test_noise_conditional_quadrature_oracle():
    # unnormalised density of the precision lam: likelihood x coefficient prior x Gamma prior
    y, theta, mu0, delta2, a, b = 2.0, 0.0, 0.0, 1.0, 2.0, 2.0

    def dens(lam):
        lik = lam ** 0.5 * math.exp(-0.5 * lam * (y - theta) ** 2)
        prior_theta = lam ** 0.5 * math.exp(-0.5 * lam * (theta - mu0) ** 2 / delta2)
        prior_lam = lam ** (a / 2 - 1) * math.exp(-b / 2 * lam)
        return lik * prior_theta * prior_lam

    z = integrate.quad(dens, 0, np.inf)[0]
    m1 = integrate.quad(lambda l: l * dens(l), 0, np.inf)[0] / z
    m2 = integrate.quad(lambda l: l * l * dens(l), 0, np.inf)[0] / z
    c = noise_variance_conditional(np.array([y - theta]), np.array([y - theta]), np.array([theta]),
                                   np.array([mu0]), delta2, 0.5, a, b)
    assert m1 == pytest.approx(c.shape / c.rate, rel=1e-8)
    assert m2 - m1 ** 2 == pytest.approx(c.shape / c.rate ** 2, rel=1e-8)


def test_noise_conditional_zero_residuals_and_endpoint():
    c = noise_variance_conditional(np.zeros(5), np.zeros(5), np.ones(2), np.ones(2), 1.0, 0.5, 0.4, 0.6)
    assert c.shape == pytest.approx(0.5 * (0.4 + 5 + 2)) and c.rate == pytest.approx(0.3)
    r1, r2 = np.full(3, 10.0), np.full(3, 1.0)
    c1 = noise_variance_conditional(r1, r2, np.zeros(1), np.zeros(1), 1.0, 1.0, 1.0, 1.0)
    assert c1.rate == pytest.approx(0.5 * (1.0 + 3.0))


def test_gibbs_noise_variance_draw_mean():
    rng = np.random.default_rng(5)
    draws = gibbs_noise_variance(np.array([2.0]), np.array([2.0]), np.zeros(1), np.zeros(1), 1.0, 0.5,
                                 2.0, 2.0, rng, size=100_000)
    lam = 1.0 / draws
    assert abs(lam.mean() - 2 / 3) < 3 * math.sqrt(2 / 9 / lam.size)


def test_truncated_half_normal_mean():
    rng = np.random.default_rng(1)
    x = sample_truncated_normal(np.zeros(100_000), np.ones(100_000), rng)
    assert np.all(x >= 0)
    assert abs(x.mean() - math.sqrt(2 / math.pi)) < 0.01


def test_truncation_inactive_far_from_boundary(rng):
    x = sample_truncated_normal(np.array([10.0]), np.array([[0.01]]), rng)
    assert 9.0 < x[0] < 11.0


def test_truncated_full_covariance_rejection_matches_filtering():
    rng = np.random.default_rng(3)
    mean = np.array([0.3, 0.6])
    cov = np.array([[1.0, 0.5], [0.5, 1.0]])
    ours = np.array([sample_truncated_normal(mean, cov, rng) for _ in range(20_000)])
    raw = rng.multivariate_normal(mean, cov, 1_000_000)
    kept = raw[np.all(raw >= 0, axis=1)]
    assert np.all(ours >= 0)
    assert np.allclose(ours.mean(axis=0), kept.mean(axis=0), atol=0.03)


def test_truncated_fallback_terminates():
    rng = np.random.default_rng(4)
    # mass of the orthant is tiny, so rejection fails and the Gibbs sweep takes over
    x = sample_truncated_normal(np.array([-8.0, -8.0]), np.array([[1.0, 0.3], [0.3, 1.0]]), rng)
    assert np.all(x >= 0)


def test_compiled_truncated_lower_tail():
    rng = np.random.default_rng(6)
    for a in (-1.0, 0.0, 2.5, 8.0):
        d = np.array([truncated_std_normal_lower(a, rng) for _ in range(20_000)])
        assert np.all(d >= a)
    d = np.array([truncated_std_normal_lower(0.0, rng) for _ in range(100_000)])
    assert abs(d.mean() - math.sqrt(2 / math.pi)) < 0.01
