import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, stats

from wdlsm.errors import UsageError
from wdlsm.model import (DynamicNetwork, DyadKind, Hyperparams, LatentTrajectories, ModelParams,
                         distance, dirichlet_logpdf, inv_gamma_logpdf, linear_predictor,
                         log_latent_prior, log_likelihood, log_param_prior, poisson_dyad_loglik,
                         tobit_dyad_loglik)

from conftest import full_hyper, random_instance


# ---------------------------------------------------------------- distance

def test_distance_identity_and_triple():
    assert distance([0, 0], [0, 0]) == 0
    assert distance([0, 0], [3, 4]) == pytest.approx(5.0, abs=1e-15)


def test_distance_matches_coordinatewise_oracle(rng):
    for _ in range(20):
        a, b = rng.standard_normal(3), rng.standard_normal(3)
        brute = math.sqrt(sum((x - y) ** 2 for x, y in zip(a, b)))
        assert distance(a, b) == pytest.approx(brute, rel=1e-14)


# ---------------------------------------------------------------- linear predictor

def test_linear_predictor_hand_values():
    assert linear_predictor(0.0, 0.2, 0.7, 3.0, 1.0) == 4.0
    assert linear_predictor(0.25, 0.5, 0.5, 3.0, 1.0) == pytest.approx(2.0, abs=1e-15)


def test_linear_predictor_symmetric_case():
    assert linear_predictor(0.3, 0.4, 0.4, 2.0, 2.0) == linear_predictor(0.3, 0.4, 0.4, 2.0, 2.0)
    # swapping sender and receiver swaps the radii arguments
    assert linear_predictor(0.3, 0.2, 0.4, 1.5, 1.5) == pytest.approx(
        linear_predictor(0.3, 0.4, 0.2, 1.5, 1.5), abs=1e-15)


@given(st.floats(0, 5), st.floats(0.01, 5), st.floats(0.01, 1), st.floats(0.01, 1),
       st.floats(0.01, 5), st.floats(0.01, 5))
def test_linear_predictor_decreasing_in_distance(d, dd, ri, rj, bi, bo):
    assert linear_predictor(d + dd, ri, rj, bi, bo) < linear_predictor(d, ri, rj, bi, bo)


def test_linear_predictor_rejects_bad_inputs():
    with pytest.raises(UsageError):
        linear_predictor(0.1, 0.0, 0.5, 1, 1)
    with pytest.raises(UsageError):
        linear_predictor(-0.1, 0.5, 0.5, 1, 1)


# ---------------------------------------------------------------- poisson

def test_poisson_hand_values():
    assert poisson_dyad_loglik(0, 0.0) == pytest.approx(-1.0, abs=1e-15)
    assert poisson_dyad_loglik(2, math.log(2)) == pytest.approx(
        2 * math.log(2) - 2 - math.log(2), abs=1e-12)
    assert poisson_dyad_loglik(2, math.log(2)) == pytest.approx(-1.30685, abs=1e-5)


def test_poisson_normalizes():
    y = np.arange(0, 200)
    total = np.exp(poisson_dyad_loglik(y, math.log(3.0))).sum()
    assert total == pytest.approx(1.0, abs=1e-10)


def test_poisson_matches_scipy(rng):
    y = rng.poisson(4, 50)
    lam = rng.uniform(0.1, 10, 50)
    np.testing.assert_allclose(poisson_dyad_loglik(y, np.log(lam)), stats.poisson.logpmf(y, lam),
                               rtol=1e-12)


# ---------------------------------------------------------------- tobit

def test_tobit_trivial_values():
    assert tobit_dyad_loglik(0.0, 0.0, 1.0) == pytest.approx(math.log(0.5), abs=1e-15)
    assert tobit_dyad_loglik(1.0, 1.0, 1.0) == pytest.approx(-0.5 * math.log(2 * math.pi), abs=1e-15)
    assert tobit_dyad_loglik(1.0, 1.0, 1.0) == pytest.approx(-0.91894, abs=1e-5)


def test_tobit_far_tail_matches_quadrature():
    value = tobit_dyad_loglik(0.0, 10.0, 1.0)
    assert np.isfinite(value)
    # P(y* <= 0) for mean 10: integrate the standard normal density over (10, inf)
    tail, _ = integrate.quad(lambda x: math.exp(-0.5 * x * x) / math.sqrt(2 * math.pi),
                             10.0, np.inf, epsabs=0, epsrel=1e-12)
    assert value == pytest.approx(math.log(tail), rel=1e-9)


def test_tobit_zero_monotone_in_mean():
    mu = np.linspace(-30, 60, 500)
    vals = tobit_dyad_loglik(np.zeros_like(mu), mu, 2.0)
    assert np.all(np.diff(vals) < 0)
    assert np.all(np.isfinite(vals))


def test_tobit_positive_part_is_normal_logpdf(rng):
    y = rng.uniform(0.1, 5, 30)
    mu = rng.normal(0, 2, 30)
    np.testing.assert_allclose(tobit_dyad_loglik(y, mu, 3.0),
                               stats.norm.logpdf(y, mu, math.sqrt(3.0)), rtol=1e-12)


def test_tobit_rejects_nonpositive_variance():
    with pytest.raises(UsageError):
        tobit_dyad_loglik(1.0, 0.0, 0.0)


# ---------------------------------------------------------------- network and params

def test_network_validation():
    with pytest.raises(UsageError):
        DynamicNetwork(np.array([[[0, -1], [0, 0]]]), kind="count")
    with pytest.raises(UsageError):
        DynamicNetwork(np.array([[[0, 1.5], [0, 0]]]), kind="count")
    with pytest.raises(UsageError):
        DynamicNetwork(np.array([[[0, 1.0], [0, 0]]]), kind="nonneg", directed=False)
    Y = DynamicNetwork(np.array([[[7, 1], [2, 7]]]), kind="count")
    assert Y.weights[0, 0, 0] == 0 and Y.weights[0, 1, 1] == 0
    assert Y.T == 1 and Y.n == 2 and Y.n_dyads() == 2


def test_params_validation():
    with pytest.raises(UsageError):
        ModelParams(1, 1, [0.5, 0.6], 1, 1)
    with pytest.raises(UsageError):
        ModelParams(1, 1, [0.5, 0.5], 0, 1)
    p = ModelParams(1, 1, [0.5, 0.5], 1, 1)
    with pytest.raises(UsageError):
        p.check_kind(DyadKind.NONNEG_REAL)


def test_latent_trajectories_stacking(rng):
    X = rng.standard_normal((3, 4, 2))
    lt = LatentTrajectories(X)
    assert lt.T == 3 and lt.n == 4 and lt.p == 2
    np.testing.assert_array_equal(lt.stacked()[4:8], X[1])


# ---------------------------------------------------------------- log likelihood

def test_loglik_two_actor_hand_evaluation():
    Y = DynamicNetwork(np.array([[[0, 3], [1, 0]]]), kind="count")
    X = np.array([[[0.0, 0.0], [0.1, 0.0]]])
    params = ModelParams(2.0, 0.5, [0.4, 0.6], 1, 1)
    eta01 = 2.0 * (1 - 0.1 / 0.6) + 0.5 * (1 - 0.1 / 0.4)
    eta10 = 2.0 * (1 - 0.1 / 0.4) + 0.5 * (1 - 0.1 / 0.6)
    expected = (3 * eta01 - math.exp(eta01) - math.log(6)) + (eta10 - math.exp(eta10))
    assert log_likelihood(Y, X, params) == pytest.approx(expected, rel=1e-13)


def test_loglik_all_zero_closed_form():
    T, n = 3, 5
    Y = DynamicNetwork(np.zeros((T, n, n)), kind="count")
    X = np.zeros((T, n, 2))
    params = ModelParams(0.7, 0.2, np.full(n, 1 / n), 1, 1)
    lam = math.exp(0.9)
    assert log_likelihood(Y, X, params) == pytest.approx(-T * n * (n - 1) * lam, rel=1e-13)


@pytest.mark.parametrize("kind", ["count", "nonneg"])
@pytest.mark.parametrize("directed", [True, False])
def test_loglik_brute_force(kind, directed):
    Y, X, params = random_instance(kind, n=5, T=2, directed=directed, seed=3)
    total = 0.0
    for t in range(Y.T):
        for i in range(Y.n):
            for j in range(Y.n):
                if i == j or (not directed and j < i):
                    continue
                d = distance(X[t, i], X[t, j])
                eta = linear_predictor(d, params.radii[i], params.radii[j],
                                       params.beta_in, params.beta_out)
                y = Y.weights[t, i, j]
                if kind == "count":
                    total += stats.poisson.logpmf(y, math.exp(eta))
                elif y > 0:
                    total += stats.norm.logpdf(y, eta, math.sqrt(params.gamma2))
                else:
                    total += stats.norm.logcdf(-eta / math.sqrt(params.gamma2))
    assert log_likelihood(Y, X, params) == pytest.approx(total, rel=1e-12)


def _rigid(X, rng):
    theta = rng.uniform(0, 2 * math.pi)
    R = np.array([[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]])
    if rng.random() < 0.5:
        R = R @ np.diag([1.0, -1.0])
    return X @ R + rng.standard_normal(2)


@pytest.mark.parametrize("kind", ["count", "nonneg"])
def test_loglik_rigid_motion_invariance(kind, rng):
    for seed in range(5):
        Y, X, params = random_instance(kind, n=7, T=3, seed=seed)
        assert log_likelihood(Y, _rigid(X, rng), params) == pytest.approx(
            log_likelihood(Y, X, params), abs=1e-8)


def test_loglik_undirected_requires_shared_beta():
    Y, X, params = random_instance("count", directed=False)
    params.beta_out = params.beta_in + 1
    with pytest.raises(UsageError):
        log_likelihood(Y, X, params)


def test_loglik_shape_mismatch():
    Y, X, params = random_instance("count")
    with pytest.raises(UsageError):
        log_likelihood(Y, X[:, :-1], params)


# ---------------------------------------------------------------- latent prior

def test_latent_prior_at_zero():
    T, n, p = 4, 3, 2
    assert log_latent_prior(np.zeros((T, n, p)), 1.0, 1.0) == pytest.approx(
        -(n * p * T / 2) * math.log(2 * math.pi), rel=1e-14)


def test_latent_prior_matches_per_coordinate_oracle(rng):
    X = rng.standard_normal((3, 4, 2))
    tau2, sigma2 = 0.7, 0.2
    expected = stats.norm.logpdf(X[0], 0, math.sqrt(tau2)).sum()
    for t in range(1, 3):
        expected += stats.norm.logpdf(X[t], X[t - 1], math.sqrt(sigma2)).sum()
    assert log_latent_prior(X, tau2, sigma2) == pytest.approx(expected, rel=1e-13)
    # T = 1 is the initial term alone
    assert log_latent_prior(X[:1], tau2, sigma2) == pytest.approx(
        stats.norm.logpdf(X[0], 0, math.sqrt(tau2)).sum(), rel=1e-13)


def test_latent_prior_decomposes_over_time(rng):
    X = rng.standard_normal((5, 3, 2))
    head = log_latent_prior(X[:4], 0.5, 0.3)
    last = stats.norm.logpdf(X[4], X[3], math.sqrt(0.3)).sum()
    assert log_latent_prior(X, 0.5, 0.3) == pytest.approx(head + last, rel=1e-13)


# ---------------------------------------------------------------- parameter prior

def test_inverse_gamma_prior_mean_is_prior_mean():
    h = Hyperparams(tau2_0=2.5)
    shape, scale = h.ig_params(h.tau2_0)
    assert scale / (shape - 1) == pytest.approx(2.5, rel=1e-14)
    assert inv_gamma_logpdf(1.3, shape, scale) == pytest.approx(
        stats.invgamma.logpdf(1.3, shape, scale=scale), rel=1e-12)


def test_dirichlet_logpdf_matches_scipy(rng):
    alpha = rng.uniform(0.1, 3, 5)
    x = rng.dirichlet(np.ones(5))
    assert dirichlet_logpdf(x, alpha) == pytest.approx(stats.dirichlet.logpdf(x, alpha), rel=1e-12)


def test_param_prior_componentwise(rng):
    params = ModelParams(1.3, 0.4, rng.dirichlet(np.ones(4)), 0.2, 0.01, gamma2=1.7)
    hyper = Hyperparams(delta=0.05, tau2_0=0.3, sigma2_0=0.02, gamma2_0=2.0, nu_in=2.0,
                        nu_out=-1.0, xi_in=10.0, xi_out=5.0, dirichlet_alpha=[0.3, 0.2, 0.4, 0.1])
    a = 2.05
    expected = (stats.invgamma.logpdf(0.2, a, scale=1.05 * 0.3)
                + stats.invgamma.logpdf(0.01, a, scale=1.05 * 0.02)
                + stats.invgamma.logpdf(1.7, a, scale=1.05 * 2.0)
                + stats.norm.logpdf(1.3, 2.0, math.sqrt(10.0))
                + stats.norm.logpdf(0.4, -1.0, math.sqrt(5.0))
                + stats.dirichlet.logpdf(params.radii, hyper.dirichlet_alpha))
    assert log_param_prior(params, hyper) == pytest.approx(expected, rel=1e-12)


def test_param_prior_normal_mode_term():
    params = ModelParams(2.0, 2.0, [0.5, 0.5], 1, 1)
    base = full_hyper(params, nu_in=2.0, nu_out=2.0, xi_in=7.0)
    shifted = full_hyper(params, nu_in=2.5, nu_out=2.0, xi_in=7.0)
    # only the beta_in term differs; at the mode it is -0.5 log(2 pi xi)
    diff = log_param_prior(params, base) - log_param_prior(params, shifted)
    assert diff == pytest.approx(0.5 * 0.25 / 7.0, rel=1e-12)
    assert stats.norm.logpdf(2.0, 2.0, math.sqrt(7)) == pytest.approx(-0.5 * math.log(2 * math.pi * 7))


def test_param_prior_rejects_off_simplex():
    params = ModelParams(1, 1, [0.5, 0.5], 1, 1)
    params.radii = np.array([0.5, 0.6])
    with pytest.raises(UsageError):
        log_param_prior(params, Hyperparams(dirichlet_alpha=[0.5, 0.5]))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_loglik_finite_on_random_instances(seed):
    for kind in ("count", "nonneg"):
        Y, X, params = random_instance(kind, n=4, T=2, seed=seed)
        assert np.isfinite(log_likelihood(Y, X, params))
