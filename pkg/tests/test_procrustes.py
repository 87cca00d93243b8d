import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wdlsm.model import log_latent_prior, log_likelihood
from wdlsm.procrustes import align_trajectories, procrustes_align

from conftest import random_instance


def _orthogonal(rng, p):
    Q, R = np.linalg.qr(rng.standard_normal((p, p)))
    return Q * np.sign(np.diag(R))


def test_identity():
    X = np.random.default_rng(0).standard_normal((20, 2))
    np.testing.assert_allclose(procrustes_align(X, X), X, atol=1e-12)


@pytest.mark.parametrize("seed", range(10))
def test_exact_recovery_of_rigid_motion(seed):
    rng = np.random.default_rng(seed)
    target = rng.standard_normal((30, 2))
    moved = target @ _orthogonal(rng, 2) + rng.standard_normal(2)
    np.testing.assert_allclose(procrustes_align(moved, target), target, atol=1e-10)


def test_recovers_reflection_in_three_dimensions():
    rng = np.random.default_rng(5)
    target = rng.standard_normal((15, 3))
    moved = target @ np.diag([1.0, -1.0, 1.0]) @ _orthogonal(rng, 3) - 2.0
    np.testing.assert_allclose(procrustes_align(moved, target), target, atol=1e-10)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 31))
def test_never_increases_distance_to_target(seed):
    rng = np.random.default_rng(seed)
    X, target = rng.standard_normal((2, 12, 2))
    aligned = procrustes_align(X, target)
    assert np.linalg.norm(aligned - target) <= np.linalg.norm(X - target) + 1e-12
    # rigid: pairwise distances preserved
    d0 = np.linalg.norm(X[:, None] - X[None], axis=-1)
    d1 = np.linalg.norm(aligned[:, None] - aligned[None], axis=-1)
    np.testing.assert_allclose(d0, d1, atol=1e-12)


def test_optimal_against_brute_force_angle_grid():
    rng = np.random.default_rng(9)
    X, target = rng.standard_normal((2, 10, 2))
    best = np.inf
    Xc, Tc = X - X.mean(0), target - target.mean(0)
    for theta in np.linspace(0, 2 * math.pi, 20001):
        R = np.array([[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]])
        for F in (np.eye(2), np.diag([1.0, -1.0])):
            best = min(best, np.linalg.norm(Xc @ F @ R - Tc))
    assert np.linalg.norm(procrustes_align(X, target) - target) <= best + 1e-9


def test_stacked_alignment_preserves_likelihood():
    Y, X, params = random_instance("nonneg", n=6, T=4, seed=3)
    target = np.random.default_rng(1).standard_normal(X.shape) * 0.1
    aligned = align_trajectories(X, target)
    assert aligned.shape == X.shape
    assert log_likelihood(Y, aligned, params) == pytest.approx(log_likelihood(Y, X, params), abs=1e-8)


def test_alignment_prior_change_is_gaussian_shift_term():
    # rotations leave the prior unchanged; the translation c changes only the
    # initial-position term, by -(n |c|^2 + 2 c . sum_i R'X_i1) / (2 tau2)
    rng = np.random.default_rng(4)
    T, n, p = 3, 5, 2
    X = rng.standard_normal((T, n, p))
    target = rng.standard_normal((T, n, p)) + 0.7
    aligned = align_trajectories(X, target)
    tau2, sigma2 = 0.8, 0.3
    stacked = X.reshape(-1, p)
    mean_x = stacked.mean(0)
    c = aligned.reshape(-1, p).mean(0)
    # recover the fitted rotation from aligned - c = (X - mean_x) R
    R = np.linalg.lstsq(stacked - mean_x, (aligned - c).reshape(-1, p), rcond=None)[0]
    rotated = X @ R
    assert log_latent_prior(rotated, tau2, sigma2) == pytest.approx(
        log_latent_prior(X, tau2, sigma2), rel=1e-12)
    shift = aligned[0, 0] - rotated[0, 0]
    analytic = -(n * shift @ shift + 2 * shift @ rotated[0].sum(0)) / (2 * tau2)
    assert log_latent_prior(aligned, tau2, sigma2) - log_latent_prior(rotated, tau2, sigma2) == \
        pytest.approx(analytic, rel=1e-10, abs=1e-10)
