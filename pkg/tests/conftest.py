import numpy as np
import pytest

from wdlsm.model import DynamicNetwork, Hyperparams, ModelParams
from wdlsm.simgen import SimConfig, simulate


def random_instance(kind="count", n=6, T=3, p=2, directed=True, seed=0, scale=0.1):
    """Small random (Y, X, params) with moderate rates, not from the model."""
    rng = np.random.default_rng(seed)
    X = scale * rng.standard_normal((T, n, p))
    radii = rng.dirichlet(np.full(n, 5.0))
    beta_in = rng.uniform(0.5, 2.0)
    beta_out = beta_in if not directed else rng.uniform(0.2, 1.5)
    gamma2 = rng.uniform(0.5, 2.0) if kind == "nonneg" else None
    params = ModelParams(beta_in, beta_out, radii, tau2=scale ** 2, sigma2=0.01 * scale ** 2,
                         gamma2=gamma2)
    if kind == "count":
        W = rng.poisson(2.0, size=(T, n, n)).astype(float)
    else:
        W = np.maximum(rng.normal(0.5, 1.5, size=(T, n, n)), 0.0)
    if not directed:
        W = np.triu(W, 1)
        W = W + np.swapaxes(W, 1, 2)
    Y = DynamicNetwork(W, kind=kind, directed=directed)
    return Y, X, params


def full_hyper(params, **kw):
    return Hyperparams(dirichlet_alpha=params.radii.copy(), **kw)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def small_count_sim():
    return simulate(SimConfig(n=12, T=3, n_clusters=3, kind="count", seed=5))


@pytest.fixture(scope="session")
def small_tobit_sim():
    return simulate(SimConfig(n=12, T=3, n_clusters=3, kind="nonneg", seed=6))


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
