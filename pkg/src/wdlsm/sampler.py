"""Metropolis-Hastings within Gibbs posterior sampler.

One sweep updates, in order: every latent position ``X[t, i]`` (single-site
random walk), ``tau2`` and ``sigma2`` (conjugate inverse gamma draws), the
radii (Dirichlet proposal), ``beta_in`` and ``beta_out`` (normal random walks;
one shared coefficient for undirected data) and, for non-negative real data,
``gamma2`` (log-normal random walk). After each sweep the stacked ``(T*n, p)``
trajectories are Procrustes-aligned to the initial trajectories.

Proposal scales may be tuned during burn-in toward acceptance rates between
0.23 and 0.45; tuning stops at the end of burn-in.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import _kernels
from .case_control import case_control_dyad_set, draw_subsample
from .dyads import DyadSet
from .errors import NumericalError, UsageError
from .initialization import InitConfig, initialize_all
from .model import (DyadKind, Hyperparams, ModelParams, dirichlet_logpdf,
                    inv_gamma_logpdf, log_latent_prior, log_param_prior,
                    normal_logpdf)
from .procrustes import align_trajectories, procrustes_align

logger = logging.getLogger(__name__)

__all__ = [
    "SamplerConfig",
    "ChainState",
    "PosteriorSamples",
    "PosteriorSummary",
    "sample_tau2",
    "sample_sigma2",
    "position_log_ratio",
    "mh_update_position",
    "position_sweep",
    "mh_update_radii",
    "mh_update_beta",
    "mh_update_gamma2",
    "procrustes_align",
    "init_chain",
    "sweep",
    "run_chain",
    "chain_seeds",
    "posterior_summary",
]

BLOCKS = ("positions", "radii", "beta_in", "beta_out", "gamma2")
ACCEPT_LOW, ACCEPT_HIGH = 0.23, 0.45
_RADIUS_UNDERFLOW = 1e-300


@dataclass
class SamplerConfig:
    """Chain length, proposal scales and options.

    ``position_step=None`` starts the position random walk at 5% of the
    initial latent scale ``sqrt(tau2)``. ``prior_only`` drops the likelihood
    from every acceptance ratio (used to check that each block leaves its
    prior invariant). ``align`` toggles the per-sweep Procrustes step.
    """

    n_iter: int = 20000
    burn_in: int = 10000
    thin: int = 10
    seed: int = 0
    position_step: float | None = None
    beta_step: float = 0.05
    kappa: float = 1e5
    gamma2_logstep: float = 0.05
    use_case_control: bool = False
    case_control_N: int = 20
    refresh_every: int = 1
    adapt: bool = True
    adapt_interval: int = 100
    align: bool = True
    prior_only: bool = False

    def __post_init__(self):
        if self.n_iter < 1 or self.thin < 1:
            raise UsageError("n_iter and thin must be positive")
        if not 0 <= self.burn_in < self.n_iter:
            raise UsageError("burn_in must satisfy 0 <= burn_in < n_iter")
        if not 0 <= self.seed < 2 ** 64:
            raise UsageError("seed must be a 64-bit unsigned integer")
        for name in ("beta_step", "kappa", "gamma2_logstep"):
            if not getattr(self, name) > 0:
                raise UsageError(f"{name} must be positive")
        if self.position_step is not None and not self.position_step > 0:
            raise UsageError("position_step must be positive")
        if self.case_control_N < 1 or self.refresh_every < 1 or self.adapt_interval < 1:
            raise UsageError("case_control_N, refresh_every and adapt_interval must be positive")


@dataclass
class ChainState:
    """Everything one chain owns.

    ``loglik`` caches the (weighted) log-likelihood of the current state over
    ``dyads`` and ``dist`` the matching per-dyad latent distances.
    """

    Y: object
    dyads: DyadSet
    X: np.ndarray
    params: ModelParams
    hyper: Hyperparams
    target: np.ndarray
    rng: np.random.Generator
    position_steps: np.ndarray
    beta_step: float
    kappa: float
    gamma2_logstep: float
    use_likelihood: bool = True
    accept_counts: dict = field(default_factory=lambda: {b: [0, 0] for b in BLOCKS})
    dist: np.ndarray = None
    loglik: float = 0.0
    subsample: object = None

    def __post_init__(self):
        if self.dist is None:
            self.refresh_cache()

    @property
    def directed(self):
        return self.Y.directed

    def refresh_cache(self):
        self.dist = self.dyads.distances(self.X)
        self.loglik = self.dyads.loglik(self.X, self.params, self.dist) if self.use_likelihood else 0.0

    def loglik_at(self, params):
        return self.dyads.loglik(self.X, params, self.dist)

    def log_posterior(self):
        """Unnormalized log posterior of the current state from cached pieces."""
        lp = log_latent_prior(self.X, self.params.tau2, self.params.sigma2)
        lp += log_param_prior(self.params, self.hyper, self.directed)
        if self.use_likelihood:
            lp += self.loglik
        return lp

    def tally(self, block, accepted):
        counts = self.accept_counts[block]
        counts[0] += int(accepted)
        counts[1] += 1

    def rates(self):
        return {b: (a / p if p else float("nan")) for b, (a, p) in self.accept_counts.items()}


def _draw_inv_gamma(shape, scale, rng):
    return scale / rng.gamma(shape)


def sample_tau2(X1, hyper, rng):
    X1 = np.asarray(X1, dtype=np.float64)
    n, p = X1.shape
    shape, scale = hyper.ig_params(hyper.tau2_0)
    return _draw_inv_gamma(shape + 0.5 * n * p, scale + 0.5 * float(np.sum(X1 ** 2)), rng)


def sample_sigma2(X, hyper, rng):
    X = np.asarray(X, dtype=np.float64)
    T, n, p = X.shape
    shape, scale = hyper.ig_params(hyper.sigma2_0)
    if T == 1:
        return _draw_inv_gamma(shape, scale, rng)
    steps = float(np.sum(np.diff(X, axis=0) ** 2))
    return _draw_inv_gamma(shape + 0.5 * n * p * (T - 1), scale + 0.5 * steps, rng)


def _accept(log_ratio, rng):
    if not math.isfinite(log_ratio):
        return False if log_ratio < 0 or math.isnan(log_ratio) else True
    return math.log(rng.random()) < log_ratio


# ---------------------------------------------------------------- positions

def _local_loglik(state, t, a, xa):
    dy = state.dyads
    idx = dy.incident(t, a)
    snd, rcv = dy.snd[idx], dy.rcv[idx]
    other = np.where(snd == a, rcv, snd)
    diff = xa[None, :] - state.X[t, other]
    d = np.sqrt(np.sum(diff * diff, axis=1))
    r = state.params.radii
    eta = state.params.beta_in * (1.0 - d / r[rcv]) + state.params.beta_out * (1.0 - d / r[snd])
    sub = DyadSet(dy.T, dy.n, dy.kind, dy.t[idx], snd, rcv, dy.y[idx], dy.w[idx],
                  dy.logh[idx], None, None)
    return float(np.dot(sub.w, sub.terms(eta, state.params.gamma2)))


def _local_prior(state, t, a, xa):
    X, tau2, sigma2 = state.X, state.params.tau2, state.params.sigma2
    T = X.shape[0]
    if t == 0:
        lp = -0.5 * float(np.sum(xa ** 2)) / tau2
    else:
        lp = -0.5 * float(np.sum((xa - X[t - 1, a]) ** 2)) / sigma2
    if t < T - 1:
        lp -= 0.5 * float(np.sum((X[t + 1, a] - xa) ** 2)) / sigma2
    return lp


def position_log_ratio(state, t, a, proposal):
    """Log acceptance ratio for moving actor ``a`` at time ``t`` to ``proposal``.

    Uses only the dyads touching the actor at that time and the initial or
    transition densities that involve ``X[t, a]``.
    """
    proposal = np.asarray(proposal, dtype=np.float64)
    current = state.X[t, a].copy()
    ratio = _local_prior(state, t, a, proposal) - _local_prior(state, t, a, current)
    if state.use_likelihood:
        ratio += _local_loglik(state, t, a, proposal) - _local_loglik(state, t, a, current)
    return ratio


def mh_update_position(i, t, state, cfg, rng):
    """Single-site random-walk update of ``X[t, i]``; returns ``(state, accepted)``."""
    p = state.X.shape[2]
    proposal = state.X[t, i] + state.position_steps[i] * rng.standard_normal(p)
    accepted = _accept(position_log_ratio(state, t, i, proposal), rng)
    if accepted:
        state.X[t, i] = proposal
    state.tally("positions", accepted)
    return state, accepted


def position_sweep(state, noise, log_u, compiled=True):
    """Update every position once in (t, i) order with pre-drawn randomness.

    Returns the (T, n) array of acceptance flags. The compiled kernel and the
    pure numpy path consume ``noise`` and ``log_u`` identically.
    """
    T, n, _ = state.X.shape
    accepted = np.zeros((T, n), dtype=np.int8)
    prm = state.params
    if compiled:
        dy = state.dyads
        gamma2 = prm.gamma2 if prm.gamma2 is not None else 1.0
        _kernels.position_sweep(state.X, prm.radii, prm.beta_in, prm.beta_out, gamma2,
                                dy.kind_code, prm.tau2, prm.sigma2, dy.snd, dy.rcv, dy.y,
                                dy.w, dy.logh, dy.inc_ptr, dy.inc_idx, state.position_steps,
                                noise, log_u, state.use_likelihood, accepted)
    else:
        for t in range(T):
            for a in range(n):
                proposal = state.X[t, a] + state.position_steps[a] * noise[t, a]
                if log_u[t, a] < position_log_ratio(state, t, a, proposal):
                    state.X[t, a] = proposal
                    accepted[t, a] = 1
    counts = state.accept_counts["positions"]
    counts[0] += int(accepted.sum())
    counts[1] += accepted.size
    state.refresh_cache()
    return accepted


# ---------------------------------------------------------------- parameters

def mh_update_radii(state, cfg, rng):
    """Dirichlet(kappa * r) independence-style proposal on the simplex."""
    r = state.params.radii
    kappa = state.kappa
    proposal = rng.dirichlet(kappa * r)
    if np.any(proposal <= _RADIUS_UNDERFLOW) or not np.all(np.isfinite(proposal)):
        logger.warning("radius proposal underflowed; rejecting")
        state.tally("radii", False)
        return state, False
    proposal = proposal / proposal.sum()
    new = state.params.copy()
    new.radii = proposal
    alpha = state.hyper.dirichlet_alpha
    log_ratio = dirichlet_logpdf(proposal, alpha) - dirichlet_logpdf(r, alpha)
    log_ratio += dirichlet_logpdf(r, kappa * proposal) - dirichlet_logpdf(proposal, kappa * r)
    new_ll = state.loglik
    if state.use_likelihood:
        new_ll = state.loglik_at(new)
        log_ratio += new_ll - state.loglik
    accepted = _accept(log_ratio, rng)
    if accepted:
        state.params = new
        state.loglik = new_ll
    state.tally("radii", accepted)
    return state, accepted


def mh_update_beta(which, state, cfg, rng):
    """Normal random-walk update of ``beta_in`` or ``beta_out``.

    For undirected networks both names refer to one shared coefficient with
    the ``beta_in`` prior.
    """
    if which not in ("in", "out"):
        raise UsageError("which must be 'in' or 'out'")
    hyper = state.hyper
    new = state.params.copy()
    step = state.beta_step * rng.standard_normal()
    if not state.directed:
        new.beta_in = new.beta_out = state.params.beta_in + step
        cur_b, new_b, nu, xi = state.params.beta_in, new.beta_in, hyper.nu_in, hyper.xi_in
        block = "beta_in"
    elif which == "in":
        new.beta_in += step
        cur_b, new_b, nu, xi = state.params.beta_in, new.beta_in, hyper.nu_in, hyper.xi_in
        block = "beta_in"
    else:
        new.beta_out += step
        cur_b, new_b, nu, xi = state.params.beta_out, new.beta_out, hyper.nu_out, hyper.xi_out
        block = "beta_out"
    log_ratio = normal_logpdf(new_b, nu, xi) - normal_logpdf(cur_b, nu, xi)
    new_ll = state.loglik
    if state.use_likelihood:
        new_ll = state.loglik_at(new)
        log_ratio += new_ll - state.loglik
    accepted = _accept(log_ratio, rng)
    if accepted:
        state.params = new
        state.loglik = new_ll
    state.tally(block, accepted)
    return state, accepted


def gamma2_proposal_correction(current, proposal):
    """Log Hastings correction of the log-normal random walk."""
    return math.log(proposal) - math.log(current)


def mh_update_gamma2(state, cfg, rng):
    if state.Y.kind is not DyadKind.NONNEG_REAL:
        raise UsageError("gamma2 exists only for non-negative real networks")
    cur = state.params.gamma2
    prop = math.exp(math.log(cur) + state.gamma2_logstep * rng.standard_normal())
    new = state.params.copy()
    new.gamma2 = prop
    shape, scale = state.hyper.ig_params(state.hyper.gamma2_0)
    log_ratio = inv_gamma_logpdf(prop, shape, scale) - inv_gamma_logpdf(cur, shape, scale)
    log_ratio += gamma2_proposal_correction(cur, prop)
    new_ll = state.loglik
    if state.use_likelihood:
        new_ll = state.loglik_at(new)
        log_ratio += new_ll - state.loglik
    accepted = _accept(log_ratio, rng)
    if accepted:
        state.params = new
        state.loglik = new_ll
    state.tally("gamma2", accepted)
    return state, accepted


# ---------------------------------------------------------------- chain

@dataclass
class PosteriorSamples:
    """Stored post-burn-in draws.

    Scalar parameters and radii are kept at every post-burn-in iteration;
    positions (aligned to the initial trajectories) every ``thin``-th one.
    """

    beta_in: np.ndarray
    beta_out: np.ndarray
    tau2: np.ndarray
    sigma2: np.ndarray
    radii: np.ndarray
    X: np.ndarray
    gamma2: np.ndarray | None = None
    acceptance: dict = field(default_factory=dict)
    kind: DyadKind = DyadKind.COUNT
    directed: bool = True
    labels: list | None = None
    config: dict = field(default_factory=dict)
    target: np.ndarray | None = None

    def __len__(self):
        return self.beta_in.size

    def scalar_names(self):
        names = ["beta_in", "beta_out", "tau2", "sigma2"]
        if self.gamma2 is not None:
            names.append("gamma2")
        return names

    def scalars(self):
        return {name: getattr(self, name) for name in self.scalar_names()}

    def posterior_mean_positions(self):
        return self.X.mean(axis=0)

    def posterior_mean_params(self):
        r = self.radii.mean(axis=0)
        return ModelParams(
            beta_in=float(self.beta_in.mean()), beta_out=float(self.beta_out.mean()),
            radii=r / r.sum(), tau2=float(self.tau2.mean()), sigma2=float(self.sigma2.mean()),
            gamma2=None if self.gamma2 is None else float(self.gamma2.mean()))


def chain_seeds(seed, n_chains):
    """Independent 64-bit seeds for parallel chains derived from one seed."""
    children = np.random.SeedSequence(seed).spawn(n_chains)
    return [int(c.generate_state(1, dtype=np.uint64)[0]) for c in children]


def init_chain(Y, cfg, init_cfg=None, hyper=None, init=None, rng=None):
    """Build the initial :class:`ChainState`.

    ``init`` may override ``"X"`` and/or ``"params"`` after the default
    initialization pipeline has run.
    """
    X, params, hyper = initialize_all(Y, init_cfg, hyper)
    init = init or {}
    if "X" in init:
        X = np.array(init["X"], dtype=np.float64)
    if "params" in init:
        params = init["params"].copy()
    if "hyper" in init:
        hyper = init["hyper"]
    params.check_kind(Y.kind)
    rng = rng if rng is not None else np.random.default_rng(cfg.seed)
    subsample = None
    if cfg.use_case_control:
        subsample = draw_subsample(Y, cfg.case_control_N, rng, cfg.refresh_every)
        dyads = case_control_dyad_set(Y, subsample)
    else:
        dyads = DyadSet.full(Y)
    step = cfg.position_step
    if step is None:
        step = 0.05 * math.sqrt(max(float(np.mean(X[0] ** 2)), 1e-12))
    return ChainState(Y=Y, dyads=dyads, X=X, params=params, hyper=hyper,
                      target=X.copy(), rng=rng,
                      position_steps=np.full(Y.n, float(step)),
                      beta_step=cfg.beta_step, kappa=cfg.kappa,
                      gamma2_logstep=cfg.gamma2_logstep,
                      use_likelihood=not cfg.prior_only, subsample=subsample)


def sweep(state, cfg):
    """One full systematic-scan iteration followed by Procrustes alignment."""
    rng = state.rng
    T, n, p = state.X.shape
    noise = rng.standard_normal((T, n, p))
    log_u = np.log(rng.random((T, n)))
    accepted = position_sweep(state, noise, log_u)
    state.params.tau2 = sample_tau2(state.X[0], state.hyper, rng)
    state.params.sigma2 = sample_sigma2(state.X, state.hyper, rng)
    mh_update_radii(state, cfg, rng)
    mh_update_beta("in", state, cfg, rng)
    if state.directed:
        mh_update_beta("out", state, cfg, rng)
    if state.Y.kind is DyadKind.NONNEG_REAL:
        mh_update_gamma2(state, cfg, rng)
    if cfg.align:
        state.X = align_trajectories(state.X, state.target)
        state.refresh_cache()
    return accepted


def _scale_factor(rate):
    if rate < ACCEPT_LOW:
        return max(0.5, rate / ACCEPT_LOW)
    if rate > ACCEPT_HIGH:
        return min(2.0, rate / ACCEPT_HIGH)
    return 1.0


class _Tuner:
    """Burn-in adaptation of proposal scales from windowed acceptance rates."""

    def __init__(self, state):
        self.pos_accepts = np.zeros(state.X.shape[1])
        self.pos_tries = 0
        self.snapshot = {b: list(c) for b, c in state.accept_counts.items()}

    def record(self, accepted):
        self.pos_accepts += accepted.sum(axis=0)
        self.pos_tries += accepted.shape[0]

    def _window_rate(self, state, block):
        a, p = state.accept_counts[block]
        a0, p0 = self.snapshot[block]
        return (a - a0) / (p - p0) if p > p0 else None

    def adapt(self, state):
        if self.pos_tries:
            factors = np.array([_scale_factor(r) for r in self.pos_accepts / self.pos_tries])
            state.position_steps *= factors
        rate = self._window_rate(state, "radii")
        if rate is not None:
            state.kappa /= _scale_factor(rate)
        rate = self._window_rate(state, "beta_in")
        rate_out = self._window_rate(state, "beta_out")
        rates = [x for x in (rate, rate_out) if x is not None]
        if rates:
            state.beta_step *= _scale_factor(min(rates))
        rate = self._window_rate(state, "gamma2")
        if rate is not None:
            state.gamma2_logstep *= _scale_factor(rate)
        self.pos_accepts[:] = 0
        self.pos_tries = 0
        self.snapshot = {b: list(c) for b, c in state.accept_counts.items()}


def _check_finite(state, it):
    lp = state.log_posterior()
    if not math.isfinite(lp) or not np.all(np.isfinite(state.X)):
        dump = {"iteration": it, "params": asdict(state.params), "loglik": state.loglik,
                "log_posterior": lp, "position_steps": state.position_steps.tolist()}
        err = NumericalError(f"non-finite log posterior at iteration {it}: {dump}")
        err.state = dump
        raise err


def run_chain(Y, cfg, init_cfg=None, hyper=None, init=None, progress=None):
    """Run one chain and return its post-burn-in draws.

    The chain is a deterministic function of ``Y``, the configurations and
    ``cfg.seed``. ``progress`` is an optional callable receiving the
    iteration number after each sweep.
    """
    state = init_chain(Y, cfg, init_cfg, hyper, init)
    n_keep = cfg.n_iter - cfg.burn_in
    n_pos = n_keep // cfg.thin
    T, n, p = state.X.shape
    draws = {name: np.empty(n_keep) for name in ("beta_in", "beta_out", "tau2", "sigma2")}
    gamma2 = np.empty(n_keep) if Y.kind is DyadKind.NONNEG_REAL else None
    radii = np.empty((n_keep, n))
    X_draws = np.empty((n_pos, T, n, p))
    tuner = _Tuner(state) if cfg.adapt else None
    for it in range(cfg.n_iter):
        if cfg.use_case_control and it > 0 and it % cfg.refresh_every == 0:
            state.subsample = state.subsample.redraw(state.rng)
            state.dyads = case_control_dyad_set(Y, state.subsample)
            state.refresh_cache()
        accepted = sweep(state, cfg)
        if it < cfg.burn_in:
            if tuner is not None:
                tuner.record(accepted)
                if (it + 1) % cfg.adapt_interval == 0:
                    tuner.adapt(state)
            if it + 1 == cfg.burn_in:
                state.accept_counts = {b: [0, 0] for b in BLOCKS}
                _check_finite(state, it)
        else:
            k = it - cfg.burn_in
            prm = state.params
            draws["beta_in"][k] = prm.beta_in
            draws["beta_out"][k] = prm.beta_out
            draws["tau2"][k] = prm.tau2
            draws["sigma2"][k] = prm.sigma2
            radii[k] = prm.radii
            if gamma2 is not None:
                gamma2[k] = prm.gamma2
            if (k + 1) % cfg.thin == 0:
                X_draws[(k + 1) // cfg.thin - 1] = state.X
        if it % 100 == 99:
            _check_finite(state, it)
        if progress is not None:
            progress(it)
    rates = {b: a / p for b, (a, p) in state.accept_counts.items() if p}
    return PosteriorSamples(
        beta_in=draws["beta_in"], beta_out=draws["beta_out"], tau2=draws["tau2"],
        sigma2=draws["sigma2"], radii=radii, X=X_draws, gamma2=gamma2,
        acceptance=rates, kind=Y.kind, directed=Y.directed, labels=list(Y.labels),
        config=asdict(cfg), target=state.target)


@dataclass
class PosteriorSummary:
    """Posterior means, standard deviations and central 95% intervals."""

    scalars: dict
    radii_mean: np.ndarray
    radii_sd: np.ndarray
    radii_interval: np.ndarray
    positions_mean: np.ndarray
    acceptance: dict


def _interval(draws, axis=0):
    lo = np.quantile(draws, 0.025, axis=axis, method="lower")
    hi = np.quantile(draws, 0.975, axis=axis, method="higher")
    return lo, hi


def posterior_summary(samples):
    if len(samples) == 0:
        raise UsageError("no posterior draws to summarize")
    scalars = {}
    for name, draws in samples.scalars().items():
        lo, hi = _interval(draws)
        scalars[name] = {"mean": float(np.mean(draws)), "sd": float(np.std(draws)),
                         "lower": float(lo), "upper": float(hi)}
    lo, hi = _interval(samples.radii)
    positions = samples.posterior_mean_positions() if samples.X.shape[0] else None
    return PosteriorSummary(scalars=scalars, radii_mean=samples.radii.mean(axis=0),
                            radii_sd=samples.radii.std(axis=0),
                            radii_interval=np.stack([lo, hi], axis=1),
                            positions_mean=positions, acceptance=dict(samples.acceptance))
