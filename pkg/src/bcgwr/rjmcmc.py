"""Per-region variable selection by reversible jump.

Each region carries inclusion indicators ``gamma[s, j]``; the local mean is
``x_i' (gamma_s * beta_s)``.  Indicators are Bernoulli(``psi[j]``) with a
Beta prior on ``psi[j]``.  A sweep runs the usual within-model updates on
the included coefficients, then one birth/death toggle per region:

* birth proposes the new coefficient from its prior ``N(0, sigma2_beta)``,
  so prior and proposal densities cancel and the Jacobian is 1;
* death drops the coefficient (excluded coefficients are not stored; they
  sit at zero);
* the acceptance ratio is likelihood ratio x ``psi / (1 - psi)`` (or its
  inverse) x ``q(delete) / q(add)``, the last being 1 because the covariate
  to toggle is chosen uniformly for both moves.

Finally ``psi[j]`` is drawn from its conjugate Beta full conditional.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bgwr import (BgwrConfig, BgwrState, Counters, LocalModel, PosteriorDraws, StepSizes, _accept,
                   _finish, _run_chain, check_model, initial_state, local_log_likelihood, mh_sweep)
from .errors import ConfigurationError, DataError


def masked_log_likelihood(y, X, beta_s, gamma_s, sigma2_s, weights) -> float:
    """Local log-likelihood with mean ``x_i' (gamma_s * beta_s)``."""
    beta_s = np.asarray(beta_s, dtype=float)
    gamma_s = np.asarray(gamma_s)
    if gamma_s.shape != beta_s.shape:
        raise ValueError(f"gamma {gamma_s.shape} and beta {beta_s.shape} differ in shape")
    return local_log_likelihood(y, X, np.where(gamma_s.astype(bool), beta_s, 0.0), sigma2_s, weights)


@dataclass(frozen=True)
class RjmcmcConfig(BgwrConfig):
    """:class:`BgwrConfig` plus selection settings.

    ``psi_prior`` is the Beta prior on each inclusion probability;
    ``fixed_psi`` pins every ``psi[j]`` instead of sampling it.
    ``moves_per_region`` toggle attempts run per region per sweep.
    """

    psi_prior: tuple = (1.0, 1.0)
    fixed_psi: float | None = None
    init_psi: float = 0.5
    moves_per_region: int = 1

    def __post_init__(self):
        super().__post_init__()
        a, b = self.psi_prior
        if not (a > 0 and b > 0):
            raise ConfigurationError("psi_prior parameters must be positive")
        if self.fixed_psi is not None and not 0 <= self.fixed_psi <= 1:
            raise ConfigurationError("fixed_psi must lie in [0, 1]")
        if not 0 < self.init_psi < 1:
            raise ConfigurationError("init_psi must lie in (0, 1)")
        if self.moves_per_region < 0:
            raise ConfigurationError("moves_per_region must be nonnegative")


@dataclass
class SelectionState:
    base: BgwrState
    gamma: np.ndarray       # (S, p) bool
    psi: np.ndarray         # (p,)

    beta = property(lambda self: self.base.beta)
    sigma2 = property(lambda self: self.base.sigma2)
    sigma2_beta = property(lambda self: self.base.sigma2_beta)
    bandwidth = property(lambda self: self.base.bandwidth)

    def copy(self) -> "SelectionState":
        return SelectionState(self.base.copy(), self.gamma.copy(), self.psi.copy())


@dataclass
class SelectionDraws(PosteriorDraws):
    """Retained reversible-jump draws.

    ``beta`` holds zeros where a coefficient is excluded, so its draw-wise
    mean is the model-averaged coefficient.
    """

    gamma: np.ndarray = field(default=None)     # (M, S, p) int8
    psi: np.ndarray = field(default=None)       # (M, p)


def toggle_move(state: SelectionState, model: LocalModel, coef, proposal, log_u,
                counters: Counters | None = None) -> SelectionState:
    """Birth/death attempt for covariate ``coef[s]`` in every region ``s``.

    ``proposal[s]`` is the prior draw used if the move is a birth and
    ``log_u[s]`` the log-uniform for the accept test.
    """
    S, p = state.gamma.shape
    rows = np.arange(S)
    coef = np.asarray(coef)
    beta = state.base.beta.copy()
    gamma = state.gamma.copy()
    sigma2 = state.base.sigma2
    wc = model.weights(state.base.bandwidth)

    birth = ~gamma[rows, coef]
    new_b = np.where(birth, proposal, 0.0)
    delta = new_b - np.where(birth, 0.0, beta[rows, coef])
    resid = model.residuals(np.where(gamma, beta, 0.0))
    ll = model.region_loglik(resid, sigma2, wc)
    prop_resid = resid - delta[:, None] * model.X.T[coef]
    ll_new = model.region_loglik(prop_resid, sigma2, wc)

    psi = state.psi[coef]
    with np.errstate(divide="ignore"):
        log_odds = np.log(psi) - np.log1p(-psi)
    log_r = ll_new - ll + np.where(birth, log_odds, -log_odds)
    acc, bad = _accept(log_r, log_u, valid=np.isfinite(ll_new))

    beta[rows[acc], coef[acc]] = new_b[acc]
    gamma[rows[acc], coef[acc]] = birth[acc]
    if counters is not None:
        for name, mask in (("birth", birth), ("death", ~birth)):
            counters.proposed[name] = counters.proposed.get(name, 0.0) + float(np.sum(mask))
            counters.accepted[name] = counters.accepted.get(name, 0.0) + float(np.sum(mask & acc))
        counters.rejected_nonfinite += bad
    return SelectionState(BgwrState(beta, state.base.sigma2.copy(), state.base.sigma2_beta,
                                    state.base.bandwidth), gamma, state.psi.copy())


def psi_conditional(gamma, prior=(1.0, 1.0)):
    """Beta parameters of ``psi[j] | gamma``: ``(a + k_j, b + S - k_j)``."""
    gamma = np.asarray(gamma, dtype=bool)
    k = gamma.sum(axis=0)
    return prior[0] + k, prior[1] + gamma.shape[0] - k


def rj_sweep(state: SelectionState, model: LocalModel, config: RjmcmcConfig, rng: np.random.Generator,
             steps: StepSizes | None = None, counters: Counters | None = None) -> SelectionState:
    S, p = state.gamma.shape
    base = mh_sweep(state.base, model, config, rng, steps, counters, gamma=state.gamma)
    state = SelectionState(base, state.gamma, state.psi)
    for _ in range(config.moves_per_region):
        coef = rng.integers(0, p, size=S)
        proposal = rng.standard_normal(S) * np.sqrt(state.base.sigma2_beta)
        log_u = np.log(rng.random(S))
        state = toggle_move(state, model, coef, proposal, log_u, counters)
    if config.fixed_psi is None:
        a, b = psi_conditional(state.gamma, config.psi_prior)
        psi = rng.beta(a, b)
        # guard the open interval against float saturation
        state.psi = np.clip(psi, np.finfo(float).tiny, 1.0 - np.finfo(float).eps)
    return state


class _SelectionStore:
    def allocate(self, out, n):
        out["gamma"] = None
        self.gamma = self.psi = None
        self.n = n

    def store(self, out, m, state):
        if out["gamma"] is None:
            S, p = state.gamma.shape
            out["gamma"] = np.empty((self.n, S, p), dtype=np.int8)
            out["psi"] = np.empty((self.n, p))
        out["gamma"][m] = state.gamma
        out["psi"][m] = state.psi


def initial_selection_state(model: LocalModel, config: RjmcmcConfig) -> SelectionState:
    base = initial_state(model, config)
    p = model.p
    psi = np.full(p, config.init_psi if config.fixed_psi is None else config.fixed_psi, dtype=float)
    return SelectionState(base, np.ones((model.S, p), dtype=bool), psi)


def run_rjmcmc(data, frame, kernel, config: RjmcmcConfig, distances=None, metric: str = "euclidean",
               progress=None) -> SelectionDraws:
    from .geometry import distances as compute_distances

    if data.n == 0:
        raise DataError("no observations")
    if distances is None:
        distances = compute_distances(frame, metric)
    model = LocalModel(data, distances, kernel)
    state = initial_selection_state(model, config)
    check_model(model, frame, state.bandwidth)
    out, rates, _, region_ids = _run_chain(model, state, config, frame, sweep=rj_sweep,
                                           extra=_SelectionStore(), progress=progress)
    if out["gamma"] is None:
        raise ConfigurationError("no draws retained")
    return _finish(out, rates, region_ids, model, config, cls=SelectionDraws,
                   gamma=out["gamma"], psi=out["psi"])


@dataclass(frozen=True)
class InclusionSummary:
    """Inclusion probabilities and coefficient means given inclusion.

    ``conditional_mean`` is NaN where a coefficient was never included;
    ``never_included`` flags those entries.
    """

    inclusion_prob: np.ndarray
    conditional_mean: np.ndarray
    model_averaged_mean: np.ndarray
    never_included: np.ndarray
    region_ids: tuple
    names: tuple


def inclusion_summary(draws: SelectionDraws) -> InclusionSummary:
    g = np.asarray(draws.gamma, dtype=bool)
    if g.shape[0] == 0:
        raise ValueError("no draws")
    counts = g.sum(axis=0)
    prob = counts / g.shape[0]
    sums = np.where(g, draws.beta, 0.0).sum(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        cond = np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)
    return InclusionSummary(prob, cond, sums / g.shape[0], counts == 0,
                            tuple(draws.region_ids), tuple(draws.names))
