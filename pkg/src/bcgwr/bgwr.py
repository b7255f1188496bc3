"""Bayesian geographically weighted regression sampled by Metropolis-Hastings.

Each region ``s`` has its own coefficients ``beta[s]`` and error variance
``sigma2[s]``; its likelihood uses every observation, down-weighted by the
kernel of the distance to ``s``.  Weights scale precision, so observation
``i`` enters region ``s`` as ``N(x_i' beta_s, sigma2_s / w_i(s))``.  The
multivariate normal with diagonal covariance factorises into univariate
terms, which is what makes every block update below a handful of array
operations over all regions at once.

Sweep structure (one call to :func:`mh_sweep`):

1. for each coefficient ``j``: random-walk proposal for ``beta[:, j]``,
   accepted region by region;
2. log-scale random walk for ``sigma2[:]``, region by region;
3. log-scale random walk for the shared ``sigma2_beta``;
4. reflected uniform random walk for the shared bandwidth ``b``, whose
   ratio multiplies the likelihood of every region.

Randomness for sweep ``t`` comes from a Philox stream keyed by
``(seed, t)``; row ``s`` of every per-region draw belongs to region ``s``.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DataError
from .kernels import KernelSpec, observation_distances

log = logging.getLogger(__name__)

LOG2PI = float(np.log(2.0 * np.pi))

BLOCKS = ("beta", "sigma2", "sigma2_beta", "bandwidth")


# ----------------------------------------------------------------------------
# likelihood
# ----------------------------------------------------------------------------

def local_log_likelihood(y, X, beta_s, sigma2_s, weights) -> float:
    """Weighted local log-likelihood of one focal region.

    ``sum_i log N(y_i | x_i' beta_s, sigma2_s / w_i)`` over observations with
    ``w_i > 0``; zero-weight observations contribute nothing.
    """
    y = np.asarray(y, dtype=float)
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    beta_s = np.asarray(beta_s, dtype=float)
    w = np.asarray(weights, dtype=float)
    if y.ndim != 1 or X.shape[0] != y.shape[0] or w.shape != y.shape or beta_s.shape != (X.shape[1],):
        raise ValueError(f"shape mismatch: y{y.shape}, X{X.shape}, beta{beta_s.shape}, w{w.shape}")
    if not sigma2_s > 0:
        raise ValueError(f"sigma2 must be positive, got {sigma2_s}")
    if np.any(w < 0):
        raise ValueError("weights must be nonnegative")
    pos = w > 0
    r = y[pos] - X[pos] @ beta_s
    wp = w[pos]
    return float(np.sum(-0.5 * LOG2PI - 0.5 * np.log(sigma2_s) + 0.5 * np.log(wp)
                        - 0.5 * wp * r * r / sigma2_s))


@dataclass(frozen=True)
class WeightCache:
    """Kernel weights at one bandwidth plus the sums the likelihood needs."""

    bandwidth: float
    W: np.ndarray           # (S, n)
    npos: np.ndarray        # (S,) count of positive weights
    sum_logw: np.ndarray    # (S,) sum of log w over positive weights


class LocalModel:
    """Data, observation distances and kernel bound together.

    Parameters
    ----------
    data : RegressionData
    distances : DistanceMatrix or (S, S) array
    kernel : KernelSpec
    """

    def __init__(self, data, distances, kernel: KernelSpec):
        self.data = data
        self.y = data.y
        self.X = data.X
        self.kernel = kernel
        self.obs_dist = observation_distances(distances, data.obs_region)
        self.S = self.obs_dist.shape[0]
        self.n, self.p = self.X.shape
        self._cache: list[WeightCache] = []

    def weights(self, b: float) -> WeightCache:
        for c in self._cache:
            if c.bandwidth == b:
                return c
        W = self.kernel(self.obs_dist, b)
        pos = W > 0
        with np.errstate(divide="ignore"):
            logw = np.where(pos, np.log(np.where(pos, W, 1.0)), 0.0)
        c = WeightCache(b, W, pos.sum(axis=1), logw.sum(axis=1))
        # current and proposed bandwidth
        self._cache = [c] + self._cache[:1]
        return c

    def residuals(self, beta) -> np.ndarray:
        """(S, n) residual matrix ``y_i - x_i' beta_s``."""
        return self.y[None, :] - beta @ self.X.T

    def region_loglik(self, resid, sigma2, wc: WeightCache) -> np.ndarray:
        """Local log-likelihood of every region, shape (S,)."""
        wssr = np.einsum("sn,sn->s", wc.W, resid * resid)
        return (-0.5 * wc.npos * (LOG2PI + np.log(sigma2)) + 0.5 * wc.sum_logw
                - 0.5 * wssr / sigma2)

    def total_loglik(self, beta, sigma2, b) -> float:
        wc = self.weights(b)
        return float(self.region_loglik(self.residuals(beta), sigma2, wc).sum())

    def empty_regions(self, b) -> np.ndarray:
        """Indices of focal regions whose weights are all zero at ``b``."""
        return np.flatnonzero(self.weights(b).npos == 0)


# ----------------------------------------------------------------------------
# configuration and state
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class BgwrConfig:
    """Sampler settings.

    ``sigma2_prior`` and ``sigma2_beta_prior`` are inverse-gamma
    ``(shape, rate)`` pairs.  Step sizes are starting values; when
    ``adapt`` is on they are tuned toward 20-50% acceptance during the
    first ``adapt_sweeps`` sweeps (default: half the burn-in) and frozen
    afterwards.  The ``update_*`` switches hold a block at its initial
    value, which is how the closed-form oracles in the test-suite pin
    nuisance parameters.
    """

    n_iter: int = 10_000
    burn_in: int = 2_000
    thin: int = 1
    sigma2_prior: tuple = (1.0, 1.0)
    sigma2_beta_prior: tuple = (1.0, 1.0)
    beta_step: float = 0.1
    sigma2_step: float = 0.3
    sigma2_beta_step: float = 0.3
    bandwidth_step: float | None = None
    adapt: bool = True
    adapt_sweeps: int | None = None
    adapt_interval: int = 50
    seed: int = 0
    init_beta: np.ndarray | None = None
    init_sigma2: float | None = None
    init_sigma2_beta: float | None = None
    init_bandwidth: float | None = None
    update_sigma2: bool = True
    update_sigma2_beta: bool = True
    update_bandwidth: bool = True

    def __post_init__(self):
        if self.n_iter <= 0:
            raise ConfigurationError("n_iter must be positive")
        if not 0 <= self.burn_in < self.n_iter:
            raise ConfigurationError("burn_in must satisfy 0 <= burn_in < n_iter")
        if self.thin < 1:
            raise ConfigurationError("thin must be >= 1")
        for name in ("sigma2_prior", "sigma2_beta_prior"):
            a, b = getattr(self, name)
            if not (a > 0 and b > 0):
                raise ConfigurationError(f"{name} shape and rate must be positive")
        for name in ("beta_step", "sigma2_step", "sigma2_beta_step"):
            if getattr(self, name) < 0:
                raise ConfigurationError(f"{name} must be nonnegative")
        if self.bandwidth_step is not None and self.bandwidth_step < 0:
            raise ConfigurationError("bandwidth_step must be nonnegative")

    @property
    def n_draws(self) -> int:
        return (self.n_iter - self.burn_in) // self.thin

    @property
    def n_adapt(self) -> int:
        if not self.adapt:
            return 0
        n = self.burn_in // 2 if self.adapt_sweeps is None else self.adapt_sweeps
        return min(n, self.burn_in)


@dataclass
class BgwrState:
    beta: np.ndarray          # (S, p)
    sigma2: np.ndarray        # (S,)
    sigma2_beta: float
    bandwidth: float

    def copy(self) -> "BgwrState":
        return BgwrState(self.beta.copy(), self.sigma2.copy(), float(self.sigma2_beta), float(self.bandwidth))


@dataclass
class StepSizes:
    beta: np.ndarray          # (S, p)
    sigma2: np.ndarray        # (S,)
    sigma2_beta: float
    bandwidth: float

    @classmethod
    def from_config(cls, config: BgwrConfig, S: int, p: int, upper: float) -> "StepSizes":
        bstep = upper / 10.0 if config.bandwidth_step is None else config.bandwidth_step
        return cls(np.full((S, p), float(config.beta_step)), np.full(S, float(config.sigma2_step)),
                   float(config.sigma2_beta_step), float(bstep))


@dataclass
class Counters:
    """Accepted / proposed tallies per block (per element for regional blocks)."""

    accepted: dict = field(default_factory=dict)
    proposed: dict = field(default_factory=dict)
    rejected_nonfinite: int = 0

    @classmethod
    def zeros(cls, S: int, p: int) -> "Counters":
        shapes = {"beta": (S, p), "sigma2": (S,), "sigma2_beta": (), "bandwidth": ()}
        return cls({k: np.zeros(v) for k, v in shapes.items()}, {k: np.zeros(v) for k, v in shapes.items()})

    def rates(self) -> dict:
        out = {}
        for k in self.accepted:
            prop = np.sum(self.proposed[k])
            out[k] = float(np.sum(self.accepted[k]) / prop) if prop > 0 else float("nan")
        return out


# ----------------------------------------------------------------------------
# sweep
# ----------------------------------------------------------------------------

def sweep_rng(seed: int, iteration: int, stream: int = 0) -> np.random.Generator:
    """Counter-based generator dedicated to one sweep."""
    return np.random.Generator(np.random.Philox(key=int(seed), counter=[0, int(iteration), int(stream), 0]))


def _accept(log_ratio, log_u, valid=None):
    """Metropolis test; entries with ``valid`` False (default: non-finite ratio) are rejected.

    Returns the acceptance mask and the number of invalid proposals.
    """
    log_ratio = np.asarray(log_ratio, dtype=float)
    ok = np.isfinite(log_ratio) if valid is None else (np.asarray(valid) & ~np.isnan(log_ratio))
    with np.errstate(invalid="ignore"):
        return ok & (log_u < np.where(ok, log_ratio, -np.inf)), int(np.sum(~ok))


def _reflect(b, upper):
    while b < 0 or b > upper:
        b = -b if b < 0 else 2.0 * upper - b
    return b


def mh_sweep(state: BgwrState, model: LocalModel, config: BgwrConfig, rng: np.random.Generator,
             steps: StepSizes | None = None, counters: Counters | None = None,
             gamma: np.ndarray | None = None) -> BgwrState:
    """One full Metropolis-Hastings sweep; returns a new state.

    ``gamma`` (S, p) optionally masks coefficients out of the model: masked
    entries are held at zero, skipped by the beta updates and left out of
    the ``sigma2_beta`` update.
    """
    S, p = state.beta.shape
    upper = model.kernel.upper
    if steps is None:
        steps = StepSizes.from_config(config, S, p, upper)
    if counters is None:
        counters = Counters.zeros(S, p)
    a1, a2 = config.sigma2_prior
    a_b, b_b = config.sigma2_beta_prior

    z = rng.standard_normal((S, p + 1))
    log_u = np.log(rng.random((S, p + 1)))
    g_z = rng.standard_normal()
    g_lu = np.log(rng.random(2))
    g_bw = rng.random()

    beta = state.beta.copy()
    sigma2 = state.sigma2.copy()
    s2b = float(state.sigma2_beta)
    b = float(state.bandwidth)
    included = np.ones((S, p), dtype=bool) if gamma is None else np.asarray(gamma, dtype=bool)

    wc = model.weights(b)
    resid = model.residuals(beta)
    ll = model.region_loglik(resid, sigma2, wc)

    # coefficients, one column at a time across all regions
    for j in range(p):
        active = included[:, j]
        delta = np.where(active, steps.beta[:, j] * z[:, j], 0.0)
        prop_resid = resid - delta[:, None] * model.X[:, j][None, :]
        ll_new = model.region_loglik(prop_resid, sigma2, wc)
        bj_new = beta[:, j] + delta
        log_r = ll_new - ll - 0.5 * (bj_new ** 2 - beta[:, j] ** 2) / s2b
        acc, bad = _accept(log_r, log_u[:, j])
        acc &= active
        counters.rejected_nonfinite += int(np.sum(~np.isfinite(log_r) & active))
        counters.proposed["beta"][:, j] += active
        counters.accepted["beta"][:, j] += acc
        beta[acc, j] = bj_new[acc]
        resid[acc] = prop_resid[acc]
        ll = np.where(acc, ll_new, ll)

    # error variances, random walk on log sigma2
    if config.update_sigma2:
        s2_new = sigma2 * np.exp(steps.sigma2 * z[:, p])
        ll_new = model.region_loglik(resid, s2_new, wc)
        log_r = (ll_new - ll) - a1 * (np.log(s2_new) - np.log(sigma2)) - a2 * (1.0 / s2_new - 1.0 / sigma2)
        acc, bad = _accept(log_r, log_u[:, p])
        counters.rejected_nonfinite += bad
        counters.proposed["sigma2"] += 1
        counters.accepted["sigma2"] += acc
        sigma2 = np.where(acc, s2_new, sigma2)
        ll = np.where(acc, ll_new, ll)

    # shared coefficient variance
    if config.update_sigma2_beta:
        k = int(included.sum())
        ssq = float(np.sum(beta[included] ** 2))
        s2b_new = s2b * np.exp(steps.sigma2_beta * g_z)

        def log_target(v):
            return -0.5 * k * np.log(v) - 0.5 * ssq / v - a_b * np.log(v) - b_b / v

        log_r = log_target(s2b_new) - log_target(s2b)
        acc, bad = _accept(np.array([log_r]), np.array([g_lu[0]]))
        counters.rejected_nonfinite += bad
        counters.proposed["sigma2_beta"] += 1
        if acc[0]:
            counters.accepted["sigma2_beta"] += 1
            s2b = float(s2b_new)

    # shared bandwidth; every region's likelihood moves with it
    if config.update_bandwidth:
        b_new = _reflect(b + steps.bandwidth * (2.0 * g_bw - 1.0), upper)
        counters.proposed["bandwidth"] += 1
        if b_new > 0:
            wc_new = model.weights(b_new)
            if np.all(wc_new.npos > 0):
                ll_new = model.region_loglik(resid, sigma2, wc_new)
                log_r = float(np.sum(ll_new) - np.sum(ll))
                acc, bad = _accept(np.array([log_r]), np.array([g_lu[1]]))
                counters.rejected_nonfinite += bad
                if acc[0]:
                    counters.accepted["bandwidth"] += 1
                    b = b_new

    return BgwrState(beta, sigma2, s2b, b)


def _adapt(steps: StepSizes, acc: Counters, lo=0.2, hi=0.5, shrink=0.7, grow=1.4):
    def scale(rate):
        return np.where(rate < lo, shrink, np.where(rate > hi, grow, 1.0))

    with np.errstate(invalid="ignore", divide="ignore"):
        rb = np.where(acc.proposed["beta"] > 0, acc.accepted["beta"] / np.maximum(acc.proposed["beta"], 1), 0.35)
        steps.beta *= scale(rb)
        rs = np.where(acc.proposed["sigma2"] > 0, acc.accepted["sigma2"] / np.maximum(acc.proposed["sigma2"], 1), 0.35)
        steps.sigma2 *= scale(rs)
        for name in ("sigma2_beta", "bandwidth"):
            prop = float(acc.proposed[name])
            if prop > 0:
                setattr(steps, name, float(getattr(steps, name) * scale(float(acc.accepted[name]) / prop)))


# ----------------------------------------------------------------------------
# driver
# ----------------------------------------------------------------------------

@dataclass
class PosteriorDraws:
    """Retained sweeps of a BGWR chain.

    Arrays are indexed ``[draw, region, coefficient]``.  ``iterations``
    records the sweep index each draw came from.
    """

    beta: np.ndarray
    sigma2: np.ndarray
    sigma2_beta: np.ndarray
    bandwidth: np.ndarray
    iterations: np.ndarray
    region_ids: tuple
    names: tuple
    acceptance: dict = field(default_factory=dict)
    config: BgwrConfig | None = None
    kernel: KernelSpec | None = None

    @property
    def n_draws(self) -> int:
        return self.beta.shape[0]

    def state(self, m: int) -> BgwrState:
        return BgwrState(self.beta[m].copy(), self.sigma2[m].copy(), float(self.sigma2_beta[m]),
                         float(self.bandwidth[m]))

    def region_index(self, region) -> int:
        if isinstance(region, (int, np.integer)) and not isinstance(region, bool):
            if not 0 <= region < len(self.region_ids):
                raise KeyError(f"unknown region index {region}")
            return int(region)
        try:
            return self.region_ids.index(str(region))
        except ValueError:
            raise KeyError(f"unknown region {region!r}") from None

    def coefficient_index(self, coef) -> int:
        if isinstance(coef, (int, np.integer)):
            if not 0 <= coef < len(self.names):
                raise KeyError(f"unknown coefficient index {coef}")
            return int(coef)
        try:
            return self.names.index(coef)
        except ValueError:
            raise KeyError(f"unknown coefficient {coef!r}") from None


def initial_state(model: LocalModel, config: BgwrConfig) -> BgwrState:
    """Start from a global least-squares fit, as every region's first guess."""
    S, p = model.S, model.p
    if config.init_beta is not None:
        beta = np.broadcast_to(np.asarray(config.init_beta, dtype=float), (S, p)).copy()
    else:
        coef, *_ = np.linalg.lstsq(model.X, model.y, rcond=None)
        beta = np.tile(coef, (S, 1))
    resid = model.y - model.X @ beta[0]
    s2 = config.init_sigma2
    if s2 is None:
        s2 = max(float(np.mean(resid ** 2)), 1e-6)
    s2b = config.init_sigma2_beta
    if s2b is None:
        s2b = float(np.mean(beta ** 2)) + 1.0
    b = config.init_bandwidth
    if b is None:
        b = model.kernel.upper / 2.0
    if not 0 < b <= model.kernel.upper:
        raise ConfigurationError(f"initial bandwidth {b} outside (0, {model.kernel.upper}]")
    return BgwrState(beta, np.full(S, float(s2)), float(s2b), float(b))


def check_model(model: LocalModel, frame, b: float) -> None:
    """Validate a model before sampling; raises on unusable configurations."""
    if model.n == 0:
        raise DataError("no observations")
    if model.S == 0:
        raise DataError("no regions")
    if np.any(model.data.obs_region >= model.S) or np.any(model.data.obs_region < 0):
        raise DataError("observation region index outside the frame")
    empty = model.empty_regions(b)
    if empty.size:
        names = [frame.region_ids[i] for i in empty] if frame is not None else list(empty)
        raise DataError(f"all weights are zero for region(s) {names} at bandwidth {b}; "
                        f"increase the bandwidth or use a kernel without compact support")
    groups = getattr(model.data, "categorical_groups", ())
    if groups:
        W = model.weights(b).W
        for name, cols in groups:
            support = W @ (model.X[:, cols] != 0)   # (S, levels)
            for s, c in zip(*np.nonzero(support < 1e-6)):
                rid = frame.region_ids[s] if frame is not None else s
                warnings.warn(f"level {model.data.names[cols[c]]!r} of {name!r} is absent from "
                              f"the neighbourhood of region {rid!r}", stacklevel=3)


def run_bgwr(data, frame, kernel: KernelSpec, config: BgwrConfig, distances=None,
             metric: str = "euclidean", progress=None) -> PosteriorDraws:
    """Run burn-in plus retained sweeps and return the retained draws."""
    from .geometry import distances as compute_distances

    if data.n == 0:
        raise DataError("no observations")
    if distances is None:
        distances = compute_distances(frame, metric)
    model = LocalModel(data, distances, kernel)
    state = initial_state(model, config)
    check_model(model, frame, state.bandwidth)
    out, rates, _, region_ids = _run_chain(model, state, config, frame, progress=progress)
    return _finish(out, rates, region_ids, model, config)


def _run_chain(model, state, config, frame, sweep=mh_sweep, extra=None, progress=None):
    S, p = model.S, model.p
    steps = StepSizes.from_config(config, S, p, model.kernel.upper)
    adapt_counts = Counters.zeros(S, p)
    kept = Counters.zeros(S, p)
    n_keep = config.n_draws
    out = {
        "beta": np.empty((n_keep, S, p)),
        "sigma2": np.empty((n_keep, S)),
        "sigma2_beta": np.empty(n_keep),
        "bandwidth": np.empty(n_keep),
        "iterations": np.empty(n_keep, dtype=np.int64),
    }
    if extra is not None:
        extra.allocate(out, n_keep)
    m = 0
    for t in range(config.n_iter):
        rng = sweep_rng(config.seed, t)
        counters = kept if t >= config.burn_in else adapt_counts
        state = sweep(state, model, config, rng, steps, counters)
        if t < config.n_adapt and (t + 1) % config.adapt_interval == 0:
            _adapt(steps, adapt_counts)
            steps.bandwidth = min(steps.bandwidth, model.kernel.upper / 2.0)
            adapt_counts = Counters.zeros(S, p)
        if t >= config.burn_in and (t - config.burn_in + 1) % config.thin == 0:
            out["beta"][m] = state.beta
            out["sigma2"][m] = state.sigma2
            out["sigma2_beta"][m] = state.sigma2_beta
            out["bandwidth"][m] = state.bandwidth
            out["iterations"][m] = t
            if extra is not None:
                extra.store(out, m, state)
            m += 1
        if progress is not None:
            progress(t, state)
    rates = kept.rates()
    rates["rejected_nonfinite"] = kept.rejected_nonfinite
    log.info("acceptance rates: %s", rates)
    region_ids = tuple(frame.region_ids) if frame is not None else tuple(str(s) for s in range(S))
    return out, rates, steps, region_ids


def _finish(out, rates, region_ids, model, config, cls=PosteriorDraws, **extra):
    return cls(out["beta"], out["sigma2"], out["sigma2_beta"], out["bandwidth"], out["iterations"],
               region_ids, tuple(model.data.names), rates, config, model.kernel, **extra)


# ----------------------------------------------------------------------------
# summaries and posterior probabilities
# ----------------------------------------------------------------------------

def shifted_mean(x, axis=0):
    """Mean computed relative to the first element; exact for constant input."""
    x = np.asarray(x, dtype=float)
    ref = np.take(x, [0], axis=axis)
    return np.squeeze(ref, axis=axis) + np.mean(x - ref, axis=axis)


def shifted_var(x, axis=0, ddof=0):
    x = np.asarray(x, dtype=float)
    ref = np.take(x, [0], axis=axis)
    return np.var(x - ref, axis=axis, ddof=ddof)


@dataclass(frozen=True)
class PosteriorSummary:
    """Per-region, per-coefficient posterior mean, sd and central 95% interval.

    Interval endpoints are the 2.5% and 97.5% sample quantiles with linear
    interpolation between order statistics (numpy's default rule).
    """

    mean: np.ndarray
    sd: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    region_ids: tuple
    names: tuple


def posterior_summary(draws: PosteriorDraws, level: float = 0.95) -> PosteriorSummary:
    if draws.n_draws < 2:
        raise ValueError("posterior summaries need at least 2 draws")
    beta = draws.beta
    tail = (1.0 - level) / 2.0
    lo, hi = np.quantile(beta, [tail, 1.0 - tail], axis=0)
    return PosteriorSummary(shifted_mean(beta), np.sqrt(shifted_var(beta, ddof=1)), lo, hi,
                            tuple(draws.region_ids), tuple(draws.names))


def replication_metrics(means, sds, true_beta) -> dict:
    """Replicate-averaged bias metrics per coefficient.

    ``means`` and ``sds`` have shape ``(R, ..., p)``: one posterior mean and
    sd per replicate (optionally per region).  ``true_beta`` broadcasts
    against a single replicate.  Returns

    * ``MAB``: mean of ``|mean - true|``
    * ``MSD``: mean of posterior sds
    * ``MMSE``: mean of ``(mean - true)**2``
    * ``mean``: average posterior mean
    """
    means = np.asarray(means, dtype=float)
    sds = np.asarray(sds, dtype=float)
    true_beta = np.asarray(true_beta, dtype=float)
    if means.shape != sds.shape:
        raise ValueError(f"means {means.shape} and sds {sds.shape} differ in shape")
    if means.ndim < 1 or means.shape[0] < 1:
        raise ValueError("need at least one replicate")
    try:
        err = means - true_beta
    except ValueError:
        raise ValueError(f"true_beta {true_beta.shape} does not broadcast against {means.shape}") from None
    if err.shape != means.shape:
        raise ValueError(f"true_beta {true_beta.shape} does not broadcast against {means.shape}")
    axes = tuple(range(means.ndim - 1))
    return {
        "mean": means.mean(axis=axes),
        "MAB": np.abs(err).mean(axis=axes),
        "MSD": sds.mean(axis=axes),
        "MMSE": (err ** 2).mean(axis=axes),
    }


def _coef_draws(draws, coefficient):
    j = draws.coefficient_index(coefficient)
    return draws.beta[:, :, j]


def exceedance_matrix(draws: PosteriorDraws, coefficient, regions=None) -> np.ndarray:
    """``P(beta_j(k) > beta_j(q))`` for every ordered pair of the chosen regions.

    The diagonal is 0.
    """
    vals = _coef_draws(draws, coefficient)
    idx = list(range(vals.shape[1])) if regions is None else [draws.region_index(r) for r in regions]
    v = vals[:, idx]
    return np.mean(v[:, :, None] > v[:, None, :], axis=0)


def prob_exceed_own_mean(draws: PosteriorDraws, coefficient) -> np.ndarray:
    """Per region, the fraction of draws strictly above that region's posterior mean."""
    vals = _coef_draws(draws, coefficient)
    return np.mean(vals > shifted_mean(vals)[None, :], axis=0)


def top_k_probability(draws: PosteriorDraws, coefficient, k: int) -> np.ndarray:
    """Per region, the fraction of draws in which it ranks among the ``k`` largest.

    Ties are broken by region order, so the probabilities sum to ``k``.
    """
    vals = _coef_draws(draws, coefficient)
    M, S = vals.shape
    if not 1 <= k <= S:
        raise ValueError(f"k must lie in [1, {S}], got {k}")
    order = np.argsort(-vals, axis=1, kind="stable")
    flags = np.zeros((M, S), dtype=bool)
    np.put_along_axis(flags, order[:, :k], True, axis=1)
    return flags.mean(axis=0)
