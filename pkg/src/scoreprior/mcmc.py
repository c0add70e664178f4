"""Random-walk Metropolis-Hastings under scoring-rule priors.

Each coordinate carries its current u value, so a proposal only integrates
the increment theta -> theta' (see :func:`scoreprior.prior.log_prior_ratio`).
Multi-parameter models are updated one coordinate at a time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .exceptions import (DomainExit, EmptyChain, InitOutOfDomain, InvalidSpec,
                         NonPositiveParameter, ScorePriorError)
from .models import ModelSpec, check_simplex, loglik_mixture3, _values
from .prior import PriorSpec, log_prior_ratio, prior_u

# ---------------------------------------------------------------------------
# proposals


@dataclass(frozen=True)
class ProposalSpec:
    """Gaussian random walk on theta ("gaussian") or on log theta ("log")."""

    sd: float
    kind: str = "gaussian"

    def __post_init__(self):
        if not self.sd > 0:
            raise NonPositiveParameter(f"proposal sd must be positive, got {self.sd}")
        if self.kind not in ("gaussian", "log"):
            raise InvalidSpec(f"unknown proposal kind {self.kind!r}")

    def propose(self, theta: float, z: float) -> tuple[float, float]:
        """New value from a standard normal draw ``z`` and log q(theta|new)/q(new|theta)."""
        if self.kind == "gaussian":
            return theta + self.sd * z, 0.0
        if theta <= 0:
            return math.nan, 0.0
        new = theta * math.exp(self.sd * z)
        return new, math.log(new) - math.log(theta)


def RandomWalkGaussian(sd: float) -> ProposalSpec:
    return ProposalSpec(sd, "gaussian")


def RandomWalkLogScale(sd: float) -> ProposalSpec:
    return ProposalSpec(sd, "log")


# ---------------------------------------------------------------------------
# coordinate priors


class ScoringCoordinatePrior:
    """One-dimensional scoring-rule prior; the state is the cached u value."""

    def __init__(self, spec: PriorSpec):
        self.spec = spec

    def init_state(self, theta: float) -> float:
        return prior_u(self.spec, theta)

    def log_ratio(self, theta_from: float, theta_to: float, state: float):
        return log_prior_ratio(self.spec, theta_from, theta_to, state)


class GaussianCoordinatePrior:
    """N(mean, var) prior, the usual vague default for regression coefficients."""

    def __init__(self, mean: float = 0.0, var: float = 1e4):
        if not var > 0:
            raise NonPositiveParameter("prior variance must be positive")
        self.mean = mean
        self.var = var

    def init_state(self, theta: float) -> float:
        if not math.isfinite(theta):
            raise DomainExit("theta must be finite")
        return 0.0

    def log_ratio(self, theta_from: float, theta_to: float, state: float):
        if not math.isfinite(theta_to):
            raise DomainExit("theta must be finite")
        d = ((theta_from - self.mean) ** 2 - (theta_to - self.mean) ** 2) / (2 * self.var)
        return d, 0.0


def as_coordinate_prior(p):
    if isinstance(p, PriorSpec):
        return ScoringCoordinatePrior(p)
    if hasattr(p, "init_state") and hasattr(p, "log_ratio"):
        return p
    raise InvalidSpec(f"cannot use {type(p).__name__} as a coordinate prior")


# ---------------------------------------------------------------------------
# chains


@dataclass(frozen=True)
class Chain:
    draws: np.ndarray
    accepted: np.ndarray
    burn_in: int
    seed: int | None = None
    names: tuple = field(default=())

    def __post_init__(self):
        d = np.asarray(self.draws, dtype=float)
        if d.ndim == 1:
            d = d[:, None]
        d.setflags(write=False)
        object.__setattr__(self, "draws", d)
        object.__setattr__(self, "accepted", np.asarray(self.accepted, dtype=np.int64))
        if not 0 <= self.burn_in <= d.shape[0]:
            raise InvalidSpec("burn_in must lie in [0, iterations]")
        if np.any(self.accepted < 0) or np.any(self.accepted > d.shape[0]):
            raise InvalidSpec("accepted counts must lie in [0, iterations]")

    @property
    def iterations(self) -> int:
        return self.draws.shape[0]

    @property
    def dimension(self) -> int:
        return self.draws.shape[1]

    @property
    def retained(self) -> np.ndarray:
        return self.draws[self.burn_in:]

    @property
    def acceptance_rate(self) -> np.ndarray:
        return self.accepted / max(self.iterations, 1)


@dataclass(frozen=True)
class ChainSummary:
    mean: np.ndarray
    sd: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    acceptance_rate: np.ndarray

    def contains(self, truth) -> np.ndarray:
        truth = np.asarray(truth, dtype=float)
        return (self.lower <= truth) & (truth <= self.upper)


def chain_summary(chain: Chain, level: float = 0.95) -> ChainSummary:
    """Posterior mean, sd and equal-tailed interval over the retained draws."""
    kept = chain.retained
    if kept.shape[0] == 0:
        raise EmptyChain("no draws after burn-in")
    sd = kept.std(axis=0, ddof=1) if kept.shape[0] > 1 else np.zeros(kept.shape[1])
    lo, hi = np.quantile(kept, [(1 - level) / 2, (1 + level) / 2], axis=0)
    return ChainSummary(kept.mean(axis=0), sd, lo, hi, chain.acceptance_rate)


def default_burn_in(iters: int) -> int:
    return iters // 2


# ---------------------------------------------------------------------------
# single-site updates


def _accept(log_alpha: float, log_unif: float) -> bool:
    return log_alpha >= 0.0 or log_unif < log_alpha


def mh_step(state, loglik: Callable, prior, proposal: ProposalSpec, rng,
            loglik_current: float | None = None):
    """One Metropolis-Hastings update of a scalar parameter.

    ``state`` is (theta, u) with u the cached prior state; returns
    (theta, u, accepted).  Proposals outside the prior's domain or support
    are rejected.
    """
    theta, u = state
    cp = as_coordinate_prior(prior)
    z = rng.standard_normal()
    log_unif = math.log(rng.random())
    ll = loglik(theta) if loglik_current is None else loglik_current
    new, _, u_new, ok, _ = _update(theta, u, ll, lambda v: (loglik(v), None), cp, proposal,
                                   z, log_unif)
    return new, u_new, ok


def _update(theta, u, ll, loglik, cp, proposal, z, log_unif):
    """Returns (theta, ll, u, accepted, extra); ``loglik`` gives (value, extra)."""
    theta = float(theta)
    new, log_q = proposal.propose(theta, float(z))
    if not math.isfinite(new):
        return theta, ll, u, False, None
    try:
        log_pr, u_new = cp.log_ratio(theta, new, u)
    except DomainExit:
        return theta, ll, u, False, None
    try:
        ll_new, extra = loglik(new)
    except ScorePriorError:
        return theta, ll, u, False, None
    if not math.isfinite(ll_new):
        return theta, ll, u, False, None
    if _accept(ll_new - ll + log_pr + log_q, float(log_unif)):
        return new, ll_new, u_new, True, extra
    return theta, ll, u, False, None


class FullLoglik:
    """Coordinate-update adapter that re-evaluates the full log-likelihood."""

    def __init__(self, fn: Callable):
        self.fn = fn

    def start(self, params):
        return float(self.fn(params)), None

    def move(self, params, j, new, cache):
        old = params[j]
        params[j] = new
        try:
            return float(self.fn(params)), None
        finally:
            params[j] = old


class RegressionLoglik:
    """Poisson-regression log-likelihood with the linear predictor cached, so
    changing one coefficient costs O(n)."""

    def __init__(self, data):
        from scipy.special import gammaln
        if data.covariates is None:
            raise InvalidSpec("regression data need covariates")
        self.x = np.asarray(data.covariates)
        self.y = np.asarray(data.values)
        self.const = float(gammaln(self.y + 1.0).sum())

    def _ll(self, eta):
        return float(self.y @ eta - np.exp(eta).sum() - self.const)

    def start(self, params):
        eta = self.x @ params
        return self._ll(eta), eta

    def move(self, params, j, new, eta):
        eta_new = eta + self.x[:, j] * (new - params[j])
        return self._ll(eta_new), eta_new


def _init_states(priors, init):
    states = []
    for j, (cp, t) in enumerate(zip(priors, init)):
        try:
            states.append(cp.init_state(float(t)))
        except (DomainExit, ScorePriorError) as exc:
            raise InitOutOfDomain(f"initial value {t} for coordinate {j}: {exc}") from None
    return states


def run_chain(model, priors: Sequence, init, proposals, iters: int,
              burn_in: int | None = None, seed: int = 0, data=None,
              names: tuple = ()) -> Chain:
    """Single-site Metropolis-within-Gibbs; deterministic given ``seed``.

    ``model`` is a ModelSpec evaluated on ``data`` or a callable returning
    the log-likelihood of a full parameter vector.
    """
    if hasattr(model, "start") and hasattr(model, "move"):
        lik = model
    elif isinstance(model, ModelSpec):
        if model.name == "poisson-regression":
            lik = RegressionLoglik(data)
        else:
            lik = FullLoglik(lambda params: model.log_likelihood(params, data))
    elif callable(model):
        lik = FullLoglik(model)
    else:
        raise InvalidSpec("model must be a ModelSpec, a callable or a coordinate likelihood")
    init = np.atleast_1d(np.asarray(init, dtype=float)).copy()
    d = init.size
    cps = [as_coordinate_prior(p) for p in priors]
    if isinstance(proposals, ProposalSpec):
        proposals = [proposals] * d
    if len(cps) != d or len(proposals) != d:
        raise InvalidSpec(f"need {d} priors and proposals, got {len(cps)} and {len(proposals)}")
    if burn_in is None:
        burn_in = default_burn_in(iters)
    if not 0 <= burn_in < iters:
        raise InvalidSpec(f"need 0 <= burn_in < iters, got burn_in={burn_in}, iters={iters}")

    states = _init_states(cps, init)
    try:
        ll, cache = lik.start(init)
    except ScorePriorError as exc:
        raise InitOutOfDomain(f"log-likelihood undefined at init: {exc}") from None
    if not math.isfinite(ll):
        raise InitOutOfDomain("log-likelihood is not finite at init")

    rng = np.random.default_rng(seed)
    zs = rng.standard_normal((iters, d))
    lus = np.log(rng.random((iters, d)))
    draws = np.empty((iters, d))
    accepted = np.zeros(d, dtype=np.int64)
    theta = init
    for it in range(iters):
        for j in range(d):
            def ll_j(v, j=j):
                return lik.move(theta, j, v, cache)
            new, ll, states[j], ok, extra = _update(theta[j], states[j], ll, ll_j, cps[j],
                                                    proposals[j], zs[it, j], lus[it, j])
            if ok:
                theta[j] = new
                cache = extra
                accepted[j] += 1
        draws[it] = theta
    return Chain(draws, accepted, burn_in, seed, tuple(names))


# ---------------------------------------------------------------------------
# three-component normal mixture


MIXTURE_NAMES = ("w1", "w2", "w3", "mu1", "mu2", "mu3", "var1", "var2", "var3")


@dataclass(frozen=True)
class MixturePriors:
    weight: PriorSpec
    mean: PriorSpec
    variance: PriorSpec


def default_mixture_init(data, priors: MixturePriors) -> np.ndarray:
    """Equal weights, means at data quantiles and the pooled variance, each
    pulled inside its prior's support when the support is bounded."""
    from .prior import solve_u
    x = _values(data)
    mu = np.quantile(x, [1 / 6, 1 / 2, 5 / 6])
    var = np.full(3, max(np.var(x) / 3, 1e-3))
    lo, hi = solve_u(priors.mean).support
    mu = np.clip(mu, lo + 0.05 * (hi - lo), hi - 0.05 * (hi - lo))
    mu = mu + np.array([-1e-3, 0.0, 1e-3])
    _, vhi = solve_u(priors.variance).support
    var = np.clip(var, 1e-3, 0.5 * vhi)
    return np.concatenate([np.full(3, 1 / 3), mu, var])


def run_mixture_gibbs(data, priors: MixturePriors, iters: int, seed: int = 0,
                      burn_in: int | None = None, init=None,
                      weight_sd: float = 0.05, mean_sd: float = 0.2,
                      var_log_sd: float = 0.3) -> Chain:
    """Metropolis-within-Gibbs over (w, mu, var) for a three-component mixture.

    w1 and w2 are updated directly with w3 = 1 - w1 - w2; each weight update
    moves w3 too, so its prior ratio includes p(w3).  Every mean and variance
    is a separate coordinate.
    """
    x = _values(data)
    if x.size == 0:
        raise InitOutOfDomain("mixture data are empty")
    if burn_in is None:
        burn_in = default_burn_in(iters)
    if not 0 <= burn_in < iters:
        raise InvalidSpec("need 0 <= burn_in < iters")
    params = default_mixture_init(x, priors) if init is None else np.asarray(init, float).copy()
    if params.shape != (9,):
        raise InvalidSpec("mixture init must have 9 entries")
    check_simplex(params[:3], strict=True)
    wp = ScoringCoordinatePrior(priors.weight)
    cps = [wp] * 3 + [ScoringCoordinatePrior(priors.mean)] * 3 + \
          [ScoringCoordinatePrior(priors.variance)] * 3
    states = _init_states(cps, params)
    try:
        ll = loglik_mixture3(params, x)
    except ScorePriorError as exc:
        raise InitOutOfDomain(str(exc)) from None
    if not math.isfinite(ll):
        raise InitOutOfDomain("log-likelihood is not finite at init")

    wprop = RandomWalkGaussian(weight_sd)
    props = [None, None, None] + [RandomWalkGaussian(mean_sd)] * 3 + \
            [RandomWalkLogScale(var_log_sd)] * 3
    rng = np.random.default_rng(seed)
    zs = rng.standard_normal((iters, 8))
    lus = np.log(rng.random((iters, 8)))
    draws = np.empty((iters, 9))
    accepted = np.zeros(9, dtype=np.int64)

    for it in range(iters):
        moved3 = False
        for j in (0, 1):
            new, log_q = wprop.propose(float(params[j]), float(zs[it, j]))
            w3 = 1.0 - (params[0] + params[1]) + (params[j] - new)
            ok = False
            try:
                lr_j, u_j = wp.log_ratio(float(params[j]), new, states[j])
                lr_3, u_3 = wp.log_ratio(float(params[2]), float(w3), states[2])
            except DomainExit:
                lr_j = None
            if lr_j is not None:
                trial = params.copy()
                trial[j] = new
                trial[2] = w3
                ll_new = loglik_mixture3(trial, x)
                if math.isfinite(ll_new) and _accept(ll_new - ll + lr_j + lr_3 + log_q,
                                                     lus[it, j]):
                    params = trial
                    ll = ll_new
                    states[j], states[2] = u_j, u_3
                    ok = True
            accepted[j] += ok
            moved3 |= ok
        accepted[2] += moved3
        for j in range(3, 9):
            def ll_j(v, j=j):
                trial = params.copy()
                trial[j] = v
                return loglik_mixture3(trial, x), None
            new, ll, states[j], ok, _ = _update(params[j], states[j], ll, ll_j, cps[j],
                                                props[j], zs[it, j - 1], lus[it, j - 1])
            params[j] = new
            accepted[j] += ok
        draws[it] = params
    return Chain(draws, accepted, burn_in, seed, MIXTURE_NAMES)
