"""scikit-learn style wrappers around the prior solver and the samplers.

Hyperparameters are constructor arguments (so ``get_params``/``set_params``
and ``clone`` work); fitted state lives in trailing-underscore attributes.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_random_state, check_X_y

from .exceptions import InvalidSpec
from .experiments import (_spec_from, inside_support, mixture_priors, regression_chain,
                          regression_priors)
from .mcmc import (MixturePriors, RandomWalkGaussian, RandomWalkLogScale, chain_summary,
                   run_chain, run_mixture_gibbs)
from .models import Dataset, normal_model, poisson_model
from .prior import DEFAULT_POINTS, PriorSpec, normalize, solve_u


def _seed(random_state) -> int:
    if isinstance(random_state, (int, np.integer)):
        return int(random_state)
    return int(check_random_state(random_state).randint(2 ** 31 - 1))


def _values_1d(X) -> np.ndarray:
    X = check_array(X, ensure_2d=False, dtype=float)
    if X.ndim == 2:
        if X.shape[1] != 1:
            raise InvalidSpec("expected a single column of observations")
        X = X[:, 0]
    return X


class ScoringRulePrior(BaseEstimator):
    """Tabulated scoring-rule prior on one of the four canonical domains.

    ``fit`` ignores its arguments; it solves and normalises the table.
    """

    def __init__(self, domain: str = "unit", u_anchor=None, center: float = 0.5, c=None,
                 rounded_anchor: bool = False, half_width=None, n_points: int = DEFAULT_POINTS):
        self.domain = domain
        self.u_anchor = u_anchor
        self.center = center
        self.c = c
        self.rounded_anchor = rounded_anchor
        self.half_width = half_width
        self.n_points = n_points

    def _spec(self) -> PriorSpec:
        return _spec_from(self.domain, self.u_anchor, self.center, self.c, self.rounded_anchor)

    def fit(self, X=None, y=None):
        self.spec_ = self._spec()
        self.table_ = solve_u(self.spec_, self.half_width, self.n_points)
        self.density_ = normalize(self.table_)
        self.support_ = self.table_.support
        return self

    def score_samples(self, X) -> np.ndarray:
        """log p at each value; -inf outside the tabulated support."""
        check_is_fitted(self, "density_")
        return self.density_.logpdf(_values_1d(X))

    def score(self, X, y=None) -> float:
        return float(np.mean(self.score_samples(X)))

    def sample(self, n_samples: int = 1, random_state=None) -> np.ndarray:
        """Inverse-CDF draws from the trapezoid-integrated table."""
        check_is_fitted(self, "density_")
        rng = check_random_state(random_state)
        g, p = self.density_.grid, self.density_.p
        cdf = np.concatenate([[0.0], np.cumsum(0.5 * (p[1:] + p[:-1]) * np.diff(g))])
        cdf /= cdf[-1]
        keep = np.concatenate([[True], np.diff(cdf) > 0])
        return np.interp(rng.uniform(size=n_samples), cdf[keep], g[keep])


class ScalarPosteriorMH(BaseEstimator):
    """Posterior of a Poisson rate or a normal mean under a scoring-rule prior.

    Poisson uses the half-line prior with a log-scale random walk; normal
    uses the real-line prior with a Gaussian random walk.
    """

    def __init__(self, model: str = "poisson", prior_domain=None, u_anchor=None,
                 rounded_anchor: bool = False, sigma: float = 1.0, n_iter: int = 10_000,
                 burn_in=None, proposal_scale: float = 2.4, random_state=0):
        self.model = model
        self.prior_domain = prior_domain
        self.u_anchor = u_anchor
        self.rounded_anchor = rounded_anchor
        self.sigma = sigma
        self.n_iter = n_iter
        self.burn_in = burn_in
        self.proposal_scale = proposal_scale
        self.random_state = random_state

    def fit(self, X, y=None):
        x = _values_1d(X)
        if self.model == "poisson":
            domain = self.prior_domain or "half-line"
            spec = _spec_from(domain, self.u_anchor, rounded_anchor=self.rounded_anchor)
            model = poisson_model()
            proposal = RandomWalkLogScale(self.proposal_scale / np.sqrt(x.sum() + 1.0))
            guess = max((x.sum() + 0.5) / len(x), 1e-3)
        elif self.model == "normal":
            domain = self.prior_domain or "real-symmetric"
            spec = _spec_from(domain, self.u_anchor, rounded_anchor=self.rounded_anchor)
            model = normal_model(self.sigma)
            proposal = RandomWalkGaussian(self.proposal_scale * self.sigma / np.sqrt(len(x)))
            guess = float(x.mean())
        else:
            raise InvalidSpec(f"model must be 'poisson' or 'normal', got {self.model!r}")
        self.prior_spec_ = spec
        init = inside_support(spec, guess)
        self.chain_ = run_chain(model, [spec], [init], proposal, self.n_iter, self.burn_in,
                                seed=_seed(self.random_state), data=Dataset(x))
        s = chain_summary(self.chain_)
        self.summary_ = s
        self.mean_, self.sd_ = float(s.mean[0]), float(s.sd[0])
        self.interval_ = (float(s.lower[0]), float(s.upper[0]))
        self.acceptance_rate_ = float(s.acceptance_rate[0])
        return self


class MixturePosteriorMH(BaseEstimator):
    """Three-component normal mixture fitted by Metropolis-within-Gibbs."""

    def __init__(self, weight_w: float = 1.14, rounded_anchor: bool = False, n_iter: int = 10_000,
                 burn_in=None, weight_sd: float = 0.05, mean_sd: float = 0.2,
                 var_log_sd: float = 0.3, random_state=0):
        self.weight_w = weight_w
        self.rounded_anchor = rounded_anchor
        self.n_iter = n_iter
        self.burn_in = burn_in
        self.weight_sd = weight_sd
        self.mean_sd = mean_sd
        self.var_log_sd = var_log_sd
        self.random_state = random_state

    def fit(self, X, y=None):
        x = _values_1d(X)
        priors: MixturePriors = mixture_priors(self.weight_w, self.rounded_anchor)
        self.chain_ = run_mixture_gibbs(Dataset(x), priors, self.n_iter, _seed(self.random_state),
                                        self.burn_in, None, self.weight_sd, self.mean_sd,
                                        self.var_log_sd)
        s = chain_summary(self.chain_)
        self.summary_ = s
        self.weights_, self.means_, self.variances_ = s.mean[:3], s.mean[3:6], s.mean[6:]
        return self


class PoissonRegressionMH(RegressorMixin, BaseEstimator):
    """Poisson regression (log link, no implicit intercept) with independent
    scoring-rule priors on the coefficients."""

    def __init__(self, prior: str = "real-symmetric", rounded_anchor: bool = False,
                 default_prior_var: float = 1e4, n_iter: int = 50_000, burn_in=25_000,
                 proposal_scale: float = 2.4, random_state=0):
        self.prior = prior
        self.rounded_anchor = rounded_anchor
        self.default_prior_var = default_prior_var
        self.n_iter = n_iter
        self.burn_in = burn_in
        self.proposal_scale = proposal_scale
        self.random_state = random_state

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=float)
        data = Dataset(y, X)
        priors = regression_priors(self.prior, X.shape[1], self.rounded_anchor,
                                   self.default_prior_var)
        burn = self.n_iter // 2 if self.burn_in is None else int(self.burn_in)
        self.chain_ = regression_chain(data, priors, self.n_iter, burn,
                                       _seed(self.random_state), None, self.proposal_scale)
        s = chain_summary(self.chain_)
        self.summary_ = s
        self.coef_ = s.mean
        self.intervals_ = np.column_stack([s.lower, s.upper])
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "coef_")
        X = check_array(X, dtype=float)
        return np.exp(X @ self.coef_)
