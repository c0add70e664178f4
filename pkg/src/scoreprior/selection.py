"""Marginal likelihoods, Bayes factors and the nested binomial comparison.

Marginals are deterministic trapezoid integrals over a prior's grid, so
replication studies carry no Monte Carlo noise from the evidence step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats
from scipy.special import betaln, logsumexp

from .exceptions import AllZeroIntegrand, InvalidSpec, ParameterOutOfRange
from .models import (Dataset, ModelSpec, geometric_model, loglik_binomial, poisson_model,
                     simulate_geometric, simulate_poisson, _values)
from .prior import (DensityTable, PriorSpec, _log_trapezoid_exp, normalize,
                    solve_u)

HALF_LINE_STEP = 1e-3


@dataclass(frozen=True)
class BFReport:
    log_m1: float
    log_m2: float

    @property
    def log_B12(self) -> float:
        return self.log_m1 - self.log_m2

    @property
    def winner(self) -> int:
        return 1 if self.log_B12 > 0 else 2


def marginal_likelihood(model: ModelSpec, prior: DensityTable, data) -> float:
    """log of the trapezoid integral of f(data | theta) p(theta) on the prior grid."""
    if model.dimension != 1 or model.log_likelihood_grid is None:
        raise InvalidSpec(f"model {model.name!r} has no one-parameter grid log-likelihood")
    ll = np.asarray(model.log_likelihood_grid(prior.grid, data), dtype=float)
    with np.errstate(invalid="ignore"):
        log_f = ll + prior.log_p
    log_f = np.where(np.isnan(log_f), -np.inf, log_f)
    out = _log_trapezoid_exp(log_f, prior.step)
    if not math.isfinite(out):
        raise AllZeroIntegrand(f"f(data|theta) p(theta) vanishes on the whole grid ({model.name})")
    return out


def half_line_prior_table(data=None, spec: PriorSpec | None = None,
                          step: float = HALF_LINE_STEP) -> DensityTable:
    """Normalised half-line prior on [0, max(50, 10 max(data))] at spacing ``step``;
    the table stops earlier where u passes the overflow ceiling."""
    spec = PriorSpec.half_line() if spec is None else spec
    top = 50.0 if data is None else max(50.0, 10.0 * float(np.max(_values(data))))
    n = int(math.ceil(top / step))
    return normalize(solve_u(spec, half_width=n * step, n_points=n))


def uniform_unit_table(n_points: int = 10_001) -> DensityTable:
    return DensityTable.uniform(0.0, 1.0, n_points)


def bayes_factor_poisson_vs_geometric(data, prior1: DensityTable | None = None,
                                      prior2: DensityTable | None = None) -> BFReport:
    """B12 of Poisson(theta) with the half-line prior against geometric(phi) with a
    uniform prior."""
    prior1 = half_line_prior_table(data) if prior1 is None else prior1
    prior2 = uniform_unit_table() if prior2 is None else prior2
    return BFReport(marginal_likelihood(poisson_model(), prior1, data),
                    marginal_likelihood(geometric_model(), prior2, data))


@dataclass(frozen=True)
class ReplicationReport:
    n: int
    theta: float
    phi: float
    reps: int
    exceptions_m1: int
    exceptions_m2: int
    log_B12_m1: np.ndarray = field(repr=False)
    log_B12_m2: np.ndarray = field(repr=False)

    @property
    def min_max_B12_m1(self) -> tuple[float, float]:
        return float(np.exp(self.log_B12_m1.min())), float(np.exp(self.log_B12_m1.max()))

    @property
    def min_max_B12_m2(self) -> tuple[float, float]:
        return float(np.exp(self.log_B12_m2.min())), float(np.exp(self.log_B12_m2.max()))


def replication_study(n: int, theta: float, phi: float, reps: int, seed: int = 0,
                      prior1: DensityTable | None = None,
                      prior2: DensityTable | None = None) -> ReplicationReport:
    """Draw ``reps`` samples of size n from each model and count misselections.

    An exception under M1 is a Poisson sample with B12 < 1; under M2 a
    geometric sample with B12 > 1.
    """
    if reps < 1:
        raise InvalidSpec("reps must be >= 1")
    prior2 = uniform_unit_table() if prior2 is None else prior2
    ss = np.random.default_rng(seed)
    l1 = np.empty(reps)
    l2 = np.empty(reps)
    for r in range(reps):
        d1 = simulate_poisson(theta, n, ss)
        d2 = simulate_geometric(phi, n, ss)
        p1a = half_line_prior_table(d1) if prior1 is None else prior1
        p1b = half_line_prior_table(d2) if prior1 is None else prior1
        l1[r] = bayes_factor_poisson_vs_geometric(d1, p1a, prior2).log_B12
        l2[r] = bayes_factor_poisson_vs_geometric(d2, p1b, prior2).log_B12
    return ReplicationReport(n, theta, phi, reps, int(np.sum(l1 < 0)), int(np.sum(l2 > 0)),
                             l1, l2)


# ---------------------------------------------------------------------------
# nested binomial comparison


def centered_unit_prior(theta0: float, w: float = 1.5) -> PriorSpec:
    """Unit-interval prior with u(theta0) = w and c = 2."""
    if not 0 < theta0 < 1:
        raise InvalidSpec(f"theta0 must lie in (0, 1), got {theta0}")
    return PriorSpec.unit_interval(w, center=theta0)


def _check_intrinsic(b, t, theta0):
    if not b > 0:
        raise InvalidSpec("b must be positive")
    if t < 0 or t != int(t):
        raise InvalidSpec("t must be a nonnegative integer")
    if not 0 < theta0 < 1:
        raise InvalidSpec("theta0 must lie in (0, 1)")


def intrinsic_prior(theta, b: float = 1.0, t: int = 8, theta0: float = 0.25):
    """sum_x Beta(theta | b+x, b+t-x) Bin(x | t, theta0)."""
    _check_intrinsic(b, t, theta0)
    theta = np.asarray(theta, dtype=float)
    x = np.arange(t + 1)
    wts = stats.binom.pmf(x, t, theta0)
    dens = stats.beta.pdf(theta[..., None], b + x, b + t - x)
    out = dens @ wts
    return out[()] if out.ndim == 0 else out


def intrinsic_log_bf10(y: int, n: int, b: float = 1.0, t: int = 8,
                       theta0: float = 0.25) -> float:
    _check_intrinsic(b, t, theta0)
    if not (0 <= y <= n) or y != int(y):
        raise ParameterOutOfRange(f"need integer 0 <= y <= n, got y={y}, n={n}")
    x = np.arange(t + 1)
    log_w = stats.binom.logpmf(x, t, theta0)
    terms = (log_w + betaln(b + x + y, b + t - x + n - y) - betaln(b + x, b + t - x))
    log_m0 = y * math.log(theta0) + (n - y) * math.log1p(-theta0)
    return float(logsumexp(terms) - log_m0)


def intrinsic_bf10(y: int, n: int, b: float = 1.0, t: int = 8,
                   theta0: float = 0.25) -> float:
    """Bayes factor of theta ~ intrinsic prior against theta = theta0."""
    return math.exp(intrinsic_log_bf10(y, n, b, t, theta0))


def posterior_prob_m1(log_bf10: float) -> float:
    """(1 + 1/B10)^{-1} with equal prior model probabilities."""
    return float(1.0 / (1.0 + math.exp(-log_bf10)))


@dataclass(frozen=True)
class NestedReport:
    y: np.ndarray
    prob_scoring: np.ndarray
    prob_intrinsic: np.ndarray

    def __post_init__(self):
        for a in (self.prob_scoring, self.prob_intrinsic):
            if np.any((a < 0) | (a > 1)):
                raise ValueError("probabilities must lie in [0, 1]")

    @property
    def max_abs_difference(self) -> float:
        return float(np.max(np.abs(self.prob_scoring - self.prob_intrinsic)))


def scoring_log_bf10(y: int, n: int, prior: DensityTable, theta0: float) -> float:
    from .models import binomial_model
    log_m1 = marginal_likelihood(binomial_model(n), prior, Dataset(np.array([float(y)])))
    log_m0 = float(loglik_binomial(theta0, y, n))
    return log_m1 - log_m0


def nested_comparison(n: int = 12, theta0: float = 0.25, w: float = 1.5, b: float = 1.0,
                      t: int = 8, n_points: int = 1000) -> NestedReport:
    """P(M1 | y) for y = 0..n under the centered scoring-rule prior and the
    intrinsic prior, against the point null theta = theta0."""
    prior = normalize(solve_u(centered_unit_prior(theta0, w), n_points=n_points))
    ys = np.arange(n + 1)
    ps = np.array([posterior_prob_m1(scoring_log_bf10(int(y), n, prior, theta0)) for y in ys])
    pi = np.array([posterior_prob_m1(intrinsic_log_bf10(int(y), n, b, t, theta0)) for y in ys])
    return NestedReport(ys, ps, pi)
