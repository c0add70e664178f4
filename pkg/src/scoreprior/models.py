"""Sampling models: log-likelihoods, simulators and Jeffreys baselines.

Scalar-parameter log-likelihoods accept an array of parameter values and
return an array, which is what the quadrature in :mod:`scoreprior.selection`
needs.  Simulators take a ``numpy.random.Generator`` and return a Dataset.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np
from scipy import stats
from scipy.special import gammaln, logsumexp, xlog1py, xlogy

from .exceptions import (DimensionMismatch, InvalidData, NonPositiveParameter,
                         ParameterOutOfRange, SimplexViolation)

SIMPLEX_TOL = 1e-9

# ---------------------------------------------------------------------------
# data containers


@dataclass(frozen=True)
class Dataset:
    values: np.ndarray
    covariates: np.ndarray | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1:
            raise InvalidData("values must be one-dimensional")
        if not np.all(np.isfinite(v)):
            raise InvalidData("values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        if self.covariates is not None:
            x = np.asarray(self.covariates, dtype=float)
            if x.ndim == 1:
                x = x[:, None]
            if x.ndim != 2 or x.shape[0] != v.shape[0]:
                raise DimensionMismatch(
                    f"covariates have {x.shape[0] if x.ndim else 0} rows, values have {len(v)}")
            if not np.all(np.isfinite(x)):
                raise InvalidData("covariates must be finite")
            x.setflags(write=False)
            object.__setattr__(self, "covariates", x)

    def __len__(self):
        return len(self.values)

    @property
    def n(self) -> int:
        return len(self.values)

    @property
    def k(self) -> int:
        return 0 if self.covariates is None else self.covariates.shape[1]


def _values(data) -> np.ndarray:
    if isinstance(data, Dataset):
        return data.values
    return np.atleast_1d(np.asarray(data, dtype=float))


def _counts(data) -> np.ndarray:
    x = _values(data)
    if np.any(x < 0) or np.any(x != np.floor(x)):
        raise InvalidData("count data must be nonnegative integers")
    return x


def read_dataset_csv(path) -> Dataset:
    """Read a CSV with a required ``y`` column and optional ``x1..xk`` columns."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise InvalidData(f"{path}: empty file") from None
        rows = [r for r in reader if r and any(c.strip() for c in r)]
    if "y" not in header:
        raise InvalidData(f"{path}: missing required column 'y'")
    xcols = sorted((h for h in header if h != "y"), key=lambda h: (len(h), h))
    for j, name in enumerate(xcols, start=1):
        if name != f"x{j}":
            raise InvalidData(f"{path}: unexpected column {name!r}; covariates must be x1..xk")
    try:
        table = np.array([[float(c) for c in r] for r in rows], dtype=float)
    except ValueError as exc:
        raise InvalidData(f"{path}: non-numeric entry ({exc})") from None
    if table.size == 0:
        raise InvalidData(f"{path}: no data rows")
    if table.ndim != 2 or table.shape[1] != len(header):
        raise InvalidData(f"{path}: ragged rows")
    y = table[:, header.index("y")]
    if not xcols:
        return Dataset(y)
    x = np.column_stack([table[:, header.index(f"x{j}")] for j in range(1, len(xcols) + 1)])
    return Dataset(y, x)


def write_dataset_csv(data: Dataset, path) -> None:
    header = ["y"] + [f"x{j}" for j in range(1, data.k + 1)]
    cols = [data.values] + ([] if data.covariates is None else list(data.covariates.T))
    with Path(path).open("w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in zip(*cols):
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


# ---------------------------------------------------------------------------
# log-likelihoods


def loglik_poisson(theta, data):
    """sum_i x_i log(theta) - theta - log(x_i!)."""
    x = _counts(data)
    theta = np.asarray(theta, dtype=float)
    if np.any(theta <= 0):
        raise NonPositiveParameter("Poisson rate must be positive")
    out = xlogy(x.sum(), theta) - x.size * theta - gammaln(x + 1.0).sum()
    return out[()] if out.ndim == 0 else out


def loglik_normal_known_var(mu, data, sigma: float = 1.0):
    x = _values(data)
    if not sigma > 0:
        raise NonPositiveParameter(f"sigma must be positive, got {sigma}")
    mu = np.asarray(mu, dtype=float)
    n = x.size
    # sum (x - mu)^2 = sum (x - xbar)^2 + n (xbar - mu)^2
    xbar = x.mean()
    ss = np.sum((x - xbar) ** 2) + n * (xbar - mu) ** 2
    out = -0.5 * n * math.log(2 * math.pi * sigma * sigma) - ss / (2 * sigma * sigma)
    return out[()] if np.ndim(out) == 0 else out


def split_mixture_params(params):
    """(weights, means, variances) from a 9-vector or a 3-tuple of blocks."""
    if isinstance(params, (tuple, list)) and len(params) == 3:
        w, mu, var = (np.asarray(b, dtype=float) for b in params)
    else:
        flat = np.asarray(params, dtype=float).ravel()
        if flat.size % 3:
            raise DimensionMismatch("mixture parameters must come in three equal blocks")
        w, mu, var = np.split(flat, 3)
    if not (w.shape == mu.shape == var.shape):
        raise DimensionMismatch("weight, mean and variance blocks differ in length")
    return w, mu, var


def check_simplex(w, strict: bool = False) -> None:
    w = np.asarray(w, dtype=float)
    if abs(w.sum() - 1.0) > SIMPLEX_TOL or np.any(w < 0) or (strict and np.any(w <= 0)):
        raise SimplexViolation(f"weights {w} are not on the probability simplex")


def loglik_mixture3(params, data) -> float:
    """sum_j log sum_i w_i N(x_j | mu_i, var_i), evaluated in log space."""
    w, mu, var = split_mixture_params(params)
    check_simplex(w)
    if np.any(var <= 0):
        raise NonPositiveParameter("mixture variances must be positive")
    x = _values(data)[:, None]
    with np.errstate(divide="ignore"):
        logw = np.log(w)
    comp = logw - 0.5 * np.log(2 * np.pi * var) - (x - mu) ** 2 / (2 * var)
    return float(np.sum(logsumexp(comp, axis=1)))


def loglik_geometric(phi, data):
    """n log(phi) + sum(x) log(1 - phi); support x = 0, 1, 2, ..."""
    x = _counts(data)
    phi = np.asarray(phi, dtype=float)
    if np.any((phi <= 0) | (phi >= 1)):
        raise ParameterOutOfRange("geometric phi must lie in (0, 1)")
    out = x.size * np.log(phi) + xlog1py(x.sum(), -phi)
    return out[()] if out.ndim == 0 else out


def log_binom(n: int, y: int) -> float:
    return float(gammaln(n + 1) - gammaln(y + 1) - gammaln(n - y + 1))


def loglik_binomial(theta, y: int, n: int):
    """log C(n, y) + y log(theta) + (n - y) log(1 - theta); theta in [0, 1]."""
    if not (0 <= y <= n) or y != int(y) or n != int(n):
        raise ParameterOutOfRange(f"need integers 0 <= y <= n, got y={y}, n={n}")
    theta = np.asarray(theta, dtype=float)
    if np.any((theta < 0) | (theta > 1)):
        raise ParameterOutOfRange("binomial theta must lie in [0, 1]")
    out = log_binom(n, y) + xlogy(y, theta) + xlog1py(n - y, -theta)
    return out[()] if out.ndim == 0 else out


def loglik_poisson_regression(beta, data: Dataset) -> float:
    """sum_i y_i eta_i - exp(eta_i) - log(y_i!) with eta = X beta."""
    if not isinstance(data, Dataset) or data.covariates is None:
        raise DimensionMismatch("Poisson regression needs a Dataset with covariates")
    beta = np.asarray(beta, dtype=float).ravel()
    if beta.size != data.k:
        raise DimensionMismatch(f"beta has {beta.size} entries, design has {data.k} columns")
    y = _counts(data)
    eta = data.covariates @ beta
    return float(np.sum(y * eta - np.exp(eta) - gammaln(y + 1.0)))


# ---------------------------------------------------------------------------
# simulators


def simulate_poisson(theta: float, n: int, rng) -> Dataset:
    if theta < 0:
        raise NonPositiveParameter("Poisson rate must be nonnegative")
    return Dataset(rng.poisson(theta, size=n).astype(float))


def simulate_normal(mu: float, n: int, rng, sigma: float = 1.0) -> Dataset:
    if not sigma > 0:
        raise NonPositiveParameter("sigma must be positive")
    return Dataset(rng.normal(mu, sigma, size=n))


def simulate_geometric(phi: float, n: int, rng) -> Dataset:
    if not 0 < phi <= 1:
        raise ParameterOutOfRange("geometric phi must lie in (0, 1]")
    # numpy's geometric counts trials (support 1, 2, ...); shift to failures
    return Dataset(rng.geometric(phi, size=n).astype(float) - 1.0)


def simulate_binomial(theta: float, n_trials: int, size: int, rng) -> Dataset:
    if not 0 <= theta <= 1:
        raise ParameterOutOfRange("binomial theta must lie in [0, 1]")
    return Dataset(rng.binomial(n_trials, theta, size=size).astype(float))


def simulate_mixture3(params, n: int, rng) -> Dataset:
    w, mu, var = split_mixture_params(params)
    check_simplex(w)
    if np.any(var <= 0):
        raise NonPositiveParameter("mixture variances must be positive")
    labels = rng.choice(len(w), size=n, p=w / w.sum())
    return Dataset(rng.normal(mu[labels], np.sqrt(var[labels])))


def simulate_poisson_regression(beta, n: int, rng, covariate_mean=None,
                                covariate_scale: float = 1.0) -> Dataset:
    """Covariates ~ N(covariate_mean, covariate_scale * I); default mean is beta."""
    beta = np.asarray(beta, dtype=float).ravel()
    mean = beta if covariate_mean is None else np.asarray(covariate_mean, dtype=float)
    if mean.shape != beta.shape:
        raise DimensionMismatch("covariate mean and beta differ in length")
    if not covariate_scale > 0:
        raise NonPositiveParameter("covariate variance must be positive")
    x = rng.normal(mean, math.sqrt(covariate_scale), size=(n, beta.size))
    return Dataset(rng.poisson(np.exp(x @ beta)).astype(float), x)


# ---------------------------------------------------------------------------
# model specs


@dataclass(frozen=True)
class ModelSpec:
    """A sampling model.  ``log_likelihood_grid`` (one-parameter models only)
    evaluates on an array of parameter values including closed boundaries,
    returning -inf where the likelihood vanishes."""

    name: str
    dimension: int
    domains: tuple
    log_likelihood: Callable
    simulate: Callable
    log_likelihood_grid: Callable | None = None


def _poisson_grid(theta, data):
    x = _counts(data)
    theta = np.asarray(theta, dtype=float)
    with np.errstate(divide="ignore"):
        return xlogy(x.sum(), theta) - x.size * theta - gammaln(x + 1.0).sum()


def _geometric_grid(phi, data):
    x = _counts(data)
    phi = np.asarray(phi, dtype=float)
    with np.errstate(divide="ignore"):
        return xlogy(x.size, phi) + xlog1py(x.sum(), -phi)


def poisson_model() -> ModelSpec:
    return ModelSpec("poisson", 1, ("half-line",),
                     lambda p, d: float(loglik_poisson(p[0], d)),
                     lambda p, n, rng: simulate_poisson(p[0], n, rng),
                     _poisson_grid)


def normal_model(sigma: float = 1.0) -> ModelSpec:
    return ModelSpec("normal", 1, ("real-symmetric",),
                     lambda p, d: float(loglik_normal_known_var(p[0], d, sigma)),
                     lambda p, n, rng: simulate_normal(p[0], n, rng, sigma),
                     lambda mu, d: loglik_normal_known_var(mu, d, sigma))


def geometric_model() -> ModelSpec:
    return ModelSpec("geometric", 1, ("unit",),
                     lambda p, d: float(loglik_geometric(p[0], d)),
                     lambda p, n, rng: simulate_geometric(p[0], n, rng),
                     _geometric_grid)


def binomial_model(n_trials: int) -> ModelSpec:
    def grid_ll(theta, d):
        theta = np.asarray(theta, dtype=float)
        with np.errstate(divide="ignore"):
            return sum(loglik_binomial(theta, int(y), n_trials) for y in _values(d))

    return ModelSpec("binomial", 1, ("unit",),
                     lambda p, d: float(grid_ll(p[0], d)),
                     lambda p, n, rng: simulate_binomial(p[0], n_trials, n, rng),
                     grid_ll)


def mixture3_model() -> ModelSpec:
    return ModelSpec("mixture3", 9, ("unit",) * 3 + ("real-symmetric",) * 3 + ("half-line",) * 3,
                     loglik_mixture3, simulate_mixture3)


def poisson_regression_model(k: int) -> ModelSpec:
    return ModelSpec("poisson-regression", k, ("real-symmetric",) * k,
                     loglik_poisson_regression,
                     lambda p, n, rng: simulate_poisson_regression(p, n, rng))


# ---------------------------------------------------------------------------
# Jeffreys baselines


@dataclass(frozen=True)
class JeffreysPosterior:
    dist: object  # frozen scipy.stats distribution

    @property
    def mean(self) -> float:
        return float(self.dist.mean())

    @property
    def sd(self) -> float:
        return float(self.dist.std())

    def interval(self, level: float = 0.95) -> tuple[float, float]:
        lo, hi = self.dist.ppf([(1 - level) / 2, (1 + level) / 2])
        return float(lo), float(hi)

    def sample(self, size: int, rng) -> np.ndarray:
        return self.dist.rvs(size=size, random_state=rng)


def jeffreys_posterior_poisson(data) -> JeffreysPosterior:
    """Prior theta^{-1/2} gives Gamma(sum x + 1/2, rate n)."""
    x = _counts(data)
    if x.size < 1:
        raise InvalidData("need at least one observation")
    return JeffreysPosterior(stats.gamma(a=x.sum() + 0.5, scale=1.0 / x.size))


def jeffreys_posterior_normal_mean(data, sigma: float = 1.0) -> JeffreysPosterior:
    """Flat prior on mu gives N(xbar, sigma^2 / n)."""
    x = _values(data)
    if x.size < 1:
        raise InvalidData("need at least one observation")
    if not sigma > 0:
        raise NonPositiveParameter("sigma must be positive")
    return JeffreysPosterior(stats.norm(loc=x.mean(), scale=sigma / math.sqrt(x.size)))
