import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from scoreprior.exceptions import (DimensionMismatch, InvalidData, NonPositiveParameter,
                                   ParameterOutOfRange, SimplexViolation)
from scoreprior.models import (Dataset, jeffreys_posterior_normal_mean,
                               jeffreys_posterior_poisson, loglik_binomial, loglik_geometric,
                               loglik_mixture3, loglik_normal_known_var, loglik_poisson,
                               loglik_poisson_regression, read_dataset_csv, simulate_geometric,
                               simulate_mixture3, simulate_normal, simulate_poisson,
                               simulate_poisson_regression, write_dataset_csv)

TRUTH = ((0.25, 0.35, 0.40), (-3.5, 0.0, 2.5), (0.5, 0.1, 1.2))


# direct pointwise oracles (plain math module, one term at a time)


def poisson_oracle(theta, xs):
    return sum(x * math.log(theta) - theta - math.lgamma(x + 1) for x in xs)


def normal_oracle(mu, xs, sigma):
    return sum(-0.5 * math.log(2 * math.pi * sigma ** 2) - (x - mu) ** 2 / (2 * sigma ** 2)
               for x in xs)


def mixture_oracle(w, mu, var, xs):
    total = 0.0
    for x in xs:
        total += math.log(sum(wi * math.exp(-(x - m) ** 2 / (2 * v)) / math.sqrt(2 * math.pi * v)
                              for wi, m, v in zip(w, mu, var)))
    return total


def geometric_oracle(phi, xs):
    return sum(math.log(phi) + x * math.log(1 - phi) for x in xs)


def binomial_oracle(theta, y, n):
    return math.log(math.comb(n, y)) + y * math.log(theta) + (n - y) * math.log(1 - theta)


def regression_oracle(beta, y, x):
    out = 0.0
    for yi, xi in zip(y, x):
        eta = sum(b * v for b, v in zip(beta, xi))
        out += yi * eta - math.exp(eta) - math.lgamma(yi + 1)
    return out


# Poisson


def test_poisson_examples():
    assert loglik_poisson(1.0, [0]) == -1.0
    want = 2 * math.log(2.5) - 2.5 - math.log(2) + 3 * math.log(2.5) - 2.5 - math.log(6)
    assert loglik_poisson(2.5, [2, 3]) == pytest.approx(want, abs=1e-12)
    # 5 log 2.5 - 5 - log 2 - log 6
    assert want == pytest.approx(-2.9035, abs=1e-4)


def test_poisson_argmax_is_mean():
    data = [1, 2, 3, 4]
    grid = np.linspace(0.5, 5, 4501)
    assert grid[np.argmax(loglik_poisson(grid, data))] == pytest.approx(np.mean(data), abs=1e-3)


def test_poisson_errors():
    with pytest.raises(NonPositiveParameter):
        loglik_poisson(0.0, [1])
    with pytest.raises(InvalidData):
        loglik_poisson(1.0, [1.5])
    with pytest.raises(InvalidData):
        loglik_poisson(1.0, [-1])


# normal


def test_normal_examples():
    assert loglik_normal_known_var(0.0, [0.0], 1.0) == pytest.approx(-0.5 * math.log(2 * math.pi))
    assert loglik_normal_known_var(5.0, [4.0, 6.0], 1.0) == pytest.approx(-math.log(2 * math.pi) - 1)
    with pytest.raises(NonPositiveParameter):
        loglik_normal_known_var(0.0, [0.0], 0.0)


def test_normal_argmax_is_mean():
    data = np.array([0.3, 1.7, -0.4, 2.2])
    grid = np.linspace(-1, 3, 40001)
    assert grid[np.argmax(loglik_normal_known_var(grid, data))] == pytest.approx(data.mean(), abs=1e-4)


# mixture


def test_mixture_degenerate_reduces_to_normal():
    xs = [0.1, -0.3, 2.0]
    got = loglik_mixture3(((1.0, 0.0, 0.0), (0.5, 9.0, -9.0), (2.0, 1.0, 1.0)), xs)
    assert got == pytest.approx(loglik_normal_known_var(0.5, xs, math.sqrt(2.0)), abs=1e-12)


def test_mixture_single_point_example():
    phi = lambda z: math.exp(-0.5 * z * z) / math.sqrt(2 * math.pi)
    want = math.log(0.25 * phi(3.5 / math.sqrt(0.5)) / math.sqrt(0.5)
                    + 0.35 * phi(0.0) / math.sqrt(0.1)
                    + 0.40 * phi(-2.5 / math.sqrt(1.2)) / math.sqrt(1.2))
    assert loglik_mixture3(TRUTH, [0.0]) == pytest.approx(want, abs=1e-12)


def test_mixture_errors():
    with pytest.raises(SimplexViolation):
        loglik_mixture3(((0.5, 0.5, 0.5), (0, 0, 0), (1, 1, 1)), [0.0])
    with pytest.raises(NonPositiveParameter):
        loglik_mixture3(((0.2, 0.3, 0.5), (0, 0, 0), (1, 0, 1)), [0.0])
    with pytest.raises(DimensionMismatch):
        loglik_mixture3(np.ones(8), [0.0])


@settings(max_examples=50, deadline=None)
@given(perm=st.permutations([0, 1, 2]), seed=st.integers(0, 10_000))
def test_mixture_label_permutation_invariance(perm, seed):
    rng = np.random.default_rng(seed)
    w = rng.dirichlet(np.ones(3))
    mu = rng.normal(0, 3, 3)
    var = rng.uniform(0.1, 3, 3)
    x = rng.normal(0, 3, 20)
    p = list(perm)
    assert loglik_mixture3((w[p], mu[p], var[p]), x) == pytest.approx(
        loglik_mixture3((w, mu, var), x), abs=1e-10)


# geometric and binomial


def test_geometric_examples():
    assert loglik_geometric(0.5, [0]) == pytest.approx(math.log(0.5))
    assert loglik_geometric(0.2, [3, 1]) == pytest.approx(2 * math.log(0.2) + 4 * math.log(0.8))
    data = [3, 1, 0, 5]
    grid = np.linspace(0.01, 0.99, 9801)
    mle = len(data) / (len(data) + sum(data))
    assert grid[np.argmax(loglik_geometric(grid, data))] == pytest.approx(mle, abs=1e-4)
    with pytest.raises(ParameterOutOfRange):
        loglik_geometric(1.0, [0])


def test_binomial_examples():
    assert loglik_binomial(0.25, 0, 1) == pytest.approx(math.log(0.75))
    assert loglik_binomial(0.25, 3, 12) == pytest.approx(
        math.log(math.comb(12, 3) * 0.25 ** 3 * 0.75 ** 9), abs=1e-12)
    assert loglik_binomial(0.3, 4, 10) == pytest.approx(loglik_binomial(0.7, 6, 10), abs=1e-12)
    with pytest.raises(ParameterOutOfRange):
        loglik_binomial(0.5, 13, 12)


# regression


def test_regression_examples():
    assert loglik_poisson_regression([0.0], Dataset([0.0], [[1.0]])) == -1.0
    got = loglik_poisson_regression([1.0], Dataset([2.0], [[2.0]]))
    assert got == pytest.approx(2 * 2 - math.exp(2) - math.log(2), abs=1e-12)
    with pytest.raises(DimensionMismatch):
        loglik_poisson_regression([1.0, 2.0], Dataset([2.0], [[2.0]]))
    with pytest.raises(DimensionMismatch):
        Dataset([1.0, 2.0], [[1.0]])


def test_regression_gradient_zero_at_mle():
    from scoreprior.experiments import poisson_regression_mle
    rng = np.random.default_rng(3)
    data = simulate_poisson_regression([-0.8, -0.5, 0.0, 0.5, 0.8], 100, rng)
    mle = poisson_regression_mle(data)
    h = 1e-6
    for j in range(5):
        e = np.zeros(5)
        e[j] = h
        g = (loglik_poisson_regression(mle + e, data)
             - loglik_poisson_regression(mle - e, data)) / (2 * h)
        assert abs(g) < 1e-4


# direct-evaluation oracle on 100 random configurations


def test_logliks_match_pointwise_oracles():
    rng = np.random.default_rng(20240501)
    for _ in range(100):
        n = int(rng.integers(1, 15))
        counts = rng.poisson(3.0, n).astype(float)
        reals = rng.normal(0, 2, n)
        theta = float(rng.uniform(0.1, 8))
        phi = float(rng.uniform(0.05, 0.95))
        sigma = float(rng.uniform(0.3, 3))
        mu = float(rng.normal(0, 3))
        w = rng.dirichlet(np.ones(3))
        m = rng.normal(0, 3, 3)
        v = rng.uniform(0.2, 3, 3)
        k = int(rng.integers(1, 5))
        beta = rng.normal(0, 0.5, k)
        x = rng.normal(0, 1, (n, k))
        ntr = int(rng.integers(1, 20))
        y = int(rng.integers(0, ntr + 1))
        assert loglik_poisson(theta, counts) == pytest.approx(poisson_oracle(theta, counts), abs=1e-10)
        assert loglik_normal_known_var(mu, reals, sigma) == pytest.approx(
            normal_oracle(mu, reals, sigma), abs=1e-10)
        assert loglik_mixture3((w, m, v), reals) == pytest.approx(
            mixture_oracle(w, m, v, reals), abs=1e-10)
        assert loglik_geometric(phi, counts) == pytest.approx(geometric_oracle(phi, counts), abs=1e-10)
        assert loglik_binomial(phi, y, ntr) == pytest.approx(binomial_oracle(phi, y, ntr), abs=1e-10)
        assert loglik_poisson_regression(beta, Dataset(counts, x)) == pytest.approx(
            regression_oracle(beta, counts, x), abs=1e-10)


# simulators


def test_simulate_poisson_zero_rate():
    assert np.all(simulate_poisson(0.0, 50, np.random.default_rng(0)).values == 0)


def test_simulate_poisson_lln():
    theta, n = 3.7, 1_000_000
    m = simulate_poisson(theta, n, np.random.default_rng(11)).values.mean()
    assert abs(m - theta) < 3 * math.sqrt(theta / n)


def test_simulate_geometric_support_and_mean():
    v = simulate_geometric(0.4, 200_000, np.random.default_rng(5)).values
    assert v.min() == 0
    assert v.mean() == pytest.approx(0.6 / 0.4, abs=0.02)


def test_simulate_normal_seeded():
    a = simulate_normal(1.0, 10, np.random.default_rng(4)).values
    b = simulate_normal(1.0, 10, np.random.default_rng(4)).values
    assert np.array_equal(a, b)


def test_simulate_mixture_proportions():
    rng = np.random.default_rng(8)
    x = simulate_mixture3(((0.25, 0.35, 0.40), (-100.0, 0.0, 100.0), (0.5, 0.1, 1.2)),
                          100_000, rng).values
    props = [np.mean(x < -50), np.mean(np.abs(x) < 50), np.mean(x > 50)]
    assert np.allclose(props, (0.25, 0.35, 0.40), atol=0.01)


def test_simulate_regression_reproducible():
    beta = [-0.8, -0.5, 0.0, 0.5, 0.8]
    a = simulate_poisson_regression(beta, 100, np.random.default_rng(9))
    b = simulate_poisson_regression(beta, 100, np.random.default_rng(9))
    assert np.array_equal(a.values, b.values) and np.array_equal(a.covariates, b.covariates)
    assert a.covariates.mean(axis=0) == pytest.approx(beta, abs=0.35)


# Jeffreys posteriors


def test_jeffreys_poisson():
    jp = jeffreys_posterior_poisson([0])
    assert jp.mean == 0.5
    data = [2, 3, 1, 4, 2, 3, 3, 2, 2, 3]
    assert sum(data) == 25
    jp = jeffreys_posterior_poisson(data)
    assert jp.mean == pytest.approx(2.55)
    lo, hi = jp.interval()
    assert lo < 2.55 < hi


def test_jeffreys_poisson_coverage():
    rng = np.random.default_rng(1)
    hits = 0
    for _ in range(2000):
        lo, hi = jeffreys_posterior_poisson(simulate_poisson(10.0, 10, rng)).interval()
        hits += lo <= 10.0 <= hi
    assert hits / 2000 == pytest.approx(0.95, abs=0.02)


def test_jeffreys_normal():
    jp = jeffreys_posterior_normal_mean([5.0], 1.0)
    assert jp.mean == 5.0 and jp.sd == 1.0
    x = np.full(100, 5.0)
    jp = jeffreys_posterior_normal_mean(x, 1.0)
    assert jp.sd == pytest.approx(0.1)
    lo, hi = jp.interval()
    assert (lo, hi) == pytest.approx((5 - 1.959964 * 0.1, 5 + 1.959964 * 0.1), abs=1e-6)


# CSV ingestion


def test_dataset_csv_round_trip(tmp_path):
    d = simulate_poisson_regression([0.2, -0.1, 0.4], 30, np.random.default_rng(2))
    write_dataset_csv(d, tmp_path / "d.csv")
    back = read_dataset_csv(tmp_path / "d.csv")
    assert np.array_equal(back.values, d.values)
    assert np.array_equal(back.covariates, d.covariates)


def test_dataset_csv_schema_errors(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("x1,x2\n1,2\n")
    with pytest.raises(InvalidData):
        read_dataset_csv(p)
    p.write_text("y,x1\n1,abc\n")
    with pytest.raises(InvalidData):
        read_dataset_csv(p)
    p.write_text("y\n1\n2\n")
    assert read_dataset_csv(p).covariates is None
