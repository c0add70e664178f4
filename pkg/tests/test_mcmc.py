import math

import numpy as np
import pytest

from scoreprior.exceptions import (EmptyChain, InitOutOfDomain, InvalidSpec,
                                   NonPositiveParameter, SimplexViolation)
from scoreprior.experiments import mixture_priors
from scoreprior.mcmc import (Chain, GaussianCoordinatePrior, ProposalSpec, RandomWalkGaussian,
                             RandomWalkLogScale, chain_summary, mh_step, run_chain,
                             run_mixture_gibbs)
from scoreprior.models import (Dataset, normal_model, poisson_model, simulate_mixture3,
                               simulate_normal, simulate_poisson)
from scoreprior.prior import PriorSpec, UnitInterval, normalize, prior_u, solve_u

MIX_TRUTH = ((0.25, 0.35, 0.40), (-3.5, 0.0, 2.5), (0.5, 0.1, 1.2))


def tv_against_table(draws, density, bins=50):
    edges = np.linspace(density.grid[0], density.grid[-1], bins + 1)
    emp, _ = np.histogram(draws, edges)
    emp = emp / emp.sum()
    cdf = np.concatenate([[0], np.cumsum(0.5 * (density.p[1:] + density.p[:-1])
                                          * np.diff(density.grid))])
    ref = np.diff(np.interp(edges, density.grid, cdf))
    return 0.5 * np.abs(emp - ref / ref.sum()).sum()


# proposals


def test_proposal_validation():
    with pytest.raises(NonPositiveParameter):
        RandomWalkGaussian(0.0)
    with pytest.raises(InvalidSpec):
        ProposalSpec(1.0, "cauchy")


def test_log_scale_hastings_term():
    new, log_q = RandomWalkLogScale(0.5).propose(2.0, 0.8)
    assert new == pytest.approx(2.0 * math.exp(0.4))
    assert log_q == pytest.approx(0.4)
    assert RandomWalkGaussian(0.5).propose(2.0, 0.8) == (2.4, 0.0)


# mh_step


def test_flat_prior_constant_likelihood_always_accepts():
    spec = PriorSpec.flat()
    rng = np.random.default_rng(0)
    state = (0.0, 0.0)
    for _ in range(200):
        theta, u, ok = mh_step(state, lambda t: 0.0, spec, RandomWalkGaussian(0.5), rng)
        assert ok and u == 0.0
        state = (theta, u)


def test_weight_outside_unit_interval_rejected():
    spec = PriorSpec.unit_interval(1.14)
    u0 = prior_u(spec, 0.9)

    class Rng:  # z = +5 pushes the proposal to 0.9 + 5 * 0.1 = 1.4
        def standard_normal(self):
            return 5.0

        def random(self):
            return 0.5

    theta, u, ok = mh_step((0.9, u0), lambda t: 0.0, spec, RandomWalkGaussian(0.1), Rng())
    assert (theta, u, ok) == (0.9, u0, False)


def test_gaussian_coordinate_prior_ratio():
    p = GaussianCoordinatePrior(0.0, 4.0)
    assert p.log_ratio(1.0, 3.0, 0.0)[0] == pytest.approx((1 - 9) / 8)


# run_chain


def test_run_chain_deterministic():
    data = simulate_normal(0.2, 50, np.random.default_rng(1))
    spec = PriorSpec.real_symmetric()
    kw = dict(iters=2000, burn_in=500, data=data)
    a = run_chain(normal_model(), [spec], [0.0], RandomWalkGaussian(0.3), seed=7, **kw)
    b = run_chain(normal_model(), [spec], [0.0], RandomWalkGaussian(0.3), seed=7, **kw)
    c = run_chain(normal_model(), [spec], [0.0], RandomWalkGaussian(0.3), seed=8, **kw)
    assert np.array_equal(a.draws, b.draws) and np.array_equal(a.accepted, b.accepted)
    assert not np.array_equal(a.draws, c.draws)


def test_single_retained_draw():
    ch = run_chain(lambda p: 0.0, [PriorSpec.flat()], [0.0], RandomWalkGaussian(1.0), 11, 10)
    assert ch.retained.shape == (1, 1)


def test_init_out_of_domain():
    with pytest.raises(InitOutOfDomain):
        run_chain(lambda p: 0.0, [PriorSpec.unit_interval(1.14)], [1.5],
                  RandomWalkGaussian(0.1), 10, 5)
    with pytest.raises(InitOutOfDomain):
        run_chain(lambda p: -math.inf, [PriorSpec.flat()], [0.0], RandomWalkGaussian(0.1), 10, 5)


def test_bad_burn_in():
    with pytest.raises(InvalidSpec):
        run_chain(lambda p: 0.0, [PriorSpec.flat()], [0.0], RandomWalkGaussian(1.0), 10, 10)


def test_chain_stays_in_domain_and_counts_valid():
    spec = PriorSpec.unit_interval(1.14)
    ch = run_chain(lambda p: 0.0, [spec], [0.5], RandomWalkGaussian(0.5), 5000, 0, seed=3)
    assert np.all((ch.draws > 0) & (ch.draws < 1))
    assert 0 < ch.accepted[0] < ch.iterations


def test_chain_validation():
    with pytest.raises(InvalidSpec):
        Chain(np.zeros((5, 1)), [6], 0)
    with pytest.raises(InvalidSpec):
        Chain(np.zeros((5, 1)), [1], 6)


# summaries


def test_constant_chain_summary():
    s = chain_summary(Chain(np.full((100, 2), 3.5), [0, 0], 10))
    assert np.all(s.mean == 3.5) and np.all(s.sd == 0)
    assert np.all(s.lower == 3.5) and np.all(s.upper == 3.5)


def test_iid_normal_summary():
    z = np.random.default_rng(0).standard_normal((100_000, 1))
    s = chain_summary(Chain(z, [100_000], 0))
    assert abs(s.mean[0]) < 0.02 and abs(s.sd[0] - 1) < 0.02
    assert s.lower[0] == pytest.approx(-1.96, abs=0.03) and s.upper[0] == pytest.approx(1.96, abs=0.03)


def test_empty_chain():
    with pytest.raises(EmptyChain):
        chain_summary(Chain(np.zeros((5, 1)), [0], 5))


# stationary distributions


def test_detailed_balance_five_states():
    levels = np.array([0.0, 1.0, -0.5, 0.7, 0.2])

    def ll(p):
        t = p[0]
        return levels[int(t)] if 0 <= t < 5 else -math.inf

    ch = run_chain(ll, [PriorSpec.flat()], [2.5], RandomWalkGaussian(1.5), 1_000_000, 0, seed=1)
    emp = np.bincount(ch.draws[:, 0].astype(int), minlength=5) / ch.iterations
    want = np.exp(levels) / np.exp(levels).sum()
    assert 0.5 * np.abs(emp - want).sum() < 0.05


def test_prior_only_chain_matches_table():
    spec = PriorSpec.unit_interval(1.14)
    ch = run_chain(lambda p: 0.0, [spec], [0.5], RandomWalkGaussian(0.3), 1_000_000, 0, seed=2)
    tv = tv_against_table(ch.draws[:, 0], normalize(solve_u(spec)))
    assert tv < 0.05


# reference experiments


def _poisson_chain(theta=2.5, iters=20_000, seed=0):
    data = simulate_poisson(theta, 100, np.random.default_rng(seed))
    spec = PriorSpec.half_line()
    lo, hi = solve_u(spec).support
    init = min(float(data.values.mean()), 0.9 * hi)
    return run_chain(poisson_model(), [spec], [init],
                     RandomWalkLogScale(2.4 / math.sqrt(data.values.sum() + 1)),
                     iters, seed=seed, data=data)


def test_poisson_chain_acceptance_in_open_interval():
    rate = _poisson_chain().acceptance_rate[0]
    assert 0 < rate < 1


@pytest.mark.xfail(strict=True, reason="the half-line prior has support [0, 0.917], so the "
                                      "posterior cannot reach theta = 2.5")
def test_poisson_posterior_centres_on_truth():
    s = chain_summary(_poisson_chain(iters=100_000))
    assert abs(s.mean[0] - 2.5) < 2 * s.sd[0]


@pytest.mark.xfail(strict=True, reason="the symmetric real-line prior has support "
                                      "[-0.917, 0.917], so the posterior cannot reach mu = 5")
def test_normal_posterior_centres_on_truth():
    data = simulate_normal(5.0, 100, np.random.default_rng(0))
    ch = run_chain(normal_model(), [PriorSpec.real_symmetric()], [0.5], RandomWalkGaussian(0.2),
                   100_000, seed=0, data=data)
    s = chain_summary(ch)
    assert abs(s.mean[0] - 5.0) < 2 * s.sd[0]


def test_normal_posterior_with_truth_inside_support():
    data = simulate_normal(0.4, 100, np.random.default_rng(0))
    ch = run_chain(normal_model(), [PriorSpec.real_symmetric()], [0.0], RandomWalkGaussian(0.2),
                   20_000, seed=0, data=data)
    s = chain_summary(ch)
    assert abs(s.mean[0] - data.values.mean()) < 2 * s.sd[0]
    assert 0 < s.acceptance_rate[0] < 1


# mixture


def _mixture_chain(n, seed, iters=4000):
    data = simulate_mixture3(MIX_TRUTH, n, np.random.default_rng(seed))
    return run_mixture_gibbs(data, mixture_priors(), iters, seed=seed)


def test_mixture_weights_on_simplex_every_iteration():
    ch = _mixture_chain(100, 0, iters=2000)
    w = ch.draws[:, :3]
    assert np.all((w > 0) & (w < 1))
    assert np.allclose(w.sum(axis=1), 1.0, atol=1e-12)
    assert np.all(ch.draws[:, 6:] > 0)
    rates = ch.acceptance_rate
    assert np.all((rates > 0) & (rates < 1))


def test_mixture_deterministic():
    a = _mixture_chain(100, 4, iters=300)
    b = _mixture_chain(100, 4, iters=300)
    assert np.array_equal(a.draws, b.draws)


def test_mixture_bad_init():
    data = Dataset(np.zeros(10))
    bad = np.array([0.5, 0.5, 0.5, 0, 0, 0, 1, 1, 1])
    with pytest.raises(SimplexViolation):
        run_mixture_gibbs(data, mixture_priors(), 10, init=bad)
    with pytest.raises(InitOutOfDomain):
        run_mixture_gibbs(Dataset(np.zeros(0)), mixture_priors(), 10)


def test_mixture_more_data_concentrates():
    ratios = []
    for seed in range(3):
        sd100 = chain_summary(_mixture_chain(100, seed, 2000)).sd[3:6]
        sd250 = chain_summary(_mixture_chain(250, seed, 2000)).sd[3:6]
        ratios.append(np.mean(sd250 / sd100))
    assert np.mean(ratios) <= 1.0


@pytest.mark.xfail(strict=True, reason="the symmetrised real-line prior on the means has "
                                      "support [-0.917, 0.917], which excludes -3.5 and 2.5")
def test_mixture_means_recovered():
    ch = _mixture_chain(100, 0, iters=10_000)
    s = chain_summary(ch)
    assert np.all(np.abs(s.mean[3:6] - np.array(MIX_TRUTH[1])) < 3 * s.sd[3:6])


def test_chain_csv_round_trip(tmp_path):
    from scoreprior import io
    ch = _mixture_chain(50, 1, iters=100)
    io.write_chain(ch, tmp_path / "c.csv")
    back = io.read_chain(tmp_path / "c.csv")
    assert np.array_equal(back.draws, ch.draws)
    assert np.array_equal(back.accepted, ch.accepted)
    assert (back.burn_in, back.seed, back.names) == (ch.burn_in, ch.seed, ch.names)
    s = chain_summary(ch)
    io.write_summary(s, tmp_path / "s.csv", ch.names)
    names, vals = io.read_summary(tmp_path / "s.csv")
    assert tuple(names) == ch.names
    assert np.array_equal(vals[:, 0], s.mean)
