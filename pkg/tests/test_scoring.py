import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from scoreprior.exceptions import InvalidSpec, NearBoundary
from scoreprior.prior import DensityTable, PriorSpec, UTable, UnitInterval, normalize, solve_u
from scoreprior.scoring import (InfoReport, ScoreBreakdown, convexity_eigenvalues,
                                euler_lagrange_crosscheck, info_functionals, score_at,
                                score_identity_residual, score_profile)

TOL = 1e-4


def gaussian_table(step=1e-3, half=10.0):
    g = np.arange(-round(half / step), round(half / step) + 1) * step
    return DensityTable(g, np.exp(-0.5 * g * g) / math.sqrt(2 * math.pi),
                        0.5 * math.log(2 * math.pi))


def perturbed(table: UTable, i: int, delta: float) -> UTable:
    u = np.array(table.u)
    u[i] += delta
    return UTable(table.grid, u, table.step, table.u_cap, spec=table.spec,
                  anchor_index=table.anchor_index)


SOLVED = {
    "unit-1.1": lambda: solve_u(PriorSpec.unit_interval(1.1)),
    "unit-1.14": lambda: solve_u(PriorSpec.unit_interval(1.14)),
    "unit-1.5-quarter": lambda: solve_u(PriorSpec.unit_interval(1.5, center=0.25)),
    "half-line": lambda: solve_u(PriorSpec.half_line()),
    "real-symmetric": lambda: solve_u(PriorSpec.real_symmetric()),
    "real-smooth": lambda: solve_u(PriorSpec.real_smooth(), half_width=8.0, n_points=8000),
}


# data types


def test_breakdown_total_exact():
    s = ScoreBreakdown(0.1, 0.3, -0.7)
    assert s.total == 0.3 + -0.7


def test_info_report_combined_exact():
    r = InfoReport(-1.25, 0.5)
    assert r.combined == -1.25 + 0.5 * 0.5


# score_at


def test_gaussian_log_minus_hyvarinen_constant():
    d = gaussian_table()
    diffs = [score_at(d, t).log_score - score_at(d, t).hyvarinen_score
             for t in (-2.3, -0.7, 0.0, 0.4, 1.9)]
    assert np.ptp(diffs) < 1e-3
    # closed form: S_L - S_H = log sqrt(2 pi) + 1
    assert diffs[0] == pytest.approx(0.5 * math.log(2 * math.pi) + 1.0, abs=1e-6)


def test_flat_density_scores_zero():
    d = DensityTable.uniform(0.0, 1.0, 1001)
    s = score_at(d, 0.5)
    assert s.log_score == 0.0 and abs(s.hyvarinen_score) < 1e-12 and abs(s.total) < 1e-12


@pytest.mark.parametrize("name", list(SOLVED))
def test_unnormalized_score_is_one(name):
    t = SOLVED[name]()
    lo, hi = t.support
    thetas = np.linspace(lo, hi, 14)[2:12]
    totals = []
    for th in thetas:
        try:
            totals.append(score_at(t, th).total)
        except NearBoundary:
            pass
    assert len(totals) >= 8
    assert np.ptp(totals) < 1e-2
    assert np.max(np.abs(np.array(totals) - 1.0)) < TOL


def test_normalized_score_constant_not_one():
    t = solve_u(PriorSpec.unit_interval(1.14))
    d = normalize(t)
    totals = [s.total for s in score_profile(d, np.linspace(0.05, 0.95, 10))]
    assert np.ptp(totals) < 1e-2
    # normalising shifts S_L by logZ relative to the p = exp(-(u+1)) convention
    assert totals[0] == pytest.approx(d.logZ, abs=1e-4)


def test_score_at_near_boundary():
    d = gaussian_table(step=1e-2, half=1.0)
    with pytest.raises(NearBoundary):
        score_at(d, d.grid[1])
    with pytest.raises(NearBoundary):
        score_at(d, 5.0)


def test_score_at_kink_excluded():
    t = solve_u(PriorSpec.unit_interval(1.14))
    with pytest.raises(NearBoundary):
        score_at(t, 0.5)


# identity residual and Euler-Lagrange check


@pytest.mark.parametrize("name", list(SOLVED))
def test_identity_residual_small(name):
    t = SOLVED[name]()
    assert score_identity_residual(t) < TOL
    assert euler_lagrange_crosscheck(t, t.spec.c) < 1e-6


def test_flat_table_residuals_zero():
    t = solve_u(PriorSpec.flat(UnitInterval(0.5)))
    assert score_identity_residual(t) == 0.0
    assert euler_lagrange_crosscheck(t, 2.0) == 0.0


def test_corrupted_table_detected():
    t = solve_u(PriorSpec.unit_interval(1.14))
    bad = perturbed(t, 300, 0.1)
    assert score_identity_residual(bad) > 0.01
    assert euler_lagrange_crosscheck(bad, 2.0) > 0.01


def test_wrong_constant_detected():
    t = solve_u(PriorSpec.half_line())
    mism = euler_lagrange_crosscheck(t, 3.0)
    # (3 - 2) e^u is at least e^{u_anchor}
    assert mism >= math.exp(t.spec.u_anchor) - 1e-6


@settings(max_examples=40, deadline=None)
@given(i=st.integers(5, 990),
       delta=st.one_of(st.just(0.0), st.floats(1e-3, 0.1), st.floats(-0.1, -1e-3)))
def test_residual_checks_agree_on_perturbations(i, delta):
    base = solve_u(PriorSpec.unit_interval(1.14))
    if abs(i - base.anchor_index) < 3:
        i += 6
    t = perturbed(base, i, delta)
    a = score_identity_residual(t) < TOL
    b = euler_lagrange_crosscheck(t, 2.0) < TOL
    assert a == b


# information functionals


def test_uniform_information_zero():
    r = info_functionals(DensityTable.uniform(0.0, 1.0, 1001))
    assert abs(r.entropy_info) < 1e-15 and abs(r.fisher_info) < 1e-15


def test_gaussian_information_closed_forms():
    r = info_functionals(gaussian_table())
    assert r.entropy_info == pytest.approx(-0.5 * math.log(2 * math.pi * math.e), abs=TOL)
    assert r.fisher_info == pytest.approx(1.0, abs=TOL)


def test_solved_prior_less_information_than_beta55():
    d = normalize(solve_u(PriorSpec.unit_interval(1.14)))
    g = d.grid
    beta = DensityTable.from_log_density(
        g, np.where((g > 0) & (g < 1), 4 * np.log(np.clip(g, 1e-300, None))
                    + 4 * np.log(np.clip(1 - g, 1e-300, None)), -np.inf))
    assert info_functionals(d).combined < info_functionals(beta).combined


def test_info_needs_three_points():
    with pytest.raises(InvalidSpec):
        info_functionals(DensityTable(np.array([0.0, 1.0]), np.array([1.0, 1.0]), 0.0))


# convexity eigenvalues


def hessian_oracle(p, p1):
    """Explicit Hessian of p log p + p'^2/(2p) in (p, p')."""
    h = np.array([[1.0 / p + p1 * p1 / p ** 3, -p1 / p ** 2],
                  [-p1 / p ** 2, 1.0 / p]])
    return np.sort(np.linalg.eigvalsh(h))[::-1]


def test_eigenvalues_kappa_zero():
    assert convexity_eigenvalues(1.0, 0.0) == pytest.approx((1.0, 1.0))


def test_eigenvalues_example():
    lam = convexity_eigenvalues(2.0, 2.0)
    assert lam == pytest.approx((1.309017, 0.190983), abs=1e-6)
    assert lam == pytest.approx(tuple(hessian_oracle(2.0, 2.0)), rel=1e-12)


def test_eigenvalues_require_positive_p():
    with pytest.raises(InvalidSpec):
        convexity_eigenvalues(0.0, 1.0)


@settings(max_examples=1000, deadline=None)
@given(logp=st.floats(math.log(1e-6), math.log(1e6)), kappa=st.floats(-50, 50))
def test_eigenvalues_positive(logp, kappa):
    p = math.exp(logp)
    big, small = convexity_eigenvalues(p, kappa * p)
    assert big > 0 and small > 0
    assert big * small == pytest.approx(1.0 / (p * p), rel=1e-9)
    if abs(kappa) < 5:
        assert (big, small) == pytest.approx(tuple(hessian_oracle(p, kappa * p)), rel=1e-6)


def test_scores_csv_round_trip(tmp_path):
    from scoreprior import io
    d = gaussian_table(step=1e-2, half=3.0)
    scores = score_profile(d, np.linspace(-2, 2, 9))
    io.write_scores(scores, tmp_path / "s.csv")
    back = io.read_scores(tmp_path / "s.csv")
    assert np.array_equal(back[:, 1], [s.log_score for s in scores])
    assert np.array_equal(back[:, 3], [s.total for s in scores])
