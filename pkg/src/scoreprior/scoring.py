"""Log and Hyvarinen scores, information functionals and variational checks.

Conventions: S_L = -log p and S_H = (log p)'' + (log p)'^2 / 2.  On a solved
u-table the unnormalised density is taken as p = exp(-(u + 1)), for which
S_L + S_H = 1 exactly whenever u'' - u'^2/2 = u.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidSpec, NearBoundary
from .prior import DensityTable, UTable, five_point, stencil_indices

P_FLOOR = 1e-300


@dataclass(frozen=True)
class ScoreBreakdown:
    theta: float
    log_score: float
    hyvarinen_score: float

    @property
    def total(self) -> float:
        return self.log_score + self.hyvarinen_score


@dataclass(frozen=True)
class InfoReport:
    entropy_info: float
    fisher_info: float

    @property
    def combined(self) -> float:
        return self.entropy_info + 0.5 * self.fisher_info


def _log_density(table) -> np.ndarray:
    if isinstance(table, UTable):
        return -(table.u + 1.0)
    if isinstance(table, DensityTable):
        return table.log_p
    raise TypeError(f"expected UTable or DensityTable, got {type(table).__name__}")


def _step(table) -> float:
    return float(table.step)


def _score_arrays(table):
    """S_L, S_H at every grid point with a usable stencil (NaN elsewhere)."""
    logp = _log_density(table)
    n = len(logp)
    resolved = np.asarray(table.resolved) & np.isfinite(logp)
    idx = stencil_indices(n, table.kinks, resolved=resolved)
    d1, d2 = five_point(logp, _step(table), idx)
    sh = np.full(n, np.nan)
    sh[idx] = d2 + 0.5 * d1 * d1
    return -logp, sh


def score_at(table, theta: float) -> ScoreBreakdown:
    """Scores at ``theta`` from 5-point differences of log p.

    ``table`` is a DensityTable, or a UTable read as p = exp(-(u+1)).  Off-grid
    values are linearly interpolated between the two neighbouring grid points;
    both must carry a full stencil that straddles no kink.
    """
    grid = np.asarray(table.grid)
    theta = float(theta)
    if not grid[0] <= theta <= grid[-1]:
        raise NearBoundary(f"theta={theta} outside the grid [{grid[0]}, {grid[-1]}]")
    h = _step(table)
    pos = (theta - grid[0]) / h
    i = int(math.floor(pos + 1e-9))
    frac = pos - i
    if abs(frac) < 1e-9:
        frac = 0.0
    pts = [i] if frac == 0.0 else [i, i + 1]

    sl, sh = _score_arrays(table)
    if any(j >= len(grid) or not np.isfinite(sh[j]) for j in pts):
        raise NearBoundary(f"no valid 5-point stencil around theta={theta}")
    if frac == 0.0:
        return ScoreBreakdown(theta, float(sl[i]), float(sh[i]))
    return ScoreBreakdown(theta,
                          float((1 - frac) * sl[i] + frac * sl[i + 1]),
                          float((1 - frac) * sh[i] + frac * sh[i + 1]))


def score_profile(table, thetas) -> list[ScoreBreakdown]:
    return [score_at(table, t) for t in np.atleast_1d(thetas)]


def score_identity_residual(table: UTable) -> float:
    """max |S_H + S_L - 1| with p = exp(-(u+1)), from differenced u.

    p'/p = -u' and p''/p = u'^2 - u''; returns 0 when no stencil is usable.
    """
    idx = stencil_indices(len(table), table.kinks, resolved=table.resolved)
    if idx.size == 0:
        return 0.0
    u1, u2 = five_point(table.u, table.step, idx)
    pp_p = u1 * u1 - u2
    p_p = -u1
    log_p = -(table.u[idx] + 1.0)
    res = pp_p - 0.5 * p_p * p_p - 1.0 - log_p
    return float(np.max(np.abs(res)))


def euler_lagrange_crosscheck(table: UTable, c: float) -> float:
    """max |(p')^2 - p^2 (c/(e p) + 2 log p)| / p^2 with p = exp(-(u+1)).

    After dividing by p^2 this reads |(u')^2 - c e^u + 2(1+u)|.
    """
    idx = stencil_indices(len(table), table.kinks, resolved=table.resolved)
    if idx.size == 0:
        return 0.0
    u1, _ = five_point(table.u, table.step, idx)
    u = table.u[idx]
    return float(np.max(np.abs(u1 * u1 - (c * np.exp(u) - 2.0 * (1.0 + u)))))


def info_functionals(density: DensityTable) -> InfoReport:
    """I_E = int p log p and I_F = int p'^2/p by the trapezoid rule."""
    p = np.asarray(density.p, dtype=float)
    grid = np.asarray(density.grid, dtype=float)
    if p.size < 3:
        raise InvalidSpec("need at least three grid points")
    live = p >= P_FLOOR
    safe = np.where(live, p, 1.0)
    dp = np.gradient(p, grid)
    ent = np.where(live, p * np.log(safe), 0.0)
    fis = np.where(live, dp * dp / safe, 0.0)
    return InfoReport(float(np.trapezoid(ent, grid)), float(np.trapezoid(fis, grid)))


def convexity_eigenvalues(p: float, p1: float) -> tuple[float, float]:
    """Eigenvalues of the Hessian of L(p, p') = p log p + p'^2 / (2p) in (p, p').

    Written as (1/p)(a +- sqrt(a^2 - 1)) with a = 1 + kappa^2/2, kappa = p'/p;
    the smaller root is taken from the product 1/p^2 to avoid cancellation.
    """
    if not p > 0:
        raise InvalidSpec(f"p must be positive, got {p}")
    kappa = p1 / p
    a = 1.0 + 0.5 * kappa * kappa
    big = (a + math.sqrt(a * a - 1.0)) / p
    return big, 1.0 / (p * p * big)
