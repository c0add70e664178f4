"""Scoring-rule priors: p(theta) proportional to exp(-u(theta)).

u solves u'' - u'^2/2 = u, whose first integral is

    u' = +-sqrt(c * exp(u) - 2 * (1 + u)),

so a prior is fixed by a domain, the constant ``c`` and the value of u at an
anchor point.  On every supported domain u is smallest at the anchor and
nondecreasing with distance from it; this is the branch-sign rule.

For c >= 2 and u(anchor) > 0 the solution reaches infinity at a finite
distance from the anchor (about 0.918 for the default half-line prior), so
the prior has bounded support.  Tables stop where u exceeds ``U_CAP``; close
to the blow-up the grid no longer resolves the derivatives of u, and
finite-difference diagnostics skip those points (see ``UTable.resolved``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _taylor
from .exceptions import DegenerateMass, DomainExit, InvalidSpec, RadicandNegative

MAX_STEP = 1e-3
TABLE_SUBSTEP = 1e-5
U_CAP = 700.0
TOL_RADICAND = 1e-12
BOUNDARY_EPS = 1e-12
RESOLUTION_TOL = 1e-7
DEFAULT_POINTS = 1000

ROUNDED_HALF_LINE_ANCHOR = 1.31


# ---------------------------------------------------------------------------
# domains


@dataclass(frozen=True)
class UnitInterval:
    """Theta in (0, 1), anchored at ``center``; u' < 0 left of it, > 0 right."""

    center: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.center < 1.0:
            raise InvalidSpec(f"UnitInterval center must lie in (0, 1), got {self.center}")

    name = "unit"
    lower = 0.0
    upper = 1.0
    kinked = True

    @property
    def anchor(self) -> float:
        return self.center

    def contains(self, theta: float) -> bool:
        return BOUNDARY_EPS < theta < 1.0 - BOUNDARY_EPS


@dataclass(frozen=True)
class PositiveHalfLine:
    """Theta in (0, inf), anchored at 0 with u' > 0 throughout."""

    name = "half-line"
    lower = 0.0
    upper = math.inf
    kinked = False
    anchor = 0.0

    def contains(self, theta: float) -> bool:
        return 0.0 < theta < math.inf


@dataclass(frozen=True)
class RealLineSymmetric:
    """Mirror image of the half-line prior: u(theta) = u(|theta|)."""

    name = "real-symmetric"
    lower = -math.inf
    upper = math.inf
    kinked = True
    anchor = 0.0

    def contains(self, theta: float) -> bool:
        return math.isfinite(theta)


@dataclass(frozen=True)
class RealLineSmooth:
    """Real line with u'(0) = 0, i.e. c*exp(u(0)) = 2 + 2*u(0)."""

    name = "real-smooth"
    lower = -math.inf
    upper = math.inf
    kinked = False
    anchor = 0.0

    def contains(self, theta: float) -> bool:
        return math.isfinite(theta)


DomainKind = UnitInterval | PositiveHalfLine | RealLineSymmetric | RealLineSmooth

DOMAIN_NAMES = ("unit", "half-line", "real-symmetric", "real-smooth")


def make_domain(name: str, center: float = 0.5) -> DomainKind:
    if name == "unit":
        return UnitInterval(center)
    if name == "half-line":
        return PositiveHalfLine()
    if name == "real-symmetric":
        return RealLineSymmetric()
    if name == "real-smooth":
        return RealLineSmooth()
    raise InvalidSpec(f"unknown domain {name!r}; expected one of {DOMAIN_NAMES}")


# ---------------------------------------------------------------------------
# anchor constants


def _anchor_equation(u: float) -> float:
    return (1.0 + 2.0 * u) * math.exp(-u) - 1.0


def solve_half_line_anchor(lo: float = 0.5, hi: float = 10.0, tol: float = 1e-12) -> float:
    """Root above 1/2 of (1 + 2u) exp(-u) = 1, by bisection.

    The left side decreases from its maximum 2/sqrt(e) at u = 1/2 to 0, so the
    root on [0.5, 10] is unique.  Its value is about 1.2564 (the literature
    value 1.31 does not satisfy the equation).
    """
    f_lo = _anchor_equation(lo)
    if f_lo <= 0.0 or _anchor_equation(hi) >= 0.0:
        raise InvalidSpec("bisection bracket does not contain a sign change")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _anchor_equation(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def anchor_discrepancy() -> dict:
    """Computed anchor constants next to the rounded value 1.31."""
    root = solve_half_line_anchor()
    return {
        "root": root,
        "root_rounded": ROUNDED_HALF_LINE_ANCHOR,
        "root_residual": _anchor_equation(root),
        "rounded_residual": _anchor_equation(ROUNDED_HALF_LINE_ANCHOR),
        "max_value": 2.0 * math.exp(-0.5),
        "max_value_rounded": ROUNDED_HALF_LINE_ANCHOR,
        "argmax": 0.5,
    }


# ---------------------------------------------------------------------------
# prior specification


@dataclass(frozen=True)
class PriorSpec:
    domain: DomainKind
    c: float
    u_anchor: float

    def __post_init__(self):
        if not (math.isfinite(self.c) and math.isfinite(self.u_anchor)):
            raise InvalidSpec("c and u_anchor must be finite")
        if self.u_anchor > U_CAP:
            raise InvalidSpec(f"u_anchor={self.u_anchor} exceeds the overflow ceiling {U_CAP}")
        rad = self.radicand_at_anchor
        if rad < -TOL_RADICAND:
            raise InvalidSpec(
                f"c*exp(u)-2(1+u) = {rad:.3e} < 0 at the anchor (c={self.c}, u={self.u_anchor})"
            )
        if isinstance(self.domain, PositiveHalfLine) and self.c < 2.0:
            raise InvalidSpec(f"half-line priors need c >= 2, got {self.c}")
        if isinstance(self.domain, RealLineSmooth) and abs(rad) > 1e-9:
            raise InvalidSpec("smooth real-line priors need c*exp(u0) = 2 + 2*u0")

    @property
    def anchor(self) -> float:
        return self.domain.anchor

    @property
    def radicand_at_anchor(self) -> float:
        return self.c * math.exp(self.u_anchor) - 2.0 * (1.0 + self.u_anchor)

    # constructors for the canonical configurations

    @classmethod
    def unit_interval(cls, w: float = 1.14, center: float = 0.5, c: float = 2.0) -> "PriorSpec":
        if w <= 0:
            raise InvalidSpec(f"w must be positive, got {w}")
        return cls(UnitInterval(center), c, w)

    @classmethod
    def half_line(cls, u_anchor: float | None = None, c: float = 2.0,
                  rounded_anchor: bool = False) -> "PriorSpec":
        if u_anchor is None:
            u_anchor = ROUNDED_HALF_LINE_ANCHOR if rounded_anchor else solve_half_line_anchor()
        return cls(PositiveHalfLine(), c, u_anchor)

    @classmethod
    def real_symmetric(cls, u_anchor: float | None = None, c: float = 2.0,
                       rounded_anchor: bool = False) -> "PriorSpec":
        if u_anchor is None:
            u_anchor = ROUNDED_HALF_LINE_ANCHOR if rounded_anchor else solve_half_line_anchor()
        return cls(RealLineSymmetric(), c, u_anchor)

    @classmethod
    def real_smooth(cls, u_anchor: float = 0.01) -> "PriorSpec":
        return cls(RealLineSmooth(), 2.0 * (1.0 + u_anchor) / math.exp(u_anchor), u_anchor)

    @classmethod
    def flat(cls, domain: DomainKind | None = None) -> "PriorSpec":
        return cls(domain if domain is not None else RealLineSmooth(), 2.0, 0.0)


# ---------------------------------------------------------------------------
# pointwise derivatives and steps


def u_derivatives(u: float, c: float, tol_radicand: float = TOL_RADICAND):
    """Magnitudes (u', u'', u''') at a point where u takes the value ``u``.

    The sign of u' (and u''') is left to the caller's branch.
    """
    u1, u2, u3 = _taylor.derivatives(float(u), float(c), tol_radicand)
    if math.isnan(u1):
        rad = c * math.exp(u) - 2.0 * (1.0 + u)
        raise RadicandNegative(f"c*exp(u)-2(1+u) = {rad:.3e} at u={u}, c={c}")
    return u1, u2, u3


def step_u(u: float, c: float, sign: int, eps: float) -> float:
    """One third-order Taylor step of size ``eps`` on the branch u' = sign*|u'|."""
    if abs(eps) > MAX_STEP * (1 + 1e-12):
        raise ValueError(f"step {eps} exceeds the maximum single step {MAX_STEP}")
    u1, u2, u3 = u_derivatives(u, c)
    return u + eps * sign * u1 + 0.5 * eps * eps * u2 + eps ** 3 / 6.0 * sign * u3


# ---------------------------------------------------------------------------
# tables


def _readonly(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class UTable:
    """u tabulated on a uniform grid around the anchor.

    ``support`` is the closed theta-interval covered by the table;
    ``tail_mass_bound`` bounds the unnormalised mass of exp(-u) that lies
    beyond it (0 when a branch reached a finite domain boundary).
    """

    grid: np.ndarray
    u: np.ndarray
    step: float
    u_cap: float
    spec: PriorSpec | None = None
    anchor_index: int | None = None
    tail_mass_bound: float = 0.0
    status: tuple = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "grid", _readonly(self.grid))
        object.__setattr__(self, "u", _readonly(self.u))
        if self.grid.shape != self.u.shape or self.grid.ndim != 1:
            raise ValueError("grid and u must be 1-d arrays of equal length")

    def __len__(self):
        return len(self.grid)

    @property
    def support(self) -> tuple[float, float]:
        return float(self.grid[0]), float(self.grid[-1])

    @property
    def kinks(self) -> tuple:
        if self.spec is not None and self.spec.domain.kinked and self.anchor_index is not None:
            return (self.anchor_index,)
        return ()

    @property
    def resolved(self) -> np.ndarray:
        """Points where 5-point differences of u are accurate to RESOLUTION_TOL."""
        if self.spec is None:
            return np.ones(len(self), dtype=bool)
        return stencil_error_estimate(self.u, self.spec.c, self.step) <= RESOLUTION_TOL

    @property
    def normalizer_log(self) -> float:
        return _log_trapezoid_exp(-self.u, self.step)

    def u_at(self, theta) -> np.ndarray:
        """Linear interpolation of u; +inf outside the tabulated support."""
        theta = np.asarray(theta, dtype=float)
        out = np.interp(theta, self.grid, self.u)
        return np.where((theta < self.grid[0]) | (theta > self.grid[-1]), np.inf, out)


@dataclass(frozen=True)
class DensityTable:
    grid: np.ndarray
    p: np.ndarray
    logZ: float
    kinks: tuple = ()
    resolved: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "grid", _readonly(self.grid))
        object.__setattr__(self, "p", _readonly(self.p))
        if self.resolved is None:
            object.__setattr__(self, "resolved", np.ones(len(self.grid), dtype=bool))
        if self.grid.shape != self.p.shape or self.resolved.shape != self.p.shape:
            raise ValueError("grid, p and resolved must have equal length")
        if np.any(self.p < 0):
            raise ValueError("densities must be nonnegative")

    @property
    def step(self) -> float:
        return float(self.grid[1] - self.grid[0])

    @property
    def log_p(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self.p)

    def mass(self) -> float:
        return float(np.trapezoid(self.p, self.grid))

    def logpdf(self, theta) -> np.ndarray:
        """log density, linear interpolation of log p; -inf off the grid."""
        theta = np.asarray(theta, dtype=float)
        out = np.interp(theta, self.grid, self.log_p)
        return np.where((theta < self.grid[0]) | (theta > self.grid[-1]), -np.inf, out)

    @classmethod
    def from_log_density(cls, grid, log_p, kinks=()) -> "DensityTable":
        """Normalise an arbitrary log density sampled on a uniform grid."""
        grid = np.asarray(grid, dtype=float)
        log_p = np.asarray(log_p, dtype=float)
        step = float(grid[1] - grid[0])
        logZ = _log_trapezoid_exp(log_p, step)
        if not math.isfinite(logZ):
            raise DegenerateMass("log density has no finite mass on the grid")
        return cls(grid, np.exp(log_p - logZ), logZ, tuple(kinks))

    @classmethod
    def uniform(cls, lower: float = 0.0, upper: float = 1.0, n_points: int = 10_001) -> "DensityTable":
        grid = np.linspace(lower, upper, n_points)
        return cls(grid, np.full(n_points, 1.0 / (upper - lower)), math.log(upper - lower))


def _log_trapezoid_exp(log_f: np.ndarray, step: float) -> float:
    """log of the trapezoid integral of exp(log_f) on a uniform grid."""
    log_f = np.asarray(log_f, dtype=float)
    finite = np.isfinite(log_f)
    if log_f.size < 2 or not finite.any():
        return -math.inf
    shift = np.max(log_f[finite])
    w = np.exp(log_f - shift)
    total = step * (w.sum() - 0.5 * (w[0] + w[-1]))
    if total <= 0:
        return -math.inf
    return shift + math.log(total)


def _branch_tail_bound(u_end: float, c: float) -> float:
    u1, u2, _ = u_derivatives(u_end, c)
    # beyond the last point u' keeps growing when u'' >= 0, so the tail
    # integral of exp(-u) is at most exp(-u_end)/u'(u_end)
    if u1 <= 0.0 or u2 < 0.0:
        return math.inf
    return math.exp(-u_end) / u1


def solve_u(spec: PriorSpec, half_width: float | None = None, n_points: int = DEFAULT_POINTS,
            *, substep: float = TABLE_SUBSTEP, u_cap: float = U_CAP) -> UTable:
    """Tabulate u on a uniform grid of ``n_points`` steps per side of the anchor.

    ``half_width`` defaults to the larger distance from the anchor to the
    unit-interval boundary, or 1 on unbounded domains.  Each grid interval is
    integrated with uniform Taylor sub-steps no longer than ``substep``.
    """
    if not isinstance(spec, PriorSpec):
        raise InvalidSpec("solve_u expects a PriorSpec")
    if n_points < 2:
        raise InvalidSpec(f"n_points must be >= 2, got {n_points}")
    dom = spec.domain
    a = spec.anchor
    if half_width is None:
        half_width = max(a, 1.0 - a) if isinstance(dom, UnitInterval) else 1.0
    if not half_width > 0:
        raise InvalidSpec(f"half_width must be positive, got {half_width}")
    if not 0 < substep <= MAX_STEP:
        raise InvalidSpec(f"substep must lie in (0, {MAX_STEP}]")
    h = half_width / n_points

    if isinstance(dom, UnitInterval):
        n_left = min(n_points, int(math.floor(a / h + 1e-9)))
        n_right = min(n_points, int(math.floor((1.0 - a) / h + 1e-9)))
    elif isinstance(dom, PositiveHalfLine):
        n_left, n_right = 0, n_points
    else:
        n_left = n_right = n_points

    n = max(n_left, n_right)
    if isinstance(dom, RealLineSmooth):
        vals, status = _taylor.integrate_branch_second_order(
            float(spec.u_anchor), 0.0, float(spec.c), h, n, substep, u_cap)
    else:
        vals, status = _taylor.integrate_branch(
            float(spec.u_anchor), float(spec.c), h, n, substep, u_cap, TOL_RADICAND)
    if status == _taylor.RADICAND:
        raise RadicandNegative(f"negative radicand while integrating {spec}")

    left = vals[: n_left + 1]
    right = vals[: n_right + 1]
    tail = 0.0
    statuses = []
    for side_n, side in ((n_left, left), (n_right, right)):
        if isinstance(dom, PositiveHalfLine) and side is left:
            continue
        reached = len(side) - 1
        side_status = status if reached < side_n else _taylor.COMPLETE
        statuses.append(side_status)
        if isinstance(dom, UnitInterval) and side_status == _taylor.COMPLETE:
            # u increases towards the boundary, so the uncovered gap holds
            # at most gap * exp(-u_end)
            gap = (a if side is left else 1.0 - a) - h * side_n
            tail += max(gap, 0.0) * math.exp(-float(side[-1]))
            continue
        tail += _branch_tail_bound(float(side[-1]), spec.c)

    k_left = np.arange(len(left) - 1, 0, -1)
    k_right = np.arange(0, len(right))
    grid = np.concatenate([a - h * k_left, a + h * k_right])
    u = np.concatenate([left[:0:-1], right])
    anchor_index = len(left) - 1
    return UTable(grid, u, h, u_cap, spec=spec, anchor_index=anchor_index,
                  tail_mass_bound=tail, status=tuple(statuses))


def normalize(table: UTable) -> DensityTable:
    """Normalise exp(-u) to unit trapezoid mass over the table's grid."""
    if len(table) < 2:
        raise DegenerateMass("table needs at least two points")
    u = np.where(table.u <= table.u_cap, table.u, np.inf)
    logZ = _log_trapezoid_exp(-u, table.step)
    if not math.isfinite(logZ):
        raise DegenerateMass("every tabulated u exceeds the overflow ceiling")
    return DensityTable(table.grid, np.exp(-u - logZ), logZ, table.kinks, table.resolved)


def derivative_lower_bound(spec: PriorSpec) -> float:
    """A lower bound on u' away from the anchor, valid when c >= 2.

    exp(u) - 1 - u >= u^2/2 >= u(0)^2/2 gives u' >= u(0).
    """
    if spec.c < 2.0:
        raise InvalidSpec("the bound needs c >= 2")
    return max(spec.u_anchor, 0.0)


def tail_bound_check(table: UTable, p0: float, eps_lower: float) -> bool:
    """Whether exp(-u(theta)) <= p0 * exp(-eps_lower * theta) on the whole grid."""
    if p0 <= 0:
        return False
    theta = table.grid - table.grid[0]
    lhs = -table.u
    rhs = math.log(p0) - eps_lower * theta
    return bool(np.all(lhs <= rhs + 1e-12 * (1.0 + np.abs(rhs))))


# ---------------------------------------------------------------------------
# finite-difference diagnostics


def stencil_error_estimate(u, c: float, h: float) -> np.ndarray:
    """Leading-order error of the 5-point checks of the ODE at step ``h``.

    Uses closed forms of u^(5) and u^(6) along the solution; the estimate is
    the larger of the errors in u'' - u'^2/2 - u and in (u')^2.
    """
    u = np.asarray(u, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        e = 0.5 * c * np.exp(u)
        u1 = np.sqrt(np.maximum(2.0 * e - 2.0 - 2.0 * u, 0.0))
        u2 = e - 1.0
        q = u1 * u1 + 4.0 * e - 3.0
        u5 = e * u1 * q
        u6 = e * ((u1 * u1 + u2) * q + u1 * u1 * (2.0 * u2 + 4.0 * e))
        h4 = h ** 4
        err1 = h4 * np.abs(u5) / 30.0
        err2 = h4 * np.abs(u6) / 90.0
        est = np.maximum(err2 + u1 * err1, 2.0 * u1 * err1)
    return np.where(np.isfinite(est), est, np.inf)


def stencil_indices(n: int, kinks: Sequence[int] = (), half: int = 2,
                    resolved: np.ndarray | None = None) -> np.ndarray:
    """Centres i whose stencil i-half..i+half fits, straddles no kink and
    touches only resolved points."""
    idx = np.arange(half, n - half)
    for k in kinks:
        idx = idx[(k <= idx - half) | (k >= idx + half)]
    if resolved is not None:
        ok = np.ones(len(idx), dtype=bool)
        for off in range(-half, half + 1):
            ok &= resolved[idx + off]
        idx = idx[ok]
    return idx


def five_point(f: np.ndarray, h: float, idx: np.ndarray):
    """Fourth-order central first and second derivatives at ``idx``."""
    fm2, fm1, f0, fp1, fp2 = (f[idx - 2], f[idx - 1], f[idx], f[idx + 1], f[idx + 2])
    d1 = (fm2 - 8.0 * fm1 + 8.0 * fp1 - fp2) / (12.0 * h)
    d2 = (-fm2 + 16.0 * fm1 - 30.0 * f0 + 16.0 * fp1 - fp2) / (12.0 * h * h)
    return d1, d2


def ode_residual(table: UTable) -> np.ndarray:
    """u'' - u'^2/2 - u from finite differences, at every valid interior point."""
    idx = stencil_indices(len(table), table.kinks, resolved=table.resolved)
    d1, d2 = five_point(table.u, table.step, idx)
    return d2 - 0.5 * d1 * d1 - table.u[idx]


def branch_residual(table: UTable) -> np.ndarray:
    """Relative mismatch of (u')^2 against c*exp(u) - 2(1+u)."""
    if table.spec is None:
        raise InvalidSpec("table carries no spec")
    idx = stencil_indices(len(table), table.kinks, resolved=table.resolved)
    d1, _ = five_point(table.u, table.step, idx)
    u = table.u[idx]
    rhs = table.spec.c * np.exp(u) - 2.0 * (1.0 + u)
    return (d1 * d1 - rhs) / np.maximum(np.abs(rhs), 1.0)


# ---------------------------------------------------------------------------
# prior ratios along a chain


def _side(theta: float, anchor: float) -> int:
    return int(theta > anchor) - int(theta < anchor)


def _advance_checked(spec: PriorSpec, u: float, sign: int, delta: float) -> float:
    out = _taylor.advance(float(u), spec.c, float(sign), float(delta), MAX_STEP, U_CAP,
                          spec.u_anchor, TOL_RADICAND)
    if math.isnan(out):
        raise RadicandNegative(f"negative radicand stepping {spec}")
    if math.isinf(out):
        raise DomainExit("proposal lies beyond the prior's support (u passed the cap)")
    return out


def prior_u(spec: PriorSpec, theta: float) -> float:
    """u(theta), integrated outward from the anchor."""
    if not spec.domain.contains(theta):
        raise DomainExit(f"theta={theta} outside {spec.domain.name}")
    a = spec.anchor
    return _advance_checked(spec, spec.u_anchor, _side(theta, a), theta - a)


def log_prior_ratio(spec: PriorSpec, theta_from: float, theta_to: float,
                    u_from: float) -> tuple[float, float]:
    """log p(theta_to) - log p(theta_from) and the new u, by Taylor sub-steps.

    Only the increment theta_from -> theta_to is integrated.  A move across
    the anchor restarts from the pinned anchor value.
    """
    if not spec.domain.contains(theta_to):
        raise DomainExit(f"theta={theta_to} outside {spec.domain.name}")
    if theta_to == theta_from:
        return 0.0, u_from
    a = spec.anchor
    s_from = _side(theta_from, a)
    s_to = _side(theta_to, a)
    if s_from * s_to < 0 or s_from == 0:
        u_to = _advance_checked(spec, spec.u_anchor, s_to, theta_to - a)
    else:
        u_to = _advance_checked(spec, u_from, s_from, theta_to - theta_from)
    return -(u_to - u_from), u_to


class ProductPrior:
    """Independent product of one-dimensional scoring-rule priors."""

    def __init__(self, specs: Sequence[PriorSpec]):
        if len(specs) < 1:
            raise InvalidSpec("need at least one coordinate prior")
        self.specs = list(specs)

    def __len__(self):
        return len(self.specs)

    def u_at(self, theta) -> np.ndarray:
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        if theta.shape != (len(self),):
            raise ValueError(f"expected {len(self)} coordinates")
        return np.array([prior_u(s, t) for s, t in zip(self.specs, theta)])

    def log_ratio(self, theta_from, theta_to, u_from):
        """Joint log prior ratio and the updated u vector."""
        total = 0.0
        u_to = np.empty(len(self))
        for j, spec in enumerate(self.specs):
            r, u_to[j] = log_prior_ratio(spec, float(theta_from[j]), float(theta_to[j]),
                                         float(u_from[j]))
            total += r
        return total, u_to
