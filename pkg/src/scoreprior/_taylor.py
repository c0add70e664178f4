"""Compiled kernels for third-order Taylor stepping of u' = +-sqrt(c e^u - 2(1+u)).

These are scalar loops called once per MCMC proposal and once per tabulated
branch, so they are jitted.  Errors are signalled through return values
(``inf`` = passed the overflow ceiling, ``nan`` = negative radicand) and
turned into exceptions by the Python callers in :mod:`scoreprior.prior`.
"""

import math

import numpy as np
from numba import njit

# integrate_branch status codes
COMPLETE = 0
CAPPED = 1
RADICAND = 2


@njit(cache=True)
def derivatives(u, c, tol_radicand):
    ec = c * math.exp(u)
    rad = ec - 2.0 - 2.0 * u
    if rad < 0.0:
        if rad < -tol_radicand:
            return math.nan, math.nan, math.nan
        rad = 0.0
    u1 = math.sqrt(rad)
    return u1, 0.5 * ec - 1.0, 0.5 * ec * u1


@njit(cache=True)
def taylor_step(u, c, sign, eps, tol_radicand):
    u1, u2, u3 = derivatives(u, c, tol_radicand)
    if math.isnan(u1):
        return math.nan
    return u + eps * sign * u1 + 0.5 * eps * eps * u2 + eps * eps * eps / 6.0 * sign * u3


@njit(cache=True)
def n_substeps(delta, max_step):
    m = int(math.ceil(abs(delta) / max_step * (1.0 - 1e-12)))
    return max(m, 1)


@njit(cache=True)
def advance(u, c, sign, delta, max_step, u_cap, u_floor, tol_radicand):
    """Move u along one branch by the signed theta-distance ``delta``."""
    if delta == 0.0:
        return u
    m = n_substeps(delta, max_step)
    eps = delta / m
    for _ in range(m):
        if u > u_cap:
            return math.inf
        u = taylor_step(u, c, sign, eps, tol_radicand)
        if math.isnan(u):
            return math.nan
        if u < u_floor:
            u = u_floor
    if u > u_cap:
        return math.inf
    return u


@njit(cache=True)
def integrate_branch(u0, c, h, n, substep, u_cap, tol_radicand):
    """Tabulate u at distances 0, h, 2h, ... nh from the anchor.

    u is nondecreasing with distance on every branch, so the step is taken
    with sign=+1.  Returns the tabulated values (fewer than n+1 when u passes
    ``u_cap``) and a status code.
    """
    out = np.empty(n + 1)
    out[0] = u0
    m = n_substeps(h, substep)
    eps = h / m
    u = u0
    for k in range(1, n + 1):
        for _ in range(m):
            u = taylor_step(u, c, 1.0, eps, tol_radicand)
            if math.isnan(u):
                return out[:k], RADICAND
            if u > u_cap or not math.isfinite(u):
                return out[:k], CAPPED
        out[k] = u
    return out, COMPLETE


@njit(cache=True)
def integrate_branch_second_order(u0, v0, c, h, n, substep, u_cap):
    """Same tabulation from the regular system u' = v, v' = c e^u / 2 - 1.

    Used where the radicand vanishes at the anchor, since sqrt is not
    Lipschitz there and loses precision to cancellation.
    """
    out = np.empty(n + 1)
    out[0] = u0
    m = n_substeps(h, substep)
    eps = h / m
    e2 = 0.5 * eps * eps
    e3 = eps * eps * eps / 6.0
    u = u0
    v = v0
    for k in range(1, n + 1):
        for _ in range(m):
            if u > u_cap:
                return out[:k], CAPPED
            ec = 0.5 * c * math.exp(u)
            u2 = ec - 1.0
            u3 = ec * v
            u4 = ec * (v * v + u2)
            u = u + eps * v + e2 * u2 + e3 * u3
            v = v + eps * u2 + e2 * u3 + e3 * u4
            if u > u_cap or not math.isfinite(u):
                return out[:k], CAPPED
        out[k] = u
    return out, COMPLETE
