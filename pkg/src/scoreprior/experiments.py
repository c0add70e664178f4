"""Experiment configs and runners behind the command-line interface.

A config file is flat ``key = value`` text with ``#`` comments.  Each
experiment declares its keys, types and defaults; unknown keys are errors.
Every runner writes its outputs under ``out`` and returns a small dict that
the CLI prints as JSON.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import io, plotting
from .exceptions import ConfigError, NearBoundary
from .mcmc import (GaussianCoordinatePrior, MixturePriors, RandomWalkGaussian,
                   RandomWalkLogScale, chain_summary, run_chain, run_mixture_gibbs)
from .models import (Dataset, jeffreys_posterior_normal_mean, jeffreys_posterior_poisson,
                     normal_model, poisson_model, poisson_regression_model, read_dataset_csv,
                     simulate_mixture3, simulate_normal, simulate_poisson,
                     simulate_poisson_regression, write_dataset_csv)
from .prior import DEFAULT_POINTS, PriorSpec, UnitInterval, anchor_discrepancy, normalize, solve_u
from .scoring import score_at
from .selection import nested_comparison, replication_study

# ---------------------------------------------------------------------------
# config parsing


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _floats(s: str) -> tuple:
    return tuple(float(v) for v in s.split(",") if v.strip())


def _ints(s: str) -> tuple:
    return tuple(int(v) for v in s.split(",") if v.strip())


def _pairs(s: str) -> tuple:
    """'a:b, c:d' -> ((a, b), (c, d)) as floats."""
    out = []
    for item in s.split(","):
        if not item.strip():
            continue
        a, b = item.split(":")
        out.append((float(a), float(b)))
    return tuple(out)


def _opt_float(s: str):
    return None if s.strip().lower() in ("", "none") else float(s)


COMMON = {"seed": (int, None), "out": (str, "out"), "experiment": (str, None)}

SCHEMAS: dict[str, dict[str, tuple[Callable, Any]]] = {
    "solve-prior": {
        "domain": (str, "unit"),
        "u_anchor": (_opt_float, None),
        "center": (float, 0.5),
        "c": (_opt_float, None),
        "rounded_anchor": (_bool, False),
        "half_width": (_opt_float, None),
        "n_points": (int, DEFAULT_POINTS),
        "plot": (_bool, True),
    },
    "sample": {
        "model": (str, "poisson"),
        "theta": (_opt_float, None),
        "n": (int, 100),
        "sigma": (float, 1.0),
        "iters": (int, 100_000),
        "burn_in": (_opt_float, None),
        "proposal_sd": (float, 0.1),
        "init": (_opt_float, None),
        "rounded_anchor": (_bool, False),
        "plot": (_bool, True),
    },
    "mixture": {
        "n": (int, 100),
        "iters": (int, 10_000),
        "burn_in": (_opt_float, None),
        "weights": (_floats, (0.25, 0.35, 0.40)),
        "means": (_floats, (-3.5, 0.0, 2.5)),
        "variances": (_floats, (0.5, 0.1, 1.2)),
        "weight_w": (float, 1.14),
        "weight_sd": (float, 0.05),
        "mean_sd": (float, 0.2),
        "var_log_sd": (float, 0.3),
        "rounded_anchor": (_bool, False),
        "plot": (_bool, True),
    },
    "model-compare": {
        "n": (_ints, (30, 100)),
        "rows": (_pairs, ((5, 0.5), (2, 0.5), (2, 0.2), (2, 0.8), (5, 0.8))),
        "reps": (int, 100),
        "workers": (int, 1),
    },
    "nested-binomial": {
        "n": (int, 12),
        "theta0": (float, 0.25),
        "w": (float, 1.5),
        "b": (float, 1.0),
        "t": (int, 8),
        "n_points": (int, DEFAULT_POINTS),
        "plot": (_bool, True),
    },
    "coverage-study": {
        "family": (str, "poisson"),
        "cells": (_pairs, ()),
        "ns": (_ints, ()),
        "thetas": (_floats, (1.0, 10.0, 100.0, 500.0)),
        "mus": (_floats, tuple(float(m) for m in range(-5, 6))),
        "sigma": (float, 1.0),
        "reps": (int, 250),
        "iters": (int, 4000),
        "proposal_scale": (float, 2.4),
        "rounded_anchor": (_bool, False),
        "workers": (int, 1),
    },
    "poisson-regression": {
        "k": (int, 5),
        "beta": (_floats, ()),
        "n_obs": (int, 100),
        "covariate_scale": (float, 1.0),
        "csv": (str, ""),
        "iters": (int, 50_000),
        "burn_in": (_opt_float, 25_000),
        "proposal_scale": (float, 2.4),
        "chains": (int, 1),
        "prior": (str, "real-symmetric"),
        "rounded_anchor": (_bool, False),
        "compare_default": (_bool, False),
        "default_prior_var": (float, 1e4),
        "plot": (_bool, True),
    },
}

EXPERIMENTS = tuple(SCHEMAS)

# desk-scale presets: smaller replication counts and chains
DESK = {
    "model-compare": {"reps": 20},
    "coverage-study": {"reps": 100, "cells": ((3, 1.0), (10, 1.0), (30, 10.0), (100, 100.0))},
    "sample": {"iters": 20_000},
    "poisson-regression": {"iters": 20_000, "burn_in": 10_000},
}


@dataclass
class ExperimentConfig:
    experiment: str
    seed: int
    out: Path
    params: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.params[key]


def parse_config_text(text: str) -> dict[str, str]:
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = (p.strip() for p in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        raw[key] = value
    return raw


def build_config(experiment: str, raw: dict[str, str] | None = None, *, seed: int | None = None,
                 out: str | None = None, reps: int | None = None,
                 desk_scale: bool = False) -> ExperimentConfig:
    """Validate raw key/value strings against the experiment's schema.

    Command-line values (seed, out, reps) override the file.
    """
    if experiment not in SCHEMAS:
        raise ConfigError(f"unknown experiment {experiment!r}; choose from {EXPERIMENTS}")
    raw = dict(raw or {})
    schema = SCHEMAS[experiment]
    unknown = sorted(set(raw) - set(schema) - set(COMMON))
    if unknown:
        raise ConfigError(f"unknown config keys for {experiment}: {', '.join(unknown)}")
    if raw.get("experiment", experiment) != experiment:
        raise ConfigError(f"config is for {raw['experiment']!r}, not {experiment!r}")
    params = {}
    for key, (conv, default) in schema.items():
        if key in raw:
            try:
                params[key] = conv(raw[key])
            except (ValueError, TypeError) as exc:
                raise ConfigError(f"bad value for {key}: {raw[key]!r} ({exc})") from None
        else:
            params[key] = default
    if desk_scale:
        for key, v in DESK.get(experiment, {}).items():
            if key not in raw:
                params[key] = v
        if experiment == "coverage-study" and params["family"] != "poisson" and "cells" not in raw:
            params["cells"] = ()
    if reps is not None:
        if "reps" not in schema:
            raise ConfigError(f"{experiment} takes no replication count")
        params["reps"] = reps
    if seed is None:
        if "seed" not in raw:
            raise ConfigError("a seed is required (config key 'seed' or --seed)")
        try:
            seed = int(raw["seed"])
        except ValueError:
            raise ConfigError(f"bad seed {raw['seed']!r}") from None
    if seed < 0:
        raise ConfigError("seed must be nonnegative")
    out_dir = Path(out if out is not None else raw.get("out", "out"))
    cfg = ExperimentConfig(experiment, int(seed), out_dir, params)
    _validate(cfg)
    return cfg


def load_config(path, experiment: str, **overrides) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return build_config(experiment, parse_config_text(text), **overrides)


def _validate(cfg: ExperimentConfig) -> None:
    p = cfg.params

    def need(cond, msg):
        if not cond:
            raise ConfigError(msg)

    for key in ("iters", "n", "n_points", "n_obs", "k", "chains", "workers"):
        if key in p and isinstance(p[key], int):
            need(p[key] >= 1, f"{key} must be >= 1")
    if "reps" in p:
        need(p["reps"] >= 1, "reps must be >= 1")
    if cfg.experiment == "solve-prior":
        need(p["domain"] in ("unit", "half-line", "real-symmetric", "real-smooth", "flat"),
             f"unknown domain {p['domain']!r}")
        need(p["n_points"] >= 2, "n_points must be >= 2")
    if cfg.experiment == "sample":
        need(p["model"] in ("poisson", "normal"), "model must be poisson or normal")
    if cfg.experiment == "mixture":
        need(len(p["weights"]) == len(p["means"]) == len(p["variances"]) == 3,
             "mixture needs three weights, means and variances")
    if cfg.experiment == "coverage-study":
        need(p["family"] in ("poisson", "normal"), "family must be poisson or normal")
    if cfg.experiment == "poisson-regression":
        need(p["prior"] in ("real-symmetric", "real-smooth", "normal"),
             "prior must be real-symmetric, real-smooth or normal")
    if "burn_in" in p and p["burn_in"] is not None and "iters" in p:
        need(0 <= p["burn_in"] < p["iters"], "need 0 <= burn_in < iters")


# ---------------------------------------------------------------------------
# helpers


def _spec_from(domain: str, u_anchor=None, center: float = 0.5, c=None,
               rounded_anchor: bool = False) -> PriorSpec:
    if domain == "unit":
        return PriorSpec.unit_interval(1.14 if u_anchor is None else u_anchor, center,
                                       2.0 if c is None else c)
    if domain == "half-line":
        return PriorSpec.half_line(u_anchor, 2.0 if c is None else c, rounded_anchor)
    if domain == "real-symmetric":
        return PriorSpec.real_symmetric(u_anchor, 2.0 if c is None else c, rounded_anchor)
    if domain == "real-smooth":
        if c is not None:
            raise ConfigError("c is fixed by u_anchor on the smooth real line")
        return PriorSpec.real_smooth(0.01 if u_anchor is None else u_anchor)
    if domain == "flat":
        return PriorSpec.flat(UnitInterval(center))
    raise ConfigError(f"unknown domain {domain!r}")


def inside_support(spec: PriorSpec, guess: float, margin: float = 0.02) -> float:
    """``guess`` pulled into the interior of the prior's tabulated support."""
    lo, hi = solve_u(spec).support
    dom = spec.domain
    lo = max(lo, dom.lower)
    pad = margin * (hi - lo)
    return float(min(max(guess, lo + pad), hi - pad))


def _burn(p, iters):
    b = p.get("burn_in")
    return iters // 2 if b is None else int(b)


def _cell_seeds(seed: int, n: int) -> list[int]:
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(n)]


def _map(fn, tasks, workers: int):
    if workers <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


# ---------------------------------------------------------------------------
# solve-prior


def cmd_solve_prior(cfg: ExperimentConfig) -> dict:
    p = cfg.params
    spec = _spec_from(p["domain"], p["u_anchor"], p["center"], p["c"], p["rounded_anchor"])
    table = solve_u(spec, p["half_width"], p["n_points"])
    density = normalize(table)
    out = cfg.out
    files = [io.write_utable(table, out / "u_table.csv"), io.write_density(density, out / "density.csv")]
    # combined score at interior points of the unnormalised table
    scores = []
    for theta in np.linspace(table.grid[0], table.grid[-1], 12)[1:-1]:
        try:
            scores.append(score_at(table, theta))
        except NearBoundary:
            continue
    files.append(io.write_scores(scores, out / "scores.csv"))
    if p["plot"]:
        files.append(plotting.line_plot(out / "prior.svg", density.grid, [density.p],
                                        ["normalised p"], f"prior on {spec.domain.name}",
                                        "theta", "p"))
    res = {"support": list(table.support), "logZ": density.logZ, "u_anchor": spec.u_anchor,
           "c": spec.c, "tail_mass_bound": table.tail_mass_bound,
           "unresolved_points": int((~table.resolved).sum())}
    if spec.domain.name in ("half-line", "real-symmetric"):
        res["anchor"] = anchor_discrepancy()
    res["files"] = [str(f) for f in files]
    return res


# ---------------------------------------------------------------------------
# sample


def cmd_sample(cfg: ExperimentConfig) -> dict:
    p = cfg.params
    rng = np.random.default_rng(cfg.seed)
    if p["model"] == "poisson":
        truth = 2.5 if p["theta"] is None else p["theta"]
        data = simulate_poisson(truth, p["n"], rng)
        model = poisson_model()
        spec = PriorSpec.half_line(rounded_anchor=p["rounded_anchor"])
        guess = max(float(np.mean(data.values)), 1e-3)
        proposal = RandomWalkGaussian(p["proposal_sd"])
    else:
        truth = 5.0 if p["theta"] is None else p["theta"]
        data = simulate_normal(truth, p["n"], rng, p["sigma"])
        model = normal_model(p["sigma"])
        spec = PriorSpec.real_symmetric(rounded_anchor=p["rounded_anchor"])
        guess = float(np.mean(data.values))
        proposal = RandomWalkGaussian(p["proposal_sd"])
    init = inside_support(spec, guess if p["init"] is None else p["init"])
    iters = p["iters"]
    chain = run_chain(model, [spec], [init], proposal, iters, _burn(p, iters),
                      seed=cfg.seed + 1, data=data, names=("theta",))
    summ = chain_summary(chain)
    out = cfg.out
    out.mkdir(parents=True, exist_ok=True)
    write_dataset_csv(data, out / "data.csv")
    files = [out / "data.csv", io.write_chain(chain, out / "chain.csv"),
             io.write_summary(summ, out / "summary.csv", ["theta"])]
    if p["plot"]:
        files.append(plotting.line_plot(out / "trace.svg", np.arange(iters),
                                        [chain.draws[:, 0]], ["theta"], "trace", "iteration",
                                        "theta"))
    return {"truth": truth, "mean": float(summ.mean[0]), "sd": float(summ.sd[0]),
            "interval": [float(summ.lower[0]), float(summ.upper[0])],
            "acceptance": float(summ.acceptance_rate[0]), "init": init,
            "files": [str(f) for f in files]}


# ---------------------------------------------------------------------------
# mixture


def mixture_priors(weight_w: float = 1.14, rounded_anchor: bool = False) -> MixturePriors:
    return MixturePriors(PriorSpec.unit_interval(weight_w),
                         PriorSpec.real_symmetric(rounded_anchor=rounded_anchor),
                         PriorSpec.half_line(rounded_anchor=rounded_anchor))


def cmd_mixture(cfg: ExperimentConfig) -> dict:
    p = cfg.params
    truth = (np.array(p["weights"]), np.array(p["means"]), np.array(p["variances"]))
    rng = np.random.default_rng(cfg.seed)
    data = simulate_mixture3(truth, p["n"], rng)
    priors = mixture_priors(p["weight_w"], p["rounded_anchor"])
    iters = p["iters"]
    chain = run_mixture_gibbs(data, priors, iters, seed=cfg.seed + 1, burn_in=_burn(p, iters),
                              weight_sd=p["weight_sd"], mean_sd=p["mean_sd"],
                              var_log_sd=p["var_log_sd"])
    summ = chain_summary(chain)
    out = cfg.out
    out.mkdir(parents=True, exist_ok=True)
    write_dataset_csv(data, out / "data.csv")
    files = [out / "data.csv", io.write_chain(chain, out / "chain.csv"),
             io.write_summary(summ, out / "summary.csv", chain.names)]
    if p["plot"]:
        files.append(plotting.line_plot(out / "trace_means.svg", np.arange(iters),
                                        [chain.draws[:, j] for j in (3, 4, 5)],
                                        ["mu1", "mu2", "mu3"], "mixture means", "iteration",
                                        "mu"))
    mu_mean, mu_sd = summ.mean[3:6], summ.sd[3:6]
    z = np.abs(mu_mean - truth[1]) / np.where(mu_sd > 0, mu_sd, np.inf)
    return {"posterior_mean": summ.mean.tolist(), "posterior_sd": summ.sd.tolist(),
            "mean_z": z.tolist(), "acceptance": summ.acceptance_rate.tolist(),
            "files": [str(f) for f in files]}


# ---------------------------------------------------------------------------
# model comparison


MODCOMP_HEADER = ("n", "theta", "phi", "reps", "log10_min_B12_M1", "log10_max_B12_M1",
                  "log10_min_B12_M2", "log10_max_B12_M2", "exceptions_M1", "exceptions_M2")


def _modcomp_cell(task):
    n, theta, phi, reps, seed = task
    r = replication_study(n, theta, phi, reps, seed)
    ln10 = math.log(10.0)
    return (n, theta, phi, reps, r.log_B12_m1.min() / ln10, r.log_B12_m1.max() / ln10,
            r.log_B12_m2.min() / ln10, r.log_B12_m2.max() / ln10,
            r.exceptions_m1, r.exceptions_m2)


def cmd_model_compare(cfg: ExperimentConfig) -> dict:
    p = cfg.params
    cells = [(n, th, ph) for n in p["n"] for th, ph in p["rows"]]
    seeds = _cell_seeds(cfg.seed, len(cells))
    tasks = [(int(n), float(th), float(ph), p["reps"], s) for (n, th, ph), s in zip(cells, seeds)]
    rows = _map(_modcomp_cell, tasks, p["workers"])
    path = io.write_rows(cfg.out / "model_compare.csv", MODCOMP_HEADER, rows)
    return {"rows": [dict(zip(MODCOMP_HEADER, map(_jsonable, r))) for r in rows],
            "files": [str(path)]}


def _jsonable(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    return v


# ---------------------------------------------------------------------------
# nested binomial


def cmd_nested_binomial(cfg: ExperimentConfig) -> dict:
    p = cfg.params
    rep = nested_comparison(p["n"], p["theta0"], p["w"], p["b"], p["t"], p["n_points"])
    files = [io.write_rows(cfg.out / "nested.csv", ("y", "prob_scoring", "prob_intrinsic"),
                           zip(rep.y, rep.prob_scoring, rep.prob_intrinsic))]
    if p["plot"]:
        files.append(plotting.line_plot(cfg.out / "nested.svg", rep.y,
                                        [rep.prob_scoring, rep.prob_intrinsic],
                                        ["scoring-rule prior", "intrinsic prior"],
                                        "P(M1 | y)", "y", "probability"))
    return {"argmin_scoring": int(np.argmin(rep.prob_scoring)),
            "argmin_intrinsic": int(np.argmin(rep.prob_intrinsic)),
            "max_abs_difference": rep.max_abs_difference, "files": [str(f) for f in files]}


# ---------------------------------------------------------------------------
# coverage study


@dataclass(frozen=True)
class FreqRow:
    family: str
    n: int
    theta: float
    prior: str
    rmse: float
    relative: bool
    coverage: float
    reps: int

    @property
    def coverage_se(self) -> float:
        c = self.coverage
        return math.sqrt(max(c * (1 - c), 0.0) / self.reps)


@dataclass(frozen=True)
class FreqReport:
    rows: tuple

    def __post_init__(self):
        for r in self.rows:
            if not 0.0 <= r.coverage <= 1.0:
                raise ValueError("coverage must lie in [0, 1]")

    def get(self, n, theta, prior) -> FreqRow:
        for r in self.rows:
            if r.n == n and r.theta == theta and r.prior == prior:
                return r
        raise KeyError((n, theta, prior))


FREQ_HEADER = ("family", "n", "theta", "prior", "rmse", "relative", "coverage", "coverage_se",
               "reps")


def _coverage_cell(task) -> list[FreqRow]:
    family, n, theta, reps, iters, scale, sigma, rounded_anchor, seed = task
    rng = np.random.default_rng(seed)
    if family == "poisson":
        spec = PriorSpec.half_line(rounded_anchor=rounded_anchor)
        model = poisson_model()
    else:
        spec = PriorSpec.real_symmetric(rounded_anchor=rounded_anchor)
        model = normal_model(sigma)
    lo, hi = solve_u(spec).support
    est = {"proposed": [], "jeffreys": []}
    hits = {"proposed": 0, "jeffreys": 0}
    for r in range(reps):
        if family == "poisson":
            data = simulate_poisson(theta, n, rng)
            jp = jeffreys_posterior_poisson(data)
            s = float(data.values.sum())
            guess = max((s + 0.5) / n, 1e-3)
            proposal = RandomWalkLogScale(scale / math.sqrt(s + 1.0))
        else:
            data = simulate_normal(theta, n, rng, sigma)
            jp = jeffreys_posterior_normal_mean(data, sigma)
            guess = float(data.values.mean())
            proposal = RandomWalkGaussian(scale * sigma / math.sqrt(n))
        pad = 0.02 * (hi - lo)
        init = min(max(guess, max(lo, spec.domain.lower) + pad), hi - pad)
        chain = run_chain(model, [spec], [init], proposal, iters, iters // 2,
                          seed=int(rng.integers(2 ** 63)), data=data)
        summ = chain_summary(chain)
        est["proposed"].append(summ.mean[0])
        hits["proposed"] += bool(summ.lower[0] <= theta <= summ.upper[0])
        lo_j, hi_j = jp.interval()
        est["jeffreys"].append(jp.mean)
        hits["jeffreys"] += bool(lo_j <= theta <= hi_j)
    rows = []
    relative = family == "poisson"
    for prior in ("proposed", "jeffreys"):
        e = np.asarray(est[prior])
        rmse = math.sqrt(float(np.mean((e - theta) ** 2)))
        if relative:
            rmse /= theta
        rows.append(FreqRow(family, n, theta, prior, rmse, relative, hits[prior] / reps, reps))
    return rows


def coverage_study(family: str, cells, reps: int, seed: int, iters: int = 4000,
                   proposal_scale: float = 2.4, sigma: float = 1.0,
                   rounded_anchor: bool = False, workers: int = 1) -> FreqReport:
    """RMSE (relative for the Poisson rate) and 95% coverage per (n, theta) cell,
    for the scoring-rule prior (MCMC) and the Jeffreys prior (exact)."""
    cells = [(int(n), float(t)) for n, t in cells]
    seeds = _cell_seeds(seed, len(cells))
    tasks = [(family, n, t, reps, iters, proposal_scale, sigma, rounded_anchor, s)
             for (n, t), s in zip(cells, seeds)]
    rows = [r for cell in _map(_coverage_cell, tasks, workers) for r in cell]
    return FreqReport(tuple(rows))


def cmd_coverage_study(cfg: ExperimentConfig) -> dict:
    p = cfg.params
    if p["cells"]:
        cells = [(int(n), t) for n, t in p["cells"]]
    elif p["family"] == "poisson":
        cells = [(n, t) for n in (p["ns"] or (3, 10, 30, 100)) for t in p["thetas"]]
    else:
        cells = [(n, m) for n in (p["ns"] or (30, 100)) for m in p["mus"]]
    rep = coverage_study(p["family"], cells, p["reps"], cfg.seed, p["iters"],
                         p["proposal_scale"], p["sigma"], p["rounded_anchor"], p["workers"])
    path = io.write_rows(cfg.out / "coverage.csv", FREQ_HEADER,
                         ((r.family, r.n, r.theta, r.prior, r.rmse, r.relative, r.coverage,
                           r.coverage_se, r.reps) for r in rep.rows))
    return {"rows": [{"n": r.n, "theta": r.theta, "prior": r.prior, "rmse": r.rmse,
                      "coverage": r.coverage, "coverage_se": r.coverage_se} for r in rep.rows],
            "files": [str(path)]}


# ---------------------------------------------------------------------------
# Poisson regression


BASE_BETA = (-0.8, -0.5, 0.0, 0.5, 0.8)


def preset_beta(k: int) -> np.ndarray:
    """The five base coefficients padded with zero-valued noise coefficients."""
    if k < len(BASE_BETA):
        raise ConfigError(f"k must be >= {len(BASE_BETA)}")
    return np.concatenate([BASE_BETA, np.zeros(k - len(BASE_BETA))])


def poisson_regression_mle(data: Dataset, iters: int = 50) -> np.ndarray:
    """Newton iterations on the Poisson log-likelihood (canonical link)."""
    x, y = data.covariates, data.values
    beta = np.zeros(x.shape[1])
    for _ in range(iters):
        mu = np.exp(x @ beta)
        grad = x.T @ (y - mu)
        hess = (x * mu[:, None]).T @ x
        step = np.linalg.solve(hess + 1e-10 * np.eye(len(beta)), grad)
        # halve until the log-likelihood improves
        ll0 = y @ (x @ beta) - mu.sum()
        t = 1.0
        while t > 1e-8:
            nb = beta + t * step
            eta = x @ nb
            if y @ eta - np.exp(eta).sum() >= ll0:
                break
            t *= 0.5
        beta = beta + t * step
        if np.max(np.abs(t * step)) < 1e-10:
            break
    return beta


def regression_priors(kind: str, k: int, rounded_anchor: bool = False, var: float = 1e4):
    if kind == "normal":
        return [GaussianCoordinatePrior(0.0, var)] * k
    if kind == "real-smooth":
        return [PriorSpec.real_smooth()] * k
    return [PriorSpec.real_symmetric(rounded_anchor=rounded_anchor)] * k


def regression_chain(data: Dataset, priors, iters: int, burn_in: int, seed: int,
                     init=None, proposal_scale: float = 2.4):
    """Single-site MH for the coefficients, proposal sd 2.4 / sqrt(I_jj) from
    the Fisher information at the MLE."""
    x = data.covariates
    k = x.shape[1]
    mle = poisson_regression_mle(data)
    info = (x * np.exp(x @ mle)[:, None]).T @ x
    sds = proposal_scale / np.sqrt(np.maximum(np.diag(info), 1e-12))
    start = mle if init is None else np.asarray(init, dtype=float)
    start = np.array([inside_support(p, s) if isinstance(p, PriorSpec) else s
                      for p, s in zip(priors, start)])
    return run_chain(poisson_regression_model(k), priors, start,
                     [RandomWalkGaussian(float(s)) for s in sds], iters, burn_in, seed=seed,
                     data=data, names=tuple(f"beta{j + 1}" for j in range(k)))


def cmd_poisson_regression(cfg: ExperimentConfig) -> dict:
    p = cfg.params
    rng = np.random.default_rng(cfg.seed)
    if p["csv"]:
        data = read_dataset_csv(p["csv"])
        if data.covariates is None:
            raise ConfigError("regression CSV needs covariate columns x1..xk")
        truth = None
    else:
        truth = np.asarray(p["beta"]) if p["beta"] else preset_beta(p["k"])
        data = simulate_poisson_regression(truth, p["n_obs"], rng,
                                           covariate_scale=p["covariate_scale"])
    k = data.k
    iters = p["iters"]
    burn = _burn(p, iters)
    priors = regression_priors(p["prior"], k, p["rounded_anchor"], p["default_prior_var"])
    seeds = _cell_seeds(cfg.seed, p["chains"] + 1)
    out = cfg.out
    out.mkdir(parents=True, exist_ok=True)
    write_dataset_csv(data, out / "data.csv")
    files = [out / "data.csv"]
    chains = []
    for c in range(p["chains"]):
        init = None if c == 0 else np.random.default_rng(seeds[c]).uniform(-0.5, 0.5, k)
        ch = regression_chain(data, priors, iters, burn, seeds[c], init, p["proposal_scale"])
        chains.append(ch)
        files.append(io.write_chain(ch, out / ("chain.csv" if c == 0 else f"chain_{c}.csv")))
    summ = chain_summary(chains[0])
    files.append(io.write_summary(summ, out / "summary.csv", chains[0].names))
    res = {"mean": summ.mean.tolist(), "lower": summ.lower.tolist(), "upper": summ.upper.tolist(),
           "acceptance": summ.acceptance_rate.tolist()}
    if truth is not None:
        res["truth"] = truth.tolist()
        res["contains_truth"] = summ.contains(truth).tolist()
    if p["compare_default"]:
        dch = regression_chain(data, regression_priors("normal", k, var=p["default_prior_var"]),
                               iters, burn, seeds[-1], None, p["proposal_scale"])
        dsum = chain_summary(dch)
        files.append(io.write_summary(dsum, out / "summary_default_prior.csv", dch.names))
        res["default_prior_mean"] = dsum.mean.tolist()
    if p["plot"]:
        files.append(plotting.interval_plot(out / "caterpillar.svg", chains[0].names, summ.mean,
                                            summ.lower, summ.upper, truth,
                                            "95% credible intervals", "beta"))
        if p["chains"] > 1:
            m = min(iters, 10_000)
            files.append(plotting.line_plot(out / "multichain_beta1.svg", np.arange(m),
                                            [ch.draws[:m, 0] for ch in chains],
                                            [f"chain {c}" for c in range(len(chains))],
                                            "beta1 traces", "iteration", "beta1"))
    res["files"] = [str(f) for f in files]
    return res


COMMANDS = {
    "solve-prior": cmd_solve_prior,
    "sample": cmd_sample,
    "mixture": cmd_mixture,
    "model-compare": cmd_model_compare,
    "nested-binomial": cmd_nested_binomial,
    "coverage-study": cmd_coverage_study,
    "poisson-regression": cmd_poisson_regression,
}


def run(cfg: ExperimentConfig) -> dict:
    return COMMANDS[cfg.experiment](cfg)
