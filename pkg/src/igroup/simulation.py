"""Seeded simulation studies with bias/variance/MSE reporting.

Three studies cover the three information sets:

* case 1 -- covariates only: a quadratic parameter map with noisy scalar
  covariates, sweeping the covariate noise level; compares the
  individual estimator, the CV-tuned pooled estimator and the population
  mean.
* case 2 -- estimates only: short stationary AR(1) series with a
  beta-shaped coefficient prior; compares the individual
  conditional-least-squares estimate, objective aggregation, estimate
  aggregation (both with bootstrap estimate weights) and the
  posterior-mean oracle computed by quadrature under the true prior.
* case 3 -- both: a sine parameter map with per-individual observation
  panels; compares no pooling, estimate-weight pooling, covariate
  pooling with CV bandwidths, and the combined weights.

Every randomized quantity draws from a counter-based stream keyed by
(seed, case, level, replication, stage), so reports are bit-identical
for a given seed and config regardless of worker count.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict
from functools import partial
from typing import Optional

import numpy as np

from . import _backend
from ._streams import BOOTSTRAP, DATA, stream
from .errors import ConfigurationError
from .weights import (
    BootstrapPairs,
    Population,
    bootstrap_pairs,
    estimate_weight_matrix_bootstrap,
)

#: (n, sigma_z) for the twelve standard case-3 configurations; the
#: per-observation noise is sigma_x = 1 throughout, so tau^2 = 1/n.
CASE3_ROWS = {
    1: (5, 0.10), 2: (5, 0.15), 3: (5, 0.20), 4: (5, 0.30),
    5: (10, 0.10), 6: (10, 0.15), 7: (10, 0.20), 8: (10, 0.30),
    9: (20, 0.10), 10: (20, 0.15), 11: (20, 0.20), 12: (20, 0.30),
}


@dataclass
class SimCase1Config:
    k: int = 1000
    sigma_grid: tuple = (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)
    tau: float = 1.0
    replications: int = 1000
    bandwidth_grid: Optional[tuple] = None  # None: 20 log-spaced on [0.02, 2]
    include_curves: bool = True
    seed: int = 0

    def grid(self) -> np.ndarray:
        if self.bandwidth_grid is not None:
            return np.asarray(self.bandwidth_grid, dtype=float)
        return np.geomspace(0.02, 2.0, 20)

    def validate(self):
        if self.k < 2 or self.replications < 1 or self.tau <= 0:
            raise ConfigurationError("case1: k >= 2, replications >= 1, tau > 0 required")
        if any(s < 0 for s in self.sigma_grid):
            raise ConfigurationError("case1: sigma grid entries must be nonnegative")


@dataclass
class SimCase2Config:
    k: int = 200
    series_length: int = 10  # transitions per series; observations = length + 1
    sigma: float = 3.0
    replications: int = 100
    bootstrap_count: int = 1
    grid_points: int = 2001
    seed: int = 0

    def validate(self):
        if self.series_length < 2:
            raise ConfigurationError("case2: series length must be at least 2")
        if self.k < 2 or self.sigma <= 0 or self.replications < 1:
            raise ConfigurationError("case2: invalid configuration")


@dataclass
class SimCase3Config:
    k: int = 1024
    n: int = 5
    sigma_x: float = 1.0
    sigma_z: float = 0.10
    replications: int = 200
    bandwidth_points: int = 20
    bootstrap_count: int = 1
    risk_diagnostics: bool = True
    seed: int = 0
    row: int = 0  # informational label when built from a standard row

    @classmethod
    def from_row(cls, row: int, **overrides) -> "SimCase3Config":
        if row not in CASE3_ROWS:
            raise ConfigurationError(f"case3 row must be 1..12, got {row}")
        n, sigma_z = CASE3_ROWS[row]
        return cls(n=n, sigma_z=sigma_z, row=row, **overrides)

    @property
    def tau2(self) -> float:
        return self.sigma_x**2 / self.n

    def validate(self):
        if self.n < 2:
            raise ConfigurationError("case3: n must be at least 2 for the bootstrap")
        if self.k < 2 or self.sigma_x <= 0 or self.sigma_z < 0 or self.replications < 1:
            raise ConfigurationError("case3: invalid configuration")


@dataclass
class SimulationReport:
    case: str
    rows: list
    curves: list
    per_replication: dict
    meta: dict = field(default_factory=dict)


def _cell(errors_mean, errors_msq):
    """bias/variance/mse triple with the identity mse = bias^2 + var."""
    bias = float(errors_mean)
    mse = float(errors_msq)
    return {"bias": bias, "variance": max(mse - bias * bias, 0.0), "mse": mse}


def risk_decomposition(theta, estimates, oracle_values) -> dict:
    """Split squared-error risk into pooling error around the target
    (posterior-mean) estimator and the target estimator's own risk."""
    theta = np.asarray(theta, float)
    est = np.asarray(estimates, float)
    orc = np.asarray(oracle_values, float)
    return {
        "r_np": float(np.mean((est - orc) ** 2)),
        "r_target": float(np.mean((orc - theta) ** 2)),
        "total": float(np.mean((est - theta) ** 2)),
    }


# --------------------------------------------------------------------- case 1


def _case1_rep(cfg: SimCase1Config, si: int, r: int) -> dict:
    sigma = float(cfg.sigma_grid[si])
    rng = stream(cfg.seed, 1, si, r, DATA)
    k = cfg.k
    eta = np.empty(k)
    eta[0] = 0.0  # individual 0 sits at eta = 0, theta = 1
    eta[1:] = rng.normal(0.2, 1.0, k - 1)
    theta = (eta + 1.0) ** 2
    theta_hat = theta + rng.normal(0.0, cfg.tau, k)
    z = eta + sigma * rng.normal(0.0, 1.0, k)
    dist = np.abs(z[:, None] - z[None, :])
    grid = cfg.grid()
    out: dict = {}
    if cfg.include_curves:
        est0 = np.empty(grid.size)
        pop_sum = np.empty(grid.size)
        pop_sumsq = np.empty(grid.size)
        for gi, b in enumerate(grid):
            est = _backend.nw_estimates(dist, theta_hat, float(b), 0, None)
            err = est - theta
            est0[gi] = est[0]
            pop_sum[gi] = err.sum()
            pop_sumsq[gi] = err @ err
        out.update(est0=est0, pop_sum=pop_sum, pop_sumsq=pop_sumsq)
    cv = np.array(
        [_backend.loo_cv_error(dist, theta_hat, float(b), 0, None, None) for b in grid]
    )
    b_sel = float(grid[int(np.argmin(cv))])
    est_cv = _backend.nw_estimates(dist, theta_hat, b_sel, 0, None)
    err_cv = est_cv - theta
    err_ind = theta_hat - theta
    err_pm = float(theta_hat.mean()) - theta
    out["b_selected"] = b_sel
    out["mse"] = {
        "individual": float(err_ind @ err_ind / k),
        "igroup_z": float(err_cv @ err_cv / k),
        "population_mean": float(err_pm @ err_pm / k),
    }
    out["me"] = {
        "individual": float(err_ind.mean()),
        "igroup_z": float(err_cv.mean()),
        "population_mean": float(err_pm.mean()),
    }
    return out


def run_case1(cfg: SimCase1Config, workers: int = 1) -> SimulationReport:
    cfg.validate()
    grid = cfg.grid()
    rows: list = []
    curves: list = []
    per_rep: dict = {}
    for si, sigma in enumerate(cfg.sigma_grid):
        reps = _map_reps(partial(_case1_rep, cfg, si), cfg.replications, workers)
        r = cfg.replications
        k = cfg.k
        for method in ("individual", "igroup_z", "population_mean"):
            mses = np.array([rep["mse"][method] for rep in reps])
            mes = np.array([rep["me"][method] for rep in reps])
            cell = _cell(mes.mean(), mses.mean())
            rows.append(
                dict(
                    case="case1",
                    sigma=float(sigma),
                    method=method,
                    **cell,
                    mc_se=float(mses.std(ddof=1) / np.sqrt(r)) if r > 1 else 0.0,
                )
            )
            per_rep[f"{method}@{sigma:g}"] = mses
        per_rep[f"b_selected@{sigma:g}"] = np.array([rep["b_selected"] for rep in reps])
        if cfg.include_curves:
            est0 = np.vstack([rep["est0"] for rep in reps])
            pop_sum = np.vstack([rep["pop_sum"] for rep in reps])
            pop_sumsq = np.vstack([rep["pop_sumsq"] for rep in reps])
            for gi, b in enumerate(grid):
                e0 = est0[:, gi]
                curves.append(
                    dict(
                        case="case1",
                        sigma=float(sigma),
                        bandwidth=float(b),
                        scope="individual0",
                        **_cell(e0.mean() - 1.0, np.mean((e0 - 1.0) ** 2)),
                    )
                )
                curves.append(
                    dict(
                        case="case1",
                        sigma=float(sigma),
                        bandwidth=float(b),
                        scope="population",
                        **_cell(pop_sum[:, gi].sum() / (r * k), pop_sumsq[:, gi].sum() / (r * k)),
                    )
                )
    return SimulationReport(
        case="case1", rows=rows, curves=curves, per_replication=per_rep, meta=asdict(cfg)
    )


# --------------------------------------------------------------------- case 2


def ar1_posterior_means(
    x: np.ndarray,
    sigma: float,
    grid_points: int = 2001,
    prior_weights: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Posterior-mean AR(1) coefficients by quadrature on a coefficient grid.

    The likelihood includes the stationary initial term; the default
    prior puts (theta+1)/2 ~ Beta(4, 4). ``prior_weights`` overrides the
    prior with explicit (unnormalized) grid weights.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    g = np.linspace(-0.999, 0.999, grid_points)
    if prior_weights is None:
        logprior = 3.0 * np.log1p(-g * g)  # beta(4,4) on the mapped coefficient
    else:
        w = np.asarray(prior_weights, dtype=float)
        if w.shape != g.shape:
            raise ConfigurationError("prior_weights must match the grid size")
        with np.errstate(divide="ignore"):
            logprior = np.log(w)
    a = np.einsum("ij,ij->i", x[:, :-1], x[:, :-1])
    b = np.einsum("ij,ij->i", x[:, :-1], x[:, 1:])
    c = np.einsum("ij,ij->i", x[:, 1:], x[:, 1:])
    x0sq = x[:, 0] ** 2
    s2 = sigma * sigma
    gg = g * g
    loglik = (
        (0.5 * np.log1p(-gg) + logprior)[:, None]
        - x0sq[None, :] * (1.0 - gg)[:, None] / (2.0 * s2)
        - (c[None, :] - 2.0 * g[:, None] * b[None, :] + gg[:, None] * a[None, :]) / (2.0 * s2)
    )
    loglik -= loglik.max(axis=0, keepdims=True)
    w = np.exp(loglik)
    with np.errstate(invalid="ignore"):
        out = (g[:, None] * w).sum(axis=0) / w.sum(axis=0)
    return out


def _case2_rep(cfg: SimCase2Config, r: int) -> dict:
    rng = stream(cfg.seed, 2, 0, r, DATA)
    k, length, sig = cfg.k, cfg.series_length, cfg.sigma
    theta = 2.0 * rng.beta(4.0, 4.0, k) - 1.0
    x = np.empty((k, length + 1))
    x[:, 0] = rng.normal(0.0, sig / np.sqrt(1.0 - theta * theta))
    for t in range(1, length + 1):
        x[:, t] = theta * x[:, t - 1] + rng.normal(0.0, sig, k)
    a = np.einsum("ij,ij->i", x[:, :-1], x[:, :-1])
    b = np.einsum("ij,ij->i", x[:, :-1], x[:, 1:])
    theta_hat = np.clip(b / a, -0.999, 0.999)
    pop = Population.from_arrays(theta_hat=theta_hat, x=x)
    pairs = bootstrap_pairs(
        pop,
        stream(cfg.seed, 2, 0, r, BOOTSTRAP),
        mode="transitions",
        count=cfg.bootstrap_count,
    )
    w2 = estimate_weight_matrix_bootstrap(pairs)
    row_sum = w2.sum(axis=1)
    est_theta = (w2 @ theta_hat) / row_sum  # estimate aggregation
    # Objective aggregation: the weighted conditional Gaussian AR(1)
    # negative log-likelihood is quadratic in the coefficient, so the
    # interval minimizer is the clipped weighted ratio.
    est_obj = np.clip((w2 @ b) / (w2 @ a), -0.999, 0.999)
    oracle = ar1_posterior_means(x, sig, cfg.grid_points)

    def mse(est):
        return float(np.mean((est - theta) ** 2))

    return {
        "individual": mse(theta_hat),
        "igroup_obj": mse(est_obj),
        "igroup_theta": mse(est_theta),
        "oracle": mse(oracle),
        "me_individual": float(np.mean(theta_hat - theta)),
        "me_igroup_obj": float(np.mean(est_obj - theta)),
        "me_igroup_theta": float(np.mean(est_theta - theta)),
        "me_oracle": float(np.mean(oracle - theta)),
    }


def run_case2(cfg: SimCase2Config, workers: int = 1) -> SimulationReport:
    cfg.validate()
    reps = _map_reps(partial(_case2_rep, cfg), cfg.replications, workers)
    methods = ("individual", "igroup_obj", "igroup_theta", "oracle")
    rows = []
    curves = []
    per_rep = {}
    r = cfg.replications
    for method in methods:
        mses = np.array([rep[method] for rep in reps])
        mes = np.array([rep[f"me_{method}"] for rep in reps])
        rows.append(
            dict(
                case="case2",
                method=method,
                **_cell(mes.mean(), mses.mean()),
                mc_se=float(mses.std(ddof=1) / np.sqrt(r)) if r > 1 else 0.0,
            )
        )
        per_rep[method] = mses
        for i, m in enumerate(mses):
            curves.append(dict(case="case2", replication=i, method=method, mse=float(m)))
    return SimulationReport(
        case="case2", rows=rows, curves=curves, per_replication=per_rep, meta=asdict(cfg)
    )


# --------------------------------------------------------------------- case 3


def _sine_model_oracles(z, theta_hat, sigma_z, tau2, grid_points=2001):
    """Posterior means of sin(pi*eta) given z alone and given (z, theta_hat),
    by quadrature over the latent eta."""
    g = np.linspace(-8.0, 8.0, grid_points)
    s = np.sin(np.pi * g)
    log_prior = -0.5 * g * g
    if sigma_z <= 0:
        exact = np.sin(np.pi * z)
        return exact, exact
    lz = -((z[:, None] - g[None, :]) ** 2) / (2.0 * sigma_z**2) + log_prior[None, :]
    lz -= lz.max(axis=1, keepdims=True)
    wz = np.exp(lz)
    orc_z = (wz @ s) / wz.sum(axis=1)
    lf = lz - ((theta_hat[:, None] - s[None, :]) ** 2) / (2.0 * tau2)
    lf -= lf.max(axis=1, keepdims=True)
    wf = np.exp(lf)
    orc_full = (wf @ s) / wf.sum(axis=1)
    return orc_z, orc_full


def _case3_rep(cfg: SimCase3Config, r: int) -> dict:
    rng = stream(cfg.seed, 3, cfg.row, r, DATA)
    k, n = cfg.k, cfg.n
    eta = rng.normal(0.0, 1.0, k)
    theta = np.sin(np.pi * eta)
    z = eta + cfg.sigma_z * rng.normal(0.0, 1.0, k)
    x = theta[:, None] + rng.normal(0.0, cfg.sigma_x, (k, n))
    theta_hat = x.mean(axis=1)
    dist = np.abs(z[:, None] - z[None, :])
    rot = 1.06 * float(np.std(z, ddof=1)) * k ** (-0.2)
    grid = np.geomspace(0.05 * rot, 5.0 * rot, cfg.bandwidth_points)

    def cv_select(base):
        errs = np.array(
            [_backend.loo_cv_error(dist, theta_hat, float(b), 0, base, None) for b in grid]
        )
        return float(grid[int(np.argmin(errs))])

    b_z = cv_select(None)
    est_z = _backend.nw_estimates(dist, theta_hat, b_z, 0, None)

    pop = Population.from_arrays(theta_hat=theta_hat, x=x)
    pairs = bootstrap_pairs(
        pop, stream(cfg.seed, 3, cfg.row, r, BOOTSTRAP), count=cfg.bootstrap_count
    )
    w2 = estimate_weight_matrix_bootstrap(pairs)
    est_t = (w2 @ theta_hat) / w2.sum(axis=1)

    pairs_z = BootstrapPairs(
        ids=pairs.ids,
        theta_hat=pairs.theta_hat,
        first=pairs.first,
        second=pairs.second,
        z=z[:, None],
    )
    w2c = estimate_weight_matrix_bootstrap(pairs_z)
    b_c = cv_select(w2c)
    est_c = _backend.nw_estimates(dist, theta_hat, b_c, 0, w2c)

    def stats(est):
        err = est - theta
        return float(err @ err / k), float(err.mean())

    out = {}
    for name, est in (
        ("individual", theta_hat),
        ("igroup_z", est_z),
        ("igroup_theta", est_t),
        ("igroup_combined", est_c),
    ):
        out[name], out[f"me_{name}"] = stats(est)
    out["b_z"] = b_z
    out["b_combined"] = b_c
    if cfg.risk_diagnostics:
        orc_z, orc_full = _sine_model_oracles(z, theta_hat, cfg.sigma_z, cfg.tau2)
        out["oracle"], out["me_oracle"] = stats(orc_full)
        out["risk_z"] = risk_decomposition(theta, est_z, orc_z)
        out["risk_combined"] = risk_decomposition(theta, est_c, orc_full)
    return out


def run_case3(cfg: SimCase3Config, workers: int = 1) -> SimulationReport:
    cfg.validate()
    reps = _map_reps(partial(_case3_rep, cfg), cfg.replications, workers)
    methods = ["individual", "igroup_theta", "igroup_z", "igroup_combined"]
    if cfg.risk_diagnostics:
        methods.append("oracle")
    rows = []
    curves = []
    per_rep = {}
    r = cfg.replications
    for method in methods:
        mses = np.array([rep[method] for rep in reps])
        mes = np.array([rep[f"me_{method}"] for rep in reps])
        rows.append(
            dict(
                case="case3",
                row=cfg.row,
                n=cfg.n,
                tau2=cfg.tau2,
                sigma_z=cfg.sigma_z,
                method=method,
                **_cell(mes.mean(), mses.mean()),
                mc_se=float(mses.std(ddof=1) / np.sqrt(r)) if r > 1 else 0.0,
            )
        )
        per_rep[method] = mses
        for i, m in enumerate(mses):
            curves.append(dict(case="case3", row=cfg.row, replication=i, method=method, mse=float(m)))
    if cfg.risk_diagnostics:
        for tag in ("risk_z", "risk_combined"):
            rnp = float(np.mean([rep[tag]["r_np"] for rep in reps]))
            rt = float(np.mean([rep[tag]["r_target"] for rep in reps]))
            tot = float(np.mean([rep[tag]["total"] for rep in reps]))
            rows.append(
                dict(
                    case="case3",
                    row=cfg.row,
                    n=cfg.n,
                    tau2=cfg.tau2,
                    sigma_z=cfg.sigma_z,
                    method=tag,
                    bias=0.0,
                    variance=0.0,
                    mse=tot,
                    mc_se=0.0,
                    r_np=rnp,
                    r_target=rt,
                )
            )
    per_rep["b_z"] = np.array([rep["b_z"] for rep in reps])
    per_rep["b_combined"] = np.array([rep["b_combined"] for rep in reps])
    return SimulationReport(
        case="case3", rows=rows, curves=curves, per_replication=per_rep, meta=asdict(cfg)
    )


# --------------------------------------------------------------------- plumbing


def _map_reps(fn, replications: int, workers: int) -> list:
    """Run replications 0..R-1, serially or on a process pool; results
    are merged in replication order either way."""
    if workers <= 1 or replications == 1:
        return [fn(r) for r in range(replications)]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, range(replications)))
