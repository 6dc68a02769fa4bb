import numpy as np
import pytest

from igroup import (
    ConfigurationError,
    GaussianModelSpec,
    estimate_weight_matrix_gaussian,
)
from igroup._streams import stream
from igroup.simulation import (
    CASE3_ROWS,
    SimCase1Config,
    SimCase2Config,
    SimCase3Config,
    ar1_posterior_means,
    risk_decomposition,
    run_case1,
    run_case2,
    run_case3,
)


def test_case3_row_table():
    assert CASE3_ROWS[1] == (5, 0.10)
    assert CASE3_ROWS[9] == (20, 0.10)
    cfg = SimCase3Config.from_row(5)
    assert cfg.n == 10 and cfg.sigma_z == 0.10 and cfg.tau2 == pytest.approx(0.10)
    with pytest.raises(ConfigurationError):
        SimCase3Config.from_row(13)


def test_config_validation():
    with pytest.raises(ConfigurationError):
        SimCase2Config(series_length=1).validate()
    with pytest.raises(ConfigurationError):
        SimCase3Config(n=1).validate()
    with pytest.raises(ConfigurationError):
        SimCase1Config(tau=0.0).validate()


def test_reports_satisfy_mse_identity():
    rep = run_case2(SimCase2Config(k=40, series_length=8, replications=5, seed=1))
    for row in rep.rows:
        assert abs(row["mse"] - (row["bias"] ** 2 + row["variance"])) <= 1e-10


def test_case2_deterministic_and_worker_invariant():
    cfg = SimCase2Config(k=40, replications=4, seed=7)
    a = run_case2(cfg)
    b = run_case2(cfg)
    c = run_case2(cfg, workers=2)
    for key in a.per_replication:
        assert np.array_equal(a.per_replication[key], b.per_replication[key])
        assert np.array_equal(a.per_replication[key], c.per_replication[key])


def test_case3_deterministic_and_worker_invariant():
    cfg = SimCase3Config.from_row(1, k=96, replications=4, seed=3, risk_diagnostics=False)
    a = run_case3(cfg)
    b = run_case3(cfg, workers=3)
    for key in a.per_replication:
        assert np.array_equal(a.per_replication[key], b.per_replication[key])


def test_case1_deterministic():
    cfg = SimCase1Config(
        k=80, sigma_grid=(0.2,), replications=3, bandwidth_grid=(0.1, 0.5), seed=11
    )
    a = run_case1(cfg)
    b = run_case1(cfg, workers=2)
    assert a.rows == b.rows
    assert a.curves == b.curves


def test_ar1_posterior_point_mass_prior_recovers_value():
    rng = stream(5, 0)
    grid = np.linspace(-0.999, 0.999, 2001)
    theta_true = float(grid[int(np.argmin(np.abs(grid - 0.4)))])  # on-grid point mass
    x = np.zeros(12)
    x[0] = rng.normal(0, 3 / np.sqrt(1 - theta_true**2))
    for t in range(1, 12):
        x[t] = theta_true * x[t - 1] + rng.normal(0, 3)
    weights = np.zeros(2001)
    weights[int(np.argmin(np.abs(grid - theta_true)))] = 1.0
    got = ar1_posterior_means(x, 3.0, 2001, prior_weights=weights)
    assert got[0] == pytest.approx(theta_true, abs=1e-4)


def test_ar1_posterior_means_shrink_toward_prior_center():
    rng = stream(6, 0)
    x = rng.normal(0, 3, (50, 11))  # white noise: CLS estimates scatter, posterior shrinks
    a = np.einsum("ij,ij->i", x[:, :-1], x[:, :-1])
    b = np.einsum("ij,ij->i", x[:, :-1], x[:, 1:])
    cls = np.clip(b / a, -0.999, 0.999)
    post = ar1_posterior_means(x, 3.0)
    assert np.all(np.abs(post) <= 1.0)
    assert np.mean(np.abs(post)) < np.mean(np.abs(cls))


def test_case2_small_run_produces_expected_ordering():
    rep = run_case2(SimCase2Config(k=120, replications=12, seed=2))
    mse = {r["method"]: r["mse"] for r in rep.rows}
    assert mse["oracle"] <= mse["igroup_theta"] < mse["individual"]
    assert mse["igroup_obj"] < mse["individual"]


def test_case1_exact_covariates_beat_individual():
    # With noiseless covariates the pooled estimator's population MSE
    # sits well below the individual estimator's tau^2 = 1.
    cfg = SimCase1Config(
        k=400, sigma_grid=(0.0,), replications=40, include_curves=False, seed=21
    )
    rep = run_case1(cfg)
    mse = {r["method"]: r["mse"] for r in rep.rows}
    assert mse["igroup_z"] < 1.0
    assert mse["igroup_z"] < mse["individual"]


def test_case3_individual_matches_tau2():
    cfg = SimCase3Config.from_row(1, k=256, replications=30, seed=4, risk_diagnostics=False)
    rep = run_case3(cfg)
    row = next(r for r in rep.rows if r["method"] == "individual")
    assert abs(row["mse"] - cfg.tau2) <= 3 * row["mc_se"]


def test_risk_decomposition_trivial_cases():
    theta = np.array([0.0, 1.0, 2.0])
    oracle = np.array([0.1, 1.1, 1.9])
    d = risk_decomposition(theta, oracle, oracle)  # estimate == oracle
    assert d["r_np"] == 0.0
    assert d["total"] == pytest.approx(d["r_target"])
    d2 = risk_decomposition(theta, oracle, theta)  # oracle == truth
    assert d2["r_target"] == 0.0


def test_risk_decomposition_orthogonality_conjugate_gaussian():
    # With exact weights, pooling error and target-estimator error are
    # uncorrelated, so the components add up to the total risk.
    model = GaussianModelSpec(prior_mean=0.0, prior_var=1.0, obs_var=0.5)
    rng = stream(12, 0)
    k = 5000
    theta = rng.normal(0.0, 1.0, k)
    th = theta + rng.normal(0.0, np.sqrt(model.obs_var), k)
    est = np.empty(k)
    for lo in range(0, k, 500):
        hi = min(lo + 500, k)
        w = estimate_weight_matrix_gaussian(th, model)[lo:hi]
        est[lo:hi] = (w @ th) / w.sum(axis=1)
    oracle = model.posterior_mean(th)
    d = risk_decomposition(theta, est, oracle)
    cross = 2.0 * (est - oracle) * (oracle - theta)
    se = np.std(cross, ddof=1) / np.sqrt(k)
    assert abs(d["total"] - (d["r_np"] + d["r_target"])) <= 3 * se


def test_case1_bias_variance_monotone_in_noise():
    # At the smallest bandwidth, individual-0 |bias| and variance grow
    # with the covariate noise level (up to Monte-Carlo error).
    reps = 300
    cfg = SimCase1Config(
        k=400,
        sigma_grid=(0.0, 0.2, 0.4, 0.8),
        replications=reps,
        bandwidth_grid=(0.05, 0.2, 0.8),
        include_curves=True,
        seed=9,
    )
    rep = run_case1(cfg)
    cells = [
        c
        for c in rep.curves
        if c["scope"] == "individual0" and c["bandwidth"] == 0.05
    ]
    cells.sort(key=lambda c: c["sigma"])
    for prev, cur in zip(cells, cells[1:]):
        se_bias = np.sqrt(prev["variance"] / reps) + np.sqrt(cur["variance"] / reps)
        assert abs(cur["bias"]) >= abs(prev["bias"]) - 2 * se_bias
        se_var = (prev["variance"] + cur["variance"]) * np.sqrt(2.0 / reps)
        assert cur["variance"] >= prev["variance"] - 2 * se_var


def test_case1_cv_bandwidth_shrinks_with_population():
    # Exact covariates: the tuned bandwidth decreases with K at roughly
    # the one-dimensional smoothing rate.
    means = []
    sizes = (250, 1000, 4000)
    for k in sizes:
        cfg = SimCase1Config(
            k=k, sigma_grid=(0.0,), replications=8, include_curves=False, seed=42
        )
        rep = run_case1(cfg)
        means.append(float(np.mean(rep.per_replication["b_selected@0"])))
    assert means[0] > means[1] > means[2]
    slope = float(np.polyfit(np.log(sizes), np.log(means), 1)[0])
    assert -0.45 <= slope <= -0.05
