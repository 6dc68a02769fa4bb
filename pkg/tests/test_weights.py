import numpy as np
import pytest

from igroup import (
    BOXCAR,
    GAUSSIAN,
    Bandwidth,
    BootstrapPairs,
    EmptyNeighborhoodError,
    GaussianModelSpec,
    IndividualRecord,
    InvalidInputError,
    Population,
    Scheme,
    SchemeMismatchError,
    bootstrap_pairs,
    build_weights,
    conditional_density_estimate,
    covariate_weight,
    covariate_weight_matrix,
    estimate_weight_bootstrap,
    estimate_weight_gaussian,
    estimate_weight_matrix_bootstrap,
    estimate_weight_matrix_gaussian,
    kde_density,
    kernel_eval,
    pairwise_distances,
)
from igroup._streams import stream


def quadrature_weight(theta_k, theta_0, model, points=4001):
    """Independent quadrature oracle for the population-integral weight."""
    sd = np.sqrt(model.prior_var + model.obs_var)
    grid = np.linspace(model.prior_mean - 30 * sd, model.prior_mean + 30 * sd, points)

    def npdf(x, mu, var):
        return np.exp(-0.5 * (x - mu) ** 2 / var) / np.sqrt(2 * np.pi * var)

    prior = npdf(grid, model.prior_mean, model.prior_var)
    lk = npdf(theta_k, grid, model.obs_var)
    l0 = npdf(theta_0, grid, model.obs_var)
    num = np.trapezoid(lk * l0 * prior, grid)
    return num / (np.trapezoid(lk * prior, grid) * np.trapezoid(l0 * prior, grid))


# ---------------------------------------------------------------- covariate part


def test_covariate_weight_known_values():
    assert covariate_weight([1.0, 2.0], [1.0, 2.0], GAUSSIAN, 1.0) == pytest.approx(
        0.3989422804014327
    )
    assert covariate_weight([0.0, 0.0], [3.0, 4.0], BOXCAR, 1.0) == 0.0
    # standard normal density at 1, cross-checked directly against exp/sqrt
    expected = np.exp(-0.5) / np.sqrt(2 * np.pi)
    assert expected == pytest.approx(0.24197072451914337, abs=1e-12)
    assert covariate_weight([0.0], [1.0], GAUSSIAN, 1.0) == pytest.approx(expected)


def test_covariate_weight_symmetry():
    rng = np.random.default_rng(0)
    for _ in range(20):
        a, b = rng.normal(size=(2, 3))
        w1 = covariate_weight(a, b, GAUSSIAN, 0.7)
        w2 = covariate_weight(b, a, GAUSSIAN, 0.7)
        assert w1 == w2


def test_covariate_weight_matrix_matches_scalar():
    rng = np.random.default_rng(1)
    z = rng.normal(size=(6, 2))
    mat = covariate_weight_matrix(z, GAUSSIAN, 0.5)
    for i in range(6):
        for j in range(6):
            assert mat[i, j] == pytest.approx(covariate_weight(z[i], z[j], GAUSSIAN, 0.5))


def test_pairwise_distances_matches_euclidean():
    from igroup import euclidean

    rng = np.random.default_rng(2)
    z = rng.normal(size=(8, 3))
    d = pairwise_distances(z)
    for i in range(8):
        for j in range(8):
            assert d[i, j] == pytest.approx(euclidean(z[i], z[j]), abs=1e-10)


# ---------------------------------------------------------------- exact estimate part


def test_estimate_weight_flat_likelihood_limit():
    model = GaussianModelSpec(prior_mean=0.0, prior_var=1.0, obs_var=1e12)
    assert estimate_weight_gaussian(0.5, -0.3, model) == pytest.approx(1.0, abs=1e-6)


def test_estimate_weight_at_prior_mean_exceeds_one():
    model = GaussianModelSpec(prior_mean=0.4, prior_var=2.0, obs_var=1.0)
    w = estimate_weight_gaussian(0.4, 0.4, model)
    assert w > 1.0
    assert w == pytest.approx(quadrature_weight(0.4, 0.4, model), abs=1e-8)


def test_estimate_weight_matches_quadrature_randomized():
    rng = np.random.default_rng(3)
    for _ in range(25):
        model = GaussianModelSpec(
            prior_mean=float(rng.normal()),
            prior_var=float(rng.uniform(0.3, 3.0)),
            obs_var=float(rng.uniform(0.3, 3.0)),
        )
        tk, t0 = rng.normal(scale=1.5, size=2)
        assert estimate_weight_gaussian(tk, t0, model) == pytest.approx(
            quadrature_weight(tk, t0, model), abs=1e-8
        )


def test_estimate_weight_symmetric_in_arguments():
    model = GaussianModelSpec(0.0, 1.0, 0.5)
    assert estimate_weight_gaussian(0.8, -0.4, model) == pytest.approx(
        estimate_weight_gaussian(-0.4, 0.8, model), abs=1e-14
    )


def test_estimate_weight_matrix_matches_scalar():
    rng = np.random.default_rng(4)
    model = GaussianModelSpec(0.1, 1.2, 0.6)
    th = rng.normal(size=7)
    mat = estimate_weight_matrix_gaussian(th, model)
    for t in range(7):
        for k in range(7):
            assert mat[t, k] == pytest.approx(estimate_weight_gaussian(th[k], th[t], model))


def test_importance_weighting_identity():
    # weighted moments under the sampling marginal match predictive moments
    model = GaussianModelSpec(prior_mean=0.3, prior_var=1.0, obs_var=0.5)
    rng = stream(42, 0)
    n = 10**5
    th_k = rng.normal(model.prior_mean, np.sqrt(model.marginal_var), n)
    th_0 = 1.1
    w = estimate_weight_gaussian(th_k, th_0, model)
    pred_mean = model.posterior_mean(th_0)
    pred_m2 = model.predictive_var + pred_mean**2
    for h, target in ((th_k, pred_mean), (th_k**2, pred_m2)):
        vals = h * w
        se = np.std(vals, ddof=1) / np.sqrt(n)
        assert abs(np.mean(vals) - target) < 3 * se


def test_normalization_limit():
    model = GaussianModelSpec(0.0, 1.0, 1.0)
    ok = 0
    for seed in range(10):
        rng = stream(seed, 7)
        th = rng.normal(0.0, np.sqrt(model.marginal_var), 10_000)
        mean_w = float(np.mean(estimate_weight_gaussian(th, th[0], model)))
        ok += abs(mean_w - 1.0) < 0.05
    assert ok >= 9


def test_degenerate_information_limit():
    # As obs_var -> 0 the weight at a fixed displacement vanishes
    # relative to the weight at zero displacement.
    delta = 0.5
    ratios = []
    for obs_var in (0.1, 0.01, 0.001):
        model = GaussianModelSpec(0.0, 1.0, obs_var)
        at0 = estimate_weight_gaussian(0.2, 0.2, model)
        atd = estimate_weight_gaussian(0.2 + delta, 0.2, model)
        ratios.append(atd / at0)
    assert ratios[0] > ratios[1] > ratios[2]
    assert ratios[2] < 1e-20


# ---------------------------------------------------------------- conditional KDE


def test_conditional_density_single_individual():
    pop = Population.from_arrays(theta_hat=[1.0], z=[[0.5]])
    b_t = 0.4
    got = conditional_density_estimate(pop, 1.0, [0.5], b_z=Bandwidth(1.0), b_theta=Bandwidth(b_t))
    assert got == pytest.approx(kernel_eval(GAUSSIAN, 0.0) / b_t)


def test_conditional_density_identical_z_reduces_to_kde():
    rng = np.random.default_rng(5)
    th = rng.normal(size=40)
    pop = Population.from_arrays(theta_hat=th, z=[[2.0]] * 40)
    for q in (-1.0, 0.0, 0.7):
        got = conditional_density_estimate(pop, q, [2.0], b_theta=Bandwidth(0.3))
        assert got == pytest.approx(kde_density(th, q, bandwidth=0.3))


def test_conditional_density_two_individuals_hand_computed():
    pop = Population.from_arrays(theta_hat=[0.0, 1.0], z=[[0.0], [1.0]])
    bz, bt = 0.8, 0.5
    q_t, q_z = 0.25, [0.2]
    wz = np.array([kernel_eval(GAUSSIAN, 0.2 / bz), kernel_eval(GAUSSIAN, 0.8 / bz)])
    wt = np.array(
        [kernel_eval(GAUSSIAN, 0.25 / bt) / bt, kernel_eval(GAUSSIAN, 0.75 / bt) / bt]
    )
    expect = float(np.sum(wz * wt) / np.sum(wz))
    got = conditional_density_estimate(
        pop, q_t, q_z, b_z=Bandwidth(bz), b_theta=Bandwidth(bt)
    )
    assert got == pytest.approx(expect, abs=1e-12)


def test_conditional_density_empty_neighborhood():
    pop = Population.from_arrays(theta_hat=[0.0], z=[[0.0]])
    with pytest.raises(EmptyNeighborhoodError):
        conditional_density_estimate(
            pop, 0.0, [10.0], kernel_z=BOXCAR, b_z=Bandwidth(1.0), b_theta=Bandwidth(1.0)
        )


def test_conditional_density_accepts_bootstrap_pairs():
    rng = stream(13, 0)
    x = rng.normal(size=(20, 6))
    z = rng.normal(size=(20, 1))
    pop = Population.from_arrays(theta_hat=x.mean(axis=1), x=x, z=z)
    pairs = bootstrap_pairs(pop, stream(13, 1))
    got = conditional_density_estimate(
        pairs, 0.1, [0.2], b_z=Bandwidth(0.5), b_theta=Bandwidth(0.4)
    )
    want = conditional_density_estimate(
        pop, 0.1, [0.2], b_z=Bandwidth(0.5), b_theta=Bandwidth(0.4)
    )
    assert got == pytest.approx(want)  # same originals and covariates either way


# ---------------------------------------------------------------- bootstrap weights


def test_bootstrap_pairs_shapes_and_determinism():
    rng = stream(9, 1)
    x = rng.normal(size=(12, 6))
    pop = Population.from_arrays(theta_hat=x.mean(axis=1), x=x)
    p1 = bootstrap_pairs(pop, stream(9, 2), count=3)
    p2 = bootstrap_pairs(pop, stream(9, 2), count=3)
    assert p1.first.shape == (3, 12)
    assert np.array_equal(p1.first, p2.first)
    assert np.array_equal(p1.second, p2.second)


def test_bootstrap_refuses_tiny_samples():
    pop = Population.from_arrays(theta_hat=[0.0], x=[[1.0, 2.0]])
    with pytest.raises(SchemeMismatchError):
        bootstrap_pairs(pop, stream(0, 0))


def test_bootstrap_weight_single_individual_finite_positive():
    pairs = BootstrapPairs(
        ids=("a",), theta_hat=[0.5], first=[[0.4]], second=[[0.6]]
    )
    w = estimate_weight_bootstrap(
        pairs, "a", "a", b1=Bandwidth(0.3), b2=Bandwidth(0.3), b3=Bandwidth(0.3)
    )
    assert np.isfinite(w) and w > 0


def test_bootstrap_multiple_pairs_average_kernel_sums():
    rng = stream(23, 0)
    x = rng.normal(size=(10, 7))
    pop = Population.from_arrays(theta_hat=x.mean(axis=1), x=x)
    pairs = bootstrap_pairs(pop, stream(23, 1), count=4)
    mat = estimate_weight_matrix_bootstrap(pairs, b1=Bandwidth(0.4), b2=Bandwidth(0.4))
    # average over the four single-pair matrices equals the pooled matrix
    singles = []
    for b in range(4):
        one = BootstrapPairs(
            ids=pairs.ids,
            theta_hat=pairs.theta_hat,
            first=pairs.first[b : b + 1],
            second=pairs.second[b : b + 1],
        )
        singles.append(
            estimate_weight_matrix_bootstrap(one, b1=Bandwidth(0.4), b2=Bandwidth(0.4))
        )
    assert np.allclose(mat, np.mean(singles, axis=0), rtol=1e-12)


def test_bootstrap_weight_matrix_matches_scalar_no_z():
    rng = stream(21, 0)
    x = rng.normal(size=(15, 8))
    pop = Population.from_arrays(theta_hat=x.mean(axis=1), x=x)
    pairs = bootstrap_pairs(pop, stream(21, 1))
    mat = estimate_weight_matrix_bootstrap(pairs)
    for t in (0, 3, 14):
        for k in (1, 7):
            got = estimate_weight_bootstrap(pairs, str(k), str(t))
            assert mat[t, k] == pytest.approx(got, rel=1e-10)


def test_bootstrap_weight_matrix_matches_scalar_with_z():
    rng = stream(22, 0)
    x = rng.normal(size=(15, 8))
    z = rng.normal(size=(15, 2))
    pop = Population.from_arrays(theta_hat=x.mean(axis=1), x=x, z=z)
    pairs = bootstrap_pairs(pop, stream(22, 1))
    assert pairs.z is not None
    mat = estimate_weight_matrix_bootstrap(pairs)
    for t in (0, 5):
        for k in (2, 11):
            got = estimate_weight_bootstrap(pairs, str(k), str(t))
            assert mat[t, k] == pytest.approx(got, rel=1e-10)


def test_bootstrap_weight_monte_carlo_agrees_with_oracle():
    # Large population from the conjugate Gaussian generative process;
    # KDE/bootstrap weight vs the closed-form oracle in the central region.
    rng = stream(123, 0)
    k_pop, n, sx2 = 5000, 20, 5.0
    model = GaussianModelSpec(prior_mean=0.0, prior_var=1.0, obs_var=sx2 / n)
    theta = rng.normal(0.0, 1.0, k_pop)
    x = theta[:, None] + rng.normal(0, np.sqrt(sx2), (k_pop, n))
    th = x.mean(axis=1)
    pop = Population.from_arrays(theta_hat=th, x=x)
    pairs = bootstrap_pairs(pop, stream(123, 1))
    central = [i for i in range(k_pop) if abs(th[i]) < 1.2][:8]
    for ki, ti in zip(central[:4], central[4:]):
        got = estimate_weight_bootstrap(pairs, str(ki), str(ti))
        exact = estimate_weight_gaussian(th[ki], th[ti], model)
        assert abs(got - exact) / exact < 0.25


def test_bootstrap_weight_concentrates_with_sharp_estimates():
    # Nearly noiseless estimates + small bandwidths: weight at a large
    # displacement vanishes relative to the weight at zero displacement.
    rng = stream(31, 0)
    th = np.linspace(-1, 1, 81)
    x = th[:, None] + rng.normal(0, 1e-3, (81, 10))
    pop = Population.from_arrays(theta_hat=th, x=x)
    pairs = bootstrap_pairs(pop, stream(31, 1))
    b = Bandwidth(0.02)
    near = estimate_weight_bootstrap(pairs, "40", "40", b1=b, b2=b, b3=b)
    idx_far = 60  # displacement 0.5 == 25 bandwidths
    far = estimate_weight_bootstrap(pairs, "60", "40", b1=b, b2=b, b3=b)
    assert far / near < 1e-6


# ---------------------------------------------------------------- build_weights


def test_build_weights_z_only_uniform():
    pop = Population.from_arrays(theta_hat=[1.0, 2.0, 3.0], z=[[0.0], [0.0], [0.0]])
    wv = build_weights(pop, "0", Scheme.Z_ONLY, b_z=Bandwidth(1.0))
    assert np.allclose(wv.weights, wv.weights[0])


def test_build_weights_boxcar_cutoff_pattern():
    pop = Population.from_arrays(theta_hat=[0.0, 0.0, 0.0], z=[[0.0], [0.5], [2.0]])
    wv = build_weights(pop, "0", Scheme.Z_ONLY, kernel_z=BOXCAR, b_z=Bandwidth(1.0))
    assert wv.weights[0] == 0.5 and wv.weights[1] == 0.5 and wv.weights[2] == 0.0


def test_build_weights_combined_is_product():
    rng = stream(17, 0)
    x = rng.normal(size=(20, 9))
    z = rng.normal(size=(20, 1))
    th = x.mean(axis=1)
    pop = Population.from_arrays(theta_hat=th, x=x, z=z)
    pairs = bootstrap_pairs(pop, stream(17, 1))
    bz = Bandwidth(0.6)
    wz = build_weights(pop, "5", Scheme.Z_ONLY, b_z=bz)
    wt = build_weights(pop, "5", Scheme.THETA_ONLY, pairs=pairs)
    wc = build_weights(pop, "5", Scheme.COMBINED, pairs=pairs, b_z=bz)
    prod = wz.weights * wt.weights
    from igroup.weights import truncate_small

    assert np.allclose(wc.weights, truncate_small(prod), rtol=1e-10, atol=0)


def test_build_weights_exact_oracle_route():
    model = GaussianModelSpec(0.0, 1.0, 0.5)
    th = np.array([0.0, 0.3, -0.2, 1.5])
    pop = Population.from_arrays(theta_hat=th)
    wv = build_weights(pop, "0", Scheme.THETA_ONLY, model_oracle=model)
    expect = estimate_weight_gaussian(th, th[0], model)
    assert np.allclose(wv.weights, expect)


def test_build_weights_errors():
    pop = Population.from_arrays(theta_hat=[0.0, 1.0], z=[[0.0], [5.0]])
    with pytest.raises(EmptyNeighborhoodError):
        build_weights(
            pop, "0", Scheme.Z_ONLY, kernel_z=BOXCAR, b_z=Bandwidth(0.1), include_self=False
        )
    with pytest.raises(SchemeMismatchError):
        build_weights(pop, "0", Scheme.THETA_ONLY)  # no pairs, no oracle
    pop_nz = Population.from_arrays(theta_hat=[0.0, 1.0])
    with pytest.raises(SchemeMismatchError):
        build_weights(pop_nz, "0", Scheme.Z_ONLY)


def test_build_weights_include_self_flag():
    pop = Population.from_arrays(theta_hat=[1.0, 2.0], z=[[0.0], [1.0]])
    with_self = build_weights(pop, "0", Scheme.Z_ONLY, b_z=Bandwidth(1.0))
    without = build_weights(pop, "0", Scheme.Z_ONLY, b_z=Bandwidth(1.0), include_self=False)
    assert with_self.weights[0] > 0
    assert without.weights[0] == 0.0


def test_population_validation():
    with pytest.raises(InvalidInputError):
        Population(records=(IndividualRecord("a", theta_hat=0.0), IndividualRecord("a", theta_hat=1.0)))
    with pytest.raises(InvalidInputError):
        Population(
            records=(
                IndividualRecord("a", z=np.array([0.0, 1.0])),
                IndividualRecord("b", z=np.array([0.0])),
            )
        )
    with pytest.raises(InvalidInputError):
        IndividualRecord("empty")
