import numpy as np
import pytest

from ppkrige import (
    CountFieldModel,
    InvalidArgumentError,
    PcfFunction,
    SeriesDivergentError,
    ThomasParams,
    Window,
    band_window,
    build_grid,
    build_kriging_system,
    count_on_grid,
    krige_intensity,
    kriging_variance,
    neumann_inverse,
    neumann_weights,
    simulate_thomas,
    solve_weights,
    thomas_pcf,
    variance_series,
)

THOMAS = ThomasParams(10.0, 50.0, 0.05)
G_THOMAS = thomas_pcf(THOMAS)


def poisson_pcf():
    return PcfFunction.empirical(np.array([0.01, 10.0]), np.array([1.0, 1.0]))


def make_system(lam=500.0, cell_side=0.125, window=None):
    window = window or band_window(0.5, 0.25)
    grid = build_grid(window, cell_side)
    model = CountFieldModel(lam, G_THOMAS, grid.cell_area)
    return model, grid, build_kriging_system(model, grid)


def test_weights_sum_to_one():
    _, grid, system = make_system()
    c_o = system.covariance_vectors(np.arange(grid.n))
    mu = solve_weights(system.cov, c_o)
    assert np.all(np.abs(mu.sum(axis=1) - 1.0) < 1e-8)


def test_weights_match_bordered_system_oracle():
    # the two-solve path must agree with solving the full constrained system
    # [[C, 1], [1', 0]] [mu; alpha] = [c_o; 1] directly
    _, grid, system = make_system()
    C = system.cov.matrix
    n = system.n_obs
    kkt = np.zeros((n + 1, n + 1))
    kkt[:n, :n] = C
    kkt[:n, n] = 1.0
    kkt[n, :n] = 1.0
    targets = [0, grid.n // 2, grid.n - 1]
    c_o = system.covariance_vectors(targets)
    mu = solve_weights(system.cov, c_o)
    for row, t in enumerate(targets):
        rhs = np.concatenate([c_o[row], [1.0]])
        oracle = np.linalg.solve(kkt, rhs)[:n]
        assert np.allclose(mu[row], oracle, atol=1e-6)


def test_poisson_estimation_recovers_observed_count():
    # with g = 1 the covariance is diagonal, so the estimation weights are the
    # indicator of the target's own cell: lambda-hat = count / nu exactly
    w = band_window(0.5, 0.25)
    grid = build_grid(w, 0.125)
    model = CountFieldModel(100.0, poisson_pcf(), grid.cell_area)
    rng = np.random.default_rng(3)
    counts = rng.poisson(100.0 * grid.cell_area, size=(grid.ny, grid.nx))
    surf = krige_intensity(model, grid, counts, targets="observed")
    obs = grid.observed_flat.reshape(grid.ny, grid.nx)
    expected = counts[obs] / grid.cell_area
    assert np.allclose(surf.intensity[obs], expected, atol=1e-8)
    # estimation variance: lambda / nu
    assert np.allclose(surf.variance[obs], 100.0 / grid.cell_area, rtol=1e-10)


def test_poisson_prediction_is_equal_weight_mean():
    w = band_window(0.5, 0.25)
    grid = build_grid(w, 0.125)
    model = CountFieldModel(100.0, poisson_pcf(), grid.cell_area)
    rng = np.random.default_rng(4)
    counts = rng.poisson(100.0 * grid.cell_area, size=(grid.ny, grid.nx))
    surf = krige_intensity(model, grid, counts, targets="unobserved")
    obs = grid.observed_flat.reshape(grid.ny, grid.nx)
    expected = counts[obs].mean() / grid.cell_area
    vals = surf.intensity[~obs]
    assert np.allclose(vals, expected, atol=1e-8)
    # prediction variance: lambda / area observed
    area_obs = grid.n_obs * grid.cell_area
    assert np.allclose(surf.variance[~obs], 100.0 / area_obs, rtol=1e-10)


def test_weights_minimize_prediction_variance():
    # perturbing the weights within the sum-to-one constraint can only
    # increase mu' C mu - 2 mu' c_o
    _, grid, system = make_system()
    t = int(np.flatnonzero(~grid.observed_flat)[7])
    c_o = system.covariance_vectors([t])[0]
    mu = solve_weights(system.cov, c_o)
    C = system.cov.matrix
    base = mu @ C @ mu - 2.0 * mu @ c_o
    rng = np.random.default_rng(11)
    for _ in range(10):
        delta = rng.normal(size=len(mu)) * 1e-3
        delta -= delta.mean()  # keep the constraint
        cand = mu + delta
        obj = cand @ C @ cand - 2.0 * cand @ c_o
        assert obj - base >= -1e-12


def test_neumann_inverse_small_lnu():
    # lambda scaled so that lambda*nu(B) = 0.01 on an 8x8 grid: the series
    # converges fast and order 10 is numerically exact
    grid = build_grid(Window.full(), 0.125)
    model = CountFieldModel(0.64, G_THOMAS, grid.cell_area)
    system = build_kriging_system(model, grid)
    approx = neumann_inverse(model, system.cov, order=10)
    resid = np.abs(system.cov.matrix @ approx - np.eye(system.n_obs)).max()
    assert resid < 1e-6
    c_o = system.covariance_vectors([0])[0]
    mu_direct = solve_weights(system.cov, c_o)
    mu_series = neumann_weights(model, system.cov, c_o, order=10)
    assert np.abs(mu_series - mu_direct).max() < 1e-4


def test_neumann_residual_shrinks_with_order():
    grid = build_grid(Window.full(), 0.125)
    model = CountFieldModel(0.64, G_THOMAS, grid.cell_area)
    system = build_kriging_system(model, grid)
    eye = np.eye(system.n_obs)
    r1 = np.abs(system.cov.matrix @ neumann_inverse(model, system.cov, 1) - eye).max()
    r2 = np.abs(system.cov.matrix @ neumann_inverse(model, system.cov, 2) - eye).max()
    assert r2 < r1


def test_neumann_divergence_detected():
    # at lambda*nu = 0.5 the spectral radius of lnu*(G-1) blows past 1
    grid = build_grid(Window.full(), 0.125)
    model = CountFieldModel(32.0, G_THOMAS, grid.cell_area)
    system = build_kriging_system(model, grid)
    with pytest.raises(SeriesDivergentError):
        neumann_inverse(model, system.cov, order=10)
    with pytest.raises(InvalidArgumentError):
        neumann_inverse(model, system.cov, order=0)


def test_variance_series_poisson_closed_form():
    # g = 1 zeroes every series term: estimation variance is lambda/nu and
    # prediction variance lambda/area-observed, exactly
    w = band_window(0.5, 0.25)
    grid = build_grid(w, 0.125)
    model = CountFieldModel(100.0, poisson_pcf(), grid.cell_area)
    system = build_kriging_system(model, grid)
    n = system.n_obs
    g_o = np.ones(n)
    est = variance_series(model, system.cov, g_o, n * grid.cell_area, observed_position=3)
    pred = variance_series(model, system.cov, g_o, n * grid.cell_area)
    assert est == pytest.approx(100.0 / grid.cell_area, rel=1e-10)
    assert pred == pytest.approx(100.0 / (n * grid.cell_area), rel=1e-10)


def test_variance_series_converges_to_direct():
    # same small-lnu regime as the Neumann check: order 10 reproduces the
    # closed-form variance for both target kinds
    grid = build_grid(band_window(0.5, 0.25), 0.125)
    model = CountFieldModel(0.64, G_THOMAS, grid.cell_area)
    system = build_kriging_system(model, grid)
    centers = grid.centers()
    obs_idx = system.obs_indices
    area_obs = system.n_obs * grid.cell_area

    # prediction target
    t_pred = int(np.flatnonzero(~grid.observed_flat)[5])
    c_o = system.covariance_vectors([t_pred])[0]
    direct = kriging_variance(model, system.cov, c_o) / 1.0
    dists = np.linalg.norm(centers[obs_idx] - centers[t_pred], axis=1)
    g_o = G_THOMAS(dists)
    series = variance_series(model, system.cov, g_o, area_obs, order=10)
    assert series == pytest.approx(direct, rel=1e-6)

    # estimation target
    pos = 9
    t_est = int(obs_idx[pos])
    c_o = system.covariance_vectors([t_est])[0]
    direct = kriging_variance(model, system.cov, c_o)
    dists = np.linalg.norm(centers[obs_idx] - centers[t_est], axis=1)
    g_o = G_THOMAS(dists)
    series = variance_series(model, system.cov, g_o, area_obs, observed_position=pos, order=10)
    assert series == pytest.approx(direct, rel=1e-6)


def test_predictor_unbiased_over_simulations():
    # unconditionally E[lambda-hat(x)] = lambda: average the kriged value at a
    # fixed unobserved cell over many Thomas realizations
    w = band_window(0.5, 0.5)
    grid = build_grid(w, 0.25)
    model = CountFieldModel(500.0, G_THOMAS, grid.cell_area)
    system = build_kriging_system(model, grid)
    t = int(np.flatnonzero(~grid.observed_flat)[0])
    vals = []
    for s in range(400):
        sim = simulate_thomas(THOMAS, seed=90_000 + s)
        counts = count_on_grid(sim.pattern, grid)
        surf = krige_intensity(model, grid, counts, targets=[t], system=system)
        vals.append(surf.intensity.ravel()[t])
    vals = np.array(vals)
    se = vals.std(ddof=1) / np.sqrt(len(vals))
    assert abs(vals.mean() - 500.0) < 3 * se


def test_surface_structure_and_clamping():
    model, grid, system = make_system()
    counts = np.zeros((grid.ny, grid.nx), dtype=int)
    # one hot cell forces negative weights elsewhere to bite
    hot = system.obs_indices[0]
    counts.ravel()[hot] = 200
    raw = krige_intensity(model, grid, counts, system=system)
    assert raw.intensity.shape == (grid.ny, grid.nx)
    assert np.isfinite(raw.intensity).all()  # targets = all
    assert (raw.variance >= 0).all()
    assert raw.n_clamped == 0
    assert (raw.intensity < 0).any()  # the hot-cell layout produces overshoot

    clamped = krige_intensity(model, grid, counts, clamp_nonnegative=True, system=system)
    assert clamped.n_clamped == int((raw.intensity < 0).sum())
    assert clamped.intensity.min() == 0.0

    part = krige_intensity(model, grid, counts, targets="unobserved", system=system)
    obs2d = grid.observed_flat.reshape(grid.ny, grid.nx)
    assert np.isnan(part.intensity[obs2d]).all()
    assert np.isfinite(part.intensity[~obs2d]).all()
    assert not part.estimated.any()
    assert part.target_mask.sum() == (~obs2d).sum()
    flat_targets = np.flatnonzero(~grid.observed_flat)
    assert np.allclose(
        part.values_at(flat_targets), part.intensity[~obs2d]
    )


def test_input_validation():
    model, grid, system = make_system()
    with pytest.raises(InvalidArgumentError):
        krige_intensity(model, grid, np.zeros((3, 3)))
    with pytest.raises(InvalidArgumentError):
        krige_intensity(model, grid, np.zeros((grid.ny, grid.nx)), targets="everything")
    with pytest.raises(InvalidArgumentError):
        krige_intensity(model, grid, np.zeros((grid.ny, grid.nx)), targets=[grid.n])
    with pytest.raises(InvalidArgumentError):
        solve_weights(system.cov, np.ones(system.n_obs + 1))


def test_reused_system_matches_fresh_solve():
    model, grid, system = make_system()
    rng = np.random.default_rng(8)
    counts = rng.poisson(5.0, size=(grid.ny, grid.nx))
    a = krige_intensity(model, grid, counts, system=system)
    b = krige_intensity(model, grid, counts)
    assert np.array_equal(a.intensity, b.intensity, equal_nan=True)
    assert np.array_equal(a.variance, b.variance, equal_nan=True)
