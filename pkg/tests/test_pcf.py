import numpy as np
import pytest

from ppkrige import (
    InsufficientDataError,
    InvalidArgumentError,
    InvalidPcfError,
    PcfFunction,
    PointPattern,
    ThomasParams,
    Window,
    band_window,
    estimate_pcf,
    simulate_poisson,
    simulate_thomas,
    stoyan_bandwidth,
    translation_weight,
)


def _uniform_pattern(n, seed=0):
    pts = np.random.default_rng(seed).uniform(0, 1, size=(n, 2))
    return PointPattern(pts, Window.full())


def test_stoyan_bandwidth_rule():
    # h = 0.15 / sqrt(lambda_hat); 500 points on the unit square
    p = _uniform_pattern(500)
    assert stoyan_bandwidth(p) == pytest.approx(0.15 / np.sqrt(500.0))
    assert stoyan_bandwidth(p) == pytest.approx(0.006708203932499369)


def test_stoyan_bandwidth_quarters_with_four_times_the_points():
    h1 = stoyan_bandwidth(_uniform_pattern(100, seed=1))
    h4 = stoyan_bandwidth(_uniform_pattern(400, seed=2))
    assert h4 == pytest.approx(h1 / 2.0, rel=1e-12)


def test_stoyan_bandwidth_needs_points():
    empty = PointPattern(np.empty((0, 2)), Window.full())
    with pytest.raises(InsufficientDataError):
        stoyan_bandwidth(empty)


def test_empirical_pcf_function_interpolation():
    g = PcfFunction.empirical(
        r=np.array([0.1, 0.2, 0.3]),
        values=np.array([4.0, 2.0, 1.5]),
        bandwidth=0.05,
        r_max=0.3,
    )
    assert g(0.15) == pytest.approx(3.0)
    assert g(0.05) == pytest.approx(4.0)  # left of first abscissa: first value
    assert g(0.35) == 1.0  # beyond r_max the process is treated as uncorrelated
    assert g(5.0) == 1.0
    with pytest.raises(InvalidArgumentError):
        g(-0.1)


def test_empirical_pcf_validation():
    with pytest.raises(InvalidArgumentError):
        PcfFunction.empirical(np.array([0.2, 0.1]), np.array([1.0, 1.0]), 0.05, 0.2)
    with pytest.raises(InvalidPcfError):
        PcfFunction.empirical(np.array([0.1, 0.2]), np.array([1.0, -0.5]), 0.05, 0.2)
    with pytest.raises(InvalidPcfError):
        PcfFunction.empirical(np.array([0.1, 0.2]), np.array([1.0, np.nan]), 0.05, 0.2)


def test_translation_weight_matches_unit_square_formula():
    w = Window.full()
    assert translation_weight(np.array([0.3, 0.4]), w) == pytest.approx(0.7 * 0.6, abs=1e-6)
    with pytest.raises(InvalidArgumentError):
        translation_weight(np.array([1.5, 0.0]), w)


def test_estimate_pcf_requires_two_observed_points():
    p = PointPattern(np.array([[0.5, 0.5]]), Window.full())
    with pytest.raises(InsufficientDataError):
        estimate_pcf(p)


def test_estimate_pcf_rejects_bad_rmax():
    p = _uniform_pattern(50)
    with pytest.raises(InvalidArgumentError):
        estimate_pcf(p, r_max=2.0)  # beyond half the diameter
    with pytest.raises(InvalidArgumentError):
        estimate_pcf(p, r_max=-0.1)


def test_estimate_pcf_shape_and_grid():
    p = _uniform_pattern(200)
    g = estimate_pcf(p, r_max=0.25, n_r=64)
    assert len(g.r) == 64
    assert g.r[0] == pytest.approx(0.25 / 64)
    assert g.r[-1] == pytest.approx(0.25)
    assert (g.values >= 0).all()
    assert g.r_max == pytest.approx(0.25)


def test_poisson_pcf_is_one_on_average():
    # ~unbiasedness of the translation-corrected kernel estimator: for a
    # homogeneous Poisson process g = 1 at all lags
    n_sim = 200
    acc = None
    for s in range(n_sim):
        pat = simulate_poisson(100.0, seed=2_000 + s)
        if pat.n < 2:
            continue
        g = estimate_pcf(pat, r_max=0.25, n_r=32)
        acc = g.values if acc is None else acc + g.values
    mean_g = acc / n_sim
    h = 0.15 / np.sqrt(100.0)
    r = np.linspace(0.25 / 32, 0.25, 32)
    interior = r > 2 * h  # kernel touching r=0 relies on the reflection fix
    assert mean_g[interior].min() > 0.9
    assert mean_g[interior].max() < 1.1


def test_thomas_pcf_recovered_within_ten_percent():
    params = ThomasParams(10.0, 50.0, 0.05)
    truth = params.intensity  # for reference only
    g_true = 1 + np.exp(-0.02**2 / (4 * 0.05**2)) / (4 * np.pi * 10.0 * 0.05**2)
    vals = []
    for s in range(100):
        pat = simulate_thomas(params, seed=3_000 + s).pattern
        g = estimate_pcf(pat, r_max=0.25)
        vals.append(g(0.02))
    assert np.mean(vals) == pytest.approx(g_true, rel=0.10)
    assert truth == 500.0


def test_estimate_pcf_deterministic():
    p = _uniform_pattern(150, seed=9)
    a = estimate_pcf(p, r_max=0.2)
    b = estimate_pcf(p, r_max=0.2)
    assert np.array_equal(a.values, b.values)
    assert a.bandwidth == b.bandwidth


def test_estimate_pcf_with_band_window_uses_observed_points_only():
    w = Window.full()
    bw = band_window(0.5, 0.25)
    pts = np.random.default_rng(5).uniform(0, 1, size=(300, 2))
    g_full = estimate_pcf(PointPattern(pts, w), r_max=0.2)
    g_band = estimate_pcf(PointPattern(pts, bw), r_max=0.2)
    # the band estimate sees only ~half the points, so lambda-hat differs
    assert not np.allclose(g_full.values, g_band.values)
    assert (g_band.values >= 0).all()
