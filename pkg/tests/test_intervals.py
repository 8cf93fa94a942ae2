import numpy as np
import pytest

from lccoda.composition import DeathCountPanel
from lccoda.errors import ConfigError, EmptySamples, TooFewYears
from lccoda.intervals import (
    IntervalConfig,
    bootstrap_intervals,
    bootstrap_samples,
    empirical_quantile,
)
from lccoda.pipeline import PipelineConfig, run_point_forecast

from synthetic import random_panel, rwd_panel


def sorted_quantile(values, level):
    """Type-7 quantile from a sorted list, written out by hand."""
    xs = sorted(values)
    pos = (len(xs) - 1) * level
    lo = int(pos)
    hi = min(lo + 1, len(xs) - 1)
    return xs[lo] + (pos - lo) * (xs[hi] - xs[lo])


def test_quantile_examples():
    assert empirical_quantile([1, 2, 3, 4], 0.5) == 2.5
    assert empirical_quantile([4, 1, 3, 2], 0.0) == 1.0
    assert empirical_quantile([4, 1, 3, 2], 1.0) == 4.0
    assert empirical_quantile([7.0], 0.3) == 7.0


def test_quantile_against_sort_oracle():
    rng = np.random.default_rng(0)
    for _ in range(50):
        xs = rng.normal(size=int(rng.integers(1, 40)))
        level = float(rng.uniform())
        assert empirical_quantile(xs, level) == pytest.approx(sorted_quantile(xs.tolist(), level), abs=1e-12)


def test_quantile_errors():
    with pytest.raises(EmptySamples):
        empirical_quantile([], 0.5)
    with pytest.raises(EmptySamples):
        empirical_quantile(np.zeros((0, 3)), 0.5, axis=0)
    with pytest.raises(ConfigError):
        empirical_quantile([1.0], 1.5)


def test_interval_config_validation():
    with pytest.raises(ConfigError):
        IntervalConfig(n_boot=50)
    with pytest.raises(ConfigError):
        IntervalConfig(coverage=1.0)
    with pytest.raises(ConfigError):
        IntervalConfig(seed=-3)
    assert IntervalConfig(coverage=0.8).levels == pytest.approx((0.1, 0.9))


def uniform_panel(T=6):
    return DeathCountPanel(range(T), ["a", "b"], ["x", "y"], np.full((T, 2, 2), 30.0))


def test_degenerate_bands_collapse_exactly():
    iv = bootstrap_intervals(uniform_panel(), PipelineConfig("clr", horizon=3), IntervalConfig(n_boot=100))
    np.testing.assert_array_equal(iv.lower, iv.point)
    np.testing.assert_array_equal(iv.upper, iv.point)
    np.testing.assert_array_equal(iv.point, 0.25)


def test_linear_panel_bands_collapse():
    # log ratio exactly linear in time: no residuals, no innovations
    t = np.arange(1, 7)
    counts = np.stack([50 * np.exp(0.2 * t), np.full(6, 50.0)], axis=1)[:, None, :]
    p = DeathCountPanel(t, ["all"], ["c1", "c2"], counts)
    iv = bootstrap_intervals(p, PipelineConfig("clr", horizon=2), IntervalConfig(n_boot=200))
    np.testing.assert_allclose(iv.lower, iv.point, rtol=0, atol=1e-12)
    np.testing.assert_allclose(iv.upper, iv.point, rtol=0, atol=1e-12)


def test_point_matches_point_forecast():
    p = random_panel(np.random.default_rng(1))
    cfg = PipelineConfig("alpha:0.5", horizon=3)
    iv = bootstrap_intervals(p, cfg, IntervalConfig(n_boot=100))
    np.testing.assert_array_equal(iv.point, run_point_forecast(p, cfg).densities)
    assert iv.years == (2013, 2014, 2015)


def test_zero_coverage_is_median():
    p = random_panel(np.random.default_rng(2))
    cfg = PipelineConfig("ilr", horizon=2)
    icfg = IntervalConfig(n_boot=101, coverage=0.0, seed=4)
    _, _, samples = bootstrap_samples(p, cfg, icfg)
    iv = bootstrap_intervals(p, cfg, icfg)
    np.testing.assert_array_equal(iv.lower, iv.upper)
    np.testing.assert_array_equal(iv.lower, np.median(samples, axis=0))


def test_seed_determinism_and_sensitivity():
    p = random_panel(np.random.default_rng(3))
    cfg = PipelineConfig("alpha:0.3", horizon=2)
    a = bootstrap_intervals(p, cfg, IntervalConfig(n_boot=150, seed=9))
    b = bootstrap_intervals(p, cfg, IntervalConfig(n_boot=150, seed=9))
    c = bootstrap_intervals(p, cfg, IntervalConfig(n_boot=150, seed=10))
    np.testing.assert_array_equal(a.lower, b.lower)
    np.testing.assert_array_equal(a.upper, b.upper)
    assert not np.array_equal(a.upper, c.upper)


def test_thread_count_gives_identical_bands(monkeypatch):
    p = random_panel(np.random.default_rng(4))
    cfg = PipelineConfig("clr", horizon=2)
    icfg = IntervalConfig(n_boot=200, seed=1)
    monkeypatch.setenv("CODA_THREADS", "1")
    a = bootstrap_intervals(p, cfg, icfg)
    monkeypatch.setenv("CODA_THREADS", "4")
    b = bootstrap_intervals(p, cfg, icfg)
    np.testing.assert_array_equal(a.lower, b.lower)
    np.testing.assert_array_equal(a.upper, b.upper)


def test_bands_nest_and_samples_are_compositions():
    p = rwd_panel(np.random.default_rng(5))
    cfg = PipelineConfig("clr", horizon=3)
    _, _, samples = bootstrap_samples(p, cfg, IntervalConfig(n_boot=300, seed=2))
    assert samples.shape == (300, 3, 6)
    assert np.all(samples >= 0)
    np.testing.assert_allclose(samples.sum(axis=-1), 1.0, atol=1e-12)
    narrow = bootstrap_intervals(p, cfg, IntervalConfig(n_boot=300, coverage=0.5, seed=2))
    wide = bootstrap_intervals(p, cfg, IntervalConfig(n_boot=300, coverage=0.9, seed=2))
    assert np.all(wide.lower <= narrow.lower) and np.all(narrow.upper <= wide.upper)
    assert np.all(wide.lower <= wide.upper)


def test_width_grows_with_horizon():
    p = rwd_panel(np.random.default_rng(6), sd_k=0.3)
    iv = bootstrap_intervals(p, PipelineConfig("clr", horizon=5), IntervalConfig(n_boot=400))
    width = (iv.upper - iv.lower).sum(axis=1)
    assert width[-1] > width[0]


def test_reclose_option():
    p = random_panel(np.random.default_rng(7))
    iv = bootstrap_intervals(p, PipelineConfig("clr", horizon=2), IntervalConfig(n_boot=100, reclose=True))
    assert iv.reclosed
    np.testing.assert_allclose(iv.lower.sum(axis=1), 1.0, atol=1e-12)
    np.testing.assert_allclose(iv.upper.sum(axis=1), 1.0, atol=1e-12)


def test_too_few_years():
    with pytest.raises(TooFewYears):
        bootstrap_intervals(uniform_panel(3), PipelineConfig("clr"), IntervalConfig(n_boot=100))
