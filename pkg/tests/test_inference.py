import numpy as np
import pytest

from postcause.domain import Dataset, Evidence, OutcomeEvent
from postcause.estimands import post_ice
from postcause.inference import (BootstrapConfig, BootstrapError, analytic_map_variance,
                                 bootstrap, map_covariance, stratified_indices)
from postcause.simulator import generate, location_shift


def _two_strata(n0, n1, seed=0):
    rng = np.random.default_rng(seed)
    X = np.array([0] * n0 + [1] * n1)[:, None]
    y = rng.normal(size=n0 + n1) + 2.0 * X[:, 0]
    return Dataset(X, y)


def test_config_validation():
    with pytest.raises(ValueError):
        BootstrapConfig(replicates=0)
    with pytest.raises(ValueError):
        BootstrapConfig(level=1.0)


def test_stratified_indices_preserve_counts():
    codes = np.array([0, 0, 1, 2, 2, 2])
    rows = stratified_indices(codes, np.random.default_rng(0))
    assert np.array_equal(np.bincount(codes[rows]), [2, 1, 3])


def test_constant_statistic_has_zero_se():
    data = _two_strata(30, 30)
    res = bootstrap(lambda d: 3.5, data, BootstrapConfig(replicates=50))
    assert res.se == 0.0 and res.ci_low == 3.5 and res.ci_high == 3.5


def test_determinism_and_parallel_equivalence():
    data = _two_strata(200, 200)
    ev = Evidence((0,), OutcomeEvent.everything())
    stat = lambda d: post_ice(d, ev, (1,)).estimate
    a = bootstrap(stat, data, BootstrapConfig(replicates=60, seed=4))
    b = bootstrap(stat, data, BootstrapConfig(replicates=60, seed=4))
    c = bootstrap(stat, data, BootstrapConfig(replicates=60, seed=4, n_jobs=3))
    assert a.ci_low == b.ci_low == c.ci_low and a.ci_high == b.ci_high == c.ci_high
    assert np.array_equal(a.replicates, c.replicates)
    d = bootstrap(stat, data, BootstrapConfig(replicates=60, seed=5))
    assert not np.array_equal(a.replicates, d.replicates)


def test_array_statistic():
    data = _two_strata(100, 100)
    res = bootstrap(lambda d: np.array([d.y.mean(), d.y.max()]), data,
                    BootstrapConfig(replicates=40))
    assert res.se.shape == (2,) and np.all(res.ci_low <= res.ci_high)


def test_too_many_dropped_replicates():
    X = np.array([[0]] * 50 + [[1]] * 50)
    y = np.concatenate([np.arange(50.0), np.arange(50.0)])
    data = Dataset(X, y)
    # a single evidence unit is lost in about 37% of resamples
    ev = Evidence((0,), OutcomeEvent.above(48.5))
    with pytest.raises(BootstrapError):
        bootstrap(lambda d: post_ice(d, ev, (1,)).estimate, data,
                  BootstrapConfig(replicates=100))


def test_analytic_variance_at_boundary():
    data = _two_strata(400, 400)
    y_min = float(data.y[:400].min())
    mv = analytic_map_variance(data, (0,), (1,), y_min)
    n_x, p_x = 400, 0.5
    assert mv.f_source == pytest.approx(1 / n_x)
    src_term = (1 / n_x) * (1 - 1 / n_x) / p_x
    assert mv.sigma2 == pytest.approx(src_term + mv.f_target * (1 - mv.f_target) / 0.5)
    mid = analytic_map_variance(data, (0,), (1,), float(np.median(data.y[:400])))
    assert mv.sigma2 < 0.1 * mid.sigma2


def test_unbalanced_strata_larger_se():
    rng = np.random.default_rng(3)
    base = rng.normal(size=1000)
    bal = Dataset(np.array([0] * 500 + [1] * 500)[:, None],
                  np.concatenate([base[:500], base[500:] + 1]))
    unbal = Dataset(np.array([0] * 100 + [1] * 900)[:, None],
                    np.concatenate([base[:100], base[100:] + 1]))
    a = analytic_map_variance(bal, (0,), (1,), 0.0)
    b = analytic_map_variance(unbal, (0,), (1,), 0.0)
    assert b.se > a.se


def test_analytic_se_location_invariant():
    data = _two_strata(300, 300, seed=6)
    shifted = Dataset(data.X, data.y + 17.25)
    y = float(np.median(data.y[:300]))
    a = analytic_map_variance(data, (0,), (1,), y)
    b = analytic_map_variance(shifted, (0,), (1,), y + 17.25)
    assert b.phi == pytest.approx(a.phi + 17.25)
    assert b.sigma2 == a.sigma2
    assert b.se == pytest.approx(a.se, rel=1e-9)


def test_variance_components_nonnegative_and_kernel_diagonal():
    data, _ = generate(location_shift(1.0, 0.3), 2000, seed=2)
    y = float(np.quantile(data.y[data.X[:, 0] == 0], 0.3))
    mv = analytic_map_variance(data, (0,), (1,), y)
    assert mv.sigma2 >= 0 and mv.se >= 0
    assert map_covariance(data, (0,), (1,), y, y) == pytest.approx(mv.sigma2)
    # swapping the roles of the two strata swaps the two summands
    back = analytic_map_variance(data, (1,), (0,), mv.phi)
    assert back.sigma2 == pytest.approx(mv.sigma2, rel=1e-2)


def test_analytic_variance_outside_support():
    data = _two_strata(50, 50)
    with pytest.raises(ValueError):
        analytic_map_variance(data, (0,), (1,), 100.0)
