from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from postcause.ecdf import DensityEstimate, density_at, fit_ecdf, quantile, silverman_bandwidth, support

samples = st.lists(st.integers(-50, 50).map(float), min_size=1, max_size=40)


def test_ecdf_definition():
    assert fit_ecdf([1, 2, 3])(2) == pytest.approx(2 / 3)
    f = fit_ecdf([5])
    assert f(4.9) == 0 and f(5) == 1
    assert fit_ecdf([1, 1, 2])(1) == pytest.approx(2 / 3)


def test_ecdf_empty():
    with pytest.raises(ValueError):
        fit_ecdf([])


def test_quantile_convention():
    f = fit_ecdf([3, 1, 2])
    assert quantile(f, 0.5) == 2
    assert quantile(f, 1.0) == 3
    assert quantile(f, 0.0) == 1
    assert quantile(f, 1 / 3) == 1
    with pytest.raises(ValueError):
        quantile(f, 1.2)
    with pytest.raises(ValueError):
        quantile(f, -0.1)


def test_support():
    assert support(fit_ecdf([1, 2, 3])) == (1, 3)
    assert support(fit_ecdf([5])) == (5, 5)
    rng = np.random.default_rng(0)
    lo, hi = support(fit_ecdf(rng.uniform(size=10000)))
    assert lo < 0.01 and hi > 0.99


@given(samples)
def test_galois_inequalities(values):
    f = fit_ecdf(values)
    n = len(values)
    for j in range(1, n + 1):
        u = j / n
        assert f(quantile(f, u)) >= u - 1e-15
    for y in values:
        assert quantile(f, f(y)) <= y


@given(samples, st.lists(st.floats(-60, 60), min_size=2, max_size=10))
def test_ecdf_step_values(values, points):
    f = fit_ecdf(values)
    n = len(values)
    points = sorted(points)
    vals = f(np.array(points))
    assert np.all(np.diff(vals) >= 0)
    for p, v in zip(points, vals):
        # exact rational value #{Y <= p} / n
        assert Fraction(sum(1 for y in values if y <= p), n) == Fraction(int(round(v * n)), n)


@given(samples, st.floats(0, 1))
def test_quantile_in_support(values, u):
    f = fit_ecdf(values)
    lo, hi = support(f)
    assert lo <= quantile(f, u) <= hi


def test_density_standard_normal():
    rng = np.random.default_rng(1)
    d = DensityEstimate(rng.standard_normal(10000))
    assert abs(density_at(d, 0.0) - 1 / np.sqrt(2 * np.pi)) < 0.05


def test_density_symmetry_and_tail():
    rng = np.random.default_rng(2)
    half = rng.standard_normal(2000)
    d = DensityEstimate(np.concatenate([half, -half]))
    for y in (0.3, 1.0, 2.2):
        assert density_at(d, -y) == pytest.approx(density_at(d, y), rel=1e-10)
    assert density_at(d, 100.0) < 1e-6
    assert d(np.array([0.0, 1.0])).shape == (2,)


def test_bandwidth():
    with pytest.raises(ValueError):
        silverman_bandwidth([1.0, 1.0, 1.0])
    x = np.arange(100.0)
    sd = np.std(x, ddof=1)
    iqr = np.percentile(x, 75) - np.percentile(x, 25)
    assert silverman_bandwidth(x) == pytest.approx(0.9 * min(sd, iqr / 1.34) * 100 ** -0.2)
