import math

import numpy as np
import pytest
from hypothesis import given, settings
from scipy import integrate, stats

from helpers import random_bf, seeds
from sncalc.bounding import (
    BoundingClassError,
    ClipAtOne,
    Constant,
    ExpServerClosedForm,
    Exponential,
    PoissonChernoff,
    PoissonLowerTail,
    PoissonTail,
    Scale,
    TailIntegral,
    WindowIntegral,
    ZeroBeyond,
    bf_check_monotone,
    bf_eval,
    bf_integrate,
)
from sncalc.quadrature import QuadratureError, adaptive_simpson


def test_exponential_at_zero():
    assert bf_eval(Exponential(1.0, 1.0), 0.0) == 1.0


def test_poisson_chernoff_value():
    expected = math.exp(10 - 30 * math.log(30 / 20))
    assert bf_eval(PoissonChernoff(20.0, 1.0), 10.0) == pytest.approx(expected, rel=1e-12)
    assert expected == pytest.approx(0.1149, abs=1e-4)


def test_clip_at_one():
    assert bf_eval(ClipAtOne(Scale(2.0, Exponential(1.0, 1.0))), 0.0) == 1.0


def test_negative_threshold_rejected():
    with pytest.raises(ValueError):
        bf_eval(Exponential(1.0, 1.0), -1.0)


def test_integrals_closed_form():
    f = Exponential(1.0, 1.0)
    assert bf_integrate(f, 0.0, 1.0) == pytest.approx(1 - math.exp(-1), rel=1e-12)
    assert bf_integrate(f, 1.0, math.inf) == pytest.approx(math.exp(-1), rel=1e-12)
    assert bf_integrate(f, 2.0, 2.0) == 0.0


def test_integrals_by_quadrature_match_closed_form():
    # ClipAtOne hides the closed form, forcing adaptive Simpson
    f = ClipAtOne(Exponential(1.0, 1.0))
    val, err = bf_integrate(f, 0.0, 1.0, with_error=True)
    assert val == pytest.approx(1 - math.exp(-1), rel=1e-9)
    assert err < 1e-8
    val, err = bf_integrate(f, 1.0, math.inf, with_error=True)
    assert val == pytest.approx(math.exp(-1), rel=1e-9)


def test_infinite_integral_needs_class_g():
    with pytest.raises(BoundingClassError):
        bf_integrate(Constant(0.5), 0.0, math.inf)
    with pytest.raises(BoundingClassError):
        TailIntegral(Constant(0.5))


def test_quadrature_reports_error_estimate():
    def wild(x):
        return np.sin(1.0 / np.maximum(x, 1e-300))

    with pytest.raises(QuadratureError) as info:
        adaptive_simpson(wild, np.array([1e-9]), np.array([1.0]), max_depth=6)
    assert info.value.error is not None and info.value.error > 0


def test_monotone_checks():
    grid = np.arange(0, 10.0001, 0.1)
    assert bf_check_monotone(Exponential(1.0, 1.0), grid)
    assert bf_check_monotone(Constant(0.5), grid)
    res = bf_check_monotone(ExpServerClosedForm(25.0, 1.0), grid)
    assert not res
    (x1, v1), (x2, v2) = res.witness
    assert x1 == 0.0 and abs(v1) < 1e-15 and v2 > v1


def test_poisson_tail_against_scipy():
    f = PoissonTail(20.0, 1.0)
    x = np.arange(0, 40.0, 0.37)
    assert np.allclose(f(x), stats.poisson.sf(np.floor(20 + x + 1e-12), 20), rtol=1e-10, atol=1e-300)
    assert f(10.0) == pytest.approx(stats.poisson.sf(30, 20), rel=1e-10)


def test_poisson_lower_tail_against_scipy():
    g = PoissonLowerTail(25.0, 1.0)
    assert g(0.0) == pytest.approx(stats.poisson.cdf(25, 25), rel=1e-10)
    assert g(0.0) == pytest.approx(0.553, abs=1e-3)
    assert g(25.0) == pytest.approx(math.exp(-25), rel=1e-8)
    assert g(25.5) == 0.0
    x = np.arange(0, 25.0, 0.37)
    assert np.allclose(g(x), stats.poisson.cdf(np.floor(25 - x + 1e-12), 25), rtol=1e-10)


def test_step_integrals_against_scipy_quad():
    for f in (PoissonTail(20.0, 1.0), PoissonLowerTail(25.0, 2.0)):
        for lo, hi in ((0.0, 3.3), (1.1, 17.9), (4.0, 60.0)):
            ref, _ = integrate.quad(lambda y: float(f(y)), lo, hi, limit=500, points=f.jumps(lo, hi)[:400])
            assert bf_integrate(f, lo, hi) == pytest.approx(ref, rel=1e-7, abs=1e-12)


def test_window_integral_empty_window():
    w = WindowIntegral(Exponential(1.0, 1.0), 0.5, 0.0, 1.0)
    assert w.degenerate
    assert w(3.0) == 0.0


def test_zero_beyond():
    z = ZeroBeyond(Constant(0.4), 2.0)
    assert z(2.0) == 0.4 and z(2.0001) == 0.0
    assert bf_integrate(z, 0.0, math.inf) == pytest.approx(0.8)


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_exponential_integral_vs_antiderivative(seed):
    rng = np.random.default_rng(seed)
    a, b = rng.uniform(0.1, 3), rng.uniform(0.05, 4)
    f = Exponential(a, b)
    lo = rng.uniform(0, 20, 50)
    hi = lo + rng.uniform(0, 10, 50)
    for l, h in zip(lo, hi):
        exact = a / b * (math.exp(-b * l) - math.exp(-b * h))
        assert abs(bf_integrate(f, l, h) - exact) <= 1e-9


def test_exponential_integral_thousand_intervals():
    rng = np.random.default_rng(7)
    f = Exponential(1.3, 0.7)
    lo = rng.uniform(0, 20, 1000)
    hi = lo + rng.uniform(0, 10, 1000)
    from sncalc.bounding import integrate_extended

    got = integrate_extended(f, lo, hi)
    exact = 1.3 / 0.7 * (np.exp(-0.7 * lo) - np.exp(-0.7 * hi))
    assert np.max(np.abs(got - exact)) <= 1e-9


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_window_sandwich(seed):
    rng = np.random.default_rng(seed)
    f = random_bf(rng)
    theta, T = rng.uniform(0.05, 3.0), rng.uniform(0.2, 5.0)
    x = np.linspace(0, 30, 61)
    w = WindowIntegral(f, 0.0, T * theta, 1.0 / theta)(x)
    assert np.all(T * f(x + T * theta) <= w * (1 + 1e-9) + 1e-12)
    assert np.all(w <= T * f(x) * (1 + 1e-9) + 1e-12)


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_random_bounding_functions_are_valid(seed):
    rng = np.random.default_rng(seed)
    f = random_bf(rng)
    grid = np.linspace(0, 40, 400)
    assert bf_check_monotone(f, grid)
    assert np.all(np.atleast_1d(f(grid)) >= 0)
    assert 0.0 <= ClipAtOne(f)(0.0) <= 1.0
