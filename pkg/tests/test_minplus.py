import math

import numpy as np
import pytest
from hypothesis import given, settings

from helpers import lattice_convex, random_bf, random_curve, seeds
from sncalc.bounding import Constant, Exponential, Scale, Sum, ZeroBeyond
from sncalc.curve import Curve
from sncalc.minplus import UnstableError, bf_conv, clip_one, clip_pos, conv, deconv, hdist


def brute_conv(f, g, t, n=20001):
    s = np.linspace(0, t, n)
    return float(np.min(f(s) + g(t - s)))


def brute_deconv(a, b, t, horizon=30.0, n=60001):
    s = np.linspace(0, horizon, n)
    return float(np.max(a(t + s) - b(s)))


def dense_bf_conv(f, g, x, n=200001):
    """Grid over splits plus both sides of every discontinuity."""
    ys = np.linspace(0, x, n)
    extra = np.concatenate([f.jumps(0, x), x - g.jumps(0, x)])
    extra = np.clip(np.concatenate([extra, extra - 1e-12, extra + 1e-12]), 0, x)
    ys = np.concatenate([ys, extra])
    return float(np.min(f(ys) + g(x - ys)))


def test_conv_examples():
    r = conv(Curve.affine(2.0), Curve.affine(3.0))
    assert r(5.0) == pytest.approx(10.0)
    assert conv(Curve.constant(5.0), Curve.affine(3.0))(7.0) == pytest.approx(5.0)
    assert conv(Curve.affine(2.0, 1.0), Curve.zero())(4.0) == pytest.approx(1.0)


def test_deconv_examples():
    r = deconv(Curve.affine(20.0, 1.0), Curve.affine(25.0))
    assert r(0.0) == pytest.approx(1.0) and r(2.0) == pytest.approx(41.0)
    r = deconv(Curve.affine(3.0, 2.0), Curve.affine(3.0, 2.0))
    assert r(0.0) == pytest.approx(0.0) and r(4.0) == pytest.approx(12.0)
    with pytest.raises(UnstableError):
        deconv(Curve.affine(25.0), Curve.affine(20.0))


def test_hdist_examples():
    assert hdist(Curve.affine(3.0, 2.0), Curve.rate_latency(5.0, 1.0)) == pytest.approx(1.0 + 2.0 / 5.0)
    assert hdist(Curve.affine(1.0), Curve.affine(2.0)) == 0.0
    assert hdist(Curve.affine(20.0, 10.0), Curve.affine(25.0)) == pytest.approx(0.4)
    assert math.isinf(hdist(Curve.affine(26.0), Curve.affine(25.0)))


def test_clips():
    assert clip_pos(-3) == 0 and clip_one(1.7) == 1 and clip_one(0.3) == 0.3
    assert np.all(clip_pos(np.array([-1.0, 2.0])) == [0.0, 2.0])


def test_bf_conv_examples():
    f = Exponential(1.0, 1.0)
    for x in (0.0, 0.5, 3.0, 10.0):
        assert bf_conv(f, Constant(0.0))(x) == pytest.approx(f(x), abs=1e-15)
        assert bf_conv(f, f)(x) == pytest.approx(min(2 * math.exp(-x / 2), 1 + math.exp(-x)), rel=1e-12)
    y = np.linspace(0, 2, 2_000_001)
    oracle = np.min(np.exp(-y) + np.exp(-2 * (2 - y)))
    assert abs(bf_conv(f, Exponential(1.0, 2.0))(2.0) - oracle) <= 1e-6


def test_bf_conv_handles_jumps():
    f = Sum((Exponential(0.2, 1.0), ZeroBeyond(Constant(0.5), 1.0)))
    g = ZeroBeyond(Constant(0.3), 2.0)
    for x in (0.5, 1.5, 2.5, 4.0):
        oracle = dense_bf_conv(f, g, x)
        got = bf_conv(f, g)(x)
        assert got >= oracle - 1e-9
        assert got <= oracle + 1e-6


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_nonconvex_conv_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    f = random_curve(rng, continuous=bool(seed % 2))
    g = random_curve(rng, continuous=bool(seed % 3))
    r = conv(f, g)
    for t in rng.uniform(0, 12, 8):
        ref = brute_conv(f, g, t)
        assert r(t) <= ref + 1e-9
        assert r(t) >= ref - 2e-3  # grid oracle overshoots by at most slope*spacing


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_nonconvex_deconv_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    a = random_curve(rng, continuous=bool(seed % 2))
    b = random_curve(rng)
    if a.terminal_slope > b.terminal_slope:
        a, b = Curve(a.times, a.values, a.slopes[:-1] + (b.terminal_slope,)), b
    r = deconv(a, b)
    for t in rng.uniform(0, 8, 6):
        ref = max(brute_deconv(a, b, t), 0.0)
        assert r(t) >= ref - 1e-9
        assert r(t) <= ref + 3e-3


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_conv_commutative_associative(seed):
    rng = np.random.default_rng(seed)
    f, g, h = (lattice_convex(rng) for _ in range(3))
    fg, gf = conv(f, g), conv(g, f)
    left, right = conv(conv(f, g), h), conv(f, conv(g, h))
    t = np.linspace(0, 15, 301)
    assert np.allclose(fg(t), gf(t), rtol=1e-9, atol=1e-9)
    assert np.allclose(left(t), right(t), rtol=1e-9, atol=1e-9)
    for ti in t[::30]:
        assert fg(ti) == pytest.approx(brute_conv(f, g, ti, 8 * int(ti * 8) + 1 if ti else 2), abs=1e-9)


def _le_on_grid(b1, b2, grid):
    return float(np.max(np.atleast_1d(b1(grid)) - np.atleast_1d(b2(grid))))


@settings(max_examples=50, deadline=None)
@given(seeds)
def test_bf_conv_monotone_in_operands(seed):
    rng = np.random.default_rng(seed)
    f2, g2 = random_bf(rng), random_bf(rng)
    e1, e2 = rng.uniform(0, 0.2), rng.uniform(0, 0.2)
    # f1 <= f2 + e1 everywhere by construction
    f1 = Sum((Scale(float(rng.uniform(0.2, 1.0)), f2), ZeroBeyond(Constant(e1), float(rng.uniform(0.1, 5)))))
    g1 = Sum((Scale(float(rng.uniform(0.2, 1.0)), g2), ZeroBeyond(Constant(e2), float(rng.uniform(0.1, 5)))))
    x = np.linspace(0, 15, 40)
    assert np.all(bf_conv(f1, g1)(x) <= bf_conv(f2, g2)(x) + e1 + e2 + 1e-9)


@settings(max_examples=50, deadline=None)
@given(seeds)
def test_bf_conv_properties(seed):
    rng = np.random.default_rng(seed)
    f, g = random_bf(rng), random_bf(rng)
    x = np.linspace(0, 20, 80)
    c = bf_conv(f, g)(x)
    assert np.all(c <= np.minimum(f(x) + g(0.0), f(0.0) + g(x)) + 1e-12)
    assert np.all(c >= 0)
    for i in range(0, x.size, 16):
        oracle = dense_bf_conv(f, g, x[i], 20001)
        assert oracle - 1e-6 <= c[i] <= oracle + 1e-6


@settings(max_examples=50, deadline=None)
@given(seeds)
def test_deconv_and_hdist_monotone(seed):
    rng = np.random.default_rng(seed)
    a1 = random_curve(rng)
    b1 = random_curve(rng)
    if a1.terminal_slope + 1.0 > b1.terminal_slope:
        b1 = b1.plus_rate(a1.terminal_slope - b1.terminal_slope + 1.0)
    r = float(rng.uniform(0, 0.5))
    a2 = a1.shifted(float(rng.uniform(0, 2))).plus_rate(r)
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        b2 = b1.minus_rate(float(rng.uniform(0, 0.5)))
    t = np.linspace(0, 10, 101)
    assert np.all(deconv(a1, b1)(t) <= deconv(a2, b2)(t) + 1e-9)
    assert hdist(a1, b1) <= hdist(a2, b2) + 1e-9
