"""(min,+) operators on piecewise-linear curves and on bounding functions.

For any time ``t`` the infimum in a convolution (supremum in a
deconvolution) of piecewise-linear curves is attained at, or approached
next to, a breakpoint of one of the operands, so the operators below are
exact pointwise. Convex convolutions use slope sorting; everything else
goes through the pointwise evaluator and a kink search that recovers the
breakpoints of the result.
"""

from __future__ import annotations

import math

import numpy as np

from .bounding import MinPlusConv
from .curve import Curve


class UnstableError(ArithmeticError):
    """The deconvolution or horizontal distance diverges (arrival rate exceeds service rate)."""


def clip_pos(x):
    """``[x]^+ = max(x, 0)``."""
    return np.maximum(x, 0.0) if np.ndim(x) else max(float(x), 0.0)


def clip_one(x):
    """``[x]_1 = min(x, 1)``."""
    return np.minimum(x, 1.0) if np.ndim(x) else min(float(x), 1.0)


# -- pointwise evaluators -------------------------------------------------------


def conv_at(f: Curve, g: Curve, t: float) -> float:
    """``inf_{0 <= s <= t} f(s) + g(t - s)``."""
    s = [0.0, t]
    s += [u for u in f.times if u <= t]
    s += [t - u for u in g.times if u <= t]
    s = np.clip(np.asarray(s), 0.0, t)
    vals = f(s) + g(t - s)
    best = float(vals.min())
    # limits from the left of upward jumps
    for u in f.jumps():
        if u <= t:
            best = min(best, float(f.left_limit(u) + g(t - u)))
    for u in g.jumps():
        if u <= t:
            best = min(best, float(f(t - u) + g.left_limit(u)))
    return best


def deconv_at(a: Curve, b: Curve, t: float) -> float:
    """``sup_{s >= 0} a(t + s) - b(s)`` (assumes it is finite)."""
    s = [0.0]
    s += [u - t for u in a.times if u > t]
    s += list(b.times)
    s = np.asarray(s)
    best = float(np.max(a(t + s) - b(s)))
    for u in b.jumps():
        best = max(best, float(a(t + u) - b.left_limit(u)))
    return best


# -- curve construction from an exact evaluator -----------------------------------


def _build_curve(fn, knots, terminal_slope, horizon, max_depth=60):
    """Piecewise-linear curve agreeing with ``fn`` on ``[0, horizon]`` plus a ray.

    Between consecutive knots, a non-linear midpoint triggers a kink search:
    the lines through each end are intersected and the crossing is inserted.
    """
    knots = np.unique(np.clip(np.concatenate([[0.0, horizon], knots]), 0.0, horizon))
    points = {float(k): fn(float(k)) for k in knots}
    stack = [(float(a), float(b), 0) for a, b in zip(knots[:-1], knots[1:])]
    while stack:
        a, b, depth = stack.pop()
        if b - a <= 1e-12 * max(1.0, b) or depth > max_depth:
            continue
        va, vb = points[a], points[b]
        m = 0.5 * (a + b)
        vm = fn(m)
        scale = max(1.0, abs(va), abs(vb))
        if abs(vm - 0.5 * (va + vb)) <= 1e-13 * scale:
            continue
        # wide enough that rounding barely moves the slopes; a wrong kink only costs a deeper split
        d = (b - a) * 1e-4
        kl = (fn(a + d) - va) / d
        kr = (vb - fn(b - d)) / d
        z = None
        if abs(kl - kr) > 1e-12:
            z = a + (vb - va - kr * (b - a)) / (kl - kr)
            if not (a < z < b):
                z = None
        if z is None:
            z = m
            points[m] = vm
        else:
            points[z] = fn(z)
        stack.append((a, z, depth + 1))
        stack.append((z, b, depth + 1))
    ts = sorted(points)
    keep = [ts[0]]
    for i in range(1, len(ts) - 1):
        t0, t1, t2 = keep[-1], ts[i], ts[i + 1]
        chord = points[t0] + (points[t2] - points[t0]) * (t1 - t0) / (t2 - t0)
        if abs(chord - points[t1]) > 1e-13 * max(1.0, abs(points[t1])):
            keep.append(t1)
    keep.append(ts[-1])
    return Curve.from_points(np.array(keep), np.array([points[t] for t in keep]), terminal_slope)


def _settled_horizon(fn, start, slope):
    """Smallest doubling of ``start`` beyond which ``fn`` follows a ray of ``slope``."""
    h = max(start, 1.0)
    for _ in range(60):
        v1, v2, v3 = fn(h), fn(2.0 * h), fn(3.0 * h)
        tol = 1e-9 * max(1.0, abs(v3))
        if abs(v2 - v1 - slope * h) <= tol and abs(v3 - v2 - slope * h) <= tol:
            return h
        h *= 2.0
    raise ValueError("could not locate the terminal ray of the result")


# -- curve operators ---------------------------------------------------------------


def _segments(c: Curve):
    out = []
    for i, k in enumerate(c.slopes):
        nxt = c.times[i + 1] if i + 1 < len(c.times) else math.inf
        out.append((k, nxt - c.times[i]))
    return out


def conv(f: Curve, g: Curve) -> Curve:
    """(min,+) convolution ``(f (x) g)(t) = inf_{0<=s<=t} f(s) + g(t-s)``."""
    if f.is_convex() and g.is_convex():
        segs = sorted(_segments(f) + _segments(g), key=lambda s: s[0])
        times, values, slopes = [0.0], [f.values[0] + g.values[0]], []
        for k, length in segs:
            slopes.append(k)
            if math.isinf(length):
                break
            times.append(times[-1] + length)
            values.append(values[-1] + k * length)
        return Curve(tuple(times), tuple(values), tuple(slopes))._simplified()
    slope = min(f.terminal_slope, g.terminal_slope)
    knots = [u + w for u in f.times for w in g.times] + list(f.times) + list(g.times)
    fn = lambda t: conv_at(f, g, t)  # noqa: E731
    horizon = _settled_horizon(fn, f.last_time + g.last_time, slope)
    return _build_curve(fn, knots, slope, horizon)


def check_deconv(a: Curve, b: Curve):
    if a.terminal_slope > b.terminal_slope:
        raise UnstableError(
            f"unstable: arrival rate {a.terminal_slope:g} exceeds service rate "
            f"{b.terminal_slope:g}, h(alpha, beta) = inf"
        )


def deconv(a: Curve, b: Curve) -> Curve:
    """(min,+) deconvolution ``(a (/) b)(t) = sup_{s>=0} a(t+s) - b(s)``, clipped at 0.

    Raises :class:`UnstableError` when ``a`` grows faster than ``b``.
    """
    check_deconv(a, b)
    knots = [u - w for u in a.times for w in b.times if u >= w] + list(a.times)
    fn = lambda t: max(deconv_at(a, b, t), 0.0)  # noqa: E731
    # past the last breakpoint of a the result grows at a's terminal rate
    horizon = max(a.last_time, _zero_crossing(fn, a))
    return _build_curve(fn, knots, a.terminal_slope, horizon)


def _zero_crossing(fn, a):
    """A time past which the clip at 0 is inactive."""
    h = max(a.last_time, 1.0)
    for _ in range(80):
        if fn(h) > 0:
            return h
        h *= 2.0
    return h


def hdist(a: Curve, b: Curve) -> float:
    """Maximum horizontal distance ``sup_s inf{tau >= 0: a(s) <= b(s + tau)}``.

    Returns ``inf`` when ``a`` eventually outgrows ``b``.
    """
    if a.terminal_slope > b.terminal_slope:
        return math.inf

    cands = {0.0}
    cands.update(a.times)
    levels = set(b.values)
    for i in range(1, len(b.times)):
        levels.add(float(b.left_limit(b.times[i])))
    for y in levels:
        s = a.inverse(y)
        if math.isfinite(s):
            cands.add(s)

    def dist(s):
        s = max(s, 0.0)
        return max(b.inverse(float(a(s))) - s, 0.0)

    best = 0.0
    for s in cands:
        d = 1e-12 * max(1.0, s)
        for probe in (s, s + d, s - d):
            if probe >= 0:
                best = max(best, dist(probe))
    return best


def bf_conv(f, g):
    """(min,+) convolution of two bounding functions, evaluated on demand."""
    return MinPlusConv(f, g)
