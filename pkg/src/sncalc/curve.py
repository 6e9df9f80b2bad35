"""Piecewise-linear wide-sense increasing curves (arrival and service curves)."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

_EPS = 1e-12


@dataclass(frozen=True)
class Curve:
    """Non-negative, non-decreasing, right-continuous piecewise-linear curve.

    ``values[i]`` is the value at ``times[i]`` and ``slopes[i]`` the slope on
    ``[times[i], times[i+1])``; the last slope is the terminal ray. Upward
    jumps are allowed at breakpoints (the value there is the post-jump one).
    """

    times: tuple
    values: tuple
    slopes: tuple

    def __post_init__(self):
        t = tuple(float(v) for v in self.times)
        v = tuple(float(x) for x in self.values)
        k = tuple(float(x) for x in self.slopes)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "slopes", k)
        if not (len(t) == len(v) == len(k)) or not t:
            raise ValueError("times, values and slopes must be non-empty and of equal length")
        if t[0] != 0.0:
            raise ValueError("first breakpoint must be at t = 0")
        if any(not math.isfinite(x) for x in t + v + k):
            raise ValueError("curve data must be finite")
        if any(b <= a for a, b in zip(t, t[1:])):
            raise ValueError("breakpoint times must be strictly increasing")
        if v[0] < 0.0:
            raise ValueError("curve value at t = 0 must be non-negative")
        if any(s < 0.0 for s in k):
            raise ValueError("slopes must be non-negative")
        for i in range(1, len(t)):
            left = v[i - 1] + k[i - 1] * (t[i] - t[i - 1])
            if v[i] < left - _EPS * max(1.0, abs(left)):
                raise ValueError(f"curve decreases at t = {t[i]:g}")

    # -- constructors -------------------------------------------------
    @classmethod
    def affine(cls, rate, burst=0.0):
        """``burst + rate * t``."""
        return cls((0.0,), (burst,), (rate,))

    @classmethod
    def rate_latency(cls, rate, latency):
        """``rate * max(t - latency, 0)``."""
        if latency == 0:
            return cls.affine(rate)
        return cls((0.0, latency), (0.0, 0.0), (0.0, rate))

    @classmethod
    def constant(cls, value):
        return cls((0.0,), (value,), (0.0,))

    @classmethod
    def zero(cls):
        return cls.constant(0.0)

    @classmethod
    def from_points(cls, times, values, terminal_slope):
        """Continuous interpolant through ``(times, values)`` plus a terminal ray."""
        t = np.asarray(times, dtype=float)
        v = np.maximum.accumulate(np.maximum(np.asarray(values, dtype=float), 0.0))
        slopes = np.append(np.maximum(np.diff(v) / np.diff(t), 0.0), max(terminal_slope, 0.0))
        return cls(tuple(t), tuple(v), tuple(slopes))._simplified()

    # -- evaluation ---------------------------------------------------
    def __call__(self, t):
        t_arr = np.asarray(t, dtype=float)
        if np.any(t_arr < 0):
            raise ValueError("curves are defined for t >= 0 only")
        times = np.asarray(self.times)
        idx = np.searchsorted(times, t_arr, side="right") - 1
        out = np.asarray(self.values)[idx] + np.asarray(self.slopes)[idx] * (t_arr - times[idx])
        return float(out) if out.ndim == 0 else out

    def left_limit(self, t):
        """``lim_{u -> t-} c(u)``; equals ``c(0)`` at ``t = 0``."""
        t_arr = np.asarray(t, dtype=float)
        times = np.asarray(self.times)
        idx = np.maximum(np.searchsorted(times, t_arr, side="left") - 1, 0)
        out = np.asarray(self.values)[idx] + np.asarray(self.slopes)[idx] * (t_arr - times[idx])
        out = np.where(t_arr <= 0, self.values[0], out)
        return float(out) if out.ndim == 0 else out

    @property
    def terminal_slope(self):
        return self.slopes[-1]

    @property
    def last_time(self):
        return self.times[-1]

    def jumps(self):
        """Breakpoint times where the curve jumps upward."""
        out = []
        for i in range(1, len(self.times)):
            left = self.values[i - 1] + self.slopes[i - 1] * (self.times[i] - self.times[i - 1])
            if self.values[i] > left + _EPS * max(1.0, abs(left)):
                out.append(self.times[i])
        return out

    def is_continuous(self):
        return not self.jumps()

    def is_convex(self):
        return self.is_continuous() and all(b >= a for a, b in zip(self.slopes, self.slopes[1:]))

    def is_concave(self):
        return all(b <= a for a, b in zip(self.slopes, self.slopes[1:]))

    def inverse(self, y, strict=False):
        """Pseudo-inverse ``inf{u >= 0: c(u) >= y}`` (``> y`` when ``strict``).

        Returns ``inf`` when the level is never reached.
        """
        t, v = self.times, self.values
        for i in range(len(t)):
            hit = v[i] > y if strict else v[i] >= y
            if hit:
                if i == 0:
                    return 0.0
                # reached inside the previous segment or by the jump at t[i]
                return self._solve_segment(i - 1, y, strict, cap=t[i])
        return self._solve_segment(len(t) - 1, y, strict, cap=math.inf)

    def _solve_segment(self, i, y, strict, cap):
        t0, v0, k = self.times[i], self.values[i], self.slopes[i]
        if (v0 > y) if strict else (v0 >= y):
            return t0
        if k <= 0.0:
            return cap
        u = t0 + (y - v0) / k
        return min(u, cap)

    # -- algebra ------------------------------------------------------
    def shifted(self, dx):
        """Vertical shift ``c(t) + dx``."""
        return Curve(self.times, tuple(v + dx for v in self.values), self.slopes)

    def plus_rate(self, theta):
        """``c(t) + theta * t``."""
        values = tuple(v + theta * t for v, t in zip(self.values, self.times))
        slopes = tuple(k + theta for k in self.slopes)
        return Curve(self.times, values, slopes)

    def minus_rate(self, theta):
        """``[c(t) - theta * t]^+``, lowered to stay non-decreasing.

        Takes the largest non-decreasing function below ``max(c - theta t, 0)``
        (a smaller service curve is still a valid lower bound) and warns when
        that changes anything beyond the clip at zero.
        """
        if self.terminal_slope < theta:
            raise ValueError("terminal slope below theta: c(t) - theta t diverges to -inf")
        t = list(self.times)
        raw_v = [v - theta * x for v, x in zip(self.values, self.times)]
        raw_k = [k - theta for k in self.slopes]
        # Sweep right to left keeping m(t) = inf_{s >= t} h(s).
        pts = []
        running = raw_v[-1]
        pts.append((t[-1], running, raw_k[-1]))
        for i in range(len(t) - 2, -1, -1):
            h0 = raw_v[i]
            h1 = raw_v[i] + raw_k[i] * (t[i + 1] - t[i])
            k = raw_k[i]
            if k >= 0:
                if h1 <= running:
                    pts.append((t[i], h0, k))
                    running = h0
                else:
                    if h0 >= running:
                        pts.append((t[i], running, 0.0))
                    else:
                        z = t[i] + (running - h0) / k
                        pts.append((z, running, 0.0))
                        pts.append((t[i], h0, k))
                        running = h0
            else:
                level = min(h1, running)
                pts.append((t[i], level, 0.0))
                running = level
        pts.sort()
        times, values, slopes = [], [], []
        for x, v, k in pts:
            if times and x - times[-1] <= _EPS:
                times.pop()
                values.pop()
                slopes.pop()
            times.append(x)
            values.append(v)
            slopes.append(k)
        clipped = _clip_at_zero(times, values, slopes)
        probe = np.unique(np.concatenate([self.times, clipped.times]))
        probe = np.concatenate([probe, probe[:-1] + 0.5 * np.diff(probe), [probe[-1] + 1.0]])
        target = np.maximum(self(probe) - theta * probe, 0.0)
        if np.any(np.abs(clipped(probe) - target) > 1e-9 * np.maximum(1.0, target)):
            warnings.warn(
                "c(t) - theta*t is not non-decreasing; using its non-decreasing lower closure",
                RuntimeWarning,
                stacklevel=2,
            )
        return clipped

    def _simplified(self):
        t, v, k = [self.times[0]], [self.values[0]], [self.slopes[0]]
        for i in range(1, len(self.times)):
            left = v[-1] + k[-1] * (self.times[i] - t[-1])
            same = abs(self.values[i] - left) <= _EPS * max(1.0, abs(left)) and abs(
                self.slopes[i] - k[-1]
            ) <= _EPS * max(1.0, abs(k[-1]))
            if not same:
                t.append(self.times[i])
                v.append(self.values[i])
                k.append(self.slopes[i])
        return Curve(tuple(t), tuple(v), tuple(k))

    def __repr__(self):
        if len(self.times) == 1:
            return f"Curve({self.values[0]:g} + {self.slopes[0]:g}*t)"
        return f"Curve(times={self.times}, values={self.values}, slopes={self.slopes})"


def _clip_at_zero(times, values, slopes):
    """``max(c, 0)`` for a non-decreasing piecewise-linear ``c`` (which may start negative)."""
    out_t, out_v, out_k = [], [], []
    for i, (t0, v0, k) in enumerate(zip(times, values, slopes)):
        t1 = times[i + 1] if i + 1 < len(times) else math.inf
        if v0 >= 0:
            out_t.append(t0)
            out_v.append(v0)
            out_k.append(k)
            continue
        v_end = v0 + k * (t1 - t0) if math.isfinite(t1) else (math.inf if k > 0 else v0)
        if not out_t:
            out_t.append(0.0)
            out_v.append(0.0)
            out_k.append(0.0)
        if k > 0 and v_end > 0:
            z = t0 + (-v0) / k
            out_t.append(z)
            out_v.append(0.0)
            out_k.append(k)
    return Curve(tuple(out_t), tuple(out_v), tuple(out_k))._simplified()


def curve_eval(c, t):
    """Evaluate ``c`` at ``t`` (scalar or array); negative ``t`` is rejected."""
    return c(t)
