"""Bounding functions: non-negative, non-increasing tail envelopes.

A bounding function is a small immutable expression tree. Nodes evaluate
lazily on numpy arrays, so transforms compose without any resampling. The
integral nodes use a closed form when the integrand has one and adaptive
Simpson quadrature otherwise.

For arguments below zero (backward windows reach there) a bounding function
is extended by its value at 0; ``f(0)`` dominates every tail probability, so
the extension keeps upper bounds valid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np

from .quadrature import QuadratureError, adaptive_simpson

TAIL_CUTOFF = 1e-15
MONOTONE_TOL = 1e-12


class BoundingClassError(ValueError):
    """Operation needs a class-G bounding function (finite tail integrals)."""


def _as_array(x):
    return np.asarray(x, dtype=float)


def _scalar_or_array(out, like):
    out = np.asarray(out, dtype=float)
    return float(out.reshape(-1)[0]) if np.ndim(like) == 0 else out.reshape(np.shape(like))


class BoundingFunction:
    """Base class. Subclasses implement :meth:`_eval` on arrays with ``x >= 0``."""

    #: set on nodes whose integral is available in closed form
    closed_integral = False

    def __call__(self, x):
        arr = _as_array(x)
        out = self._eval(np.maximum(arr, 0.0))
        return _scalar_or_array(out, x)

    def _eval(self, x):
        raise NotImplementedError

    @property
    def is_gbar(self) -> bool:
        """Whether ``int_x^inf f`` is finite (membership in the class G)."""
        raise NotImplementedError

    def jumps(self, lo, hi):
        """Discontinuity points inside ``[lo, hi]`` (used by the convolution minimiser)."""
        return np.empty(0)

    def support_end(self):
        """Point beyond which the function is identically 0 (``inf`` if none)."""
        return math.inf

    def _antiderivative(self, x):
        """``int_0^x f`` for arrays ``x >= 0``; only if ``closed_integral``."""
        raise NotImplementedError

    def _total(self):
        """``int_0^inf f``; only if ``closed_integral`` and class G."""
        raise NotImplementedError


# -- leaves -----------------------------------------------------------------


@dataclass(frozen=True)
class Constant(BoundingFunction):
    value: float
    closed_integral = True

    def __post_init__(self):
        if self.value < 0:
            raise ValueError("bounding functions are non-negative")

    def _eval(self, x):
        return np.full_like(x, self.value)

    @property
    def is_gbar(self):
        return self.value == 0.0

    def _antiderivative(self, x):
        return self.value * x

    def _total(self):
        return 0.0 if self.value == 0.0 else math.inf


@dataclass(frozen=True)
class Exponential(BoundingFunction):
    """``a * exp(-b x)``."""

    a: float
    b: float
    closed_integral = True

    def __post_init__(self):
        if self.a < 0 or self.b < 0:
            raise ValueError("Exponential needs a >= 0 and b >= 0")

    def _eval(self, x):
        return self.a * np.exp(-self.b * x)

    @property
    def is_gbar(self):
        return self.b > 0 or self.a == 0

    def _antiderivative(self, x):
        if self.b == 0:
            return self.a * x
        return self.a / self.b * -np.expm1(-self.b * x)

    def _total(self):
        if self.a == 0:
            return 0.0
        return self.a / self.b if self.b > 0 else math.inf


@dataclass(frozen=True)
class PoissonChernoff(BoundingFunction):
    """Chernoff bound on ``P{N - m > x}`` for ``N ~ Poisson(m)``, ``m = lam * t``.

    ``exp(x - (m + x) ln((m + x) / m))``; equals 1 at ``x = 0``.
    """

    lam: float
    t: float

    def __post_init__(self):
        if self.lam <= 0 or self.t <= 0:
            raise ValueError("PoissonChernoff needs lam > 0 and t > 0")

    def _eval(self, x):
        m = self.lam * self.t
        return np.exp(x - (m + x) * np.log1p(x / m))

    @property
    def is_gbar(self):
        return True


class _PoissonStep(BoundingFunction):
    """Shared machinery for step functions built from Poisson probabilities."""

    closed_integral = True

    @cached_property
    def _pmf(self):
        m = self.mean
        kmax = int(math.ceil(m + 40.0 * math.sqrt(m) + 60.0))
        k = np.arange(kmax + 1, dtype=float)
        logp = -m + k * math.log(m) - np.array([math.lgamma(v + 1.0) for v in k])
        return np.exp(logp)

    @cached_property
    def _upper(self):
        """``P{N > k}`` for ``k = 0..kmax``, summed from the far tail inwards."""
        p = self._pmf
        sf = np.cumsum(p[::-1])[::-1]  # P{N >= k}
        return np.append(sf[1:], 0.0)

    @cached_property
    def _lower(self):
        """``P{N <= k}`` for ``k = 0..kmax``."""
        return np.minimum(np.cumsum(self._pmf), 1.0)

    @property
    def mean(self):
        raise NotImplementedError

    @property
    def is_gbar(self):
        return True

    # step geometry supplied by subclasses: edges (ascending, from 0) and levels
    @cached_property
    def _steps(self):
        raise NotImplementedError

    @cached_property
    def _cum_area(self):
        edges, levels = self._steps
        widths = np.diff(edges)
        return np.concatenate([[0.0], np.cumsum(levels[:-1] * widths)])

    def _antiderivative(self, x):
        edges, levels = self._steps
        idx = np.clip(np.searchsorted(edges, x, side="right") - 1, 0, len(edges) - 1)
        return self._cum_area[idx] + levels[idx] * (x - edges[idx])

    def _total(self):
        return float(self._cum_area[-1])

    def jumps(self, lo, hi):
        edges = self._steps[0][1:]
        return edges[(edges >= lo) & (edges <= hi)]


@dataclass(frozen=True)
class PoissonTail(_PoissonStep):
    """Exact ``P{N > m + x}`` for ``N ~ Poisson(m)``, ``m = lam * t`` (right-continuous)."""

    lam: float
    t: float

    def __post_init__(self):
        if self.lam <= 0 or self.t <= 0:
            raise ValueError("PoissonTail needs lam > 0 and t > 0")

    @property
    def mean(self):
        return self.lam * self.t

    def _eval(self, x):
        k = np.floor(self.mean + x)
        upper = self._upper
        idx = np.clip(k, 0, len(upper) - 1).astype(int)
        return np.where(k >= len(upper) - 1, 0.0, upper[idx])

    @cached_property
    def _steps(self):
        m = self.mean
        upper = self._upper
        k0 = int(math.floor(m))
        ks = np.arange(k0 + 1, len(upper))
        edges = np.concatenate([[0.0], ks - m])
        levels = np.concatenate([[upper[k0]], upper[k0 + 1 :]])
        levels[-1] = 0.0
        return edges, levels

    def support_end(self):
        return float(len(self._upper) - 1 - self.mean)


@dataclass(frozen=True)
class PoissonLowerTail(_PoissonStep):
    """``P{N <= m - x}`` on ``[0, m]`` and 0 beyond, ``N ~ Poisson(m)``, ``m = mu * t``.

    Bounds ``P{S(s, s+t) < mu t - x}`` for service by an exponential server.
    Left-continuous at its jumps.
    """

    mu: float
    t: float

    def __post_init__(self):
        if self.mu <= 0 or self.t <= 0:
            raise ValueError("PoissonLowerTail needs mu > 0 and t > 0")

    @property
    def mean(self):
        return self.mu * self.t

    def _eval(self, x):
        m = self.mean
        lower = self._lower
        k = np.floor(m - x + 1e-12 * max(1.0, m))
        idx = np.clip(k, 0, len(lower) - 1).astype(int)
        return np.where((x > m) | (k < 0), 0.0, lower[idx])

    @cached_property
    def _steps(self):
        # Left-continuous steps; for integration the value at a point is irrelevant.
        m = self.mean
        edges = m - np.arange(int(math.floor(m)), -1, -1.0)
        edges = np.unique(np.concatenate([[0.0], edges[edges > 0]]))
        mids = np.append(0.5 * (edges[:-1] + edges[1:]), edges[-1] + 0.5)
        return edges, self._eval(mids)

    def jumps(self, lo, hi):
        m = self.mean
        edges = m - np.arange(int(math.floor(m)), -1, -1.0)
        edges = edges[edges > 0]
        return edges[(edges >= lo) & (edges <= hi)]

    def support_end(self):
        return self.mean


@dataclass(frozen=True)
class ExpServerClosedForm(BoundingFunction):
    """Literal closed form ``1 - exp(-x - (m - x) ln((m - x) / m))``, ``m = mu * t``.

    Kept for reproduction only: it is 0 at ``x = 0`` and increasing near 0,
    so it is not a valid non-increasing bounding function. Evaluated on
    ``[0, m]`` and set to 0 beyond.
    """

    mu: float
    t: float

    def _eval(self, x):
        m = self.mu * self.t
        inside = x < m
        xs = np.where(inside, x, 0.0)
        val = -np.expm1(-xs - (m - xs) * np.log1p(-xs / m))
        val = np.where(x == m, -math.expm1(-m), val)
        return np.where(x <= m, val, 0.0)

    @property
    def is_gbar(self):
        return True

    def support_end(self):
        return self.mu * self.t


# -- composite nodes ----------------------------------------------------------


@dataclass(frozen=True)
class Scale(BoundingFunction):
    factor: float
    base: BoundingFunction

    def __post_init__(self):
        if self.factor < 0:
            raise ValueError("scale factor must be non-negative")

    @property
    def closed_integral(self):
        return self.base.closed_integral

    def _eval(self, x):
        return self.factor * self.base._eval(x)

    @property
    def is_gbar(self):
        return self.base.is_gbar or self.factor == 0

    def jumps(self, lo, hi):
        return self.base.jumps(lo, hi)

    def support_end(self):
        return self.base.support_end()

    def _antiderivative(self, x):
        return self.factor * self.base._antiderivative(x)

    def _total(self):
        return self.factor * self.base._total()


@dataclass(frozen=True)
class Sum(BoundingFunction):
    terms: tuple

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        if not self.terms:
            raise ValueError("Sum needs at least one term")

    @property
    def closed_integral(self):
        return all(t.closed_integral for t in self.terms)

    def _eval(self, x):
        out = np.zeros_like(x)
        for term in self.terms:
            out = out + term._eval(x)
        return out

    @property
    def is_gbar(self):
        return all(t.is_gbar for t in self.terms)

    def jumps(self, lo, hi):
        parts = [t.jumps(lo, hi) for t in self.terms]
        return np.unique(np.concatenate(parts)) if parts else np.empty(0)

    def support_end(self):
        return max(t.support_end() for t in self.terms)

    def _antiderivative(self, x):
        return sum(t._antiderivative(x) for t in self.terms)

    def _total(self):
        return sum(t._total() for t in self.terms)


@dataclass(frozen=True)
class ClipAtOne(BoundingFunction):
    """``[f(x)]_1 = min(f(x), 1)``."""

    base: BoundingFunction

    def _eval(self, x):
        return np.minimum(self.base._eval(x), 1.0)

    @property
    def is_gbar(self):
        return self.base.is_gbar

    def jumps(self, lo, hi):
        return self.base.jumps(lo, hi)

    def support_end(self):
        return self.base.support_end()


@dataclass(frozen=True)
class ZeroBeyond(BoundingFunction):
    """``base(x)`` for ``x <= x0`` and 0 for ``x > x0``."""

    base: BoundingFunction
    x0: float

    @property
    def closed_integral(self):
        return self.base.closed_integral

    def _eval(self, x):
        return np.where(x <= self.x0, self.base._eval(np.minimum(x, self.x0)), 0.0)

    @property
    def is_gbar(self):
        return True

    def jumps(self, lo, hi):
        own = np.array([self.x0]) if lo <= self.x0 <= hi else np.empty(0)
        return np.unique(np.concatenate([self.base.jumps(lo, min(hi, self.x0)), own]))

    def support_end(self):
        return min(self.x0, self.base.support_end())

    def _antiderivative(self, x):
        return self.base._antiderivative(np.minimum(x, self.x0))

    def _total(self):
        return float(self.base._antiderivative(np.asarray(self.x0)))


@dataclass(frozen=True)
class WindowIntegral(BoundingFunction):
    """``scale * int_{x+lo}^{x+hi} base(y) dy`` (base extended by ``base(0)`` below 0).

    An empty or inverted window (``hi <= lo``) evaluates to 0.
    """

    base: BoundingFunction
    lo: float
    hi: float
    scale: float

    def _eval(self, x):
        if self.hi <= self.lo:
            return np.zeros_like(x)
        return self.scale * integrate_extended(self.base, x + self.lo, x + self.hi)

    @property
    def degenerate(self):
        return self.hi <= self.lo

    @property
    def is_gbar(self):
        return self.base.is_gbar

    def jumps(self, lo, hi):
        j = self.base.jumps(max(lo + self.lo, 0.0), hi + self.hi)
        return np.unique(np.concatenate([j - self.lo, j - self.hi]))

    def support_end(self):
        return self.base.support_end() - self.lo


@dataclass(frozen=True)
class TailIntegral(BoundingFunction):
    """``int_x^inf base(y) dy``; the base must be of class G."""

    base: BoundingFunction

    def __post_init__(self):
        if not self.base.is_gbar:
            raise BoundingClassError("tail integral of a function outside class G diverges")

    def _eval(self, x):
        return integrate_extended(self.base, x, np.full_like(x, np.inf))

    @property
    def is_gbar(self):
        return True

    def support_end(self):
        return self.base.support_end()


@dataclass(frozen=True)
class MinPlusConv(BoundingFunction):
    """``(f (x) g)(x) = inf_{0 <= y <= x} f(y) + g(x - y)``."""

    f: BoundingFunction
    g: BoundingFunction
    grid_points: int = field(default=129, compare=False)

    def _eval(self, x):
        closed = _exp_conv_closed(self.f, self.g, x)
        if closed is not None:
            return closed
        return _minimise_conv(self.f, self.g, x, self.grid_points)

    @property
    def is_gbar(self):
        # f (x) g (x) <= f(x/2) + g(x/2)
        return self.f.is_gbar and self.g.is_gbar

    def jumps(self, lo, hi):
        return np.empty(0)

    def support_end(self):
        return self.f.support_end() + self.g.support_end()


# -- integration ------------------------------------------------------------------


def _integrate_positive(f, lo, hi):
    """``(int_lo^hi f, error estimate)`` for arrays with ``0 <= lo <= hi`` (``hi`` may be inf)."""
    lo = _as_array(lo)
    hi = _as_array(hi)
    out = np.zeros(np.broadcast(lo, hi).shape)
    lo, hi = np.broadcast_arrays(lo, hi)
    infinite = np.isinf(hi)
    if infinite.any() and not f.is_gbar:
        raise BoundingClassError("integral to infinity needs a class-G bounding function")
    end = f.support_end()
    hi_eff = np.minimum(hi, end)
    lo_eff = np.minimum(lo, hi_eff)
    if f.closed_integral:
        with np.errstate(invalid="ignore"):
            fin = np.isfinite(hi_eff)
            upper = np.where(fin, f._antiderivative(np.where(fin, hi_eff, 0.0)), f._total())
        out = upper - f._antiderivative(lo_eff)
        return np.maximum(out, 0.0), np.zeros_like(out)
    fin = np.isfinite(hi_eff)
    trunc_err = np.zeros_like(out)
    if (~fin).any():
        hi_eff = hi_eff.copy()
        caps, errs = _truncation_points(f, lo_eff[~fin])
        hi_eff[~fin] = caps
        trunc_err[~fin] = errs
    vals, errs = adaptive_simpson(f._eval, lo_eff, hi_eff)
    return np.maximum(vals, 0.0), errs + trunc_err


def _truncation_points(f, lo):
    """Cut-off points where ``f`` drops below ``TAIL_CUTOFF``, with a tail estimate."""
    caps = np.maximum(lo, 1.0) * 1.0
    for _ in range(200):
        small = f._eval(caps) < TAIL_CUTOFF
        if small.all():
            break
        caps = np.where(small, caps, caps * 2.0 + 1.0)
    else:  # pragma: no cover - only for pathological heavy tails
        raise QuadratureError("bounding function does not fall below the tail cut-off")
    return caps, f._eval(caps) * caps


def integrate_extended(f, lo, hi, with_error=False):
    """``int_lo^hi f`` with ``f(y) = f(0)`` for ``y < 0``; ``lo <= hi`` elementwise."""
    lo = _as_array(lo)
    hi = _as_array(hi)
    neg = np.clip(np.minimum(hi, 0.0) - lo, 0.0, None)
    with np.errstate(invalid="ignore"):
        head = np.where(neg > 0, neg * float(f._eval(np.zeros(1))[0]), 0.0)
    body, err = _integrate_positive(f, np.maximum(lo, 0.0), np.maximum(hi, 0.0))
    return (head + body, err) if with_error else head + body


def bf_eval(b, x):
    """Evaluate a bounding function at thresholds ``x >= 0``."""
    if np.any(_as_array(x) < 0):
        raise ValueError("bounding functions are evaluated for x >= 0")
    return b(x)


def bf_integrate(b, lo, hi, with_error=False):
    """``int_lo^hi b(y) dy`` for ``0 <= lo <= hi``; ``hi`` may be ``inf`` for class G.

    With ``with_error`` returns ``(value, error_estimate)``; the estimate
    includes the truncation bound of improper integrals.
    """
    if lo < 0 or hi < lo:
        raise ValueError("need 0 <= lo <= hi")
    if lo == hi:
        return (0.0, 0.0) if with_error else 0.0
    val, err = integrate_extended(b, np.asarray([lo], float), np.asarray([hi], float), with_error=True)
    return (float(val[0]), float(err[0])) if with_error else float(val[0])


@dataclass(frozen=True)
class MonotoneCheck:
    ok: bool
    witness: Optional[tuple] = None  # ((x1, f(x1)), (x2, f(x2))) with x1 < x2, f(x2) > f(x1)

    def __bool__(self):
        return self.ok


def bf_check_monotone(b, grid, tol=MONOTONE_TOL):
    """Check that ``b`` is non-increasing over an ascending grid."""
    grid = _as_array(grid)
    if np.any(np.diff(grid) < 0):
        raise ValueError("grid must be sorted ascending")
    vals = np.atleast_1d(b(grid))
    rise = np.diff(vals) > tol
    if not rise.any():
        return MonotoneCheck(True)
    i = int(np.argmax(rise))
    return MonotoneCheck(False, ((float(grid[i]), float(vals[i])), (float(grid[i + 1]), float(vals[i + 1]))))


# -- min-plus convolution of bounding functions -----------------------------------


def _strip_scale(f):
    factor = 1.0
    while isinstance(f, Scale):
        factor *= f.factor
        f = f.base
    return factor, f


def _exp_conv_closed(f, g, x):
    """Closed form for two exponentials with equal decay, else ``None``."""
    fa, fe = _strip_scale(f)
    ga, ge = _strip_scale(g)
    if not (isinstance(fe, Exponential) and isinstance(ge, Exponential)):
        return None
    if fe.b != ge.b or fe.b <= 0:
        return None
    a1, a2, b = fa * fe.a, ga * ge.a, fe.b
    x = _as_array(x)
    ends = np.minimum(a1 + a2 * np.exp(-b * x), a1 * np.exp(-b * x) + a2)
    if a1 == 0 or a2 == 0:
        return ends
    ystar = 0.5 * x + math.log(a1 / a2) / (2.0 * b)
    interior = 2.0 * math.sqrt(a1 * a2) * np.exp(-0.5 * b * x)
    return np.where((ystar >= 0) & (ystar <= x), np.minimum(interior, ends), ends)


_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _minimise_conv(f, g, x, n):
    """``inf_y f(y) + g(x - y)`` by grid search, jump candidates and golden refinement.

    Every value returned is attained at some split, so the result can only
    over-estimate the infimum (the safe direction for an upper bound).
    """
    shape = np.shape(x)
    x = _as_array(x).ravel()
    if x.size == 0:
        return x.reshape(shape)
    u = np.linspace(0.0, 1.0, n)
    ys = x[:, None] * u[None, :]
    vals = f._eval(ys.ravel()).reshape(ys.shape) + g._eval((x[:, None] - ys).ravel()).reshape(ys.shape)
    best = vals.min(axis=1)
    arg = vals.argmin(axis=1)

    # candidates at discontinuities of either function, approached from both sides
    xmax = float(x.max())
    cand_y, owner = [], []
    jf = f.jumps(0.0, xmax)
    jg = g.jumps(0.0, xmax)
    for i, xi in enumerate(x):
        ys_i = np.concatenate([jf[jf <= xi], xi - jg[jg <= xi]])
        if ys_i.size:
            d = 1e-12 * max(1.0, xi)
            ys_i = np.concatenate([ys_i, ys_i - d, ys_i + d])
            ys_i = np.clip(ys_i, 0.0, xi)
            cand_y.append(ys_i)
            owner.append(np.full(ys_i.size, i))
    if cand_y:
        cy = np.concatenate(cand_y)
        ow = np.concatenate(owner)
        cv = f._eval(cy) + g._eval(x[ow] - cy)
        np.minimum.at(best, ow, cv)

    # golden-section refinement around the grid minimum
    a = np.maximum(x * u[np.maximum(arg - 1, 0)], 0.0)
    b = np.minimum(x * u[np.minimum(arg + 1, n - 1)], x)
    live = (b - a) > 0
    if live.any():
        a, b, xs = a[live], b[live], x[live]
        c = b - _GOLDEN * (b - a)
        d = a + _GOLDEN * (b - a)
        fc = f._eval(c) + g._eval(xs - c)
        fd = f._eval(d) + g._eval(xs - d)
        refined = np.minimum(fc, fd)
        for _ in range(80):
            if np.all(b - a <= 1e-9):
                break
            left = fc < fd
            b = np.where(left, d, b)
            a = np.where(left, a, c)
            c_new = b - _GOLDEN * (b - a)
            d_new = a + _GOLDEN * (b - a)
            # recycle one interior point, evaluate the other
            probe = np.where(left, c_new, d_new)
            fp = f._eval(probe) + g._eval(xs - probe)
            fc, fd = np.where(left, fp, fd), np.where(left, fc, fp)
            c, d = np.where(left, c_new, d), np.where(left, c, d_new)
            refined = np.minimum(refined, fp)
        idx = np.flatnonzero(live)
        best[idx] = np.minimum(best[idx], refined)
    return best.reshape(shape)
