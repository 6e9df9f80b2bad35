"""Stochastic arrival and service models, their validation and tightness orders."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .bounding import BoundingFunction, ClipAtOne, bf_check_monotone, bf_integrate
from .curve import Curve
from .minplus import hdist

GRID_POINTS = 512


class ArrivalKind(str, enum.Enum):
    TAC = "tac"  # traffic-amount-centric
    VBC = "vbc"  # virtual-backlog-centric
    MBC = "mbc"  # maximum-virtual-backlog-centric
    THETA_MBC = "theta_mbc"


class ServiceKind(str, enum.Enum):
    WS = "ws"  # weak stochastic
    SC = "sc"  # stochastic
    SSC = "ssc"  # strict stochastic
    VBSSC = "vbssc"  # virtual-backlog stochastic strict


class KindError(ValueError):
    """Model kind not acceptable for the requested operation."""


def _check_timescale(T):
    T = float(T)
    if not (math.isfinite(T) and T > 0):
        raise ValueError(f"time scale must be finite and positive, got {T!r}")
    return T


@dataclass(frozen=True)
class ArrivalModel:
    """``A ~ <f, alpha>`` of a given kind, enforced over time scale ``timescale``."""

    kind: ArrivalKind
    alpha: Curve
    f: BoundingFunction
    timescale: float
    theta: Optional[float] = None
    metadata: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "kind", ArrivalKind(self.kind))
        object.__setattr__(self, "timescale", _check_timescale(self.timescale))
        if self.theta is not None:
            object.__setattr__(self, "theta", float(self.theta))


@dataclass(frozen=True)
class ServiceModel:
    """``S ~ <g, beta>`` of a given kind."""

    kind: ServiceKind
    beta: Curve
    g: BoundingFunction
    timescale: float
    metadata: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "kind", ServiceKind(self.kind))
        object.__setattr__(self, "timescale", _check_timescale(self.timescale))


# -- validation ---------------------------------------------------------------------


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    problems: tuple = ()
    witness: Optional[tuple] = None

    def __bool__(self):
        return self.ok


def _default_x_grid(x_max=50.0):
    return np.linspace(0.0, x_max, GRID_POINTS)


def _validate_pair(curve, bf, grid, clipped_expected):
    problems, witness = [], None
    t = np.linspace(0.0, max(curve.last_time, 1.0) * 2.0, GRID_POINTS)
    cv = curve(t)
    if np.any(np.diff(cv) < 0):
        i = int(np.argmax(np.diff(cv) < 0))
        problems.append("curve decreases")
        witness = ((float(t[i]), float(cv[i])), (float(t[i + 1]), float(cv[i + 1])))
    vals = np.atleast_1d(bf(grid))
    if np.any(vals < 0):
        problems.append("bounding function negative")
    mono = bf_check_monotone(bf, grid)
    if not mono:
        problems.append("bounding function increases")
        witness = witness or mono.witness
    if clipped_expected and np.any(vals > 1.0):
        problems.append("clipped bounding function exceeds 1")
    if bf.is_gbar:
        try:
            tail = bf_integrate(bf, float(grid[-1]), math.inf)
        except ArithmeticError:
            tail = math.inf
        if not math.isfinite(tail):
            problems.append("flagged class G but the tail integral is not finite")
    return problems, witness


def validate_arrival(m: ArrivalModel, grid=None) -> ValidationReport:
    """Check curve/bounding-function invariants and the schema rules of ``m``."""
    grid = _default_x_grid() if grid is None else np.asarray(grid, dtype=float)
    problems = []
    if m.kind is ArrivalKind.THETA_MBC:
        if m.theta is None or m.theta < 0:
            problems.append("theta_mbc needs theta >= 0")
    elif m.theta is not None:
        problems.append("theta only for theta-m.b.c.")
    more, witness = _validate_pair(m.alpha, m.f, grid, isinstance(m.f, ClipAtOne))
    problems += more
    return ValidationReport(not problems, tuple(problems), witness)


def validate_service(s: ServiceModel, grid=None) -> ValidationReport:
    grid = _default_x_grid() if grid is None else np.asarray(grid, dtype=float)
    problems, witness = _validate_pair(s.beta, s.g, grid, isinstance(s.g, ClipAtOne))
    return ValidationReport(not problems, tuple(problems), witness)


# -- stochastic tightness ----------------------------------------------------------------


@dataclass(frozen=True)
class TightnessResult:
    """Outcome of a tightness check; witnesses are the first violations found."""

    ok: bool
    curve_witness: Optional[tuple] = None  # (t, c1(t), c2(t))
    bf_witness: Optional[tuple] = None  # (x, b1(x), b2(x))

    def __bool__(self):
        return self.ok


def _same_family(m1, m2):
    if m1.kind != m2.kind:
        raise KindError(f"cannot compare a {m1.kind.value} model with a {m2.kind.value} model")
    if m1.timescale != m2.timescale:
        raise KindError(f"time scales differ: {m1.timescale:g} vs {m2.timescale:g}")


def _grids(m, t_grid, x_grid):
    if t_grid is None:
        t_grid = np.linspace(0.0, m.timescale, GRID_POINTS)
    if x_grid is None:
        x_grid = _default_x_grid()
    return np.asarray(t_grid, dtype=float), np.asarray(x_grid, dtype=float)


def _check_eps(eps):
    if eps < 0:
        raise ValueError("tolerance must be non-negative")


def _tighter(c1, c2, b1, b2, eps, t_grid, x_grid, sign):
    """``sign = +1``: c1 below c2 (arrivals); ``-1``: c1 above c2 (services)."""
    v1, v2 = sign * c1(t_grid), sign * c2(t_grid)
    curve_w = None
    at0 = t_grid == 0
    bad = np.where(at0, v1 > v2, v1 >= v2)
    if bad.any():
        i = int(np.argmax(bad))
        curve_w = (float(t_grid[i]), float(sign * v1[i]), float(sign * v2[i]))
    f1, f2 = np.atleast_1d(b1(x_grid)), np.atleast_1d(b2(x_grid))
    bf_w = None
    over = f1 > f2 + eps
    if over.any():
        i = int(np.argmax(over))
        bf_w = (float(x_grid[i]), float(f1[i]), float(f2[i]))
    return TightnessResult(curve_w is None and bf_w is None, curve_w, bf_w)


def arrival_tighter(m1: ArrivalModel, m2: ArrivalModel, eps=0.0, t_grid=None, x_grid=None):
    """Whether ``alpha1 <_eps alpha2``.

    Requires ``alpha1(0) <= alpha2(0)``, ``alpha1(t) < alpha2(t)`` at every grid
    ``t > 0`` and ``f1 <= f2 + eps`` at every grid ``x``.
    """
    _check_eps(eps)
    _same_family(m1, m2)
    t_grid, x_grid = _grids(m1, t_grid, x_grid)
    return _tighter(m1.alpha, m2.alpha, m1.f, m2.f, eps, t_grid, x_grid, +1)


def service_tighter(s1: ServiceModel, s2: ServiceModel, eps=0.0, t_grid=None, x_grid=None):
    """Whether ``beta1 >_eps beta2`` (larger service curve, bounding function within eps)."""
    _check_eps(eps)
    _same_family(s1, s2)
    t_grid, x_grid = _grids(s1, t_grid, x_grid)
    return _tighter(s1.beta, s2.beta, s1.g, s2.g, eps, t_grid, x_grid, -1)


# -- stability -------------------------------------------------------------------------


@dataclass(frozen=True)
class StabilityReport:
    ok: bool
    h: float

    def __bool__(self):
        return self.ok


def stability_check(m: ArrivalModel, s: ServiceModel) -> StabilityReport:
    """Stable iff the horizontal distance ``h(alpha, beta)`` is finite."""
    h = hdist(m.alpha, s.beta)
    return StabilityReport(math.isfinite(h), h)
