"""Model transforms between arrival/service kinds and the tightness searches.

Every transform returns a new model whose metadata records the transform
name, its theta, the source model and any flags raised on the way, so a
later tightness search can rebuild the same family at a different theta.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .bounding import (
    BoundingClassError,
    ClipAtOne,
    Scale,
    Sum,
    TailIntegral,
    WindowIntegral,
    integrate_extended,
)
from .model import ArrivalKind, ArrivalModel, KindError, ServiceKind, ServiceModel
from .quadrature import bisect

THETA_MIN = 1e-6
THETA_TOL = 1e-10
AT_THETA1 = 1e-9


class TransformError(ValueError):
    """Transform not defined for the given model or parameters."""


class ProvenanceError(ValueError):
    """Model lacks the metadata needed to rebuild its transform family."""


def _check_theta(theta):
    if theta is None or not math.isfinite(theta) or theta <= 0:
        raise TransformError("theta must be positive")
    return float(theta)


def _need_kind(m, kind):
    if m.kind is not kind:
        raise KindError(f"expected a {kind.value} model, got {m.kind.value}")


def _need_gbar(b, name):
    if not b.is_gbar:
        raise BoundingClassError(f"{name} needs a bounding function of class G (finite tail integral)")


def _meta(name, theta, parent, flags=()):
    return {"transform": name, "theta": theta, "parent": parent, "flags": list(flags)}


# -- arrival transforms ---------------------------------------------------------------------


def tac_to_vbc(m: ArrivalModel, theta) -> ArrivalModel:
    """t.a.c. to v.b.c.: curve ``alpha + theta t``, ``f^theta(x) = [1/theta int_x^{x+T theta} f]_1``."""
    _need_kind(m, ArrivalKind.TAC)
    theta = _check_theta(theta)
    _need_gbar(m.f, "tac_to_vbc")
    T = m.timescale
    f = ClipAtOne(WindowIntegral(m.f, 0.0, T * theta, 1.0 / theta))
    return ArrivalModel(ArrivalKind.VBC, m.alpha.plus_rate(theta), f, T, metadata=_meta("tac_to_vbc", theta, m))


def vbc_to_mbc(m: ArrivalModel, theta) -> ArrivalModel:
    """v.b.c. to m.b.c.: backward window ``[x - theta T, x]``; ``f`` is extended by ``f(0)`` below 0."""
    _need_kind(m, ArrivalKind.VBC)
    theta = _check_theta(theta)
    _need_gbar(m.f, "vbc_to_mbc")
    T = m.timescale
    f = ClipAtOne(WindowIntegral(m.f, -theta * T, 0.0, 1.0 / theta))
    # thresholds below theta*T reach into negative arguments
    flags = [f"f(0) extension for x < {theta * T:g}"]
    return ArrivalModel(
        ArrivalKind.MBC, m.alpha.plus_rate(theta), f, T, metadata=_meta("vbc_to_mbc", theta, m, flags)
    )


def vbc_to_theta_mbc(m: ArrivalModel, theta) -> ArrivalModel:
    """v.b.c. to theta-m.b.c.: ``f^theta(x) = [f(x) + 1/theta int_x^inf f]_1`` (independent of T)."""
    _need_kind(m, ArrivalKind.VBC)
    theta = _check_theta(theta)
    _need_gbar(m.f, "vbc_to_theta_mbc")
    f = ClipAtOne(Sum((m.f, Scale(1.0 / theta, TailIntegral(m.f)))))
    return ArrivalModel(
        ArrivalKind.THETA_MBC,
        m.alpha.plus_rate(theta),
        f,
        m.timescale,
        theta=theta,
        metadata=_meta("vbc_to_theta_mbc", theta, m),
    )


# -- service transforms --------------------------------------------------------------------


def ssc_to_ws(s: ServiceModel) -> ServiceModel:
    """A strict server is also a weak stochastic one, same curve and bounding function."""
    _need_kind(s, ServiceKind.SSC)
    return ServiceModel(ServiceKind.WS, s.beta, s.g, s.timescale, metadata=_meta("ssc_to_ws", None, s))


def ssc_to_sc(s: ServiceModel, theta) -> ServiceModel:
    """s.s.c. to s.c.: curve ``[beta - theta t]^+``, ``g^theta(x) = [1/theta int_{x-theta T+theta}^x g]_1``.

    For ``T <= 1`` the window is empty: ``g^theta`` is 0 and the result is flagged.
    """
    _need_kind(s, ServiceKind.SSC)
    theta = _check_theta(theta)
    _need_gbar(s.g, "ssc_to_sc")
    T = s.timescale
    flags = []
    t = np.linspace(0.0, T, 257)
    if np.any(s.beta(t) - theta * t < 0):
        flags.append("beta - theta t clipped at 0 on [0, T]")
        warnings.warn("beta(t) - theta*t < 0 on [0, T]; clipped at 0", RuntimeWarning, stacklevel=2)
    if s.beta.terminal_slope < theta:
        raise TransformError("theta exceeds the service rate; beta - theta t has no positive part")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        beta = s.beta.minus_rate(theta)
    window = WindowIntegral(s.g, -theta * T + theta, 0.0, 1.0 / theta)
    if window.degenerate:
        flags.append("degenerate window (T <= 1): bounding function is 0")
    else:
        flags.append(f"g(0) extension for x < {theta * (T - 1):g}")
    return ServiceModel(ServiceKind.SC, beta, ClipAtOne(window), T, metadata=_meta("ssc_to_sc", theta, s, flags))


def vbssc_to_sc(s: ServiceModel) -> ServiceModel:
    """A virtual-backlog strict server is also an s.c. server, same curve and bounding function."""
    _need_kind(s, ServiceKind.VBSSC)
    return ServiceModel(ServiceKind.SC, s.beta, s.g, s.timescale, metadata=_meta("vbssc_to_sc", None, s))


# -- dispatch ----------------------------------------------------------------------------------

ARRIVAL_TRANSFORMS = {
    (ArrivalKind.TAC, ArrivalKind.VBC): tac_to_vbc,
    (ArrivalKind.VBC, ArrivalKind.MBC): vbc_to_mbc,
    (ArrivalKind.VBC, ArrivalKind.THETA_MBC): vbc_to_theta_mbc,
}
SERVICE_TRANSFORMS = {
    (ServiceKind.SSC, ServiceKind.SC): ssc_to_sc,
}
RETAGS = {
    (ServiceKind.SSC, ServiceKind.WS): ssc_to_ws,
    (ServiceKind.VBSSC, ServiceKind.SC): vbssc_to_sc,
}
BY_NAME = {fn.__name__: fn for fn in (*ARRIVAL_TRANSFORMS.values(), *SERVICE_TRANSFORMS.values(), *RETAGS.values())}


def transform(model, target, theta=None):
    """Apply the transform from ``model.kind`` to ``target``."""
    src = model.kind
    try:
        tgt = type(src)(target)
    except ValueError:
        raise TransformError(f"no transform from {src.value} to {target}") from None
    if (src, tgt) in RETAGS:
        return RETAGS[(src, tgt)](model)
    fn = ARRIVAL_TRANSFORMS.get((src, tgt)) or SERVICE_TRANSFORMS.get((src, tgt))
    if fn is None:
        raise TransformError(f"no transform from {src.value} to {tgt.value}")
    return fn(model, theta)


def clip_onset(f, x_max=1e6):
    """Smallest ``x`` at which ``f`` drops below 1 (``None`` if not before ``x_max``)."""
    if f(0.0) < 1.0:
        return 0.0
    hi = 1.0
    while f(hi) >= 1.0:
        hi *= 2.0
        if hi > x_max:
            return None
    return bisect(lambda x: 0.5 if f(x) >= 1.0 else -0.5, 0.0, hi, tol=1e-10)


# -- tightness search ----------------------------------------------------------------------------


def _window_family(m):
    """Pre-clip bounding value ``W(theta, x)`` of the family ``m`` was built from."""
    meta = m.metadata or {}
    name = meta.get("transform")
    parent = meta.get("parent")
    theta1 = meta.get("theta")
    if name not in BY_NAME or parent is None or theta1 is None:
        raise ProvenanceError("model has no recorded transform, parent and theta")
    base = parent.f if isinstance(parent, ArrivalModel) else parent.g
    T = parent.timescale
    x_arr = np.zeros(1)

    def window(lo, hi, scale):
        return lambda x: scale * float(integrate_extended(base, x_arr + x + lo, x_arr + x + hi)[0])

    if name == "tac_to_vbc":
        return theta1, lambda th, x: window(0.0, T * th, 1.0 / th)(x)
    if name == "vbc_to_mbc":
        return theta1, lambda th, x: window(-th * T, 0.0, 1.0 / th)(x)
    if name == "ssc_to_sc":

        def w(th, x):
            if T <= 1.0:
                return 0.0
            return window(-th * T + th, 0.0, 1.0 / th)(x)

        return theta1, w
    if name == "vbc_to_theta_mbc":
        def w(th, x):
            return float(base(x)) + float(integrate_extended(base, x_arr + x, x_arr + np.inf)[0]) / th

        return theta1, w
    raise ProvenanceError(f"transform {name} has no theta to tighten")


@dataclass(frozen=True)
class TightenResult:
    """``theta2`` is ``None`` when the model is the tightest within the tolerance."""

    theta2: Optional[float]
    theta1: float
    phi: Optional[float]  # phi(theta2, x_floor)
    at_floor: bool = False

    @property
    def tightest(self):
        return self.theta2 is None


def phi(m, theta2, x_floor):
    """``W(theta2, x) - W(theta1, x)`` for the family ``m`` belongs to."""
    theta1, w = _window_family(m)
    return w(theta2, x_floor) - w(theta1, x_floor)


def _tighten(m, eps, x_floor):
    if eps < 0:
        raise ValueError("tolerance must be non-negative")
    if x_floor <= 0:
        raise ValueError("x_floor must be positive")
    theta1, w = _window_family(m)
    _check_theta(theta1)
    if theta1 <= THETA_MIN:
        return TightenResult(None, theta1, None)
    ref = w(theta1, x_floor)

    def excess(th):
        return w(th, x_floor) - ref - eps

    lo_val = excess(THETA_MIN)
    if lo_val <= 0:
        return TightenResult(THETA_MIN, theta1, lo_val + eps, at_floor=True)
    # excess(theta1) = -eps <= 0, so the bracket holds (phi is non-increasing in theta2)
    root = bisect(excess, THETA_MIN, theta1, tol=THETA_TOL)
    # the smallest feasible theta2 sits at or right of the crossing
    if excess(root) > 0:
        root = min(root + THETA_TOL, theta1)
    if theta1 - root <= AT_THETA1:
        return TightenResult(None, theta1, None)
    return TightenResult(root, theta1, excess(root) + eps)


def tighten_arrival(m: ArrivalModel, eps, x_floor) -> TightenResult:
    """Smallest ``theta2 < theta1`` whose model stays within ``eps`` at ``x >= x_floor``."""
    return _tighten(m, eps, x_floor)


def tighten_service(s: ServiceModel, eps, x_floor) -> TightenResult:
    """Service counterpart of :func:`tighten_arrival` on windows ``[x - theta T + theta, x]``."""
    return _tighten(s, eps, x_floor)


def rebuild(m, theta2):
    """The model of ``m``'s family at another theta."""
    meta = m.metadata or {}
    fn = BY_NAME.get(meta.get("transform"))
    if fn is None or meta.get("parent") is None:
        raise ProvenanceError("model has no recorded transform and parent")
    return fn(meta["parent"], theta2)
