"""M/M/1 case study: Poisson traffic, the exponential server and the delay-bound pipeline.

Rates are in packets per second with a unit packet size.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .bounding import (
    ClipAtOne,
    ExpServerClosedForm,
    Exponential,
    PoissonChernoff,
    PoissonLowerTail,
    PoissonTail,
    Sum,
    WindowIntegral,
)
from .bounds import delay_bound, fmt
from .curve import Curve
from .minplus import UnstableError
from .model import ArrivalKind, ArrivalModel, ServiceKind, ServiceModel
from .quadrature import bisect
from .transform import _check_theta, tac_to_vbc

CSV_COLUMNS = ["T", "theta", "x", "delay_value", "bound_prob", "exact_prob", "path"]
PATHS = ("transform", "direct")


@dataclass(frozen=True)
class MM1Params:
    lam: float
    mu: float
    theta: float
    T_list: tuple = (1.0, 2.0, 4.0)

    def __post_init__(self):
        if self.lam <= 0 or self.mu <= 0:
            raise ValueError("rates must be positive")
        if self.mu <= self.lam:
            raise UnstableError(f"unstable: mu = {self.mu:g} must exceed lambda = {self.lam:g}")
        if self.theta < 0:
            raise ValueError("theta must be non-negative")
        if self.theta >= self.mu - self.lam:
            raise UnstableError(
                f"theta = {self.theta:g} must stay below mu - lambda = {self.mu - self.lam:g} "
                "so that the delay bound does not escape to infinity (h(alpha, beta) = inf)"
            )
        Ts = tuple(float(T) for T in self.T_list)
        if not Ts or any(not (T > 0 and math.isfinite(T)) for T in Ts):
            raise ValueError("time scales must be positive and finite")
        object.__setattr__(self, "T_list", Ts)


# -- traffic -------------------------------------------------------------------------------


def poisson_tac_exact(lam, T) -> ArrivalModel:
    """t.a.c. ``<P{N(lam T) - lam T > x}, lam t>`` with the exact Poisson tail at horizon ``T``."""
    return ArrivalModel(ArrivalKind.TAC, Curve.affine(lam), PoissonTail(lam, T), T)


def poisson_tac_chernoff(lam, T) -> ArrivalModel:
    """t.a.c. with the Chernoff bound ``exp(x - (lam T + x) ln((lam T + x) / (lam T)))``."""
    return ArrivalModel(ArrivalKind.TAC, Curve.affine(lam), PoissonChernoff(lam, T), T)


def chernoff_exponent(lam, t, x, s):
    """``lam t (e^s - 1) - s (lam t + x)``; its minimum over ``s`` gives the Chernoff bound."""
    return lam * t * math.expm1(s) - s * (lam * t + x)


def chernoff_argmin(lam, t, x):
    return math.log((lam * t + x) / (lam * t))


def poisson_vbc(lam, theta, T, variant="composite") -> ArrivalModel:
    """v.b.c. for Poisson traffic with curve ``(lam + theta) t``.

    ``variant="composite"`` adds the t.a.c. term to the window integral,
    ``[f(x) + 1/theta int_x^{x + theta T} f]_1``; ``variant="window"`` is the
    window integral alone (the generic t.a.c. to v.b.c. transform).
    """
    theta = _check_theta(theta)
    tac = poisson_tac_chernoff(lam, T)
    if variant == "window":
        return tac_to_vbc(tac, theta)
    if variant != "composite":
        raise ValueError(f"unknown variant {variant!r}")
    f = ClipAtOne(Sum((tac.f, WindowIntegral(tac.f, 0.0, theta * T, 1.0 / theta))))
    meta = {"builder": "poisson_vbc", "variant": variant, "theta": theta, "parent": tac, "flags": []}
    return ArrivalModel(ArrivalKind.VBC, tac.alpha.plus_rate(theta), f, T, metadata=meta)


# -- service --------------------------------------------------------------------------------


def exp_server_ssc(mu, T, form="exact") -> ServiceModel:
    """s.s.c. ``<g, mu t>`` for exponential service times.

    ``form="exact"``: ``g(x) = P{N(mu T) <= mu T - x}``. ``form="literal"``:
    the literal closed form, which is not non-increasing; a warning is issued.
    """
    if form == "exact":
        g, flags = PoissonLowerTail(mu, T), []
    elif form == "literal":
        g = ExpServerClosedForm(mu, T)
        flags = ["closed form is 0 at x = 0 and not non-increasing"]
        warnings.warn("exponential-server closed form is not a valid bounding function", RuntimeWarning, stacklevel=2)
    else:
        raise ValueError(f"unknown form {form!r}")
    meta = {"builder": "exp_server_ssc", "form": form, "flags": flags}
    return ServiceModel(ServiceKind.SSC, Curve.affine(mu), g, T, metadata=meta)


def exp_server_sc(mu, T, form="exact") -> ServiceModel:
    """The s.s.c. server read as an s.c. server with the same curve and bounding function."""
    s = exp_server_ssc(mu, T, form)
    meta = {"builder": "exp_server_sc", "form": form, "parent": s, "flags": ["s.s.c. read as s.c."]}
    return ServiceModel(ServiceKind.SC, s.beta, s.g, T, metadata=meta)


# -- exact solution and the direct construction ----------------------------------------------


def exact_delay_tail(lam, mu, x):
    """Sojourn time of M/M/1 is exponential with rate ``mu - lam``: ``P{D > x} = e^{-(mu-lam) x}``."""
    if mu <= lam:
        raise UnstableError("exact delay law needs mu > lambda")
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("x must be non-negative")
    out = np.exp(-(mu - lam) * x)
    return float(out) if out.ndim == 0 else out


def kingman_decay(lam, theta):
    """Positive root ``s*`` of ``lam (e^s - 1) = (lam + theta) s``."""
    theta = _check_theta(theta)

    def h(s):
        return lam * math.expm1(s) - (lam + theta) * s

    lo = theta / lam
    while h(lo) >= 0:
        lo *= 0.5
        if lo < 1e-300:
            raise ArithmeticError("could not bracket the decay rate")
    hi = max(2.0 * lo, 1.0)
    while h(hi) <= 0:
        hi *= 2.0
        if hi > 1e6:
            raise ArithmeticError("could not bracket the decay rate")
    return bisect(h, lo, hi, tol=1e-12)


def direct_vbc_kingman(lam, theta, T=1.0) -> ArrivalModel:
    """v.b.c. ``<e^{-s* x}, (lam + theta) t>`` from the virtual queue fed by Poisson traffic.

    The virtual queue serves at constant rate ``lam + theta``; its backlog
    tail is bounded by ``e^{-s* x}`` where ``s*`` solves the effective
    bandwidth equation. The bound does not depend on ``T``.
    """
    s = kingman_decay(lam, theta)
    meta = {
        "builder": "direct_vbc_kingman",
        "method": "virtual queue, root of lambda*(exp(s)-1) = (lambda+theta)*s",
        "s_star": s,
        "theta": float(theta),
        "flags": [],
    }
    return ArrivalModel(ArrivalKind.VBC, Curve.affine(lam + theta), Exponential(1.0, s), T, metadata=meta)


# -- report ----------------------------------------------------------------------------------


def arrival_for(p: MM1Params, T, path, variant="window"):
    if path == "transform":
        if variant == "window":
            return tac_to_vbc(poisson_tac_chernoff(p.lam, T), p.theta)
        return poisson_vbc(p.lam, p.theta, T, variant)
    if path == "direct":
        return direct_vbc_kingman(p.lam, p.theta, T)
    raise ValueError(f"unknown path {path!r}")


def mm1_report(p: MM1Params, x_grid, path="transform", variant="window"):
    """Rows ``dict(T, theta, x, delay_value, bound_prob, exact_prob, path)`` ordered by T, path, x."""
    paths = PATHS if path == "both" else (path,)
    x = np.asarray(x_grid, dtype=float)
    rows = []
    for T in p.T_list:
        service = exp_server_sc(p.mu, T)
        for pa in paths:
            rep = delay_bound(arrival_for(p, T, pa, variant), service, x)
            exact = exact_delay_tail(p.lam, p.mu, rep.delay)
            for i in range(x.size):
                rows.append(
                    {
                        "T": T,
                        "theta": p.theta,
                        "x": float(x[i]),
                        "delay_value": float(rep.delay[i]),
                        "bound_prob": float(rep.prob[i]),
                        "exact_prob": float(exact[i]),
                        "path": pa,
                    }
                )
    return rows


def rows_to_csv(rows, columns=CSV_COLUMNS) -> str:
    lines = [",".join(columns)]
    for r in rows:
        lines.append(",".join(r[c] if isinstance(r[c], str) else fmt(r[c]) for c in columns))
    return "\n".join(lines) + "\n"
