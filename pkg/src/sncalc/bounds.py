"""Output characterisation, delay and backlog bounds, and choosing the tightest pair."""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .bounding import ClipAtOne
from .minplus import UnstableError, bf_conv, deconv, deconv_at, hdist
from .model import ArrivalKind, ArrivalModel, KindError, ServiceKind, stability_check
from .serialize import digest

# m.b.c. implies v.b.c. with the same curve and bounding function
ARRIVAL_KINDS = (ArrivalKind.VBC, ArrivalKind.MBC)
SERVICE_KINDS = (ServiceKind.WS, ServiceKind.SC)


@dataclass
class BoundReport:
    """Sampled tail bound ``P{D > delay(x)} <= prob(x)`` or ``P{B > x} <= prob(x)``."""

    kind: str
    x: np.ndarray
    prob: np.ndarray
    delay: np.ndarray = None  # delay rows only
    arrival_id: str = ""
    service_id: str = ""
    epsilon_total: float = 0.0
    flags: list = field(default_factory=list)

    def rows(self):
        for i, x in enumerate(self.x):
            if self.delay is not None:
                yield float(x), float(self.delay[i]), float(self.prob[i])
            else:
                yield float(x), float(self.prob[i])

    def header(self):
        return ["x", "delay_value", "bound_prob"] if self.delay is not None else ["x", "bound_prob"]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(self.header()) + "\n")
        for row in self.rows():
            buf.write(",".join(fmt(v) for v in row) + "\n")
        return buf.getvalue()

    def to_json(self) -> str:
        samples = [dict(zip(self.header(), row)) for row in self.rows()]
        for s in samples:
            if "delay_value" in s and math.isinf(s["delay_value"]):
                s["delay_value"] = "inf"
        doc = {
            "kind": self.kind,
            "arrival_id": self.arrival_id,
            "service_id": self.service_id,
            "epsilon_total": self.epsilon_total,
            "flags": list(self.flags),
            "samples": samples,
        }
        return json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n"


def fmt(v):
    return "%.10g" % v


def _check_pair(a: ArrivalModel, s, arrival_kinds=ARRIVAL_KINDS, service_kinds=SERVICE_KINDS):
    if a.kind not in arrival_kinds:
        names = "/".join(k.value for k in arrival_kinds)
        raise KindError(f"arrival model must be {names}, got {a.kind.value}")
    if s.kind not in service_kinds:
        names = "/".join(k.value for k in service_kinds)
        raise KindError(f"service model must be {names}, got {s.kind.value}")
    st = stability_check(a, s)
    if not st:
        raise UnstableError(
            f"unstable: arrival rate {a.alpha.terminal_slope:g} exceeds service rate "
            f"{s.beta.terminal_slope:g}, h(alpha, beta) = inf"
        )
    return st


def _grid(x_grid):
    x = np.asarray(x_grid, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("empty threshold grid")
    if np.any(x < 0):
        raise ValueError("thresholds must be non-negative")
    return x


def output_bf(a, s):
    return ClipAtOne(bf_conv(a.f, s.g))


def _tail_column(bfn, args):
    """Bound values in ``[0, 1]``, made non-increasing in the argument.

    Each computed value is an upper bound on the exact convolution, which
    is non-increasing, so a running minimum along sorted arguments keeps
    every entry a valid bound.
    """
    vals = np.clip(np.atleast_1d(bfn(args)), 0.0, 1.0)
    order = np.argsort(args, kind="stable")
    vals[order] = np.minimum.accumulate(vals[order])
    return vals


def _ids(a, s):
    return digest(a)[:16], digest(s)[:16]


def output_model(a: ArrivalModel, s) -> ArrivalModel:
    """Departures are v.b.c. with curve ``alpha (/) beta`` and bounding function ``f (x) g``."""
    _check_pair(a, s, service_kinds=(ServiceKind.SC,))
    meta = {"transform": "output", "theta": None, "parent": a, "service": s, "flags": []}
    return ArrivalModel(ArrivalKind.VBC, deconv(a.alpha, s.beta), output_bf(a, s), a.timescale, metadata=meta)


def delay_bound(a: ArrivalModel, s, x_grid, epsilon_total=0.0) -> BoundReport:
    """Rows ``(x, h(alpha + x, beta), (f (x) g)(x))``."""
    _check_pair(a, s)
    x = _grid(x_grid)
    delay = np.array([hdist(a.alpha.shifted(float(xi)), s.beta) for xi in x])
    prob = _tail_column(output_bf(a, s), x)
    aid, sid = _ids(a, s)
    flags = [f"service kind {s.kind.value}"]
    return BoundReport("delay", x, prob, delay, aid, sid, float(epsilon_total), flags)


def backlog_bound(a: ArrivalModel, s, x_grid, epsilon_total=0.0) -> BoundReport:
    """Rows ``(x, (f (x) g)([x - (alpha (/) beta)(0)]^+))``."""
    _check_pair(a, s)
    x = _grid(x_grid)
    offset = max(deconv_at(a.alpha, s.beta, 0.0), 0.0)
    prob = _tail_column(output_bf(a, s), np.maximum(x - offset, 0.0))
    aid, sid = _ids(a, s)
    flags = [f"service kind {s.kind.value}", f"backlog offset {offset:.10g}"]
    return BoundReport("backlog", x, prob, None, aid, sid, float(epsilon_total), flags)


def _output_report(a, s, x_grid, epsilon_total=0.0):
    _check_pair(a, s, service_kinds=(ServiceKind.SC,))
    x = _grid(x_grid)
    aid, sid = _ids(a, s)
    return BoundReport("output", x, _tail_column(output_bf(a, s), x), None, aid, sid, float(epsilon_total))


_BUILDERS = {"delay": delay_bound, "backlog": backlog_bound, "output": _output_report}


@dataclass(frozen=True)
class Selection:
    arrival_index: int
    service_index: int
    report: BoundReport
    dominant: bool


def _eps_for(eps_pairs, i, j):
    if eps_pairs is None:
        return 0.0
    if isinstance(eps_pairs, dict):
        return float(eps_pairs.get((i, j), 0.0))
    return float(eps_pairs)


def select_tightest(arrivals, services, kind, x_grid, eps_pairs=None) -> Selection:
    """Evaluate every arrival/service pair and pick the tightest bound.

    A pair wins outright when its probability column is within its
    tolerance of every other pair's at every ``x`` (and, for delay, its delay
    column is no larger). Otherwise the smallest integrated bound wins and
    the selection is marked non-dominant.
    """
    if not arrivals or not services:
        raise ValueError("need at least one arrival and one service model")
    build = _BUILDERS[kind]
    cands = {}
    for i, a in enumerate(arrivals):
        for j, s in enumerate(services):
            cands[(i, j)] = build(a, s, x_grid, _eps_for(eps_pairs, i, j))
    keys = sorted(cands)

    def beats(p, q):
        rp, rq = cands[p], cands[q]
        if np.any(rp.prob > rq.prob + rp.epsilon_total):
            return False
        return rp.delay is None or not np.any(rp.delay > rq.delay)

    for p in keys:
        if all(beats(p, q) for q in keys if q != p):
            return Selection(p[0], p[1], cands[p], True)
    x = cands[keys[0]].x
    order = np.argsort(x)

    def area(k):
        pr = cands[k].prob[order]
        xs = x[order]
        return float(np.sum(0.5 * (pr[1:] + pr[:-1]) * np.diff(xs))) if xs.size > 1 else float(pr[0])

    best = min(keys, key=lambda k: (area(k), k))
    rep = cands[best]
    rep.flags.append("non-dominant: chosen by integrated bound")
    return Selection(best[0], best[1], rep, False)
