"""Stochastic network calculus: curves, bounding functions, model transforms and bounds."""

from .bounding import (
    BoundingFunction,
    ClipAtOne,
    Constant,
    Exponential,
    PoissonChernoff,
    PoissonLowerTail,
    PoissonTail,
    bf_check_monotone,
    bf_eval,
    bf_integrate,
)
from .bounds import BoundReport, backlog_bound, delay_bound, output_model, select_tightest
from .curve import Curve, curve_eval
from .minplus import UnstableError, bf_conv, clip_one, clip_pos, conv, deconv, hdist
from .model import (
    ArrivalKind,
    ArrivalModel,
    ServiceKind,
    ServiceModel,
    arrival_tighter,
    service_tighter,
    stability_check,
    validate_arrival,
    validate_service,
)
from .transform import (
    ssc_to_sc,
    ssc_to_ws,
    tac_to_vbc,
    tighten_arrival,
    tighten_service,
    vbc_to_mbc,
    vbc_to_theta_mbc,
    vbssc_to_sc,
)

__version__ = "0.1.0"

__all__ = [
    "BoundingFunction",
    "ClipAtOne",
    "Constant",
    "Exponential",
    "PoissonChernoff",
    "PoissonLowerTail",
    "PoissonTail",
    "bf_check_monotone",
    "bf_eval",
    "bf_integrate",
    "BoundReport",
    "backlog_bound",
    "delay_bound",
    "output_model",
    "select_tightest",
    "Curve",
    "curve_eval",
    "UnstableError",
    "bf_conv",
    "clip_one",
    "clip_pos",
    "conv",
    "deconv",
    "hdist",
    "ArrivalKind",
    "ArrivalModel",
    "ServiceKind",
    "ServiceModel",
    "arrival_tighter",
    "service_tighter",
    "stability_check",
    "validate_arrival",
    "validate_service",
    "ssc_to_sc",
    "ssc_to_ws",
    "tac_to_vbc",
    "tighten_arrival",
    "tighten_service",
    "vbc_to_mbc",
    "vbc_to_theta_mbc",
    "vbssc_to_sc",
]
