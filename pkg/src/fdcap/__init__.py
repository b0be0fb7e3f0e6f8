"""Capacity regions of full-duplex wireless links with residual self-interference.

Computes, classifies, and convexifies the uplink/downlink capacity regions
of a bidirectional full-duplex link for single-channel, multi-channel
fixed-power-shape, and multi-channel general power allocation, with
brute-force oracles for validation and a CLI for region sweeps.
"""

from .linkmodel import (
    LinkGains,
    PowerAllocation,
    RatePair,
    Tolerances,
    db_to_linear,
    linear_to_db,
    max_rates,
    rate_dl,
    rate_improvement,
    rate_ul,
    scale_gains,
)
from .geometry import BoundaryPoint, Mode, RegionBoundary, TdfdPlan, mix_for_target, upper_hull
from .singlechannel import (
    CornerRates,
    ShapeClass,
    ShapeKind,
    classify_shape_rb,
    classify_shape_rm,
    concave_rb_condition,
    concave_rm_condition,
    convexify,
    corner_rates,
    fd_boundary_rm,
    region_is_convex,
    tangent_from_corner,
    tdfd_boundary_rm,
)

__version__ = "0.1.0"
