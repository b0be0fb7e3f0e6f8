"""Single-channel (K=1) capacity region: boundary, shape, convexification.

With one channel, the region boundary left of the full-power corner
(s_b, s_m) is a curve r_m(r_b) whose curvature is governed by a monic
quadratic in alpha_b: the curve is concave exactly where the quadratic is
nonpositive, so its larger root classifies the segment as concave, convex,
or concave-then-convex.  Non-convex regions are repaired by time sharing:
the convexified boundary consists of arc pieces joined by tangent chords,
each tangent point located by a short binary search.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Tuple

import numpy as np

from .geometry import BoundaryPoint, Mode, TdfdPlan, mix_for_target, upper_hull
from .linkmodel import LN2, LinkGains, PowerAllocation, Tolerances, rate_dl, rate_ul

__all__ = [
    "ShapeKind",
    "ShapeClass",
    "CornerRates",
    "TangentResult",
    "Envelope",
    "corner_rates",
    "fd_boundary_rm",
    "concave_rm_condition",
    "concave_rb_condition",
    "region_is_convex",
    "classify_shape_rm",
    "classify_shape_rb",
    "tangent_from_corner",
    "convexify",
    "tdfd_boundary_rm",
    "dense_boundary_samples",
    "Mode",
    "TdfdPlan",
]


class ShapeKind(enum.Enum):
    CONCAVE_ALL = "ConcaveAll"
    CONVEX_ALL = "ConvexAll"
    CONCAVE_THEN_CONVEX = "ConcaveThenConvex"


@dataclass(frozen=True)
class ShapeClass:
    """Curvature classification of one boundary segment.

    Breakpoints are present only for the concave-then-convex kind:
    breakpoint_alpha is the power fraction at which the curvature flips and
    breakpoint_rb the corresponding rate on the segment's own axis.
    """

    kind: ShapeKind
    breakpoint_rb: Optional[float] = None
    breakpoint_alpha: Optional[float] = None

    def __post_init__(self):
        mixed = self.kind is ShapeKind.CONCAVE_THEN_CONVEX
        if mixed != (self.breakpoint_rb is not None) or mixed != (self.breakpoint_alpha is not None):
            raise ValueError("breakpoints present iff kind is ConcaveThenConvex")


@dataclass(frozen=True)
class CornerRates:
    """Rates at simultaneous full power."""

    s_b: float
    s_m: float


class TangentResult(NamedTuple):
    rb_touch: float
    line_slope: float
    steps: int


def _require_k1(g: LinkGains):
    if g.K != 1:
        raise ValueError(f"single-channel operation requires K=1, got K={g.K}")


def _scalars(g: LinkGains) -> Tuple[float, float, float, float]:
    return float(g.gamma_bm[0]), float(g.gamma_mb[0]), float(g.gamma_mm[0]), float(g.gamma_bb[0])


def _transposed(g: LinkGains) -> LinkGains:
    """Swap the roles of the two stations (mirrors the region across r_b = r_m)."""
    return LinkGains(g.gamma_mb, g.gamma_bm, g.gamma_bb, g.gamma_mm)


def corner_rates(g: LinkGains) -> CornerRates:
    """Rates at alpha_b = alpha_m = 1."""
    _require_k1(g)
    full = PowerAllocation([1.0], [1.0])
    return CornerRates(rate_dl(g, full), rate_ul(g, full))


def _hd_maxima(g: LinkGains) -> Tuple[float, float]:
    gbm, gmb, _, _ = _scalars(g)
    return math.log2(1.0 + gbm), math.log2(1.0 + gmb)


# Parametrization of the boundary segment left of the corner (alpha_m = 1):
#   r_b(a) = log2(1 + a*Gb),  Gb = gamma_bm / (1 + gamma_mm)
#   r_m(a) = log2(1 + gamma_mb / (1 + a*gamma_bb))


def _seg_gb(g: LinkGains) -> float:
    gbm, _, gmm, _ = _scalars(g)
    return gbm / (1.0 + gmm)


def _seg_alpha_of_rb(g: LinkGains, rb: float) -> float:
    gb = _seg_gb(g)
    if gb == 0.0:
        return 0.0
    return min(1.0, max(0.0, math.expm1(rb * LN2) / gb))


def _seg_rm(g: LinkGains, alpha_b: float) -> float:
    _, gmb, _, gbb = _scalars(g)
    return math.log1p(gmb / (1.0 + alpha_b * gbb)) / LN2


def _seg_slope(g: LinkGains, alpha_b: float) -> float:
    """d r_m / d r_b on the segment at the point with power fraction alpha_b."""
    _, gmb, _, gbb = _scalars(g)
    gb = _seg_gb(g)
    if gb == 0.0:
        return 0.0
    u = 1.0 + alpha_b * gbb
    return -gbb * (1.0 / u - 1.0 / (u + gmb)) * (1.0 + alpha_b * gb) / gb


def fd_boundary_rm(g: LinkGains, rb_star: float, tol: Tolerances | None = None):
    """Largest uplink rate with the downlink rate pinned at rb_star.

    Left of the corner the uplink transmits at full power and the downlink
    fraction follows by closed-form inversion; right of the corner the
    downlink is at full power and the uplink fraction is found by bisection
    on the (monotone decreasing) downlink rate.

    Returns (rm_star, allocation).
    """
    _require_k1(g)
    tol = tol or Tolerances()
    gbm, _, gmm, _ = _scalars(g)
    r_bar_b, _ = _hd_maxima(g)
    if not (-tol.eps_rate <= rb_star <= r_bar_b + tol.eps_rate):
        raise ValueError(f"rb_star={rb_star} outside [0, {r_bar_b}]")
    rb_star = min(max(rb_star, 0.0), r_bar_b)
    s_b = corner_rates(g).s_b

    if rb_star <= s_b:
        ab = _seg_alpha_of_rb(g, rb_star)
        a = PowerAllocation([ab], [1.0])
        return rate_ul(g, a), a

    # rb_star > s_b is only reachable when gamma_mm > 0.
    lo, hi = 0.0, 1.0  # r_b(1, alpha_m) decreases in alpha_m
    am = 0.5
    for _ in range(tol.max_iters):
        am = 0.5 * (lo + hi)
        rb = math.log1p(gbm / (1.0 + am * gmm)) / LN2
        if hi - lo <= tol.eps_alpha and abs(rb - rb_star) <= tol.eps_rate:
            break
        if rb > rb_star:
            lo = am
        else:
            hi = am
    a = PowerAllocation([1.0], [am])
    return rate_ul(g, a), a


def _quad_coeffs(g: LinkGains) -> Tuple[float, float]:
    """Monic curvature quadratic a^2 + b*a + c of the left boundary segment.

    Its sign equals the sign of d^2 r_m / d r_b^2 at power fraction a.
    """
    gbm, gmb, gmm, gbb = _scalars(g)
    b = 2.0 * (1.0 + gmm) / gbm
    c = (2.0 + gmb) * (1.0 + gmm) / (gbb * gbm) - (1.0 + gmb) / (gbb * gbb)
    return b, c


def classify_shape_rm(g: LinkGains) -> ShapeClass:
    """Curvature class of r_m(r_b) on [0, s_b].

    Concave everywhere iff the curvature quadratic's larger root is >= 1;
    convex everywhere iff it has no positive real root; otherwise concave up
    to the root and convex beyond it.  Degenerate gains (either SNR zero, or
    a zero BS XINR, which flattens the segment) classify as concave.
    """
    _require_k1(g)
    gbm, gmb, _, gbb = _scalars(g)
    if gbm == 0.0 or gmb == 0.0 or gbb == 0.0:
        return ShapeClass(ShapeKind.CONCAVE_ALL)
    b, c = _quad_coeffs(g)
    disc = b * b - 4.0 * c
    if disc <= 0.0:
        return ShapeClass(ShapeKind.CONVEX_ALL)
    alpha_plus = -2.0 * c / (b + math.sqrt(disc))  # stable form of the larger root
    if alpha_plus >= 1.0:
        return ShapeClass(ShapeKind.CONCAVE_ALL)
    if alpha_plus <= 0.0:
        return ShapeClass(ShapeKind.CONVEX_ALL)
    rb_plus = math.log1p(alpha_plus * _seg_gb(g)) / LN2
    return ShapeClass(ShapeKind.CONCAVE_THEN_CONVEX, breakpoint_rb=rb_plus, breakpoint_alpha=alpha_plus)


def classify_shape_rb(g: LinkGains) -> ShapeClass:
    """Curvature class of r_b(r_m) on [0, s_m] (roles of the stations swapped)."""
    return classify_shape_rm(_transposed(g))


def concave_rm_condition(g: LinkGains) -> bool:
    """Closed-form test for r_m(r_b) concave on all of [0, s_b].

    The uplink SNR must exceed gamma_bb^2 - 1 and the downlink SNR must
    clear two thresholds; together this is the curvature quadratic being
    nonpositive at both alpha_b = 0 and alpha_b = 1.  Degenerate (zero)
    gains flatten the segment and count as concave.
    """
    _require_k1(g)
    gbm, gmb, gmm, gbb = _scalars(g)
    if gbm == 0.0 or gmb == 0.0 or gbb == 0.0:
        return True
    if gmb <= gbb * gbb - 1.0:
        return False
    t2 = gbb * (1.0 + gmm) * (2.0 + gmb) / (1.0 + gmb)
    t3 = (1.0 + gmm) * (2.0 + (2.0 + gmb) / gbb) / ((1.0 + gmb) / (gbb * gbb) - 1.0)
    return gbm >= t2 and gbm >= t3


def concave_rb_condition(g: LinkGains) -> bool:
    """Mirror of concave_rm_condition for the r_b(r_m) segment."""
    return concave_rm_condition(_transposed(g))


def region_is_convex(g: LinkGains) -> bool:
    """True when the full-duplex region is convex.

    Both boundary segments concave is sufficient: the segments then meet at
    the corner under a re-entrant angle, which is asserted as a sanity check
    via the endpoint derivatives.
    """
    _require_k1(g)
    gbm, gmb, gmm, gbb = _scalars(g)
    if gbm == 0.0 or gmb == 0.0:
        return True  # region collapses to a segment
    if gmm == 0.0 and gbb == 0.0:
        return True  # rectangle
    ok = concave_rm_condition(g) and concave_rb_condition(g)
    if ok and gmm > 0.0 and gbb > 0.0:
        lhs = gbm * gmb
        rhs = gmm * gbb / ((1.0 + gmm) * (1.0 + gbb))
        assert lhs >= rhs * (1.0 - 1e-12), "angle condition violated despite concave segments"
    return ok


def _concave_head_end(g: LinkGains, shape: ShapeClass) -> float:
    if shape.kind is ShapeKind.CONCAVE_ALL:
        return corner_rates(g).s_b
    if shape.kind is ShapeKind.CONCAVE_THEN_CONVEX:
        return shape.breakpoint_rb
    raise ValueError("segment has no concave part")


def _tangent_to_point(g: LinkGains, rb_head: float, px: float, py: float, tol: Tolerances):
    """Touch abscissa of the tangent of the concave head passing through (px, py).

    The tangent-line value at px is non-increasing in the touch abscissa, so
    a plain bisection over [0, rb_head] applies.  Returns (rb_touch, steps);
    the result clips to an endpoint when the crossing lies outside.
    """

    def line_value_at_px(rb: float) -> float:
        a = _seg_alpha_of_rb(g, rb)
        return _seg_rm(g, a) + _seg_slope(g, a) * (px - rb)

    width_stop = tol.eps_rate / 1.4
    lo, hi = 0.0, rb_head
    if line_value_at_px(hi) >= py:
        return hi, 0
    if line_value_at_px(lo) <= py:
        return lo, 0
    steps = 0
    while hi - lo > width_stop:
        steps += 1
        mid = 0.5 * (lo + hi)
        resid = line_value_at_px(mid) - py
        if abs(resid) <= tol.eps_rate:
            return mid, steps
        if resid > 0.0:
            lo = mid
        else:
            hi = mid
        if steps >= tol.max_iters:
            break
    return 0.5 * (lo + hi), steps


def tangent_from_corner(g: LinkGains, shape: ShapeClass, tol: Tolerances | None = None) -> TangentResult:
    """Touch point of the tangent from the corner (s_b, s_m) onto r_m(r_b).

    For a fully concave segment the corner lies on the curve and the result
    degenerates to rb_touch = s_b.  The bisection interval stops at width
    eps_rate/1.4, so the step count is at most ceil(log2(1.4*r_bar_b/eps)).
    """
    _require_k1(g)
    tol = tol or Tolerances()
    cr = corner_rates(g)
    if shape.kind is ShapeKind.CONCAVE_ALL:
        return TangentResult(cr.s_b, _seg_slope(g, 1.0), 0)
    rb_head = _concave_head_end(g, shape)
    rb_touch, steps = _tangent_to_point(g, rb_head, cr.s_b, cr.s_m, tol)
    return TangentResult(rb_touch, _seg_slope(g, _seg_alpha_of_rb(g, rb_touch)), steps)


# --- convexified boundary -------------------------------------------------

_ARC_B = "arc_b"
_ARC_M = "arc_m"
_CHORD = "chord"


@dataclass(frozen=True)
class _Piece:
    kind: str
    rb_lo: float
    rb_hi: float
    p1: Optional[BoundaryPoint] = None  # chord endpoints
    p2: Optional[BoundaryPoint] = None
    tdd: bool = False


@dataclass(frozen=True)
class Envelope:
    """Convexified (TDFD) boundary of a K=1 region as an ordered piece list."""

    gains: LinkGains
    tol: Tolerances
    pieces: Tuple[_Piece, ...]
    fd_everywhere: bool

    def query(self, rb_star: float) -> Tuple[float, TdfdPlan]:
        r_bar_b, _ = _hd_maxima(self.gains)
        if not (-self.tol.eps_rate <= rb_star <= r_bar_b + self.tol.eps_rate):
            raise ValueError(f"rb_star={rb_star} outside [0, {r_bar_b}]")
        rb_star = min(max(rb_star, 0.0), r_bar_b)
        fd_rm, fd_alloc = fd_boundary_rm(self.gains, rb_star, self.tol)
        fd_plan = TdfdPlan(mode=Mode.FD, point=BoundaryPoint(rb_star, fd_rm, fd_alloc))
        if self.fd_everywhere:
            return fd_rm, fd_plan
        piece = self.pieces[-1]
        for p in self.pieces:
            if rb_star <= p.rb_hi + 1e-12:
                piece = p
                break
        if piece.kind in (_ARC_B, _ARC_M):
            rm, plan = fd_rm, fd_plan
        else:
            p1, p2 = piece.p1, piece.p2
            if abs(rb_star - p1.r_b) <= 1e-12:
                return max(p1.r_m, fd_rm), TdfdPlan(mode=Mode.FD, point=p1)
            if abs(rb_star - p2.r_b) <= 1e-12:
                return max(p2.r_m, fd_rm), TdfdPlan(mode=Mode.FD, point=p2)
            lam = (p2.r_b - rb_star) / (p2.r_b - p1.r_b)
            rm = lam * p1.r_m + (1.0 - lam) * p2.r_m
            mode = Mode.TDD if piece.tdd else Mode.TIME_SHARE
            plan = TdfdPlan(mode=mode, endpoints=(p1, p2), lam=float(lam))
        if fd_rm > rm:  # the envelope never dips below the FD boundary
            return fd_rm, fd_plan
        return rm, plan


def _pt_arc_b(g: LinkGains, rb: float) -> BoundaryPoint:
    ab = _seg_alpha_of_rb(g, rb)
    return BoundaryPoint(rb, _seg_rm(g, ab), PowerAllocation([ab], [1.0]))


def _corner_point(g: LinkGains) -> BoundaryPoint:
    cr = corner_rates(g)
    return BoundaryPoint(cr.s_b, cr.s_m, PowerAllocation([1.0], [1.0]))


def _hd_points(g: LinkGains) -> Tuple[BoundaryPoint, BoundaryPoint]:
    r_bar_b, r_bar_m = _hd_maxima(g)
    left = BoundaryPoint(0.0, r_bar_m, PowerAllocation([0.0], [1.0]))
    right = BoundaryPoint(r_bar_b, 0.0, PowerAllocation([1.0], [0.0]))
    return left, right


def _side_into_corner(g: LinkGains, shape: ShapeClass, tol: Tolerances) -> List[_Piece]:
    """Envelope pieces on [0, s_b] given that the corner is a hull vertex."""
    corner = _corner_point(g)
    left, _ = _hd_points(g)
    if shape.kind is ShapeKind.CONCAVE_ALL:
        return [_Piece(_ARC_B, 0.0, corner.r_b)]
    if shape.kind is ShapeKind.CONVEX_ALL:
        return [_Piece(_CHORD, 0.0, corner.r_b, p1=left, p2=corner)]
    rb_touch = tangent_from_corner(g, shape, tol).rb_touch
    if rb_touch <= tol.eps_rate:
        return [_Piece(_CHORD, 0.0, corner.r_b, p1=left, p2=corner)]
    touch = _pt_arc_b(g, rb_touch)
    return [
        _Piece(_ARC_B, 0.0, rb_touch),
        _Piece(_CHORD, rb_touch, corner.r_b, p1=touch, p2=corner),
    ]


def _arc_m_interval(g: LinkGains, rm_lo: float, rm_hi: float) -> _Piece:
    """Arc piece right of the corner covering uplink rates [rm_lo, rm_hi]."""
    gt = _transposed(g)
    rb_lo = _seg_rm(gt, _seg_alpha_of_rb(gt, rm_hi))
    rb_hi = _seg_rm(gt, _seg_alpha_of_rb(gt, rm_lo))
    return _Piece(_ARC_M, min(rb_lo, rb_hi), max(rb_lo, rb_hi))


def _mirror_side(g: LinkGains, pieces_t: List[_Piece]) -> List[_Piece]:
    """Map pieces built on the transposed instance back onto the r_b axis."""

    def flip_pt(pt: BoundaryPoint) -> BoundaryPoint:
        alloc = pt.allocation
        if alloc is not None:
            alloc = PowerAllocation(alloc.alpha_m, alloc.alpha_b)
        return BoundaryPoint(pt.r_m, pt.r_b, alloc, pt.mode)

    out: List[_Piece] = []
    for p in reversed(pieces_t):
        if p.kind == _CHORD:
            p1, p2 = flip_pt(p.p2), flip_pt(p.p1)
            out.append(_Piece(_CHORD, p1.r_b, p2.r_b, p1=p1, p2=p2, tdd=p.tdd))
        else:
            out.append(_arc_m_interval(g, p.rb_lo, p.rb_hi))
    return out


def _support_through_far_corner(g: LinkGains, shape: ShapeClass, tol: Tolerances):
    """Support of the left segment through (r_bar_b, 0).

    Returns (value at s_b, envelope pieces for [0, r_bar_b]) for the bridge
    that skips the full-power corner, or None when the support degenerates
    to the corner itself (a tie, resolved in the corner's favor).
    """
    r_bar_b, _ = _hd_maxima(g)
    corner = _corner_point(g)
    left, right = _hd_points(g)
    if shape.kind is ShapeKind.CONVEX_ALL:
        tdd_at_sb = left.r_m * (1.0 - corner.r_b / r_bar_b)
        return tdd_at_sb, [_Piece(_CHORD, 0.0, r_bar_b, p1=left, p2=right, tdd=True)]
    rb_head = _concave_head_end(g, shape)
    rb_touch, _ = _tangent_to_point(g, rb_head, r_bar_b, 0.0, tol)
    if rb_touch <= tol.eps_rate:
        # tangency slides to alpha_b = 0: the bridge is the full TDD chord
        tdd_at_sb = left.r_m * (1.0 - corner.r_b / r_bar_b)
        return tdd_at_sb, [_Piece(_CHORD, 0.0, r_bar_b, p1=left, p2=right, tdd=True)]
    if rb_touch >= rb_head - 1e-15 and shape.kind is ShapeKind.CONCAVE_ALL:
        return None  # support reaches the corner itself
    touch = _pt_arc_b(g, rb_touch)
    if rb_touch >= rb_head - 1e-15:
        # support rests on the end of the concave head (contact without
        # slope match); the bridging chord runs straight to (r_bar_b, 0)
        value_at_sb = touch.r_m * (r_bar_b - corner.r_b) / (r_bar_b - touch.r_b)
    else:
        slope = _seg_slope(g, _seg_alpha_of_rb(g, rb_touch))
        value_at_sb = touch.r_m + slope * (corner.r_b - rb_touch)
    pieces = [
        _Piece(_ARC_B, 0.0, rb_touch),
        _Piece(_CHORD, rb_touch, r_bar_b, p1=touch, p2=right),
    ]
    return value_at_sb, pieces


def convexify(g: LinkGains, tol: Tolerances | None = None) -> Envelope:
    """Construct the convexified (TDFD) boundary for a K=1 instance.

    A convex region is marked fd_everywhere and queried directly from the FD
    boundary.  Otherwise the corner survives on the hull whenever it
    maximizes the sum rate (s_b + s_m at least both half-duplex maxima) and
    each side is an arc with at most one tangent chord; when the corner may
    be dominated, at least one segment is fully convex, and the winner of
    the two-tangent comparison decides whether the envelope passes through
    the corner or bridges straight across to the far axis point.
    """
    _require_k1(g)
    tol = tol or Tolerances()
    if region_is_convex(g):
        return Envelope(g, tol, (), fd_everywhere=True)

    r_bar_b, r_bar_m = _hd_maxima(g)
    cr = corner_rates(g)
    corner = _corner_point(g)
    shape_b = classify_shape_rm(g)
    shape_m = classify_shape_rb(g)
    gt = _transposed(g)
    sum_corner = cr.s_b + cr.s_m

    if sum_corner >= max(r_bar_b, r_bar_m):
        # corner maximizes the sum rate: no chord can pass above it
        pieces = _side_into_corner(g, shape_b, tol)
        pieces += _mirror_side(g, _side_into_corner(gt, shape_m, tol))
        return Envelope(g, tol, tuple(pieces), fd_everywhere=False)

    if sum_corner < r_bar_b:
        far = _support_through_far_corner(g, shape_b, tol)
        if far is not None and far[0] > cr.s_m + 1e-12:
            return Envelope(g, tol, tuple(far[1]), fd_everywhere=False)
        pieces = _side_into_corner(g, shape_b, tol)
        pieces.append(_Piece(_CHORD, cr.s_b, r_bar_b, p1=corner, p2=_hd_points(g)[1]))
        return Envelope(g, tol, tuple(pieces), fd_everywhere=False)

    # sum_corner < r_bar_m only: mirrored comparison on the other segment
    far_t = _support_through_far_corner(gt, shape_m, tol)
    if far_t is not None and far_t[0] > cr.s_b + 1e-12:
        return Envelope(g, tol, tuple(_mirror_side(g, far_t[1])), fd_everywhere=False)
    pieces = _side_into_corner(g, shape_b, tol)
    pieces += _mirror_side(g, _side_into_corner(gt, shape_m, tol))
    return Envelope(g, tol, tuple(pieces), fd_everywhere=False)


def _alpha_lattice(n: int) -> np.ndarray:
    # uniform plus geometric points: boundary structure can concentrate at
    # power fractions many orders of magnitude below the uniform step
    lin = np.linspace(0.0, 1.0, n)
    geo = np.geomspace(1e-12, 1.0, n)
    return np.unique(np.concatenate([lin, geo]))


def dense_boundary_samples(g: LinkGains, n: int) -> List[BoundaryPoint]:
    """FD boundary sampled along both full-power sweeps (about 4n points).

    Coordinate-only points (no allocations attached); intended for hull
    cross-checks.
    """
    _require_k1(g)
    gbm, gmb, gmm, gbb = _scalars(g)
    al = _alpha_lattice(n)
    rb1 = np.log1p(al * gbm / (1.0 + gmm)) / LN2
    rm1 = np.log1p(gmb / (1.0 + al * gbb)) / LN2
    rb2 = np.log1p(gbm / (1.0 + al * gmm)) / LN2
    rm2 = np.log1p(al * gmb / (1.0 + gbb)) / LN2
    pts = [BoundaryPoint(float(x), float(y)) for x, y in zip(rb1, rm1)]
    pts += [BoundaryPoint(float(x), float(y)) for x, y in zip(rb2, rm2)]
    return pts


def tdfd_boundary_rm(
    g: LinkGains,
    rb_star: float,
    tol: Tolerances | None = None,
    debug_hull_check: bool = False,
) -> Tuple[float, TdfdPlan]:
    """Convexified boundary value at rb_star with its operating plan.

    Never below the pure-FD value.  With debug_hull_check the result is
    cross-checked against an upper hull of dense boundary samples and must
    agree within 2*eps_rate (plus the sampling resolution).
    """
    tol = tol or Tolerances()
    env = convexify(g, tol)
    rm, plan = env.query(rb_star)
    if debug_hull_check:
        hull = upper_hull(dense_boundary_samples(g, 4001))
        rb_clip = min(max(rb_star, hull.rb()[0]), hull.rb()[-1])
        rm_hull, _ = mix_for_target(hull, rb_clip)
        if abs(rm_hull - rm) > 2.0 * tol.eps_rate + 1e-6 * max(1.0, abs(rm)):
            raise AssertionError(f"envelope/hull mismatch at rb*={rb_star}: {rm} vs {rm_hull}")
    return rm, plan
