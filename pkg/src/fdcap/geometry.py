"""Upper convex hulls of boundary samples and time-sharing interpolation.

The convexified ("TDFD") boundary of a capacity region is the upper concave
envelope of achievable rate pairs: vertices are operating points reached by
a single transmission mode, and the chords between them are realized by
time sharing.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .linkmodel import PowerAllocation

_COLLINEAR_TOL = 1e-12


class Mode(str, enum.Enum):
    """How a boundary point is realized."""

    FD = "fd"
    TIME_SHARE = "timeshare"
    TDD = "tdd"


@dataclass(frozen=True)
class BoundaryPoint:
    r_b: float
    r_m: float
    allocation: Optional[PowerAllocation] = None
    mode: Mode = Mode.FD


@dataclass(frozen=True)
class TdfdPlan:
    """Operating recipe for one target point on a convexified boundary.

    For TIME_SHARE, the rates satisfy rate = lam*endpoints[0] +
    (1-lam)*endpoints[1] element-wise; otherwise `point` is operated
    directly.
    """

    mode: Mode
    point: Optional[BoundaryPoint] = None
    endpoints: Optional[Tuple[BoundaryPoint, BoundaryPoint]] = None
    lam: Optional[float] = None


@dataclass(frozen=True)
class RegionBoundary:
    """Ordered frontier samples; r_b strictly increasing."""

    points: Tuple[BoundaryPoint, ...]
    source: str = "fd"

    def __post_init__(self):
        rb = self.rb()
        if rb.size and np.any(np.diff(rb) <= 0):
            raise ValueError("boundary points must be strictly increasing in r_b")

    def rb(self) -> np.ndarray:
        return np.array([p.r_b for p in self.points])

    def rm(self) -> np.ndarray:
        return np.array([p.r_m for p in self.points])

    def __len__(self) -> int:
        return len(self.points)


def _cross(o: BoundaryPoint, a: BoundaryPoint, b: BoundaryPoint) -> float:
    return (a.r_b - o.r_b) * (b.r_m - o.r_m) - (a.r_m - o.r_m) * (b.r_b - o.r_b)


def upper_hull(points: Sequence[BoundaryPoint], source: str = "tdfd") -> RegionBoundary:
    """Minimal vertex set of the upper convex hull of `points`.

    Points are sorted by r_b with ties resolved in favor of the largest r_m;
    collinear interior vertices are dropped so the result is deterministic.
    Every input point lies on or below the returned polyline.
    """
    if len(points) == 0:
        raise ValueError("upper_hull needs at least one point")
    pts = sorted(points, key=lambda p: (p.r_b, -p.r_m))
    dedup = []
    for p in pts:
        if dedup and p.r_b == dedup[-1].r_b:
            continue  # keep only the highest r_m at equal r_b
        dedup.append(p)
    hull: list[BoundaryPoint] = []
    for p in dedup:
        while len(hull) >= 2 and _cross(hull[-2], hull[-1], p) >= -_COLLINEAR_TOL:
            hull.pop()
        hull.append(p)
    return RegionBoundary(tuple(hull), source=source)


def mix_for_target(hull: RegionBoundary, rb_star: float) -> Tuple[float, TdfdPlan]:
    """Boundary value of `hull` at downlink rate rb_star.

    Returns the interpolated uplink rate and the plan achieving it: the
    bracketing vertex itself when rb_star hits one, otherwise a time share
    between the two bracketing vertices with mixing weight lam on the left
    vertex.
    """
    rb = hull.rb()
    if not (rb[0] - 1e-12 <= rb_star <= rb[-1] + 1e-12):
        raise ValueError(f"rb_star={rb_star} outside hull span [{rb[0]}, {rb[-1]}]")
    rb_star = float(np.clip(rb_star, rb[0], rb[-1]))
    j = int(np.searchsorted(rb, rb_star))
    if j < len(rb) and rb[j] == rb_star:
        p = hull.points[j]
        return p.r_m, TdfdPlan(mode=p.mode, point=p)
    left, right = hull.points[j - 1], hull.points[j]
    lam = (right.r_b - rb_star) / (right.r_b - left.r_b)
    rm = lam * left.r_m + (1.0 - lam) * right.r_m
    return float(rm), TdfdPlan(mode=Mode.TIME_SHARE, endpoints=(left, right), lam=float(lam))
