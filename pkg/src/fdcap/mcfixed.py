"""Multi-channel capacity region under a fixed power-allocation shape.

Any fixed shape folds into the gains (scale_gains), after which both
stations sweep a single total-power scalar with uniform per-channel
fractions.  Boundary points then come from one bisection on the monotone
scalar-to-rate map, and the time-sharing (TDFD) region over a discrete set
of power levels is an upper hull of the induced rate pairs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from .geometry import BoundaryPoint, Mode, RegionBoundary, upper_hull
from .linkmodel import LN2, LinkGains, PowerAllocation, Tolerances, rate_dl, rate_ul
from .singlechannel import CornerRates

__all__ = [
    "DiscretePowerGrid",
    "mc_corner_rates",
    "max_rates_fixed",
    "mcfind_rm",
    "fd_region_fixed",
    "tdfd_region_fixed",
]


@dataclass(frozen=True)
class DiscretePowerGrid:
    """Allowed total-power fractions (sorted, strictly increasing)."""

    levels: Tuple[float, ...]

    def __post_init__(self):
        lv = tuple(float(x) for x in self.levels)
        if len(lv) < 1 or len(lv) >= 1000:
            raise ValueError("need 1..999 power levels")
        if lv[0] < 0.0 or lv[-1] > 1.0 or any(b <= a for a, b in zip(lv, lv[1:])):
            raise ValueError("levels must be strictly increasing within [0, 1]")
        object.__setattr__(self, "levels", lv)


def _uniform(g: LinkGains, t_b: float, t_m: float) -> PowerAllocation:
    k = g.K
    return PowerAllocation(np.full(k, t_b / k), np.full(k, t_m / k))


def mc_corner_rates(g: LinkGains) -> CornerRates:
    """Rates at full uniform power on both stations (alpha = 1/K per channel)."""
    full = _uniform(g, 1.0, 1.0)
    return CornerRates(rate_dl(g, full), rate_ul(g, full))


def max_rates_fixed(g: LinkGains) -> Tuple[float, float]:
    """Half-duplex maxima under the uniform shape (full power, other silent)."""
    k = g.K
    r_bar_b = float(np.log1p(g.gamma_bm / k).sum() / LN2)
    r_bar_m = float(np.log1p(g.gamma_mb / k).sum() / LN2)
    return r_bar_b, r_bar_m


def _rb_of_scalar_b(g: LinkGains, ab: float, tm: float) -> float:
    """r_b when the BS runs uniform per-channel fraction ab, MS at tm/K."""
    k = g.K
    return float(np.log1p(ab * g.gamma_bm / (1.0 + (tm / k) * g.gamma_mm)).sum() / LN2)


def _rb_of_scalar_m(g: LinkGains, am: float) -> float:
    """r_b when the BS is at full uniform power and the MS runs fraction am."""
    k = g.K
    return float(np.log1p((g.gamma_bm / k) / (1.0 + am * g.gamma_mm)).sum() / LN2)


def _mcfind(g: LinkGains, rb_star: float, tol: Tolerances):
    """Core solver; returns (rm_star, allocation, bisection steps)."""
    k = g.K
    r_bar_b, _ = max_rates_fixed(g)
    if not (-tol.eps_rate <= rb_star <= r_bar_b + tol.eps_rate):
        raise ValueError(f"rb_star={rb_star} outside [0, {r_bar_b}]")
    rb_star = min(max(rb_star, 0.0), r_bar_b)
    s_b = mc_corner_rates(g).s_b

    # alpha tolerance follows from the rate tolerance via the rate Lipschitz
    # bound, so the bisection meets eps_rate without over-iterating
    lip = max(1.0, float(g.gamma_bm.sum()) / LN2)
    width_stop = min(tol.eps_alpha, tol.eps_rate / lip)

    steps = 0
    if rb_star == 0.0:
        a = _uniform(g, 0.0, 1.0)
    elif rb_star == r_bar_b:
        a = _uniform(g, 1.0, 0.0)
    elif rb_star <= s_b:
        lo, hi = 0.0, 1.0 / k  # r_b increases in the BS scalar
        while hi - lo > width_stop and steps < tol.max_iters:
            steps += 1
            mid = 0.5 * (lo + hi)
            if _rb_of_scalar_b(g, mid, 1.0) < rb_star:
                lo = mid
            else:
                hi = mid
        a = PowerAllocation(np.full(k, 0.5 * (lo + hi)), np.full(k, 1.0 / k))
    else:
        lo, hi = 0.0, 1.0 / k  # r_b decreases in the MS scalar
        while hi - lo > width_stop and steps < tol.max_iters:
            steps += 1
            mid = 0.5 * (lo + hi)
            if _rb_of_scalar_m(g, mid) > rb_star:
                lo = mid
            else:
                hi = mid
        a = PowerAllocation(np.full(k, 1.0 / k), np.full(k, 0.5 * (lo + hi)))
    return rate_ul(g, a), a, steps


def mcfind_rm(g: LinkGains, rb_star: float, tol: Tolerances | None = None):
    """Boundary uplink rate at downlink target rb_star for the uniform shape.

    Left of the corner the MS stays at full power and the BS scalar is
    bisected; right of it the roles swap.  Returns (rm_star, allocation).
    """
    rm, a, _ = _mcfind(g, rb_star, tol or Tolerances())
    return rm, a


def fd_region_fixed(
    g: LinkGains,
    n_points: int,
    tol: Tolerances | None = None,
    refine: bool = False,
) -> RegionBoundary:
    """FD boundary sweep at evenly spaced downlink targets.

    With refine=True, intervals whose uplink-rate gap exceeds 10*eps_rate
    are subdivided (up to 8x the requested point count).
    """
    if n_points < 2:
        raise ValueError("n_points must be at least 2")
    tol = tol or Tolerances()
    r_bar_b, _ = max_rates_fixed(g)
    targets = list(np.linspace(0.0, r_bar_b, n_points))
    samples = {rb: mcfind_rm(g, rb, tol) for rb in targets}
    if refine:
        budget = 8 * n_points
        work = sorted(samples)
        while len(samples) < budget:
            gaps = [
                (abs(samples[a][0] - samples[b][0]), a, b)
                for a, b in zip(work, work[1:])
            ]
            gap, a, b = max(gaps)
            if gap <= 10.0 * tol.eps_rate:
                break
            mid = 0.5 * (a + b)
            samples[mid] = mcfind_rm(g, mid, tol)
            work = sorted(samples)
    pts = [
        BoundaryPoint(rb, samples[rb][0], samples[rb][1], Mode.FD)
        for rb in sorted(samples)
    ]
    return RegionBoundary(tuple(pts), source="fd")


def tdfd_region_fixed(
    g: LinkGains,
    grid: DiscretePowerGrid,
    tol: Tolerances | None = None,
) -> RegionBoundary:
    """Time-sharing region over a discrete set of total-power levels.

    Enumerates the rate pairs with one station at each allowed level and the
    other at full power (both sweeps), adds the half-duplex corners, and
    returns the upper hull, which dominates every enumerated point.
    """
    r_bar_b, r_bar_m = max_rates_fixed(g)
    k = g.K
    pts: List[BoundaryPoint] = [
        BoundaryPoint(0.0, r_bar_m, _uniform(g, 0.0, 1.0), Mode.FD),
        BoundaryPoint(r_bar_b, 0.0, _uniform(g, 1.0, 0.0), Mode.FD),
    ]
    for t in grid.levels:
        a = _uniform(g, t, 1.0)
        pts.append(BoundaryPoint(rate_dl(g, a), rate_ul(g, a), a, Mode.FD))
        a = _uniform(g, 1.0, t)
        pts.append(BoundaryPoint(rate_dl(g, a), rate_ul(g, a), a, Mode.FD))
    return upper_hull(pts, source="tdfd")
