"""Multi-channel region under general per-channel power allocation.

Maximizing one rate with the other pinned is non-convex in the 2K power
fractions.  Per-channel caps derived from SNR-vs-XINR inequalities make the
sum rate concave in each station's block, after which alternating block
maximization applies: the uplink block is a capped water-fill (with a
multiplier on the downlink-rate constraint when it binds), and the downlink
block equalizes marginal sum-rate derivatives against a pivot channel via
nested bisection.  A fast heuristic covers the same boundary by rescaling
and trimming half-duplex-optimal shapes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Literal, Optional, Sequence, Tuple

import numpy as np

from .geometry import BoundaryPoint, Mode, RegionBoundary, upper_hull
from .linkmodel import (
    LN2,
    LinkGains,
    PowerAllocation,
    RatePair,
    Tolerances,
    max_rates,
    rate_dl,
    rate_ul,
    scale_gains,
    water_fill,
)
from .mcfixed import max_rates_fixed, mcfind_rm
from .singlechannel import CornerRates

__all__ = [
    "Side",
    "InfeasibleRateTarget",
    "RestrictionBounds",
    "AltMaxResult",
    "restriction_bounds",
    "solve_sub_b",
    "solve_sub_m",
    "altmax",
    "sum_rate_max",
    "pa_heuristic",
    "tdfd_region_general",
]

Side = Literal["below_sb", "above_sb"]


class InfeasibleRateTarget(RuntimeError):
    """The downlink-rate constraint cannot be met in the current block."""


@dataclass(frozen=True)
class RestrictionBounds:
    """Per-channel caps keeping the sum rate concave in each block.

    forced_hd marks channels where a cap would be nonpositive: the channel
    is then dedicated to one station ('bs_only' or 'ms_only'); 'none'
    otherwise.
    """

    A_b: np.ndarray
    A_m: np.ndarray
    forced_hd: Tuple[str, ...]

    def __post_init__(self):
        ab = np.asarray(self.A_b, dtype=float)
        am = np.asarray(self.A_m, dtype=float)
        object.__setattr__(self, "A_b", ab)
        object.__setattr__(self, "A_m", am)
        if ab.size != am.size or ab.size != len(self.forced_hd):
            raise ValueError("bound arrays and markers must share length")

    @property
    def restrictive(self) -> bool:
        return bool(np.any(self.A_b < 1.0) or np.any(self.A_m < 1.0))


def _raw_cap(snr: np.ndarray, own_xinr: np.ndarray, other_xinr: np.ndarray) -> np.ndarray:
    """Cap on the OTHER station's fraction so this station's rate term stays concave."""
    out = np.empty(snr.size)
    for k in range(snr.size):
        if own_xinr[k] == 0.0:
            out[k] = np.inf
        elif other_xinr[k] == 0.0:
            out[k] = np.inf if snr[k] >= own_xinr[k] else -np.inf
        else:
            out[k] = (snr[k] / own_xinr[k] - 1.0) / other_xinr[k]
    return out


def restriction_bounds(g: LinkGains, side: Side) -> RestrictionBounds:
    """Concavity caps A_b, A_m with order-dependent half-duplex fallback.

    A channel whose raw cap is nonpositive cannot stay concave with both
    stations active and is forced to half-duplex; when both raw caps are
    nonpositive, the check order (which flips with `side`) decides which
    station keeps the channel.
    """
    if side not in ("below_sb", "above_sb"):
        raise ValueError(f"unknown side {side!r}")
    ab = _raw_cap(g.gamma_mb, g.gamma_mm, g.gamma_bb)  # keeps r_m concave in alpha_b
    am = _raw_cap(g.gamma_bm, g.gamma_bb, g.gamma_mm)  # keeps r_b concave in alpha_m
    ab = np.minimum(ab, 1.0)
    am = np.minimum(am, 1.0)
    markers: List[str] = []
    for k in range(g.K):
        marker = "none"
        if side == "below_sb":
            if ab[k] <= 0.0:
                ab[k], am[k], marker = 0.0, 1.0, "ms_only"
            if am[k] <= 0.0:
                am[k], ab[k], marker = 0.0, 1.0, "bs_only"
        else:
            if am[k] <= 0.0:
                am[k], ab[k], marker = 0.0, 1.0, "bs_only"
            if ab[k] <= 0.0:
                ab[k], am[k], marker = 0.0, 1.0, "ms_only"
        markers.append(marker)
    return RestrictionBounds(ab, am, tuple(markers))


# --- per-block derivative machinery ----------------------------------------


class _Block:
    """Sum-rate geometry of one station's power block with the other fixed.

    The per-channel sum-rate splits into the block's own rate term (an
    effective SNR per unit fraction) and the peer's rate term, degraded by
    the block's leakage.  Under the restriction caps the sum-rate derivative
    is nonnegative and decreasing in each own coordinate.
    """

    def __init__(self, own_snr: np.ndarray, leak: np.ndarray, cross: np.ndarray, caps: np.ndarray):
        self.own_snr = own_snr  # effective SNR per unit own fraction
        self.leak = leak        # own XINR scaling seen by the peer's rate
        self.cross = cross      # peer's received power term (fixed)
        self.caps = caps

    def obj_deriv(self, a: np.ndarray) -> np.ndarray:
        d_own = self.own_snr / (1.0 + a * self.own_snr)
        d_peer = self.leak / (1.0 + a * self.leak + self.cross) - self.leak / (1.0 + a * self.leak)
        return (d_own + d_peer) / LN2

    def obj_deriv2(self, a: np.ndarray) -> np.ndarray:
        s, l, c = self.own_snr, self.leak, self.cross
        return (-(s / (1.0 + a * s)) ** 2 - (l / (1.0 + a * l + c)) ** 2 + (l / (1.0 + a * l)) ** 2) / LN2

    def rb_deriv(self, a: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def rb_deriv2(self, a: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def rb_value(self, a: np.ndarray) -> float:
        raise NotImplementedError


class _BlockB(_Block):
    """Downlink block: variables alpha_b, uplink fractions fixed.

    The block's own rate term is r_b itself, so the multiplier form of the
    r_b >= target constraint just reweights that term: w = 1 + mu.
    """

    def __init__(self, g: LinkGains, alpha_m: np.ndarray, caps: np.ndarray):
        own_snr = g.gamma_bm / (1.0 + alpha_m * g.gamma_mm)
        super().__init__(own_snr, g.gamma_bb, alpha_m * g.gamma_mb, caps)

    def rb_deriv(self, a: np.ndarray) -> np.ndarray:
        return (self.own_snr / (1.0 + a * self.own_snr)) / LN2

    def rb_deriv2(self, a: np.ndarray) -> np.ndarray:
        return -((self.own_snr / (1.0 + a * self.own_snr)) ** 2) / LN2

    def rb_value(self, a: np.ndarray) -> float:
        return float(np.log1p(a * self.own_snr).sum() / LN2)

    def constrained_deriv(self, mu: float):
        s, l, c = self.own_snr, self.leak, self.cross
        w = 1.0 + mu

        def d(a):
            v = 1.0 + a * l
            return (w * s / (1.0 + a * s) + l / (v + c) - l / v) / LN2

        def d2(a):
            v = 1.0 + a * l
            return (-w * (s / (1.0 + a * s)) ** 2 - (l / (v + c)) ** 2 + (l / v) ** 2) / LN2

        return d, d2


class _BlockM(_Block):
    """Uplink block: variables alpha_m, downlink fractions fixed.

    The peer's rate term is r_b, so the multiplier form of r_b <= target
    reweights it: w = 1 - mu (possibly negative).
    """

    def __init__(self, g: LinkGains, alpha_b: np.ndarray, caps: np.ndarray):
        own_snr = g.gamma_mb / (1.0 + alpha_b * g.gamma_bb)
        super().__init__(own_snr, g.gamma_mm, alpha_b * g.gamma_bm, caps)

    def rb_deriv(self, a: np.ndarray) -> np.ndarray:
        gmm = self.leak
        v = 1.0 + a * gmm
        return (gmm / (v + self.cross) - gmm / v) / LN2

    def rb_deriv2(self, a: np.ndarray) -> np.ndarray:
        gmm = self.leak
        v = 1.0 + a * gmm
        return (-((gmm / (v + self.cross)) ** 2) + (gmm / v) ** 2) / LN2

    def rb_value(self, a: np.ndarray) -> float:
        gmm = self.leak
        return float((np.log1p(a * gmm + self.cross) - np.log1p(a * gmm)).sum() / LN2)

    def constrained_deriv(self, mu: float):
        s, l, c = self.own_snr, self.leak, self.cross
        w = 1.0 - mu

        def d(a):
            v = 1.0 + a * l
            return (s / (1.0 + a * s) + w * (l / (v + c) - l / v)) / LN2

        def d2(a):
            v = 1.0 + a * l
            return (-((s / (1.0 + a * s)) ** 2) + w * (-((l / (v + c)) ** 2) + (l / v) ** 2)) / LN2

        return d, d2


_EQ_BISECT = 9
_EQ_NEWTON = 4
_OUTER_ITERS = 60
_WF_ITERS = 30


def _equalize(deriv_fn, deriv2_fn, caps: np.ndarray, target) -> np.ndarray:
    """Per-channel fractions where deriv_fn equals `target`, clipped to [0, caps].

    deriv_fn must be decreasing in each own coordinate; saturated channels
    converge to an endpoint through the bracketing itself.  A short
    bisection is polished by safeguarded Newton steps.
    """
    lo = np.zeros_like(caps)
    hi = caps.copy()
    for _ in range(_EQ_BISECT):
        mid = 0.5 * (lo + hi)
        above = deriv_fn(mid) > target
        lo = np.where(above, mid, lo)
        hi = np.where(above, hi, mid)
    x = 0.5 * (lo + hi)
    for _ in range(_EQ_NEWTON):
        resid = deriv_fn(x) - target
        above = resid > 0
        lo = np.where(above, x, lo)
        hi = np.where(above, hi, x)
        slope = deriv2_fn(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(slope < 0, resid / slope, 0.0)
        x = np.clip(x - step, lo, hi)
    return x


def _waterfill_block(block: _Block, deriv_fn, deriv2_fn, budget: float = 1.0) -> np.ndarray:
    """Maximize a concave separable objective under the caps and a sum budget."""
    caps = block.caps
    if caps.sum() <= budget + 1e-15:
        return caps.copy()
    d0 = deriv_fn(np.zeros_like(caps))
    lo, hi = 0.0, float(d0.max()) + 1.0
    s_lo, s_hi = caps.sum(), 0.0
    for _ in range(_WF_ITERS):
        nu = 0.5 * (lo + hi)
        s = _equalize(deriv_fn, deriv2_fn, caps, nu).sum()
        if s > budget:
            lo, s_lo = nu, s
        else:
            hi, s_hi = nu, s
    # secant polish on the water level: leftover budget costs ~nu per unit
    a = None
    for _ in range(8):
        if s_lo - s_hi <= 0:
            break
        nu = hi - (budget - s_hi) * (hi - lo) / (s_lo - s_hi)
        nu = min(max(nu, lo + 1e-3 * (hi - lo)), hi - 1e-3 * (hi - lo))
        cand = _equalize(deriv_fn, deriv2_fn, caps, nu)
        s = cand.sum()
        if s > budget:
            lo, s_lo = nu, s
        else:
            hi, s_hi, a = nu, s, cand
            if budget - s <= 1e-12 * budget:
                break
    if a is None:
        a = _equalize(deriv_fn, deriv2_fn, caps, hi)
    if a.sum() > budget:  # tiny residual overshoot from the level resolution
        a *= budget / a.sum()
    return a


def _phi_argmax(X: np.ndarray, L: np.ndarray, C: np.ndarray, c1: float, c2: float, caps: np.ndarray) -> np.ndarray:
    """Per-channel argmax of c1*log(1+aX) + c2*[log(1+aL+C) - log(1+aL)] on [0, caps].

    The stationarity condition reduces to a quadratic in a, so each channel
    checks at most four candidates (endpoints and interior roots); fully
    vectorized.
    """
    a2 = c1 * X * L * L
    a1 = X * L * (c1 * (2.0 + C) - c2 * C)
    a0 = c1 * X * (1.0 + C) - c2 * L * C
    disc = a1 * a1 - 4.0 * a2 * a0
    sq = np.sqrt(np.maximum(disc, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        r1 = np.where((disc > 0) & (a2 > 0), (-a1 - sq) / (2.0 * a2), -1.0)
        r2 = np.where((disc > 0) & (a2 > 0), (-a1 + sq) / (2.0 * a2), -1.0)
        # linear fallback when the quadratic degenerates (L == 0 or c1 == 0)
        lin = np.where((a2 == 0) & (a1 != 0), -a0 / np.where(a1 != 0, a1, 1.0), -1.0)

    def phi(a):
        return c1 * np.log1p(a * X) + c2 * (np.log1p(a * L + C) - np.log1p(a * L))

    best_a = np.zeros_like(caps)
    best_v = phi(best_a)
    for cand in (caps, np.clip(r1, 0.0, caps), np.clip(r2, 0.0, caps), np.clip(lin, 0.0, caps)):
        v = phi(cand)
        take = v > best_v
        best_a = np.where(take, cand, best_a)
        best_v = np.where(take, v, best_v)
    return best_a


def _rate_binding_solve(block: _Block, rb_target: float, direction: str, tol: Tolerances) -> Optional[np.ndarray]:
    """Block maximum for the regime where the rate constraint binds alone.

    Parametrizes the stationarity family by the rate multiplier and bisects
    it against the downlink rate; candidates violating the power budget are
    discarded.  Returns the best feasible candidate found or None.
    """
    if direction == "le":
        # weight w = 1 - mu in [0, 1] on the block's own downlink-rate term
        def candidate(w: float) -> np.ndarray:
            return _phi_argmax(block.own_snr, block.leak, block.cross, w, 1.0, block.caps)

        w_lo, w_hi = 0.0, 1.0
    else:
        # uplink block right of the corner: w = 1 + mu >= 1 on the peer term
        def candidate(w: float) -> np.ndarray:
            return _phi_argmax(block.own_snr, block.leak, block.cross, 1.0, w, block.caps)

        w_lo, w_hi = 1.0, 1.0  # upper end found by expansion below

    def feasible(a: np.ndarray) -> bool:
        if a.sum() > 1.0 + tol.tol_simplex:
            return False
        rb = block.rb_value(a)
        return rb <= rb_target + tol.eps_rate if direction == "le" else rb >= rb_target - tol.eps_rate

    best = None

    def consider(a: np.ndarray):
        nonlocal best
        if feasible(a):
            v = float(np.log1p(a * block.own_snr).sum() + np.log1p(a * block.leak + block.cross).sum() - np.log1p(a * block.leak).sum())
            if best is None or v > best[0]:
                best = (v, a)

    if direction == "ge":
        w = 1.0
        for _ in range(60):
            a = candidate(w)
            consider(a)
            if block.rb_value(a) >= rb_target - tol.eps_rate:
                break
            w_lo, w = w, w * 4.0
            if w > 1e15:
                return None if best is None else best[1]
        w_hi = w
    for _ in range(48):
        w = 0.5 * (w_lo + w_hi)
        a = candidate(w)
        consider(a)
        rb = block.rb_value(a)
        if direction == "le":
            # larger w puts more power in; shrink w when the rate overshoots
            if rb > rb_target:
                w_hi = w
            else:
                w_lo = w
        else:
            if rb < rb_target:
                w_lo = w
            else:
                w_hi = w
    if best is None:
        return None
    a = best[1]
    # scale the block down to exact feasibility if the bisection left a
    # residual on the wrong side; shrinking raises r_b for the uplink block
    # and lowers it for the downlink block
    viol = (lambda x: block.rb_value(x) > rb_target) if direction == "le" else (
        lambda x: block.rb_value(x) < rb_target
    )
    if viol(a):
        t_lo, t_hi = 0.0, 1.0
        for _ in range(60):
            t = 0.5 * (t_lo + t_hi)
            if viol(t * a):
                t_hi = t
            else:
                t_lo = t
        if not viol(t_lo * a):
            a = t_lo * a
        elif not viol(t_hi * a):
            a = t_hi * a
    return a


def _block_objective(block: _Block, a: np.ndarray) -> float:
    return float(
        (np.log1p(a * block.own_snr) + np.log1p(a * block.leak + block.cross) - np.log1p(a * block.leak)).sum()
    )


def _alg3_solve(block: _Block, feasible) -> np.ndarray:
    """Derivative-equalized block with the largest feasible pivot fraction.

    The pivot is the channel with the largest zero-power marginal; every
    profile equalizes the other channels' marginals to the pivot's, so the
    whole profile grows monotonically with the pivot fraction and the
    feasible set is an interval [0, x_max] found by bisection.
    """
    caps = block.caps
    zeros = np.zeros_like(caps)
    d0 = block.obj_deriv(zeros)
    d0 = np.where(caps > 0, d0, -np.inf)
    if not np.isfinite(d0).any():
        return zeros
    k_star = int(d0.argmax())

    def profile(x: float) -> np.ndarray:
        target = float(block.obj_deriv(_with(zeros, k_star, x))[k_star])
        a = _equalize(block.obj_deriv, block.obj_deriv2, caps, target)
        a[k_star] = x
        return a

    hi_cap = float(caps[k_star])
    if feasible(profile(hi_cap)):
        return profile(hi_cap)
    lo, hi = 0.0, hi_cap
    for _ in range(_OUTER_ITERS):
        mid = 0.5 * (lo + hi)
        if feasible(profile(mid)):
            lo = mid
        else:
            hi = mid
    return profile(lo)


def _with(a: np.ndarray, idx: int, val: float) -> np.ndarray:
    out = a.copy()
    out[idx] = val
    return out


def _constrained_waterfill(
    block: _Block,
    rb_target: float,
    direction: str,
    tol: Tolerances,
    mu_hint: float = 0.0,
) -> Tuple[np.ndarray, float]:
    """Concave block maximization with a binding-capable r_b constraint.

    direction 'le' keeps r_b <= rb_target (uplink block left of the corner),
    'ge' keeps r_b >= rb_target (downlink block right of it).  A scalar
    multiplier folds the constraint into the water-filled objective and is
    bisected until the constraint holds (warm-started from mu_hint); raises
    InfeasibleRateTarget when no multiplier can satisfy it.  Returns the
    block and the multiplier used.
    """

    # rb_deriv <= 0 for the uplink block ('le') and >= 0 for the downlink
    # block ('ge'); either way the multiplier keeps the modified derivative
    # nonnegative and decreasing within the caps.
    def solve(mu: float) -> np.ndarray:
        d, d2 = block.constrained_deriv(mu)
        return _waterfill_block(block, d, d2)

    sgn = 1.0 if direction == "le" else -1.0

    def violation(a: np.ndarray) -> float:
        # positive when the constraint is violated; decreasing in mu
        return sgn * (block.rb_value(a) - rb_target)

    a0 = solve(0.0)
    v0 = violation(a0)
    if v0 <= tol.eps_rate:
        return a0, 0.0
    lo, v_lo = 0.0, v0
    mu = max(mu_hint, 1.0)
    hi = None
    for _ in range(80):
        cand = solve(mu)
        v = violation(cand)
        if v <= 0.0:
            hi, v_hi, a = mu, v, cand
            break
        lo, v_lo = mu, v
        mu *= 8.0
        if mu > 1e18:
            raise InfeasibleRateTarget(
                f"r_b target {rb_target} unreachable in this block (direction {direction})"
            )
    # guarded secant on the (feasible, infeasible) bracket; an early stop on
    # the feasible side costs about mu*|violation| in objective
    for _ in range(_OUTER_ITERS):
        if abs(v_hi) * max(1.0, hi) <= 1e-10 or hi - lo <= 1e-13 * hi:
            break
        if v_lo > v_hi:
            mu = hi - v_hi * (hi - lo) / (v_lo - v_hi)
            width = hi - lo
            mu = min(max(mu, lo + 0.05 * width), hi - 0.05 * width)
        else:
            mu = 0.5 * (lo + hi)
        cand = solve(mu)
        v = violation(cand)
        if v <= 0.0:
            hi, v_hi, a = mu, v, cand
        else:
            lo, v_lo = mu, v
    return a, hi


def solve_sub_b(
    g: LinkGains,
    alpha_m_fixed: np.ndarray,
    rb_star: float,
    bounds: RestrictionBounds,
    tol: Tolerances | None = None,
    side: Side = "below_sb",
) -> np.ndarray:
    """Optimal downlink block with the uplink block held fixed.

    Left of the corner (side 'below_sb') the feasible set is non-convex and
    the block is solved by pivot/equalization bisection: fractions grow
    until either the power budget or r_b <= rb_star becomes tight.  Right
    of the corner the problem is concave with constraint r_b >= rb_star.
    """
    tol = tol or Tolerances()
    block = _BlockB(g, np.asarray(alpha_m_fixed, dtype=float), bounds.A_b.copy())
    if side == "below_sb":
        return _solve_block_nonconvex(block, rb_star, "le", tol)
    return _constrained_waterfill(block, rb_star, "ge", tol)[0]


def _solve_block_nonconvex(block: _Block, rb_star: float, direction: str, tol: Tolerances) -> np.ndarray:
    """Non-convex block step: best of the two binding-constraint regimes.

    The pivot/equalization profile is optimal when the power budget binds;
    when the rate constraint binds with budget to spare, the optimum instead
    balances marginal-rate ratios, found from the closed-form stationarity
    family.  Both are computed and the better feasible block wins.
    """
    if direction == "le":
        def feasible(a: np.ndarray) -> bool:
            return a.sum() <= 1.0 + tol.tol_simplex and block.rb_value(a) <= rb_star
    else:
        def feasible(a: np.ndarray) -> bool:
            return a.sum() <= 1.0 + tol.tol_simplex and block.rb_value(a) >= rb_star

    a1 = _alg3_solve(block, feasible)
    a2 = _rate_binding_solve(block, rb_star, direction, tol)
    if a2 is not None and feasible(a2) and _block_objective(block, a2) > _block_objective(block, a1):
        return a2
    return a1


def solve_sub_m(
    g: LinkGains,
    alpha_b_fixed: np.ndarray,
    rb_star: float,
    bounds: RestrictionBounds,
    tol: Tolerances | None = None,
    side: Side = "below_sb",
) -> np.ndarray:
    """Optimal uplink block with the downlink block held fixed.

    Left of the corner this is a concave maximization over a convex set
    (r_b is convex decreasing in the uplink fractions, so r_b <= rb_star
    carves a convex region); solved by capped water-filling with a bisected
    constraint multiplier.  Right of the corner the same pivot/equalization
    scheme as the downlink block applies, with r_b >= rb_star.

    Raises InfeasibleRateTarget when the fixed downlink block makes the
    constraint unsatisfiable.
    """
    tol = tol or Tolerances()
    block = _BlockM(g, np.asarray(alpha_b_fixed, dtype=float), bounds.A_m.copy())
    if side == "below_sb":
        return _constrained_waterfill(block, rb_star, "le", tol)[0]

    if block.rb_value(np.zeros(g.K)) < rb_star:
        raise InfeasibleRateTarget(f"r_b={rb_star} unreachable even with a silent uplink")
    return _solve_block_nonconvex(block, rb_star, "ge", tol)


@dataclass(frozen=True)
class AltMaxResult:
    allocation: PowerAllocation
    rates: RatePair
    iterations: int
    objective_trace: Tuple[float, ...]
    converged: bool


def _sum_rate(g: LinkGains, ab: np.ndarray, am: np.ndarray) -> float:
    a = PowerAllocation(ab, am)
    return rate_dl(g, a) + rate_ul(g, a)


def _alternate(
    g: LinkGains,
    rb_star: Optional[float],
    side: Side,
    bounds: RestrictionBounds,
    ab: np.ndarray,
    am: np.ndarray,
    tol: Tolerances,
) -> Tuple[np.ndarray, np.ndarray, int, List[float], bool]:
    trace: List[float] = []
    converged = False
    n = 0
    unconstrained = rb_star is None
    mu_hint = 0.0
    for n in range(1, tol.max_iters + 1):
        ab_prev, am_prev = ab, am
        if unconstrained:
            blk_b = _BlockB(g, am, bounds.A_b.copy())
            ab = _waterfill_block(blk_b, blk_b.obj_deriv, blk_b.obj_deriv2)
            blk_m = _BlockM(g, ab, bounds.A_m.copy())
            am = _waterfill_block(blk_m, blk_m.obj_deriv, blk_m.obj_deriv2)
        elif side == "below_sb":
            blk_b = _BlockB(g, am, bounds.A_b.copy())
            ab = _solve_block_nonconvex(blk_b, rb_star, "le", tol)
            blk_m = _BlockM(g, ab, bounds.A_m.copy())
            am, mu_hint = _constrained_waterfill(blk_m, rb_star, "le", tol, mu_hint)
        else:
            blk_b = _BlockB(g, am, bounds.A_b.copy())
            ab, mu_hint = _constrained_waterfill(blk_b, rb_star, "ge", tol, mu_hint)
            blk_m = _BlockM(g, ab, bounds.A_m.copy())
            if blk_m.rb_value(np.zeros(g.K)) < rb_star:
                raise InfeasibleRateTarget(f"r_b={rb_star} unreachable in the uplink step")
            am = _solve_block_nonconvex(blk_m, rb_star, "ge", tol)
        trace.append(_sum_rate(g, ab, am))
        step = float(np.max(np.abs(ab - ab_prev) + np.abs(am - am_prev)))
        if step < tol.eps_alpha:
            converged = True
            break
        if n >= 3 and trace[-1] - trace[-3] < 1e-8 * max(1.0, abs(trace[-1])):
            break  # objective stalled while the allocation crawls
    return ab, am, n, trace, converged


def sum_rate_max(
    g: LinkGains,
    tol: Tolerances | None = None,
    restarts: int = 1,
    seed: int = 42,
) -> Tuple[CornerRates, PowerAllocation]:
    """Sum-rate-maximizing rate pair and allocation (no rate constraint).

    Both blocks are then plain capped water-fills, alternated from the
    all-zeros start (and optional random restarts) until the allocation
    settles.
    """
    tol = tol or Tolerances(max_iters=300)
    bounds = restriction_bounds(g, "below_sb")
    rng = np.random.default_rng(seed)
    best = None
    for r in range(max(1, restarts)):
        if r == 0:
            ab0 = np.zeros(g.K)
            am0 = np.zeros(g.K)
        else:
            ab0 = np.minimum(_random_subsimplex(rng, g.K), bounds.A_b)
            am0 = np.minimum(_random_subsimplex(rng, g.K), bounds.A_m)
        ab, am, _, trace, _ = _alternate(g, None, "below_sb", bounds, ab0, am0, tol)
        if best is None or trace[-1] > best[0]:
            best = (trace[-1], ab, am)
    _, ab, am = best
    alloc = PowerAllocation(ab, am)
    return CornerRates(rate_dl(g, alloc), rate_ul(g, alloc)), alloc


def _random_subsimplex(rng: np.random.Generator, k: int) -> np.ndarray:
    w = rng.dirichlet(np.ones(k))
    return w * rng.uniform(0.0, 1.0)


def _uniform_shape_start(g: LinkGains, rb_star: float, bounds: RestrictionBounds) -> Tuple[np.ndarray, np.ndarray]:
    """Warm start from the uniform-shape boundary solution, clipped to the caps."""
    r_bar_b_u, _ = max_rates_fixed(g)
    if rb_star <= r_bar_b_u:
        _, a = mcfind_rm(g, rb_star)
        ab, am = a.alpha_b.copy(), a.alpha_m.copy()
    else:
        ab, am = water_fill(g.gamma_bm), np.zeros(g.K)
    return np.minimum(ab, bounds.A_b), np.minimum(am, bounds.A_m)


def _feasible_start(
    g: LinkGains,
    rb_star: float,
    side: Side,
    bounds: RestrictionBounds,
    rng: Optional[np.random.Generator],
) -> Tuple[np.ndarray, np.ndarray]:
    k = g.K
    if side == "below_sb":
        if rng is None:
            return np.zeros(k), np.zeros(k)
        ab = np.minimum(_random_subsimplex(rng, k), bounds.A_b)
        am = np.minimum(rng.dirichlet(np.ones(k)), bounds.A_m)  # full uplink budget
        # shrink the downlink block until the rate cap holds
        for _ in range(60):
            if rate_dl(g, PowerAllocation(ab, am)) <= rb_star:
                break
            ab = 0.5 * ab
        else:
            ab = np.zeros(k)
        return ab, am
    ab, am = _uniform_shape_start(g, rb_star, bounds)
    if rng is not None:
        am = np.minimum(am * rng.uniform(0.0, 1.0, size=k), bounds.A_m)
    # trim the uplink block until rb_star is reachable again
    for _ in range(60):
        if rate_dl(g, PowerAllocation(ab, am)) >= rb_star:
            break
        am = 0.5 * am
    else:
        am = np.zeros(k)
    if rate_dl(g, PowerAllocation(ab, am)) < rb_star - 1e-9:
        raise InfeasibleRateTarget(f"no feasible start for r_b={rb_star} under the caps")
    return ab, am


def altmax(
    g: LinkGains,
    rb_star: float,
    tol: Tolerances | None = None,
    restarts: int = 8,
    seed: int = 42,
) -> AltMaxResult:
    """Alternating block maximization of the sum rate under a downlink pin.

    The constraint direction (r_b <= or >= rb_star) follows from rb_star's
    position relative to the sum-rate corner.  The first start is the
    all-zeros allocation; remaining starts are random feasible points.  The
    best trajectory by final objective is returned; its objective trace is
    non-decreasing because each block is solved to optimality.
    """
    tol = tol or Tolerances(max_iters=300)
    r_bar_b, _, _, _ = max_rates(g, tol)
    if not (-tol.eps_rate <= rb_star <= r_bar_b + tol.eps_rate):
        raise ValueError(f"rb_star={rb_star} outside [0, {r_bar_b}]")
    rb_star = min(max(rb_star, 0.0), r_bar_b)
    corner, _ = sum_rate_max(g, tol)
    side: Side = "below_sb" if rb_star <= corner.s_b else "above_sb"
    bounds = restriction_bounds(g, side)
    rng = np.random.default_rng(seed)
    best: Optional[Tuple[float, AltMaxResult]] = None
    for r in range(max(1, restarts)):
        try:
            if r == 0 and side == "below_sb":
                ab0, am0 = np.zeros(g.K), np.zeros(g.K)
            elif r <= 1:
                # the uniform-shape boundary point is a strong warm start
                ab0, am0 = _uniform_shape_start(g, rb_star, bounds)
                if side == "above_sb" and rate_dl(g, PowerAllocation(ab0, am0)) < rb_star - 1e-9:
                    raise InfeasibleRateTarget("uniform warm start infeasible under the caps")
            elif r == 2:
                # seed from the shape-trimming heuristic (covers channel shutoffs)
                _, alloc_h, _ = pa_heuristic(g, rb_star, tol)
                ab0 = np.minimum(alloc_h.alpha_b, bounds.A_b)
                am0 = np.minimum(alloc_h.alpha_m, bounds.A_m)
                if side == "below_sb" and rate_dl(g, PowerAllocation(ab0, am0)) > rb_star:
                    ab0 = ab0 * 0.5
                if side == "above_sb" and rate_dl(g, PowerAllocation(ab0, am0)) < rb_star - 1e-9:
                    raise InfeasibleRateTarget("heuristic warm start infeasible under the caps")
            else:
                ab0, am0 = _feasible_start(g, rb_star, side, bounds, rng)
            ab, am, iters, trace, converged = _alternate(g, rb_star, side, bounds, ab0, am0, tol)
        except InfeasibleRateTarget:
            continue
        alloc = PowerAllocation(ab, am)
        res = AltMaxResult(
            allocation=alloc,
            rates=RatePair(rate_dl(g, alloc), rate_ul(g, alloc)),
            iterations=iters,
            objective_trace=tuple(trace),
            converged=converged,
        )
        if best is None or trace[-1] > best[0]:
            best = (trace[-1], res)
    if best is None:
        # the caps exclude every feasible start: report the uniform-shape
        # fallback without claiming convergence
        r_bar_b_u, _ = max_rates_fixed(g)
        rm, a = mcfind_rm(g, min(rb_star, r_bar_b_u), tol)
        return AltMaxResult(a, RatePair(rate_dl(g, a), rate_ul(g, a)), 0, (), False)
    return best[1]


def _shape(vec: np.ndarray) -> np.ndarray:
    s = vec.sum()
    if s <= 0.0:
        return np.full(vec.size, 1.0 / vec.size)
    return vec / s


def pa_heuristic(
    g: LinkGains,
    rb_star: float,
    tol: Tolerances | None = None,
) -> Tuple[float, PowerAllocation, frozenset]:
    """Boundary point via shape rescaling and edge-channel trimming.

    Two seed shapes are tried: the half-duplex optimal allocation and the
    sum-rate-maximizing allocation.  Each is folded into the gains and the
    uniform-shape boundary solver finds the best total power; channels are
    then zeroed one at a time from the band edges (low side for the first
    seed, high side for the second) while that improves the result.

    Deterministic for fixed inputs.  Returns (rm_star, allocation,
    channels_off) with the achieved allocation on the original gains and
    the zeroed channel indices of the winning shape.
    """
    tol = tol or Tolerances(max_iters=300)
    k = g.K
    r_bar_b, _, _, _ = max_rates(g, tol)
    if not (-tol.eps_rate <= rb_star <= r_bar_b + tol.eps_rate):
        raise ValueError(f"rb_star={rb_star} outside [0, {r_bar_b}]")
    rb_star = min(max(rb_star, 0.0), r_bar_b)

    ab_hd = water_fill(g.gamma_bm, tol)
    am_hd = water_fill(g.gamma_mb, tol)
    corner, alloc_h = sum_rate_max(g, tol, restarts=1)
    ab_sum, am_sum = _shape(alloc_h.alpha_b), _shape(alloc_h.alpha_m)

    below = rb_star <= corner.s_b

    def evaluate(shape_b: np.ndarray, shape_m: np.ndarray):
        """Fold the shapes and run the uniform-shape solver; None if out of reach."""
        folded = scale_gains(g, PowerAllocation(shape_b, shape_m))
        reach, _ = max_rates_fixed(folded)
        if rb_star > reach + tol.eps_rate:
            return None
        rm, a_uni = mcfind_rm(folded, min(rb_star, reach), tol)
        ab = np.minimum(1.0, a_uni.alpha_b * k) * shape_b
        am = np.minimum(1.0, a_uni.alpha_m * k) * shape_m
        return rm, PowerAllocation(ab, am)

    seeds = [(_shape(ab_hd), _shape(am_hd)), (ab_sum, am_sum)]
    trim_axis = "b" if below else "m"
    zero_order = [list(range(k)), list(range(k - 1, -1, -1))]  # low side, high side

    best_rm = -math.inf
    best_alloc = None
    best_off: frozenset = frozenset()
    offs: List[set] = [set(), set()]
    flags = [True, True]

    for i in (0, 1):
        res = evaluate(*seeds[i])
        if res is not None and res[0] > best_rm:
            best_rm, best_alloc = res
            best_off = frozenset()
        flags[i] = res is not None

    cur = [[seeds[0][0].copy(), seeds[0][1].copy()], [seeds[1][0].copy(), seeds[1][1].copy()]]
    j = 1
    while j <= k // 2 and any(flags):
        for i in (0, 1):
            if not flags[i]:
                continue
            ch = zero_order[i][j - 1]
            sb, sm = cur[i]
            if trim_axis == "b":
                trial_b = _shape(sb).copy()
                trial_b[ch] = 0.0
                trial_m = sm
                guard = rate_dl(g, PowerAllocation(trial_b, trial_m)) >= rb_star
                trial = (trial_b, trial_m)
            else:
                trial_m = _shape(sm).copy()
                trial_m[ch] = 0.0
                trial_b = sb
                guard = True  # reach check inside evaluate covers the mirror case
                trial = (trial_b, trial_m)
            res = evaluate(*trial) if guard else None
            if res is not None and res[0] > best_rm:
                best_rm, best_alloc = res
                cur[i] = [trial[0], trial[1]]
                offs[i].add(ch)
                best_off = frozenset(offs[i])
            else:
                flags[i] = False
        j += 1

    if best_alloc is None:
        rm, a = mcfind_rm(g, min(rb_star, max_rates_fixed(g)[0]), tol)
        return rm, a, frozenset()
    return best_rm, best_alloc, best_off


def tdfd_region_general(
    g: LinkGains,
    rb_grid: Sequence[float],
    method: Literal["altmax", "heuristic"] = "altmax",
    tol: Tolerances | None = None,
    restarts: int = 8,
    seed: int = 42,
) -> RegionBoundary:
    """Convexified boundary from per-point solves plus an upper hull.

    The half-duplex endpoints (0, r_bar_m) and (r_bar_b, 0) are always
    included, so the hull spans the full downlink range and dominates every
    per-point result.
    """
    tol = tol or Tolerances(max_iters=300)
    r_bar_b, r_bar_m, alloc_b, alloc_m = max_rates(g, tol)
    pts: List[BoundaryPoint] = [
        BoundaryPoint(0.0, r_bar_m, alloc_m, Mode.FD),
        BoundaryPoint(r_bar_b, 0.0, alloc_b, Mode.FD),
    ]
    for rb_star in rb_grid:
        if method == "altmax":
            res = altmax(g, rb_star, tol, restarts=restarts, seed=seed)
            pts.append(BoundaryPoint(res.rates.r_b, res.rates.r_m, res.allocation, Mode.FD))
        elif method == "heuristic":
            rm, alloc, _ = pa_heuristic(g, rb_star, tol)
            pts.append(BoundaryPoint(rate_dl(g, alloc), rate_ul(g, alloc), alloc, Mode.FD))
        else:
            raise ValueError(f"unknown method {method!r}")
    return upper_hull(pts, source="tdfd")
