"""Brute-force ground truth for the boundary solvers.

Exhaustive grid search over power allocations, used by the test suite to
validate the analytic and iterative solvers, plus numerical curvature
sampling for checking shape classifications.  Deliberately independent of
the solver code paths it checks.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .linkmodel import LinkGains, PowerAllocation, Tolerances
from .singlechannel import corner_rates, fd_boundary_rm

__all__ = ["GridSpec", "grid_max_rm", "grid_max_rm_uniform", "curvature_samples"]


@dataclass(frozen=True)
class GridSpec:
    """Step size and dimensionality budget for exhaustive searches."""

    step: float = 1e-3
    max_dim: int = 6

    def __post_init__(self):
        if not (0.0 < self.step <= 0.1):
            raise ValueError("step must lie in (0, 0.1]")
        if self.max_dim > 6:
            raise ValueError("max_dim capped at 6")
        if (1.0 / self.step + 1) ** self.max_dim > 1e9:
            raise ValueError("grid would exceed 1e9 points")


def _axis(step: float) -> np.ndarray:
    n = int(round(1.0 / step))
    return np.linspace(0.0, 1.0, n + 1)


def _simplex_grid(k: int, step: float) -> np.ndarray:
    """All grid vectors in [0,1]^k with entries on the step lattice, sum <= 1."""
    axis = _axis(step)
    if k == 1:
        return axis[:, None]
    mesh = np.meshgrid(*([axis] * k), indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    return pts[pts.sum(axis=1) <= 1.0 + 1e-12]


def grid_max_rm(g: LinkGains, rb_star: float, spec: GridSpec | None = None) -> Tuple[float, PowerAllocation]:
    """Exhaustive max of r_m subject to r_b >= rb_star over the allocation grid.

    The one-sided constraint keeps the feasible set nonempty for any
    rb_star up to the half-duplex maximum; the discretization error is then
    bounded by one grid step times the local rate sensitivity.
    """
    spec = spec or GridSpec()
    k = g.K
    if 2 * k > spec.max_dim:
        raise ValueError(f"2K={2*k} exceeds max_dim={spec.max_dim}")

    cand_b = _simplex_grid(k, spec.step)  # (Nb, k)
    cand_m = _simplex_grid(k, spec.step)  # (Nm, k)

    best_rm = -np.inf
    best = None
    gbm, gmb = g.gamma_bm, g.gamma_mb
    gmm, gbb = g.gamma_mm, g.gamma_bb
    # loop over alpha_b rows, vectorize over the alpha_m set
    for ab in cand_b:
        rb = np.log2(1.0 + ab * gbm / (1.0 + cand_m * gmm)).sum(axis=1)
        feas = rb >= rb_star - 1e-12
        if not feas.any():
            continue
        rm = np.log2(1.0 + cand_m[feas] * gmb / (1.0 + ab * gbb)).sum(axis=1)
        j = int(rm.argmax())
        if rm[j] > best_rm:
            best_rm = float(rm[j])
            best = (ab, cand_m[feas][j])
    if best is None:
        raise ValueError(f"no grid point satisfies r_b >= {rb_star}")
    return best_rm, PowerAllocation(best[0], best[1])


def grid_max_rm_uniform(g: LinkGains, rb_star: float, spec: GridSpec | None = None) -> Tuple[float, PowerAllocation]:
    """Grid oracle restricted to uniform shapes alpha_{.,k} = t/K.

    Searches total-power fractions (t_b, t_m) on a 2-D grid; used to verify
    the fixed-shape solvers independently of their bisection path.
    """
    spec = spec or GridSpec()
    k = g.K
    t = _axis(spec.step)
    tb = t[:, None, None] / k  # per-channel fraction
    tm = t[None, :, None] / k
    rb = np.log2(1.0 + tb * g.gamma_bm / (1.0 + tm * g.gamma_mm)).sum(axis=2)
    rm = np.log2(1.0 + tm * g.gamma_mb / (1.0 + tb * g.gamma_bb)).sum(axis=2)
    feas = rb >= rb_star - 1e-12
    if not feas.any():
        raise ValueError(f"no uniform grid point satisfies r_b >= {rb_star}")
    masked = np.where(feas, rm, -np.inf)
    i, j = np.unravel_index(int(masked.argmax()), masked.shape)
    alloc = PowerAllocation(np.full(k, t[i] / k), np.full(k, t[j] / k))
    return float(masked[i, j]), alloc


def curvature_samples(g: LinkGains, rb_grid: np.ndarray, tol: Tolerances | None = None) -> np.ndarray:
    """Signs of the second difference of r_m(r_b) at interior grid points.

    Requires K=1 and at least three uniformly spaced points inside
    [0, s_b]; +1 marks convex samples, -1 concave, 0 flat within rounding.
    """
    if g.K != 1:
        raise ValueError("curvature sampling is a single-channel check")
    rb_grid = np.asarray(rb_grid, dtype=float)
    if rb_grid.size < 3:
        raise ValueError("need at least three grid points")
    s_b = corner_rates(g).s_b
    if rb_grid.min() < -1e-12 or rb_grid.max() > s_b + 1e-9:
        raise ValueError("rb_grid must lie within [0, s_b]")
    tol = tol or Tolerances()
    rm = np.array([fd_boundary_rm(g, rb, tol)[0] for rb in rb_grid])
    d2 = rm[2:] - 2.0 * rm[1:-1] + rm[:-2]
    signs = np.zeros(d2.size, dtype=int)
    signs[d2 > 1e-12] = 1  # below the threshold counts as flat
    signs[d2 < -1e-12] = -1
    return signs
