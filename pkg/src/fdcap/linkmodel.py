"""Physical model of a bidirectional full-duplex link.

A base station (BS) and a mobile station (MS) transmit simultaneously on K
orthogonal channels.  Each station receives the other's signal at some SNR
and leaks a fraction of its own transmit power into its receiver (residual
self-interference, expressed as an interference-to-noise ratio, XINR).  All
gains are stored in linear scale at full per-channel transmit power; actual
operating points scale them by normalized power fractions alpha in [0, 1]
with per-station sum budgets of 1.

Rates are Shannon rates in b/s/Hz, base-2 logarithms throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

LN2 = np.log(2.0)

__all__ = [
    "LinkGains",
    "PowerAllocation",
    "RatePair",
    "Tolerances",
    "db_to_linear",
    "linear_to_db",
    "rate_dl",
    "rate_ul",
    "max_rates",
    "rate_improvement",
    "scale_gains",
    "water_fill",
]


def db_to_linear(x):
    """Convert dB to linear scale (vectorized)."""
    return 10.0 ** (np.asarray(x, dtype=float) / 10.0)


def linear_to_db(x):
    """Convert linear scale to dB (vectorized); zero maps to -inf."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(x)


def _as_gain_array(values, name: str) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(values, dtype=float)).copy()
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    if np.any(arr < 0):
        raise ValueError(f"{name} must be nonnegative")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class LinkGains:
    """Per-channel link gains at full transmit power, linear scale.

    gamma_bm / gamma_mb are the DL / UL SNRs; gamma_mm / gamma_bb are the
    residual self-interference XINRs at the MS / BS receivers.
    """

    gamma_bm: np.ndarray
    gamma_mb: np.ndarray
    gamma_mm: np.ndarray
    gamma_bb: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "gamma_bm", _as_gain_array(self.gamma_bm, "gamma_bm"))
        object.__setattr__(self, "gamma_mb", _as_gain_array(self.gamma_mb, "gamma_mb"))
        object.__setattr__(self, "gamma_mm", _as_gain_array(self.gamma_mm, "gamma_mm"))
        object.__setattr__(self, "gamma_bb", _as_gain_array(self.gamma_bb, "gamma_bb"))
        k = self.gamma_bm.size
        if k < 1:
            raise ValueError("need at least one channel")
        for name in ("gamma_mb", "gamma_mm", "gamma_bb"):
            if getattr(self, name).size != k:
                raise ValueError("all gain vectors must have the same length")

    @property
    def K(self) -> int:
        return self.gamma_bm.size

    @classmethod
    def from_db(cls, gamma_bm_db, gamma_mb_db, gamma_mm_db, gamma_bb_db) -> "LinkGains":
        return cls(
            db_to_linear(gamma_bm_db),
            db_to_linear(gamma_mb_db),
            db_to_linear(gamma_mm_db),
            db_to_linear(gamma_bb_db),
        )

    @classmethod
    def single(cls, gamma_bm: float, gamma_mb: float, gamma_mm: float, gamma_bb: float) -> "LinkGains":
        """Convenience constructor for a K=1 link."""
        return cls([gamma_bm], [gamma_mb], [gamma_mm], [gamma_bb])


@dataclass(frozen=True)
class PowerAllocation:
    """Normalized per-channel power fractions for both stations."""

    alpha_b: np.ndarray
    alpha_m: np.ndarray
    tol_simplex: float = field(default=1e-12, compare=False)

    def __post_init__(self):
        ab = np.atleast_1d(np.asarray(self.alpha_b, dtype=float)).copy()
        am = np.atleast_1d(np.asarray(self.alpha_m, dtype=float)).copy()
        if ab.size != am.size:
            raise ValueError("alpha_b and alpha_m must have the same length")
        tol = self.tol_simplex
        for name, arr in (("alpha_b", ab), ("alpha_m", am)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} must be finite")
            if np.any(arr < -tol) or np.any(arr > 1.0 + tol):
                raise ValueError(f"{name} entries must lie in [0, 1]")
            if arr.sum() > 1.0 + tol:
                raise ValueError(f"{name} must sum to at most 1")
            np.clip(arr, 0.0, 1.0, out=arr)
            arr.flags.writeable = False
        object.__setattr__(self, "alpha_b", ab)
        object.__setattr__(self, "alpha_m", am)

    @property
    def K(self) -> int:
        return self.alpha_b.size

    @classmethod
    def full(cls, k: int) -> "PowerAllocation":
        """Both stations at full uniform power (1/K on each channel)."""
        u = np.full(k, 1.0 / k)
        return cls(u, u)

    @classmethod
    def silent(cls, k: int) -> "PowerAllocation":
        return cls(np.zeros(k), np.zeros(k))


@dataclass(frozen=True)
class RatePair:
    """An (r_b, r_m) point, b/s/Hz on the downlink and uplink."""

    r_b: float
    r_m: float

    def __post_init__(self):
        if not (np.isfinite(self.r_b) and np.isfinite(self.r_m)):
            raise ValueError("rates must be finite")
        if self.r_b < 0 or self.r_m < 0:
            raise ValueError("rates must be nonnegative")


@dataclass(frozen=True)
class Tolerances:
    """Numerical tolerances shared by the solvers."""

    eps_rate: float = 1e-6
    eps_alpha: float = 1e-9
    tol_simplex: float = 1e-12
    max_iters: int = 10_000

    def __post_init__(self):
        if self.eps_rate <= 0 or self.eps_alpha <= 0:
            raise ValueError("eps_rate and eps_alpha must be positive")
        if self.tol_simplex < 0:
            raise ValueError("tol_simplex must be nonnegative")
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")


def _check_dims(g: LinkGains, a: PowerAllocation):
    if g.K != a.K:
        raise ValueError(f"gain/allocation dimension mismatch: K={g.K} vs {a.K}")


def rate_dl(g: LinkGains, a: PowerAllocation) -> float:
    """Downlink sum rate at allocation `a`, b/s/Hz.

    Per channel: log2(1 + alpha_b*gamma_bm / (1 + alpha_m*gamma_mm)).
    """
    _check_dims(g, a)
    sinr = a.alpha_b * g.gamma_bm / (1.0 + a.alpha_m * g.gamma_mm)
    return float(np.log1p(sinr).sum() / LN2)


def rate_ul(g: LinkGains, a: PowerAllocation) -> float:
    """Uplink sum rate at allocation `a`, b/s/Hz (mirror of rate_dl)."""
    _check_dims(g, a)
    sinr = a.alpha_m * g.gamma_mb / (1.0 + a.alpha_b * g.gamma_bb)
    return float(np.log1p(sinr).sum() / LN2)


def water_fill(gamma: np.ndarray, tol: Tolerances | None = None) -> np.ndarray:
    """Power fractions maximizing sum log2(1 + alpha_k * gamma_k), sum alpha = 1.

    Solved by bisection on the water level; channels with zero gain get zero
    power.  Returns the zero vector when every gain is zero.
    """
    tol = tol or Tolerances()
    gamma = np.asarray(gamma, dtype=float)
    alpha = np.zeros_like(gamma)
    active = gamma > 0
    if not active.any():
        return alpha
    inv = 1.0 / gamma[active]
    lo = float(inv.min())          # water level where the best channel turns on
    hi = float(inv.max()) + 1.0    # guarantees the budget is exceeded
    for _ in range(tol.max_iters):
        nu = 0.5 * (lo + hi)
        total = np.maximum(0.0, nu - inv).sum()
        if abs(total - 1.0) <= tol.tol_simplex:
            break
        if total > 1.0:
            hi = nu
        else:
            lo = nu
    alpha[active] = np.maximum(0.0, nu - inv)
    return alpha


def max_rates(g: LinkGains, tol: Tolerances | None = None):
    """Half-duplex maxima: each direction maximized with the other silent.

    Returns (r_bar_b, r_bar_m, alloc_b, alloc_m) where alloc_b / alloc_m are
    the water-filling allocations achieving the two maxima.
    """
    tol = tol or Tolerances()
    ab = water_fill(g.gamma_bm, tol)
    am = water_fill(g.gamma_mb, tol)
    zeros = np.zeros(g.K)
    alloc_b = PowerAllocation(ab, zeros)
    alloc_m = PowerAllocation(zeros, am)
    return rate_dl(g, alloc_b), rate_ul(g, alloc_m), alloc_b, alloc_m


def rate_improvement(p: RatePair, r_bar_b: float, r_bar_m: float) -> float:
    """Scaling of a rate pair relative to the time-division (TDD) frontier.

    Equals 1 exactly on the TDD boundary and 2 when both half-duplex maxima
    are achieved simultaneously.
    """
    if r_bar_b <= 0 or r_bar_m <= 0:
        raise ValueError("half-duplex maxima must be positive")
    return p.r_b / r_bar_b + p.r_m / r_bar_m


def scale_gains(g: LinkGains, a: PowerAllocation) -> LinkGains:
    """Fold an allocation shape into the gains.

    Evaluating the rates on the scaled gains at the uniform full allocation
    (1/K, ..., 1/K) reproduces the rates on the original gains at `a`; this
    is an exact algebraic identity used to reduce fixed-shape problems to
    the uniform-shape case.
    """
    _check_dims(g, a)
    k = g.K
    return LinkGains(
        k * a.alpha_b * g.gamma_bm,
        k * a.alpha_m * g.gamma_mb,
        k * a.alpha_m * g.gamma_mm,
        k * a.alpha_b * g.gamma_bb,
    )
