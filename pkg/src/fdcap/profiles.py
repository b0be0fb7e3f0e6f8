"""Synthetic multi-channel gain profiles.

Stand-ins for measured cancellation data: the BS residual self-interference
is flat at 0 dB per-channel average, while the MS residual follows a bowl
over the band (good cancellation mid-band, worse toward the edges) with
three presets ranging from narrowband to wideband cancellation.  SNRs are
flat across channels at K times the per-channel average, so total-power
sweeps reproduce the intended average SNR.
"""

from __future__ import annotations

import numpy as np

from .linkmodel import LinkGains, db_to_linear

__all__ = ["MS_PROFILES", "bs_xinr", "ms_xinr", "synthetic_gains"]

# (center dB, edge dB) of the per-channel-average MS XINR bowl
MS_PROFILES = {
    "narrowband": (-5.0, 30.0),
    "midband": (-10.0, 15.0),
    "wideband": (-12.0, -2.0),
}


def bs_xinr(k: int) -> np.ndarray:
    """Flat BS XINR: 0 dB per-channel average (linear value K per channel)."""
    return np.full(k, float(k))


def ms_xinr(k: int, profile: str) -> np.ndarray:
    """Bowl-shaped MS XINR for one of the presets."""
    try:
        center, edge = MS_PROFILES[profile]
    except KeyError:
        raise ValueError(f"unknown MS profile {profile!r}; choose from {sorted(MS_PROFILES)}")
    if k == 1:
        db = np.array([center])
    else:
        x = (2.0 * np.arange(1, k + 1) - k - 1) / (k - 1)  # [-1, 1] across the band
        db = center + (edge - center) * x**2
    return k * db_to_linear(db)


def synthetic_gains(k: int, snr_dl_db: float, snr_ul_db: float, profile: str = "wideband") -> LinkGains:
    """K-channel instance with flat SNRs and the synthetic cancellation bowls."""
    return LinkGains(
        np.full(k, k * float(db_to_linear(snr_dl_db))),
        np.full(k, k * float(db_to_linear(snr_ul_db))),
        ms_xinr(k, profile),
        bs_xinr(k),
    )
