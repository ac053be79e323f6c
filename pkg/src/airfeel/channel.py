"""Synchronous multiple-access channel: sample-wise superposition + AWGN.

All devices are assumed symbol- and phase-aligned with fading already
compensated, so the channel reduces to adding waveforms and injecting
white Gaussian noise at a calibrated level.

SNR convention: `snr_db` is the per-device received SNR, the average
sample power of ONE device's waveform over the noise variance.  The
aggregate SNR therefore grows with the cohort size.  Callers that want
the post-superposition reading can scale the reference power by K
(`snr_reference = "cohort"` in the experiment config).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .modem import Waveform


@dataclass(frozen=True)
class ChannelConfig:
    """Noise level and the seed that names the noise streams."""

    snr_db: float
    seed: int = 0
    snr_reference: str = "device"  # "device" | "cohort"

    def __post_init__(self):
        if not np.isfinite(self.snr_db):
            raise ValueError("snr_db must be finite")
        if self.snr_reference not in ("device", "cohort"):
            raise ValueError(f"unknown snr_reference {self.snr_reference!r}")


def superimpose(waveforms) -> Waveform:
    """Sample-wise sum of K equal-length waveforms."""
    waveforms = list(waveforms)
    if not waveforms:
        raise ValueError("need at least one waveform")
    length = len(waveforms[0])
    for i, w in enumerate(waveforms):
        if len(w) != length:
            raise ValueError(f"waveform {i} has {len(w)} samples, expected {length}")
    total = np.sum([w.samples for w in waveforms], axis=0)
    return Waveform(total, amplitude=None)


def noise_sigma(snr_db: float, per_sample_signal_power: float) -> float:
    """Noise standard deviation that realizes the requested SNR."""
    if not per_sample_signal_power > 0:
        raise ValueError("per-sample signal power must be positive")
    return float(np.sqrt(per_sample_signal_power / 10.0 ** (snr_db / 10.0)))


def add_awgn(waveform: Waveform, sigma: float, rng: np.random.Generator) -> Waveform:
    """Add i.i.d. zero-mean Gaussian noise; sigma=0 passes through."""
    return Waveform(awgn_block(waveform.samples, sigma, rng), amplitude=None)


def awgn_block(samples: np.ndarray, sigma: float, rng: np.random.Generator) -> np.ndarray:
    """Array-level AWGN used by the vectorized aggregation paths."""
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    if sigma == 0.0:
        return np.array(samples, dtype=float, copy=True)
    return samples + rng.normal(0.0, sigma, size=np.shape(samples))
