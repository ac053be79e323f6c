"""Correlator bank and statistics over the recovered level histogram.

Correlating the superimposed signal against every tone yields, per
level, a noisy estimate of how many devices transmitted that level: the
histogram ("type") of the cohort's quantized values.  Any statistic of
the cohort that is a function of the type can then be computed at the
receiver; the arithmetic mean is what federated averaging needs, but
harmonic/geometric means and order statistics come for free.

The bank uses the half-weighted inner product (weight 1/2 at n=0, 1
elsewhere), under which the tone family is exactly orthogonal.  The
plain unweighted inner product leaks 1/N of the total count into every
score and is kept only as a diagnostic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.fft

from .modem import ToneFamily, Waveform
from .quantizer import QuantizerSpec, reconstruct


class DegenerateTypeError(ValueError):
    """Estimated histogram carries no mass; no statistic can be formed."""


@dataclass
class TypeHistogram:
    """Estimated per-level device counts (fractional after denoising)."""

    counts: np.ndarray
    n_devices: int

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=float)
        if self.counts.ndim != 1:
            raise ValueError("counts must be one-dimensional")
        if self.n_devices < 1:
            raise ValueError("n_devices must be >= 1")


def correlate_bank(
    received: Waveform | np.ndarray,
    family: ToneFamily,
    half_weighted: bool = True,
) -> np.ndarray:
    """Score every level against the received samples.

    Scaled so one noiseless transmitter at level m scores 1 at m and 0
    elsewhere.  `half_weighted=False` is the diagnostic plain matched
    filter, which adds (total count)/N to every score.
    """
    samples = received.samples if isinstance(received, Waveform) else np.asarray(received, dtype=float)
    if samples.shape[-1] != family.n_tones:
        raise ValueError(
            f"received length {samples.shape[-1]} != family size {family.n_tones}"
        )
    if not half_weighted:
        if family.table is None:
            raise ValueError("unweighted diagnostic needs a materialized tone table")
        return samples @ family.table.T / family.amplitude**2
    return correlate_block(samples, family)


def correlate_block(received: np.ndarray, family: ToneFamily) -> np.ndarray:
    """Half-weighted bank over a (..., N) block of received signals."""
    if family.table is not None:
        weights = np.ones(family.n_tones)
        weights[0] = 0.5
        return (received * weights) @ family.table.T / family.amplitude**2
    # Half-weighted correlation against the tone family is a scaled
    # type-3 DCT, which already halves the n=0 term.
    scale = np.sqrt(2.0 / family.n_tones) / (2.0 * family.amplitude)
    return scale * scipy.fft.dct(received, type=3, axis=-1)


def estimate_type(raw_scores, n_devices: int) -> TypeHistogram:
    """Clip negative scores (noise artifacts) to zero counts."""
    scores = np.asarray(raw_scores, dtype=float)
    if scores.size < 2:
        raise ValueError("need at least 2 levels")
    if n_devices < 1:
        raise ValueError("n_devices must be >= 1")
    return TypeHistogram(np.maximum(scores, 0.0), n_devices)


def mean_from_type(
    hist: TypeHistogram,
    spec: QuantizerSpec,
    normalize: str = "declared_k",
) -> float:
    """Arithmetic mean of the cohort's reconstructed values.

    Divides by the declared cohort size by default, which makes the
    noiseless case exact; `normalize="histogram_sum"` divides by the
    estimated total count instead.
    """
    if hist.counts.size != spec.n_levels:
        raise ValueError("histogram length does not match quantizer levels")
    total = float(np.sum(hist.counts))
    if total <= 0.0:
        raise DegenerateTypeError("histogram carries no mass")
    if normalize == "declared_k":
        denom = float(hist.n_devices)
    elif normalize == "histogram_sum":
        denom = total
    else:
        raise ValueError(f"unknown normalize {normalize!r}")
    return float(np.dot(hist.counts, spec.reconstruction_values()) / denom)


_STATISTICS = ("harmonic_mean", "geometric_mean", "max", "min", "variance")


def stat_from_type(hist: TypeHistogram, spec: QuantizerSpec, which: str) -> float:
    """Statistic of the multiset induced by rounding the counts.

    Counts below 0.5 are treated as absent so that noise cannot
    hallucinate extreme levels into the order statistics.
    """
    if which not in _STATISTICS:
        raise ValueError(f"unknown statistic {which!r}")
    if hist.counts.size != spec.n_levels:
        raise ValueError("histogram length does not match quantizer levels")
    rounded = np.floor(hist.counts + 0.5)  # round half up, not banker's
    total = float(rounded.sum())
    if total <= 0.0:
        raise DegenerateTypeError("rounded histogram carries no mass")
    present = rounded >= 1.0
    values = spec.reconstruction_values()
    if which in ("harmonic_mean", "geometric_mean") and np.any(values[present] <= 0.0):
        raise ValueError(f"{which} needs positive reconstruction values")
    if which == "harmonic_mean":
        return float(total / np.sum(rounded[present] / values[present]))
    if which == "geometric_mean":
        return float(np.exp(np.sum(rounded[present] * np.log(values[present])) / total))
    if which == "max":
        return reconstruct(int(np.flatnonzero(present)[-1]), spec)
    if which == "min":
        return reconstruct(int(np.flatnonzero(present)[0]), spec)
    mean = float(np.dot(rounded, values) / total)
    return float(np.dot(rounded, values**2) / total - mean**2)
