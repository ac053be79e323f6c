"""Tone-keyed and amplitude-keyed modulators, plus envelope/PAPR analysis.

The digital scheme maps each quantizer level m to one cosine tone

    z_m[n] = A * sqrt(2/N) * cos(pi * (2m + 1) * n / (2N)),   n = 0..N-1,

the quarter-wave cosine family (the DCT-III basis).  Under the plain
inner product the tones have cross-correlation A^2/N; with the n=0
sample weighted by 1/2 they are exactly orthogonal with norm A^2, which
is the convention the correlator bank relies on.  Per-tone energy is
A^2 * (1 + 1/N), i.e. mean sample power A^2 * (N + 1) / N^2.

The analog baseline keys the parameter value into the amplitude of a
single carrier (double-sideband), one symbol per parameter.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.fft

# Largest N for which the full N x N tone table is materialized; bigger
# families run matrix-free through the fast cosine transform, which is
# the same linear map.
TABLE_MAX_N = 2048


class FramingError(ValueError):
    """Sample stream does not divide into whole symbols."""


@dataclass
class Waveform:
    """A real sample sequence; amplitude is the tone scale A for pure
    tones and None for mixtures, where no single scale applies."""

    samples: np.ndarray
    amplitude: float | None = None

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)

    def __len__(self) -> int:
        return self.samples.size


@dataclass
class ToneFamily:
    """The N near-orthogonal tones used to key quantizer levels."""

    n_tones: int
    amplitude: float = 1.0
    table: np.ndarray | None = field(init=False, repr=False, default=None)

    def __post_init__(self):
        if self.n_tones < 2:
            raise ValueError("need at least 2 tones")
        if not self.amplitude > 0:
            raise ValueError("amplitude must be positive")
        if self.n_tones <= TABLE_MAX_N:
            n = np.arange(self.n_tones)
            phase = np.pi * (2 * n[:, None] + 1) * n[None, :] / (2 * self.n_tones)
            table = self.amplitude * np.sqrt(2.0 / self.n_tones) * np.cos(phase)
            table.setflags(write=False)
            self.table = table

    @property
    def mean_sample_power(self) -> float:
        """Average per-sample power of any single tone, A^2 (N+1) / N^2."""
        n = self.n_tones
        return self.amplitude**2 * (n + 1) / n**2

    def tone(self, level: int) -> np.ndarray:
        """Samples of the tone assigned to a level (read-only view)."""
        if not 0 <= level < self.n_tones:
            raise IndexError(f"level {level} outside [0, {self.n_tones})")
        if self.table is not None:
            return self.table[level]
        n = np.arange(self.n_tones)
        phase = np.pi * (2 * level + 1) * n / (2 * self.n_tones)
        return self.amplitude * np.sqrt(2.0 / self.n_tones) * np.cos(phase)

    def synthesize(self, counts: np.ndarray) -> np.ndarray:
        """Superimposed samples for per-level multiplicities.

        counts has shape (..., N); returns the same shape, the sample-wise
        sum of counts[m] copies of tone m.  A scaled type-2 DCT computes
        exactly this sum, so large families need no table.
        """
        counts = np.asarray(counts, dtype=float)
        if counts.shape[-1] != self.n_tones:
            raise ValueError(
                f"counts last axis {counts.shape[-1]} != n_tones {self.n_tones}"
            )
        if self.table is not None:
            return counts @ self.table
        scale = self.amplitude * np.sqrt(2.0 / self.n_tones) / 2.0
        return scale * scipy.fft.dct(counts, type=2, axis=-1)


def mfsk_modulate(level: int, family: ToneFamily) -> Waveform:
    """Waveform transmitting one quantizer level: the level's tone."""
    return Waveform(family.tone(level), amplitude=family.amplitude)


def dsb_modulate(value: float, n_samples: int, carrier_cycles: int) -> Waveform:
    """Amplitude-key a value onto a cosine carrier of whole cycles."""
    if not np.isfinite(value):
        raise ValueError(f"cannot modulate non-finite value {value!r}")
    if n_samples < 2:
        raise ValueError("need n_samples >= 2")
    if not 1 <= carrier_cycles < n_samples / 2:
        raise ValueError("need 1 <= carrier_cycles < n_samples/2")
    n = np.arange(n_samples)
    samples = value * np.cos(2.0 * np.pi * carrier_cycles * n / n_samples)
    return Waveform(samples, amplitude=abs(value) if value != 0.0 else None)


@dataclass(frozen=True)
class DsbScheme:
    """Framing of an amplitude-keyed stream: samples per symbol and
    carrier cycles per symbol (whole cycles keep demodulation exact)."""

    symbol_len: int = 4
    carrier_cycles: int = 1

    def __post_init__(self):
        if not 1 <= self.carrier_cycles < self.symbol_len / 2:
            raise ValueError("need 1 <= carrier_cycles < symbol_len/2")

    def carrier(self) -> np.ndarray:
        n = np.arange(self.symbol_len)
        return np.cos(2.0 * np.pi * self.carrier_cycles * n / self.symbol_len)


def envelope_power(stream, scheme: ToneFamily | DsbScheme) -> np.ndarray:
    """Per-sample instantaneous power of the complex envelope.

    The tone scheme has a constant envelope by construction, so each
    symbol contributes A^2 * 2/N at every sample.  For the amplitude
    scheme the envelope within a symbol is the keyed value, recovered
    exactly from whole carrier cycles as 2 * mean(samples^2).
    """
    stream = np.asarray(stream, dtype=float)
    if stream.ndim != 1:
        raise ValueError("stream must be one-dimensional")
    if isinstance(scheme, ToneFamily):
        sym_len = scheme.n_tones
        if stream.size == 0 or stream.size % sym_len:
            raise FramingError(
                f"stream of {stream.size} samples is not whole {sym_len}-sample symbols"
            )
        level_power = scheme.amplitude**2 * 2.0 / scheme.n_tones
        return np.full(stream.size, level_power)
    sym_len = scheme.symbol_len
    if stream.size == 0 or stream.size % sym_len:
        raise FramingError(
            f"stream of {stream.size} samples is not whole {sym_len}-sample symbols"
        )
    segments = stream.reshape(-1, sym_len)
    symbol_power = 2.0 * np.mean(segments**2, axis=1)
    return np.repeat(symbol_power, sym_len)


def papr(envelope_powers) -> float:
    """Peak-to-average ratio, in dB, of an instantaneous power sequence.

    A constant sequence is 0 dB by definition, returned exactly."""
    p = np.asarray(envelope_powers, dtype=float)
    if p.size == 0:
        raise ValueError("empty power sequence")
    if np.any(p < 0):
        raise ValueError("envelope powers must be nonnegative")
    peak = float(np.max(p))
    if peak == 0.0:
        raise ValueError("all-zero power sequence has no PAPR")
    if peak == float(np.min(p)):
        return 0.0
    return float(10.0 * np.log10(peak / np.mean(p)))
