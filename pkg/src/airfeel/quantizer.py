"""Uniform mid-rise quantizer over a fixed dynamic range.

Values are mapped to cell indices 0..N-1 over [lo, hi); out-of-range
inputs saturate to the edge cells.  Reconstruction returns the cell
midpoint, which keeps the round trip error within half a cell width.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class QuantizerSpec:
    """N-level uniform quantizer over [lo, hi)."""

    n_levels: int
    lo: float = -1.0
    hi: float = 1.0

    def __post_init__(self):
        if self.n_levels < 2:
            raise ValueError(f"n_levels must be >= 2, got {self.n_levels}")
        if not (np.isfinite(self.lo) and np.isfinite(self.hi)):
            raise ValueError("quantizer range must be finite")
        if not self.hi > self.lo:
            raise ValueError(f"need hi > lo, got [{self.lo}, {self.hi})")
        if not np.isfinite(self.cell_width) or self.cell_width <= 0.0:
            raise ValueError("cell width must be positive and finite")

    @property
    def cell_width(self) -> float:
        return (self.hi - self.lo) / self.n_levels

    def reconstruction_values(self) -> np.ndarray:
        """Midpoints of all N cells, in level order."""
        m = np.arange(self.n_levels)
        return self.lo + (m + 0.5) * self.cell_width


def quantize(value: float, spec: QuantizerSpec) -> int:
    """Map a real value to its cell index, saturating outside [lo, hi)."""
    if not np.isfinite(value):
        raise ValueError(f"cannot quantize non-finite value {value!r}")
    return int(quantize_array(np.asarray([value], dtype=float), spec)[0])


def quantize_array(values: np.ndarray, spec: QuantizerSpec) -> np.ndarray:
    """Vectorized quantize; caller guarantees finiteness."""
    idx = np.floor((values - spec.lo) / spec.cell_width).astype(np.int64)
    return np.clip(idx, 0, spec.n_levels - 1)


def quantize_vector(params, spec: QuantizerSpec) -> np.ndarray:
    """Element-wise quantize of a flat parameter vector."""
    values = np.asarray(params, dtype=float)
    if values.size and not np.all(np.isfinite(values)):
        bad = int(np.flatnonzero(~np.isfinite(values))[0])
        raise ValueError(f"non-finite parameter at index {bad}")
    return quantize_array(values, spec)


def reconstruct(level: int, spec: QuantizerSpec) -> float:
    """Cell midpoint for a level index."""
    if not 0 <= level < spec.n_levels:
        raise IndexError(f"level {level} outside [0, {spec.n_levels})")
    return spec.lo + (level + 0.5) * spec.cell_width
