"""Gray-mapped symbol alphabets and nearest-point slicing."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Gray code over axis levels, listed for levels in ascending order. The
# all-zeros code sits on the most positive level so that bits 00..0 map to
# the first-quadrant point e^{j pi/4} (QPSK) resp. (3+3j)/sqrt(10) (16QAM).
_AXIS_GRAY = {
    2: (1, 0),
    4: (2, 3, 1, 0),
}


@dataclass(frozen=True)
class Constellation:
    kind: str
    points: np.ndarray  # complex, index = level_re * q + level_im
    bits_per_symbol: int
    labels: np.ndarray  # uint8, labels[i] = bit tuple of point i packed MSB-first
    axis_levels: np.ndarray = field(repr=False)  # shared by Re and Im axes

    @property
    def size(self) -> int:
        return len(self.points)

    def bits_of(self, index):
        """Unpack point indices to bit arrays, MSB first."""
        index = np.asarray(index)
        lab = self.labels[index]
        k = self.bits_per_symbol
        return (lab[..., None] >> np.arange(k - 1, -1, -1)) & 1


def make_constellation(kind: str) -> Constellation:
    kind = kind.lower()
    if kind == "qpsk":
        q = 2
        levels = np.array([-1.0, 1.0]) / np.sqrt(2.0)
    elif kind in ("qam16", "16qam"):
        q = 4
        levels = np.array([-3.0, -1.0, 1.0, 3.0]) / np.sqrt(10.0)
    else:
        raise ValueError(f"unknown constellation kind {kind!r}")
    gray = _AXIS_GRAY[q]
    points = np.empty(q * q, dtype=complex)
    labels = np.empty(q * q, dtype=np.uint8)
    bits_axis = q.bit_length() - 1
    for i in range(q):
        for j in range(q):
            points[i * q + j] = levels[i] + 1j * levels[j]
            labels[i * q + j] = (gray[i] << bits_axis) | gray[j]
    return Constellation(kind="qpsk" if q == 2 else "qam16",
                         points=points, bits_per_symbol=2 * bits_axis,
                         labels=labels, axis_levels=levels)


def map_bits(bits, c: Constellation, n_streams: int) -> np.ndarray:
    """Map a flat bit sequence to a vector of n_streams symbols."""
    bits = np.asarray(bits, dtype=np.uint8).ravel()
    k = c.bits_per_symbol
    if bits.size != n_streams * k:
        raise ValueError(f"expected {n_streams * k} bits, got {bits.size}")
    weights = 1 << np.arange(k - 1, -1, -1)
    lab = bits.reshape(n_streams, k) @ weights
    label_to_index = np.argsort(c.labels)
    return c.points[label_to_index[lab]]


def demap_bits(symbols, c: Constellation) -> np.ndarray:
    """Inverse of map_bits for exact constellation points."""
    symbols = np.asarray(symbols, dtype=complex).ravel()
    idx = np.array([slice_symbol(z, c) for z in symbols])
    if not np.allclose(c.points[idx], symbols, atol=1e-12):
        raise ValueError("demap_bits requires exact constellation points")
    return c.bits_of(idx).reshape(-1)


def slice_symbol(z: complex, c: Constellation) -> int:
    """Index of the nearest constellation point; ties go to the lowest index."""
    if not np.isfinite(z.real) or not np.isfinite(z.imag):
        raise ValueError("slice input must be finite")
    d2 = np.abs(c.points - z) ** 2
    return int(np.argmin(d2))  # argmin returns the first (lowest) minimizer


def vector_indices(size: int, n: int) -> np.ndarray:
    """All length-n symbol-index vectors, antenna 0 most significant.

    Row t holds the digits of t in base `size`, so "lowest vector index"
    tie-breaks are lexicographic in antenna order.
    """
    grids = np.meshgrid(*([np.arange(size)] * n), indexing="ij")
    return np.stack(grids, axis=-1).reshape(-1, n).astype(np.int64)
