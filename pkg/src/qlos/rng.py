"""Counter-based per-frame random streams for reproducible sweeps.

Frame f consumes Philox words [16f, 16f+16) regardless of worker layout:
a frame maps to exactly 4 Philox counter blocks (4 uint64 words each), so a
worker that starts at frame f0 advances the counter by 4*f0 and then
generates locally. Splitting a run across any number of workers therefore
yields bit-identical per-frame draws.

Fixed 16-uniform layout per frame (up to 4 streams):
  u[0:4]   symbol-index uniforms (first n used); index = floor(u * P),
           exact when the constellation size P is a power of two
  u[4]     common-phase uniform, phi = 2*pi*u
  u[5:13]  noise pairs (first 2n used): amplitude sqrt(-ln(1-u)), angle 2*pi*v
  u[13:16] reserved
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

WORDS_PER_FRAME = 16
_BLOCKS_PER_FRAME = WORDS_PER_FRAME // 4  # Philox4x64 emits 4 words per block
_TWO_PI = 2.0 * math.pi
MAX_STREAMS = 4


@dataclass(frozen=True)
class FrameBlock:
    """Per-frame randomness for frames [frame_start, frame_start + F)."""

    frame_start: int
    sym_idx: np.ndarray  # (F, n) int64 in [0, P)
    phi: np.ndarray      # (F,) float64 in [0, 2*pi)
    crot: np.ndarray     # (F,) complex128, cos(phi) - 1j*sin(phi)
    noise: np.ndarray    # (F, n) complex128, unit total variance per entry


def frame_uniforms(master_seed: int, frame_start: int, n_frames: int) -> np.ndarray:
    """The (n_frames, 16) uniform block for the given frame range."""
    if frame_start < 0 or n_frames < 0:
        raise ValueError("frame range must be nonnegative")
    bg = np.random.Philox(key=master_seed)
    bg.advance(_BLOCKS_PER_FRAME * frame_start)
    return np.random.Generator(bg).random((n_frames, WORDS_PER_FRAME))


def frame_inputs(master_seed: int, frame_start: int, n_frames: int,
                 n_streams: int, constellation_size: int) -> FrameBlock:
    """Symbol indices, common phase, and unit noise for a frame range."""
    if not 1 <= n_streams <= MAX_STREAMS:
        raise ValueError(f"n_streams must be in [1, {MAX_STREAMS}]")
    p = constellation_size
    if p < 2 or p & (p - 1):
        raise ValueError("constellation size must be a power of two")
    u = frame_uniforms(master_seed, frame_start, n_frames)
    sym = (u[:, :n_streams] * p).astype(np.int64)
    phi = _TWO_PI * u[:, 4]
    crot = np.cos(phi) - 1j * np.sin(phi)
    w = u[:, 5:5 + 2 * n_streams]
    amp = np.sqrt(-np.log1p(-w[:, 0::2]))
    ang = _TWO_PI * w[:, 1::2]
    noise = amp * (np.cos(ang) + 1j * np.sin(ang))
    return FrameBlock(frame_start=frame_start, sym_idx=sym, phi=phi,
                      crot=crot, noise=noise)
