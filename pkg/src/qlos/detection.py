"""Spatial demultiplexers over quantized observations.

Three detectors share one immutable context: exact ML over the discrete
quantized channel, linear ZF on the centroid-reconstructed observation,
and the virtual-quantization detector that searches a refinement of the
observed physical cells.

All detectors return per-stream symbol indices (lowest index wins ties)
and are pure functions of their arguments.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .channel import ChannelMatrix
from .constellation import Constellation, slice_symbol, vector_indices
from .infotheory import transition_table
from .quantizer import Quantizer, VirtualQuantizer, quantize_index
from .stats import std_normal_cdf

_LOG_FLOOR = 1e-300

# Diagnostic counter for the complexity contract of vq_detect: one slice
# per stream per candidate, so a full call adds exactly |T| * n.
_slice_calls = 0


def slice_call_count() -> int:
    """Number of nearest-symbol slices since the last reset."""
    return _slice_calls


def reset_slice_calls() -> None:
    global _slice_calls
    _slice_calls = 0


def _slice(z: complex, c: Constellation) -> int:
    global _slice_calls
    _slice_calls += 1
    return slice_symbol(z, c)


@dataclass(frozen=True)
class DetectionContext:
    """Everything a detector needs for one (channel, quantizer, noise) triple.

    zf_filter is the pseudoinverse (H^H H)^-1 H^H; log_p, when present, is
    the (n, |S|^n, T) table of log transition probabilities used by ML.
    Immutable, safe to share across workers.
    """

    H: ChannelMatrix
    c: Constellation
    q: Quantizer
    codebook: Optional[np.ndarray]
    sigma2: float
    zf_filter: np.ndarray
    means: np.ndarray  # (|S|^n, n) noiseless H x for every candidate vector
    candidates: np.ndarray  # (|S|^n, n) symbol-index vectors, antenna 0 major
    log_p: Optional[np.ndarray]


def make_context(H: ChannelMatrix, c: Constellation, q: Quantizer,
                 sigma2: float, ml_table: bool = False,
                 allow_large_ml: bool = False) -> DetectionContext:
    """Build an immutable DetectionContext.

    ml_table precomputes the full log transition table; for qam16 with
    n=4 that table is ~0.5 GB, so it is refused unless allow_large_ml is
    set (ml_detect then falls back to per-call evaluation, IQ family only).
    """
    if sigma2 <= 0:
        raise ValueError("sigma2 must be positive")
    A = H.entries
    gram = A.conj().T @ A
    zf = np.linalg.solve(gram, A.conj().T)
    cand = vector_indices(c.size, H.n)
    means = c.points[cand] @ A.T
    log_p = None
    if ml_table:
        if c.size ** H.n > 4096 and not allow_large_ml:
            raise ValueError(
                "ML table for this constellation/array size is large; "
                "pass allow_large_ml=True to build it anyway")
        p = transition_table(q, H, c, sigma2).p
        log_p = np.log(np.maximum(p, _LOG_FLOOR))
    return DetectionContext(H=H, c=c, q=q, codebook=q.codebook,
                            sigma2=sigma2, zf_filter=zf, means=means,
                            candidates=cand, log_p=log_p)


def _iq_bin_log_probs(yq, ctx: DetectionContext) -> np.ndarray:
    """Per-candidate log probability of the observed IQ bins, computed
    directly from the axis thresholds (no full table)."""
    q = ctx.q
    thr = q.iq_thresholds
    sd = np.sqrt(ctx.sigma2 / 2.0)
    edges = np.concatenate(([-np.inf], thr, [np.inf]))
    re_idx = np.asarray(yq) // q.s
    im_idx = np.asarray(yq) % q.s
    total = np.zeros(ctx.means.shape[0])
    for i in range(ctx.H.n):
        for axis_idx, mu in ((re_idx[i], ctx.means[:, i].real),
                             (im_idx[i], ctx.means[:, i].imag)):
            lo = std_normal_cdf((edges[axis_idx] - mu) / sd)
            hi = std_normal_cdf((edges[axis_idx + 1] - mu) / sd)
            total += np.log(np.maximum(hi - lo, _LOG_FLOOR))
    return total


def ml_detect(yq, ctx: DetectionContext) -> np.ndarray:
    """Exact ML over the quantized channel: argmax_x prod_i P(yq_i | (Hx)_i).

    Log domain with per-factor floor 1e-300; ties resolve to the lowest
    candidate index (antenna 0 most significant).
    """
    yq = np.asarray(yq, dtype=np.int64)
    if ctx.log_p is not None:
        ll = ctx.log_p[np.arange(ctx.H.n), :, yq].sum(axis=0)
    elif ctx.q.family == "iq":
        ll = _iq_bin_log_probs(yq, ctx)
    else:
        raise ValueError("ml_detect without a table needs an IQ quantizer; "
                         "build the context with ml_table=True")
    return ctx.candidates[int(np.argmax(ll))].copy()


def zf_detect(yq, ctx: DetectionContext) -> np.ndarray:
    """Centroid reconstruction, pseudoinverse filter, per-stream slicing."""
    if ctx.codebook is None:
        raise ValueError("zf_detect needs a quantizer with a codebook")
    y = ctx.codebook[np.asarray(yq, dtype=np.int64)]
    xt = ctx.zf_filter @ y
    return np.array([_slice(z, ctx.c) for z in xt], dtype=np.int64)


@dataclass(frozen=True)
class CandidateSet:
    """Virtual-bin tuples compatible with an observed physical output."""

    per_antenna: Tuple[np.ndarray, ...]
    tuples: np.ndarray  # (|T|, n), antenna 0 most significant


def build_candidate_set(yq, vq: VirtualQuantizer) -> CandidateSet:
    """All virtual-bin index tuples whose cells lie inside the observed
    physical cells, ordered with antenna 0 as the most significant digit."""
    yq = np.asarray(yq, dtype=np.int64)
    per = tuple(np.flatnonzero(vq.coarsen_map == b).astype(np.int64)
                for b in yq)
    grids = np.meshgrid(*per, indexing="ij")
    tuples = np.stack(grids, axis=-1).reshape(-1, yq.size).astype(np.int64)
    return CandidateSet(per_antenna=per, tuples=tuples)


def vq_detect(yq, ctx: DetectionContext, vq: VirtualQuantizer) -> np.ndarray:
    """Virtual-quantization detector.

    For each candidate virtual output: reconstruct with virtual centroids,
    ZF-detect symbols, re-quantize the noiseless H x_hat through the virtual
    quantizer, and score by squared distance between the two virtual-centroid
    vectors. Strict-less-than updates keep the lowest-index candidate on ties.
    """
    if vq.virtual.codebook is None:
        raise ValueError("vq_detect needs a virtual quantizer with a codebook")
    if vq.physical.bin_count != ctx.q.bin_count:
        raise ValueError("context quantizer does not match vq.physical")
    cs = build_candidate_set(yq, vq)
    vcode = vq.virtual.codebook
    A = ctx.H.entries
    best_score = np.inf
    best_x = None
    for t in cs.tuples:
        yv = vcode[t]
        xt = ctx.zf_filter @ yv
        xhat = np.array([_slice(z, ctx.c) for z in xt], dtype=np.int64)
        z = A @ ctx.c.points[xhat]
        recon = vcode[quantize_index(vq.virtual, z)]
        score = float(np.sum(np.abs(yv - recon) ** 2))
        if score < best_score:
            best_score = score
            best_x = xhat
    return best_x
