"""Per-antenna quantizers: phase-only, amplitude-phase, and I/Q families.

Bin layouts (0-based) follow the region enumeration conventions:
  phase-only  index = sector,              sector = floor(angle / (2pi/M))
  amp-phase   index = sector + M * ring
  I/Q         index = im_level + S * re_level

All boundaries are lower-inclusive / upper-exclusive; amplitude rings use
A_0 = 0, A_K = inf and I/Q axes use I_0 = -inf, I_S = +inf implicitly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import stats
from .stats import GaussianApprox, Rect, Sector

_TWO_PI = 2.0 * math.pi


class ConvergenceError(ArithmeticError):
    """Lloyd-Max iteration failed to reach the threshold-change tolerance."""

    def __init__(self, message, trace):
        super().__init__(message)
        self.trace = trace


@dataclass(frozen=True)
class Quantizer:
    family: str  # "phase" | "ap" | "iq"
    m: int | None = None
    k: int | None = None
    s: int | None = None
    amp_thresholds: np.ndarray | None = None
    iq_thresholds: np.ndarray | None = None
    sigma2: float | None = None
    codebook: np.ndarray | None = None

    @property
    def bin_count(self) -> int:
        if self.family == "phase":
            return self.m
        if self.family == "ap":
            return self.k * self.m
        return self.s * self.s

    def cells(self):
        """All cells in bin-index order."""
        if self.family == "iq":
            edges = np.concatenate(([-np.inf], self.iq_thresholds, [np.inf]))
            return [Rect(edges[i], edges[i + 1], edges[j], edges[j + 1])
                    for i in range(self.s) for j in range(self.s)]
        amps = np.concatenate(([0.0], self.amp_thresholds, [np.inf])) \
            if self.family == "ap" else np.array([0.0, np.inf])
        m = self.m
        return [Sector(amps[k], amps[k + 1], _TWO_PI * j / m, _TWO_PI * (j + 1) / m)
                for k in range(len(amps) - 1) for j in range(m)]


@dataclass(frozen=True)
class VirtualQuantizer:
    physical: Quantizer
    virtual: Quantizer
    coarsen_map: np.ndarray  # virtual bin -> physical bin


def design_phase_only(M: int) -> Quantizer:
    if M < 2:
        raise ValueError("need at least 2 sectors")
    return Quantizer(family="phase", m=M)


def design_equal_prob_iq(S: int, sigma2: float) -> Quantizer:
    """Thresholds I_i = sqrt((1+sigma2)/2) * quantile(i/S), equal cell masses."""
    if S < 2:
        raise ValueError("need at least 2 levels per axis")
    sd = math.sqrt((1.0 + sigma2) / 2.0)
    thr = sd * stats.std_normal_quantile(np.arange(1, S) / S)
    return Quantizer(family="iq", s=S, iq_thresholds=np.atleast_1d(thr), sigma2=sigma2)


def design_equal_prob_ap(K: int, M: int, sigma2: float) -> Quantizer:
    """Amplitude thresholds A_i = sqrt((1+sigma2) ln(K/(K-i))), uniform sectors."""
    if K < 1 or M < 2:
        raise ValueError("need K >= 1 rings and M >= 2 sectors")
    if K == 1:
        return design_phase_only(M)
    i = np.arange(1, K)
    amp = np.sqrt((1.0 + sigma2) * np.log(K / (K - i)))
    return Quantizer(family="ap", k=K, m=M, amp_thresholds=amp, sigma2=sigma2)


def ap_with_thresholds(M: int, amp_thresholds, sigma2: float | None = None) -> Quantizer:
    """Amplitude-phase quantizer with caller-fixed ring thresholds."""
    amp = np.atleast_1d(np.asarray(amp_thresholds, dtype=float))
    if np.any(amp <= 0) or np.any(np.diff(amp) <= 0):
        raise ValueError("amplitude thresholds must be positive and increasing")
    return Quantizer(family="ap", k=len(amp) + 1, m=M, amp_thresholds=amp, sigma2=sigma2)


def _rayleigh_ring_mass(a, b, st2):
    ea = math.exp(-a * a / st2)
    eb = 0.0 if math.isinf(b) else math.exp(-b * b / st2)
    return ea - eb


def _rayleigh_ring_mean(a, b, st2):
    """E[r | a <= r < b] for the amplitude of CN(0, st2)."""
    s = math.sqrt(st2)
    ea = math.exp(-a * a / st2)
    if math.isinf(b):
        eb, fb = 0.0, 1.0
        b_eb = 0.0
    else:
        eb = math.exp(-b * b / st2)
        fb = math.erf(b / s)
        b_eb = b * eb
    num = a * ea - b_eb + s * (math.sqrt(math.pi) / 2.0) * (fb - math.erf(a / s))
    den = ea - eb
    if den <= 0.0:
        raise ValueError("zero-mass ring")
    return num / den


def design_mmsqe(family: str, sigma2: float, S: int | None = None,
                 K: int | None = None, M: int | None = None) -> Quantizer:
    """Lloyd-Max design under the CN(0, 1+sigma2) approximation.

    IQ: per-axis 1-D problem for a normal with variance (1+sigma2)/2.
    AP: uniform sectors; ring thresholds from the 1-D problem on the
    Rayleigh amplitude density. Stops when the largest threshold change
    drops below 1e-10 (or raises after 1e4 iterations).
    """
    st2 = 1.0 + sigma2
    if family == "iq":
        if S is None or S < 2:
            raise ValueError("iq family needs S >= 2")
        sd = math.sqrt(st2 / 2.0)

        def centroids(edges):
            return np.array([sd * stats.truncated_normal_mean(lo / sd, hi / sd)
                             for lo, hi in zip(edges[:-1], edges[1:])])

        init = design_equal_prob_iq(S, sigma2).iq_thresholds
        thr, _, _ = _lloyd_1d(init, centroids, -np.inf)
        return Quantizer(family="iq", s=S, iq_thresholds=thr, sigma2=sigma2)
    if family == "ap":
        if K is None or M is None or K < 1 or M < 2:
            raise ValueError("ap family needs K >= 1 and M >= 2")
        if K == 1:
            return design_phase_only(M)

        def centroids(edges):
            return np.array([_rayleigh_ring_mean(lo, hi, st2)
                             for lo, hi in zip(edges[:-1], edges[1:])])

        init = design_equal_prob_ap(K, M, sigma2).amp_thresholds
        thr, _, _ = _lloyd_1d(init, centroids, 0.0)
        return Quantizer(family="ap", k=K, m=M, amp_thresholds=thr, sigma2=sigma2)
    raise ValueError(f"unsupported family {family!r} for MMSQE design")


def _lloyd_1d(init_thr, centroid_fn, lower_edge, tol=1e-10, max_iter=10**4):
    """1-D Lloyd-Max: alternate conditional means and midpoint thresholds."""
    thr = np.asarray(init_thr, dtype=float).copy()
    trace = []
    for _ in range(max_iter):
        edges = np.concatenate(([lower_edge], thr, [np.inf]))
        cent = centroid_fn(edges)
        new_thr = 0.5 * (cent[:-1] + cent[1:])
        delta = float(np.max(np.abs(new_thr - thr)))
        trace.append(delta)
        thr = new_thr
        if delta < tol:
            return thr, cent, trace
    raise ConvergenceError(
        f"Lloyd-Max did not converge in {max_iter} iterations "
        f"(last deltas {trace[-3:]})", trace)


def quantize_index(q: Quantizer, y):
    """Bin index of each finite complex input (scalar or array)."""
    y = np.asarray(y, dtype=complex)
    if not np.all(np.isfinite(y)):
        raise ValueError("quantizer input must be finite")
    scalar = y.ndim == 0
    y = np.atleast_1d(y)
    if q.family == "iq":
        i = np.searchsorted(q.iq_thresholds, y.real, side="right")
        j = np.searchsorted(q.iq_thresholds, y.imag, side="right")
        out = j + q.s * i
    else:
        ang = np.mod(np.angle(y), _TWO_PI)
        sector = (ang * (q.m / _TWO_PI)).astype(np.int64) % q.m
        if q.family == "phase":
            out = sector
        else:
            ring = np.searchsorted(q.amp_thresholds, np.abs(y), side="right")
            out = sector + q.m * ring
    return int(out[0]) if scalar else out


def axis_centroids(S: int, iq_thresholds, sigma2: float) -> np.ndarray:
    """Per-axis conditional means of the I/Q partition under CN(0, 1+sigma2)."""
    sd = math.sqrt((1.0 + sigma2) / 2.0)
    edges = np.concatenate(([-np.inf], np.asarray(iq_thresholds) / sd, [np.inf]))
    return np.array([sd * stats.truncated_normal_mean(edges[i], edges[i + 1])
                     for i in range(S)])


def centroid_codebook(q: Quantizer, sigma2: float) -> np.ndarray:
    """Centroids of every bin under CN(0, 1+sigma2), in bin-index order.

    I/Q cells factor into per-axis truncated means; sectors factor into a
    radial Rayleigh mean times the circular mean of a uniform angle.
    """
    st2 = 1.0 + sigma2
    if q.family == "iq":
        ax = axis_centroids(q.s, q.iq_thresholds, sigma2)
        return (ax[:, None] + 1j * ax[None, :]).reshape(-1)
    amps = np.concatenate(([0.0], q.amp_thresholds, [np.inf])) \
        if q.family == "ap" else np.array([0.0, np.inf])
    radial = [_rayleigh_ring_mean(amps[i], amps[i + 1], st2) for i in range(len(amps) - 1)]
    m = q.m
    j = np.arange(m)
    a0 = _TWO_PI * j / m
    a1 = _TWO_PI * (j + 1) / m
    angular = ((np.sin(a1) - np.sin(a0)) + 1j * (np.cos(a0) - np.cos(a1))) / (_TWO_PI / m)
    return (np.asarray(radial)[:, None] * angular[None, :]).reshape(-1)


def with_codebook(q: Quantizer, sigma2: float) -> Quantizer:
    return replace(q, codebook=centroid_codebook(q, sigma2))


def msqe(q: Quantizer, sigma2: float) -> float:
    """Mean squared quantization error E|Y - Q(Y)|^2 under CN(0, 1+sigma2).

    With centroid outputs this equals var - sum_j p_j |c_j|^2.
    """
    st2 = 1.0 + sigma2
    cb = centroid_codebook(q, sigma2)
    approx = GaussianApprox(0j, st2)
    masses = []
    for cell in q.cells():
        if isinstance(cell, Rect):
            masses.append(stats.rect_prob(0j, st2, cell))
        else:
            # circular symmetry: ring mass / M per sector
            masses.append(_rayleigh_ring_mass(cell.a_lo, cell.a_hi, st2) / q.m)
    masses = np.asarray(masses)
    return float(st2 - np.sum(masses * np.abs(cb) ** 2))


def refine(physical: Quantizer, factor: int = 2) -> VirtualQuantizer:
    """Split each I/Q cell of an equal-probability design into factor^2 subcells.

    The refined thresholds evaluate the quantile at the same grid points
    (i/S = (factor i)/(factor S)), so the physical thresholds reappear
    bit-identically inside the virtual threshold list.
    """
    if physical.family != "iq":
        raise ValueError("only I/Q quantizers can be refined")
    if factor != 2:
        raise ValueError("only factor-2 refinement is supported")
    if physical.sigma2 is None:
        raise ValueError("physical quantizer must carry its design sigma2")
    expected = design_equal_prob_iq(physical.s, physical.sigma2)
    if not np.array_equal(expected.iq_thresholds, physical.iq_thresholds):
        raise ValueError("refine requires an equal-probability I/Q design")
    s_v = factor * physical.s
    virtual = design_equal_prob_iq(s_v, physical.sigma2)
    iv, jv = np.divmod(np.arange(s_v * s_v), s_v)
    coarsen = (jv // factor) + physical.s * (iv // factor)
    return VirtualQuantizer(physical=physical, virtual=virtual,
                            coarsen_map=coarsen.astype(np.int64))


def export_json(q: Quantizer, sigma2: float | None = None) -> dict:
    """JSON-ready dict: family, sizes, thresholds, codebook, sigma2.

    Floats serialize via repr (shortest round-trip, <= 17 significant digits).
    """
    s2 = sigma2 if sigma2 is not None else q.sigma2
    cb = q.codebook
    if cb is None and s2 is not None:
        cb = centroid_codebook(q, s2)
    doc = {"family": q.family, "sigma2": s2}
    if q.family == "iq":
        doc["S"] = q.s
        doc["thresholds"] = [float(t) for t in q.iq_thresholds]
    elif q.family == "ap":
        doc["K"] = q.k
        doc["M"] = q.m
        doc["thresholds"] = [float(t) for t in q.amp_thresholds]
    else:
        doc["M"] = q.m
        doc["thresholds"] = []
    doc["codebook"] = [[float(c.real), float(c.imag)] for c in cb] if cb is not None else None
    return doc
