"""Gaussian probability kernels for quantizer cells.

Scalar standard-normal helpers (cdf, quantile, truncated moments) plus
region probabilities and centroids of a complex Gaussian over the two
cell shapes used by the quantizers: I/Q rectangles and annular sectors.

Noise convention: a complex Gaussian CN(m, sigma2) has total variance
``sigma2`` split evenly over the two real dimensions (sigma2/2 each).
Cells are half-open everywhere: lower edge inclusive, upper exclusive,
so a value exactly on a threshold belongs to the upper cell.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import integrate, special

_SQRT2 = math.sqrt(2.0)
_SQRT_PI = math.sqrt(math.pi)


class QuadratureError(ArithmeticError):
    """Raised when adaptive quadrature cannot reach the requested tolerance."""


class Rect(NamedTuple):
    """Half-open I/Q rectangle [re_lo, re_hi) x [im_lo, im_hi)."""

    re_lo: float
    re_hi: float
    im_lo: float
    im_hi: float


class Sector(NamedTuple):
    """Half-open annular sector: amp in [a_lo, a_hi), angle in [ang_lo, ang_hi)."""

    a_lo: float
    a_hi: float
    ang_lo: float
    ang_hi: float


@dataclass(frozen=True)
class GaussianApprox:
    """Circular complex Gaussian used as quantizer design density.

    mean is the complex mean, variance the total variance over both real
    dimensions. For a unit-energy input through a unit-norm channel column
    the moment-matched values are mean 0 and variance 1 + sigma2.
    """

    mean: complex
    variance: float

    def __post_init__(self):
        if self.variance <= 0:
            raise ValueError("variance must be positive")

    @classmethod
    def from_noise(cls, sigma2: float) -> "GaussianApprox":
        return cls(0j, 1.0 + float(sigma2))


def std_normal_cdf(x):
    """Standard normal cdf, vectorized."""
    return special.ndtr(x)


def std_normal_quantile(p):
    """Inverse standard normal cdf; requires 0 < p < 1."""
    p = np.asarray(p, dtype=float)
    if np.any(p <= 0.0) or np.any(p >= 1.0):
        raise ValueError("quantile argument must lie strictly inside (0, 1)")
    out = special.ndtri(p)
    return float(out) if out.ndim == 0 else out


def _std_normal_pdf(x):
    return np.exp(-0.5 * np.square(x)) / math.sqrt(2.0 * math.pi)


def _interval_prob(lo, hi):
    """P(lo <= Z < hi) for standard normal Z, stable in both tails."""
    lo = float(lo)
    hi = float(hi)
    if lo >= 0.0:  # right tail: difference of complementary cdfs
        return 0.5 * (math.erfc(lo / _SQRT2) - math.erfc(hi / _SQRT2)) if hi != lo else 0.0
    if hi <= 0.0:
        return _interval_prob(-hi, -lo)
    return float(special.ndtr(hi) - special.ndtr(lo))


def truncated_normal_mean(a: float, b: float) -> float:
    """E[Z | a <= Z < b] for standard normal Z; either bound may be infinite."""
    if not a < b:
        raise ValueError("need a < b")
    mass = _interval_prob(a, b)
    if mass <= 0.0 or mass < 1e-300:
        raise ValueError(f"zero-probability interval [{a}, {b})")
    pa = 0.0 if np.isinf(a) else float(_std_normal_pdf(a))
    pb = 0.0 if np.isinf(b) else float(_std_normal_pdf(b))
    return (pa - pb) / mass


def rect_prob(mean: complex, sigma2: float, cell: Rect) -> float:
    """Mass of CN(mean, sigma2) over a half-open I/Q rectangle."""
    sd = math.sqrt(sigma2 / 2.0)
    mre, mim = float(np.real(mean)), float(np.imag(mean))
    p_re = _interval_prob((cell.re_lo - mre) / sd, (cell.re_hi - mre) / sd)
    p_im = _interval_prob((cell.im_lo - mim) / sd, (cell.im_hi - mim) / sd)
    return p_re * p_im


def _radial_mass(a0, a1, c, s):
    """Closed form of integral over [a0, a1) of r * exp(-(r-c)^2/s^2) dr."""
    u0 = a0 - c
    e0 = math.exp(-(u0 * u0) / (s * s))
    if math.isinf(a1):
        e1 = 0.0
        f1 = 1.0
    else:
        u1 = a1 - c
        e1 = math.exp(-(u1 * u1) / (s * s))
        f1 = math.erf(u1 / s)
    f0 = math.erf(u0 / s)
    return 0.5 * s * s * (e0 - e1) + c * (s * _SQRT_PI / 2.0) * (f1 - f0)


def _radial_mass_r2(a0, a1, c, s):
    """Closed form of integral over [a0, a1) of r^2 * exp(-(r-c)^2/s^2) dr."""
    u0 = a0 - c
    e0 = math.exp(-(u0 * u0) / (s * s))
    g0 = u0 * e0
    f0 = math.erf(u0 / s)
    if math.isinf(a1):
        e1 = 0.0
        g1 = 0.0
        f1 = 1.0
    else:
        u1 = a1 - c
        e1 = math.exp(-(u1 * u1) / (s * s))
        g1 = u1 * e1
        f1 = math.erf(u1 / s)
    s2 = s * s
    half_erf = (s * _SQRT_PI / 2.0) * (f1 - f0)
    term_u2 = 0.5 * s2 * (g0 - g1) + 0.5 * s2 * half_erf
    term_u1 = c * s2 * (e0 - e1)
    term_u0 = c * c * half_erf
    return term_u2 + term_u1 + term_u0


def _sector_geometry(mean, cell):
    """Rotate the frame so the mean sits on the positive real axis."""
    mu = abs(mean)
    th = math.atan2(float(np.imag(mean)), float(np.real(mean))) if mu > 0 else 0.0
    lo = cell.ang_lo - th
    hi = cell.ang_hi - th
    # recenter so the integrand's peak (psi = 0 mod 2pi) is inside when possible
    k = math.floor((lo + math.pi) / (2.0 * math.pi) + 0.5)
    lo -= 2.0 * math.pi * k
    hi -= 2.0 * math.pi * k
    return mu, th, lo, hi


def polar_prob(mean: complex, sigma2: float, cell: Sector, tol: float = 1e-9) -> float:
    """Mass of CN(mean, sigma2) over an annular sector.

    The radial integral is closed-form (erf after completing the square);
    the remaining angular integral uses adaptive Gauss-Kronrod quadrature
    to absolute tolerance ``tol``.
    """
    if not (0.0 <= cell.a_lo < cell.a_hi):
        raise ValueError("need 0 <= a_lo < a_hi")
    s = math.sqrt(sigma2)
    mu, _, lo, hi = _sector_geometry(mean, cell)

    def integrand(psi):
        c = mu * math.cos(psi)
        w = math.exp(-(mu * mu) * math.sin(psi) ** 2 / (s * s))
        return w * _radial_mass(cell.a_lo, cell.a_hi, c, s) / (math.pi * s * s)

    pts = [x for x in (0.0,) if lo < x < hi]
    val, err = integrate.quad(integrand, lo, hi, epsabs=tol * 0.1, epsrel=0.0,
                              limit=400, points=pts or None)
    if err > tol:
        raise QuadratureError(f"angular quadrature reached {err:.3e} > tol {tol:.3e}")
    return min(max(val, 0.0), 1.0)


def _sector_centroid(approx: GaussianApprox, cell: Sector, tol: float = 1e-9) -> complex:
    s = math.sqrt(approx.variance)
    mu, th, lo, hi = _sector_geometry(approx.mean, cell)
    mass = polar_prob(approx.mean, approx.variance, cell, tol=tol)
    if mass < 1e-12:
        raise ValueError("cell has near-zero probability under the design density")

    def moment(psi, trig):
        c = mu * math.cos(psi)
        w = math.exp(-(mu * mu) * math.sin(psi) ** 2 / (s * s))
        return trig(psi) * w * _radial_mass_r2(cell.a_lo, cell.a_hi, c, s) / (math.pi * s * s)

    pts = [x for x in (0.0,) if lo < x < hi]
    re, re_err = integrate.quad(lambda p: moment(p, math.cos), lo, hi,
                                epsabs=tol * 0.1, epsrel=0.0, limit=400, points=pts or None)
    im, im_err = integrate.quad(lambda p: moment(p, math.sin), lo, hi,
                                epsabs=tol * 0.1, epsrel=0.0, limit=400, points=pts or None)
    if max(re_err, im_err) > tol:
        raise QuadratureError(f"centroid quadrature reached {max(re_err, im_err):.3e} > tol {tol:.3e}")
    return complex(re, im) / mass * complex(math.cos(th), math.sin(th))


def cell_centroid(approx: GaussianApprox, cell) -> complex:
    """Conditional mean of the design density over one quantizer cell."""
    if isinstance(cell, Rect):
        sd = math.sqrt(approx.variance / 2.0)
        mre, mim = float(np.real(approx.mean)), float(np.imag(approx.mean))
        if rect_prob(approx.mean, approx.variance, cell) < 1e-12:
            raise ValueError("cell has near-zero probability under the design density")
        c_re = mre + sd * truncated_normal_mean((cell.re_lo - mre) / sd, (cell.re_hi - mre) / sd)
        c_im = mim + sd * truncated_normal_mean((cell.im_lo - mim) / sd, (cell.im_hi - mim) / sd)
        return complex(c_re, c_im)
    if isinstance(cell, Sector):
        return _sector_centroid(approx, cell)
    raise TypeError(f"unsupported cell type {type(cell)!r}")
