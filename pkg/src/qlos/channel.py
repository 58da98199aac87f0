"""Line-of-sight MIMO channel construction and application.

Symmetric uniform arrays facing each other across range R with spacing d.
The per-antenna-pair path differences reduce to the cross-over phase
theta = (2 pi / lambda) (sqrt(R^2 + d^2) - R); at theta = pi/2 the channel
columns are orthogonal and the link supports one stream per antenna.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

SPEED_OF_LIGHT = 299792458.0

# exponent multiplicities m(i, k): how many "diagonal steps" separate
# transmit antenna k from receive antenna i in the square 2x2-grid array
_M4 = np.array([[0, 1, 2, 1],
                [1, 0, 1, 2],
                [2, 1, 0, 1],
                [1, 2, 1, 0]])
_M2 = np.array([[0, 1],
                [1, 0]])


@dataclass(frozen=True)
class LosGeometry:
    range_m: float
    spacing_m: float
    wavelength_m: float
    n: int
    range_nominal_m: float | None = None
    aperture_tx_m2: float | None = None
    aperture_rx_m2: float | None = None

    def __post_init__(self):
        if self.range_m <= 0 or self.spacing_m <= 0 or self.wavelength_m <= 0:
            raise ValueError("range, spacing and wavelength must be positive")
        if self.n not in (2, 4):
            raise ValueError("array size per side must be 2 or 4")

    @classmethod
    def from_carrier(cls, range_m: float, spacing_m: float, carrier_ghz: float,
                     n: int, **kw) -> "LosGeometry":
        wavelength = SPEED_OF_LIGHT / (carrier_ghz * 1e9)
        return cls(range_m, spacing_m, wavelength, n, **kw)


@dataclass(frozen=True)
class ChannelMatrix:
    n: int
    theta: float
    phi: float
    entries: np.ndarray

    @property
    def matrix(self) -> np.ndarray:
        return self.entries


@dataclass(frozen=True)
class NoiseSpec:
    """Noise variance per complex receive dimension; SNR = 1/sigma2 at unit symbol energy."""

    sigma2: float

    def __post_init__(self):
        if self.sigma2 <= 0:
            raise ValueError("sigma2 must be positive")

    @property
    def snr_db(self) -> float:
        return -10.0 * math.log10(self.sigma2)

    @classmethod
    def from_snr_db(cls, snr_db: float) -> "NoiseSpec":
        return cls(10.0 ** (-snr_db / 10.0))


def crossover_phase(g: LosGeometry, mode: str = "exact") -> float:
    """Cross-over phase theta in [0, 2 pi)."""
    if mode == "exact":
        # hypot(R, d) - R computed stably for d << R
        delta = g.spacing_m ** 2 / (math.hypot(g.range_m, g.spacing_m) + g.range_m)
        theta = 2.0 * math.pi / g.wavelength_m * delta
    elif mode == "approximate":
        theta = math.pi * g.spacing_m ** 2 / (g.wavelength_m * g.range_m)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return theta % (2.0 * math.pi)


def calibrate_spacing(range_m: float, wavelength_m: float, n: int = 4,
                      target_theta: float = math.pi / 2) -> float:
    """Spacing d such that the exact cross-over phase at range_m equals target_theta.

    Bisection on the exact formula to 1e-12 relative width.
    """
    lo = 0.0
    hi = math.sqrt(wavelength_m * range_m)  # approx formula gives theta = pi there
    geom = lambda d: LosGeometry(range_m, d, wavelength_m, n)
    while crossover_phase(geom(hi), "exact") < target_theta:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if crossover_phase(geom(mid), "exact") < target_theta:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-12 * hi:
            break
    return 0.5 * (lo + hi)


def los_channel(n: int, theta: float, phi: float) -> ChannelMatrix:
    """Normalized LoS channel with unit-norm columns."""
    if not (np.isfinite(theta) and np.isfinite(phi)):
        raise ValueError("theta and phi must be finite")
    if n == 4:
        mult, scale = _M4, 0.5
    elif n == 2:
        mult, scale = _M2, 1.0 / math.sqrt(2.0)
    else:
        raise ValueError(f"unsupported array size {n}")
    entries = scale * np.exp(-1j * (phi + theta * mult))
    return ChannelMatrix(n=n, theta=theta, phi=phi, entries=entries)


def apply_channel(H: ChannelMatrix, x, noise: NoiseSpec, rng: np.random.Generator):
    """Y = H x + N with i.i.d. CN(0, sigma2) noise per receive dimension."""
    x = np.asarray(x, dtype=complex)
    if x.shape != (H.n,):
        raise ValueError(f"expected symbol vector of length {H.n}, got shape {x.shape}")
    sd = math.sqrt(noise.sigma2 / 2.0)
    n_c = sd * (rng.standard_normal(H.n) + 1j * rng.standard_normal(H.n))
    return H.entries @ x + n_c


@dataclass(frozen=True)
class PhiPolicy:
    """How the common phase is handled across frames or MI evaluations.

    fixed:<rad>  constant phi
    grid:<size>  average over <size> uniform points on [0, 2*pi)
    uniform      fresh uniform draw per frame (sweep engine only)
    """

    kind: str
    value: float = 0.0
    size: int = 256

    @classmethod
    def parse(cls, text: str) -> "PhiPolicy":
        t = text.strip().lower()
        if t in ("avg", "grid"):
            return cls(kind="grid")
        if t.startswith("grid:"):
            size = int(t.split(":", 1)[1])
            if size < 1:
                raise ValueError("grid size must be positive")
            return cls(kind="grid", size=size)
        if t in ("uniform", "uniform-random"):
            return cls(kind="uniform")
        if t.startswith("fixed:"):
            return cls(kind="fixed", value=float(t.split(":", 1)[1]))
        raise ValueError(f"unknown phi policy {text!r}")

    def grid_points(self) -> np.ndarray:
        # Half-step offset: any uniform grid integrates the smooth periodic
        # phi-average spectrally, but left-aligned points land on the
        # measure-zero phases where noiseless outputs coincide with sector
        # boundaries (phi multiple of pi/4), which would get overweighted.
        if self.kind == "fixed":
            return np.array([self.value])
        if self.kind == "grid":
            return (np.arange(self.size) + 0.5) * (2.0 * math.pi / self.size)
        raise ValueError("uniform policy has no deterministic grid")

    def __str__(self) -> str:
        if self.kind == "fixed":
            return f"fixed:{self.value!r}"
        if self.kind == "grid":
            return f"grid:{self.size}"
        return "uniform"


def dof_estimate(g: LosGeometry, kind: str) -> float:
    """Spatial degrees of freedom supported by the aperture geometry."""
    if kind == "linear1D":
        length = (g.n - 1) * g.spacing_m
        return length * length / (g.range_m * g.wavelength_m) + 1.0
    if kind == "planar2D":
        if g.aperture_tx_m2 is None or g.aperture_rx_m2 is None:
            raise ValueError("planar2D needs aperture_tx_m2 and aperture_rx_m2")
        return (g.aperture_tx_m2 * g.aperture_rx_m2
                / (g.range_m ** 2 * g.wavelength_m ** 2) + 1.0)
    raise ValueError(f"unknown kind {kind!r}")
