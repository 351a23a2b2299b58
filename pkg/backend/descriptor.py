"""Far-field patterns and the translation/rotation invariant shape descriptor.

Patterns live on the uniform grid xi_i = 2*pi*i/Nv of [0, 2*pi)^2, first
axis the source direction, second axis the observation direction. The
descriptor S(v) = int |A(xi)| |A(xi - v)| dxi is computed as a periodic
autocorrelation with FFTs, which is the trapezoid rule on the torus.
"""
import logging
from dataclasses import dataclass, replace

import numpy as np

from backend.errors import DomainError

logger = logging.getLogger(__name__)

FULL_APERTURE = 2.0 * np.pi
FARFIELD_RADIUS_WARNING = 10.0


@dataclass(frozen=True, eq=False)
class FarFieldPattern:
    values: np.ndarray
    omega: float
    mask: np.ndarray = None
    magnitude_only: bool = False
    band_alpha: float = FULL_APERTURE

    def __post_init__(self):
        if self.values.ndim != 2 or self.values.shape[0] != self.values.shape[1]:
            raise DomainError("far-field pattern must be sampled on a square grid")
        if self.mask is None:
            object.__setattr__(self, "mask", np.ones(self.values.shape, dtype=bool))

    @property
    def Nv(self):
        return self.values.shape[0]

    @property
    def grid(self):
        return 2.0 * np.pi * np.arange(self.Nv) / self.Nv

    @property
    def valid_fraction(self):
        return float(self.mask.mean())


@dataclass(frozen=True, eq=False)
class DescriptorTensor:
    """S over (omega_k, v1_i, v2_j); NaN marks lags without valid overlap."""

    values: np.ndarray
    omegas: np.ndarray
    band_alpha: float = FULL_APERTURE
    shape: str = None

    @property
    def Nv(self):
        return self.values.shape[-1]

    @property
    def lags(self):
        return 2.0 * np.pi * np.arange(self.Nv) / self.Nv

    def sums(self):
        """sum_ij S_ijk for every frequency, skipping invalid lags."""
        return np.nansum(self.values, axis=(1, 2))


def farfield_from_w(w, Nv):
    """A(xi) = sum_mn W_mn exp(i m (pi/2 - xi1)) exp(-i n (pi/2 - xi2)) on an Nv x Nv grid."""
    if 2 * w.K + 1 > Nv:
        raise DomainError(f"grid of {Nv} points cannot resolve order {w.K}; need Nv >= {2 * w.K + 1}")
    m = w.orders
    phase = np.array([1, 1j, -1, -1j])[np.mod(np.subtract.outer(m, m), 4)]
    coeffs = np.zeros((Nv, Nv), dtype=complex)
    coeffs[np.ix_(m % Nv, m % Nv)] = w.values * phase
    values = Nv * np.fft.ifft(np.fft.fft(coeffs, axis=0), axis=1)
    return FarFieldPattern(values=values, omega=w.omega)


def farfield_from_msr(v):
    """Magnitude pattern sqrt(8 pi k0 R) |V_sr| placed at the nodes (theta_s, theta_r)."""
    acq = v.acquisition
    if acq.Ns != acq.Nr:
        raise DomainError("far field from MSR needs the same number of sources and receivers")
    if acq.R < FARFIELD_RADIUS_WARNING:
        logger.warning("reading the far field at R=%.3g < %.3g; expect O(1/R) deviations",
                       acq.R, FARFIELD_RADIUS_WARNING)
    magnitude = np.sqrt(8.0 * np.pi * v.k0 * acq.R) * np.abs(v.values)
    # row s-1 holds theta_s = 2 pi s / Ns, which is grid node s mod Ns
    values = np.roll(magnitude, 1, axis=(0, 1))
    mask = np.roll(v.mask, 1, axis=(0, 1))
    return FarFieldPattern(values=np.where(mask, values, 0.0), omega=v.omega, mask=mask,
                           magnitude_only=True,
                           band_alpha=FULL_APERTURE if acq.full_view else acq.aperture)


def band_mask(Nv, alpha):
    grid = 2.0 * np.pi * np.arange(Nv) / Nv
    d = np.mod(np.subtract.outer(grid, grid), 2.0 * np.pi)
    d = np.minimum(d, 2.0 * np.pi - d)
    return d <= alpha + 1e-12


def apply_band(a, alpha):
    """Keep only the band |xi1 - xi2| <= alpha (mod 2 pi) of the pattern."""
    if not 0 < alpha <= FULL_APERTURE + 1e-12:
        raise DomainError("band width must lie in (0, 2*pi]")
    mask = a.mask & band_mask(a.Nv, alpha)
    return replace(a, values=np.where(mask, a.values, 0.0), mask=mask,
                   band_alpha=min(a.band_alpha, float(alpha)))


def _autocorrelation(f):
    spectrum = np.fft.fft2(f)
    return np.real(np.fft.ifft2(spectrum * np.conj(spectrum)))


def shape_descriptor(a, Nv=None):
    """S(v) on the lag grid; Nv may subsample the pattern grid by an integer factor.

    With a partial mask only lags whose shifted masks overlap are kept, and the
    sum is rescaled by (2 pi)^2 / overlap so that it stays comparable with the
    full integral.
    """
    step = 1
    if Nv is not None:
        if a.Nv % Nv:
            raise DomainError(f"lag grid {Nv} must divide the pattern grid {a.Nv}")
        step = a.Nv // Nv
    h = 2.0 * np.pi / a.Nv
    magnitude = np.where(a.mask, np.abs(a.values), 0.0)
    corr = np.maximum(_autocorrelation(magnitude), 0.0)
    if a.mask.all():
        values = h * h * corr
    else:
        overlap = np.rint(_autocorrelation(a.mask.astype(float)))
        with np.errstate(invalid="ignore", divide="ignore"):
            values = np.where(overlap > 0, (2.0 * np.pi) ** 2 * corr / overlap, np.nan)
        empty = int(np.count_nonzero(overlap[::step, ::step] == 0))
        if empty:
            logger.debug("%d lag(s) without valid overlap", empty)
    return values[::step, ::step]


def banded_pattern(w, Nv, band_alpha=FULL_APERTURE):
    """Far-field pattern from W, restricted to the band when alpha < 2 pi."""
    pattern = farfield_from_w(w, Nv)
    if band_alpha < FULL_APERTURE:
        pattern = apply_band(pattern, band_alpha)
    return pattern


def descriptor_tensor(patterns, shape=None, Nv=None):
    """Stack per-frequency descriptor slices; all patterns must share grid and band."""
    if not patterns:
        raise DomainError("no far-field patterns to build a descriptor from")
    bands = {round(p.band_alpha, 12) for p in patterns}
    if len(bands) != 1:
        raise DomainError("patterns were restricted to different bands")
    values = np.stack([shape_descriptor(p, Nv) for p in patterns])
    omegas = np.array([p.omega for p in patterns], dtype=float)
    return DescriptorTensor(values=values, omegas=omegas, band_alpha=patterns[0].band_alpha,
                            shape=shape)


def integrated_descriptor(tensor):
    """int S(v; omega) dv for every frequency of the tensor."""
    h = 2.0 * np.pi / tensor.Nv
    return h * h * tensor.sums()
