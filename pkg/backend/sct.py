"""Scattering coefficients W_mn and their transformation laws."""
import logging
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import special

from backend import specfun
from backend.errors import DomainError
from backend.forward import BoundarySolver, Medium, cylindrical_wave_data
from backend.geometry import RigidTransform, transform

logger = logging.getLogger(__name__)

TRUNCATION_MARGIN = 10


@dataclass(frozen=True, eq=False)
class ScatteringCoeffMatrix:
    """(2K+1)x(2K+1) matrix; row m, column n for m, n in -K..K."""

    values: np.ndarray
    K: int
    omega: float
    medium: Medium = field(default_factory=Medium)
    shape: str = None

    def __post_init__(self):
        size = 2 * self.K + 1
        if self.K < 0 or self.values.shape != (size, size):
            raise DomainError(f"W of order {self.K} must be {size}x{size}, got {self.values.shape}")

    @property
    def orders(self):
        return specfun.orders(self.K)

    def entry(self, m, n):
        return self.values[m + self.K, n + self.K]

    def truncate(self, K):
        """Leading block of order K <= self.K."""
        if K > self.K:
            raise DomainError(f"cannot truncate order {self.K} matrix to {K}")
        lo, hi = self.K - K, self.K + K + 1
        return replace(self, values=self.values[lo:hi, lo:hi].copy(), K=K)


def compute_w(b, med, omega, K):
    """W_mn = int conj(u_n) psi_m ds; one factorization for all 2K+1 sources."""
    if K < 0:
        raise DomainError("order K must be >= 0")
    k0 = med.k0(omega)
    modes = specfun.orders(K)
    u, dnu = cylindrical_wave_data(b, k0, modes)
    _, psi = BoundarySolver(b, med, omega).solve(u, dnu)
    values = psi.T @ (b.weights[:, None] * np.conj(u))
    logger.debug("computed W (K=%d) for %s at omega=%.4f", K, b.name, omega)
    return ScatteringCoeffMatrix(values=values, K=K, omega=omega, medium=med, shape=b.name)


def _translation_matrix(z, k0, K_out, K_in):
    """T[m, p] = u_{m-p}(z) for m in -K_out..K_out, p in -K_in..K_in."""
    shift = np.subtract.outer(specfun.orders(K_out), specfun.orders(K_in))
    z = np.asarray(z, dtype=float)
    if not np.any(z):
        return (shift == 0).astype(complex)
    return specfun.cylindrical_wave(shift, k0, z)


def _translate_values(values, K_in, z, k0, K_out):
    t = _translation_matrix(z, k0, K_out, K_in)
    return t @ values @ t.conj().T


def translate_w(w, z, k0, K_out, margin=TRUNCATION_MARGIN):
    """W[D + z] of order K_out from W[D]; returns (matrix, tail_estimate).

    The tail estimate is the largest entry change caused by dropping the
    outermost input order, a proxy for the truncation error of the series.
    """
    if w.K < K_out + margin:
        logger.warning("translating order %d input to order %d leaves a margin below %d",
                       w.K, K_out, margin)
    values = _translate_values(w.values, w.K, z, k0, K_out)
    if w.K == 0:
        tail = float(np.max(np.abs(values)))
    else:
        inner = w.truncate(w.K - 1)
        coarse = _translate_values(inner.values, inner.K, z, k0, K_out)
        tail = float(np.max(np.abs(values - coarse)))
    return replace(w, values=values, K=K_out), tail


def rotate_w(w, theta):
    """W[R_theta D]_mn = exp(i (m - n) theta) W[D]_mn."""
    m = w.orders
    phase = np.exp(1j * np.subtract.outer(m, m) * theta)
    return replace(w, values=w.values * phase)


def scale_law_check(b, med, omega, s, K):
    """max |W[sD, omega] - W[D, s omega]| over the (2K+1)^2 entries."""
    scaled = compute_w(transform(b, RigidTransform(s=s)), med, omega, K)
    stretched = compute_w(b, med, s * omega, K)
    return float(np.max(np.abs(scaled.values - stretched.values)))


def fit_decay_constant(w, floor=1e-12):
    """Smallest C with |W_mn| <= C^(|m|+|n|) / (|m|^|m| |n|^|n|) on the fitted entries.

    Entries below ``floor`` times the largest entry sit at round-off level
    and are excluded.
    """
    m = np.abs(w.orders).astype(float)
    mm, nn = np.meshgrid(m, m, indexing="ij")
    magnitude = np.abs(w.values)
    keep = (mm + nn > 0) & (magnitude > floor * magnitude.max())
    if not np.any(keep):
        raise DomainError("no entries above the noise floor to fit a decay constant")
    log_growth = (
        np.log(magnitude[keep])
        + special.xlogy(mm[keep], mm[keep])
        + special.xlogy(nn[keep], nn[keep])
    )
    return float(np.exp(np.max(log_growth / (mm[keep] + nn[keep]))))
