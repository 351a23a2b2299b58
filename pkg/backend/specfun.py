"""Integer-order Bessel and Hankel functions and cylindrical waves.

All functions accept scalars or numpy arrays and broadcast like ufuncs.
Values come from ``scipy.special``; this module adds the order cap and the
domain checks the rest of the pipeline relies on.
"""
import logging

import numpy as np
from scipy import special

from backend.errors import DomainError

logger = logging.getLogger(__name__)

MAX_ORDER = 200


def _check_order(n):
    n = np.asarray(n)
    if not np.issubdtype(n.dtype, np.integer):
        if not np.all(np.equal(np.mod(n, 1), 0)):
            raise DomainError("Bessel order must be an integer")
        n = n.astype(int)
    if np.any(np.abs(n) > MAX_ORDER):
        raise DomainError(f"Bessel order beyond supported range |n| <= {MAX_ORDER}")
    return n


def _check_positive(x, name):
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise DomainError(f"{name} requires x > 0 (logarithmic singularity at 0)")
    return x


def bessel_j(n, x):
    """Bessel function of the first kind J_n(x) for x >= 0."""
    n = _check_order(n)
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise DomainError("bessel_j requires x >= 0")
    return special.jv(n, x)


def bessel_y(n, x):
    """Bessel function of the second kind Y_n(x) for x > 0."""
    n = _check_order(n)
    x = _check_positive(x, "bessel_y")
    return special.yv(n, x)


def hankel1(n, x):
    """Hankel function of the first kind H_n^(1)(x) = J_n(x) + i Y_n(x)."""
    n = _check_order(n)
    x = _check_positive(x, "hankel1")
    return special.hankel1(n, x)


def bessel_j_derivative(n, x):
    """First derivative J_n'(x)."""
    n = _check_order(n)
    return special.jvp(n, np.asarray(x, dtype=float))


def hankel1_derivative(n, x):
    """First derivative of H_n^(1) at x > 0."""
    n = _check_order(n)
    x = _check_positive(x, "hankel1_derivative")
    return special.h1vp(n, x)


def polar(x):
    """Return (|x|, theta_x) for points of shape (..., 2); theta of the origin is 0."""
    x = np.asarray(x, dtype=float)
    return np.hypot(x[..., 0], x[..., 1]), np.arctan2(x[..., 1], x[..., 0])


def cylindrical_wave(m, k0, x):
    """Cylindrical wave u_m(x) = J_m(k0|x|) exp(i m theta_x).

    ``m`` and the leading dimensions of ``x`` broadcast against each other;
    ``x`` carries the two Cartesian components on its last axis.
    """
    if k0 <= 0:
        raise DomainError("wavenumber k0 must be positive")
    r, theta = polar(x)
    m = _check_order(m)
    return bessel_j(m, k0 * r) * np.exp(1j * m * theta)


def cylindrical_wave_gradient(m, k0, x):
    """Cartesian gradient of u_m at x, returned as (d/dx1, d/dx2).

    Uses the ladder identities (d1 -/+ i d2) u_m = +/- k0 u_{m-/+1}, which
    stay regular at the origin.
    """
    m = np.asarray(m)
    lower = cylindrical_wave(m - 1, k0, x)
    upper = cylindrical_wave(m + 1, k0, x)
    return 0.5 * k0 * (lower - upper), 0.5j * k0 * (lower + upper)


def orders(K):
    """Mode indices -K..K as an integer array."""
    return np.arange(-K, K + 1)
