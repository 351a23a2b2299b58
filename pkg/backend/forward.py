"""Helmholtz transmission problem by boundary integral equations, and MSR simulation.

The unknowns are the interior density phi (wavenumber k) and the exterior
density psi (wavenumber k0) of

    S^k[phi] - S^k0[psi]                                  = U
    (1/mu*) (-1/2 + K^k*)[phi] - (1/mu0) (1/2 + K^k0*)[psi] = (1/mu0) dU/dnu

with Gamma_k = -(i/4) H0(k|x|). Both operators are discretized by the
Kussmaul-Martensen (Kress) splitting of the logarithmic singularity on the
2*pi-periodic parametrization.
"""
import logging
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import linalg
from scipy.linalg import lapack

from backend import specfun
from backend.errors import AcquisitionError, DomainError, NearResonanceError

logger = logging.getLogger(__name__)

CONDITION_LIMIT = 1e12


@dataclass(frozen=True)
class Medium:
    """Permittivity and permeability inside the inclusion and in the background."""

    eps_star: float = 3.0
    mu_star: float = 3.0
    eps0: float = 1.0
    mu0: float = 1.0

    def __post_init__(self):
        if min(self.eps_star, self.mu_star, self.eps0, self.mu0) <= 0:
            raise DomainError("material parameters must be positive")

    def k(self, omega):
        return omega * np.sqrt(self.eps_star * self.mu_star)

    def k0(self, omega):
        return omega * np.sqrt(self.eps0 * self.mu0)

    def to_dict(self):
        return {"eps_star": self.eps_star, "mu_star": self.mu_star,
                "eps0": self.eps0, "mu0": self.mu0}


def wrapped_distance(a, b):
    """Distance between angles on the circle, in [0, pi]."""
    d = np.mod(np.asarray(a) - np.asarray(b), 2.0 * np.pi)
    return np.minimum(d, 2.0 * np.pi - d)


@dataclass(frozen=True)
class AcquisitionConfig:
    """Circular acquisition: Nr receivers on a circle, Ns plane-wave directions.

    For a limited view the array is split into ``n_groups`` groups, group g
    centred at angle 2*pi*g/n_groups and seeing the sources and receivers
    within aperture/2 (plus half an angular step) of its centre. An MSR entry
    is measured iff its source and receiver share a group.
    """

    R: float = 3.0
    z0: tuple = (0.0, 0.0)
    Ns: int = 91
    Nr: int = 91
    aperture: float = 2.0 * np.pi
    n_groups: int = 1

    def __post_init__(self):
        if self.R <= 0:
            raise AcquisitionError("measurement radius must be positive")
        if self.Ns < 1 or self.Nr < 1:
            raise AcquisitionError("need at least one source and one receiver")
        if not 0 < self.aperture <= 2.0 * np.pi + 1e-12:
            raise AcquisitionError("aperture must lie in (0, 2*pi]")
        if self.n_groups < 1:
            raise AcquisitionError("n_groups must be >= 1")
        object.__setattr__(self, "z0", tuple(float(c) for c in self.z0))

    @property
    def full_view(self):
        return self.aperture >= 2.0 * np.pi - 1e-12

    @property
    def source_angles(self):
        return 2.0 * np.pi * np.arange(1, self.Ns + 1) / self.Ns

    @property
    def receiver_angles(self):
        return 2.0 * np.pi * np.arange(1, self.Nr + 1) / self.Nr

    @property
    def source_directions(self):
        a = self.source_angles
        return np.column_stack([np.cos(a), np.sin(a)])

    @property
    def receivers(self):
        a = self.receiver_angles
        return np.asarray(self.z0) + self.R * np.column_stack([np.cos(a), np.sin(a)])

    @property
    def mask(self):
        if self.full_view:
            return np.ones((self.Ns, self.Nr), dtype=bool)
        centers = 2.0 * np.pi * np.arange(self.n_groups) / self.n_groups
        reach = 0.5 * self.aperture + np.pi / max(self.Ns, self.Nr)
        src = wrapped_distance(self.source_angles[None, :], centers[:, None]) <= reach
        rec = wrapped_distance(self.receiver_angles[None, :], centers[:, None]) <= reach
        return (src.T.astype(int) @ rec.astype(int)) > 0

    def to_dict(self):
        return {"R": self.R, "z0": list(self.z0), "Ns": self.Ns, "Nr": self.Nr,
                "aperture": self.aperture, "n_groups": self.n_groups}


@dataclass(frozen=True, eq=False)
class MSRMatrix:
    """Ns x Nr multistatic response; unmeasured entries are zero and False in ``mask``."""

    values: np.ndarray
    omega: float
    acquisition: AcquisitionConfig
    medium: Medium = field(default_factory=Medium)
    mask: np.ndarray = None
    noise_sigma: float = 0.0
    seed: int = None
    perimeter: float = None

    def __post_init__(self):
        acq = self.acquisition
        if self.values.shape != (acq.Ns, acq.Nr):
            raise AcquisitionError(
                f"MSR shape {self.values.shape} does not match acquisition ({acq.Ns}, {acq.Nr})"
            )
        if self.mask is None:
            object.__setattr__(self, "mask", acq.mask)

    @property
    def k0(self):
        return self.medium.k0(self.omega)

    @property
    def snr(self):
        """(|dD| / sqrt(R)) / sigma_noise; infinite for noiseless data."""
        if self.perimeter is None:
            return None
        if self.noise_sigma == 0:
            return float("inf")
        return self.perimeter / np.sqrt(self.acquisition.R) / self.noise_sigma

    def valid_values(self):
        return self.values[self.mask]


# --- boundary operators ----------------------------------------------------

def _log_weights(n_points):
    """Kress weights R_j for the integral of ln(4 sin^2((t-tau)/2)) f(tau)."""
    n = n_points // 2
    tau = np.pi * np.arange(n_points) / n
    m = np.arange(1, n)
    r = -(2.0 * np.pi / n) * (np.cos(np.outer(tau, m)) / m).sum(axis=1)
    r -= (np.pi / n**2) * np.cos(n * tau)
    index = np.subtract.outer(np.arange(n_points), np.arange(n_points)) % n_points
    return r[index]


def layer_matrices(b, k):
    """Nystrom matrices of the single layer and its normal-derivative operator.

    Both use the kernel Phi_k = (i/4) H0(k|x-y|) and act on densities per unit
    arclength: S[phi](x_i) = int Phi phi ds, K'[phi](x_i) = int dPhi/dnu_x phi ds.
    """
    n_points = b.n_points
    n = n_points // 2
    diag = np.eye(n_points, dtype=bool)
    diff = b.points[:, None, :] - b.points[None, :, :]
    r = np.where(diag, 1.0, np.hypot(diff[..., 0], diff[..., 1]))
    kr = k * r
    speed = b.speed
    sp = speed[None, :]
    t = b.parameters
    with np.errstate(divide="ignore"):
        logsin = np.log(4.0 * np.sin(np.subtract.outer(t, t) / 2.0) ** 2)
    logsin[diag] = 0.0
    weights = _log_weights(n_points)

    h0 = specfun.hankel1(0, kr)
    j0 = specfun.bessel_j(0, kr)
    m_full = 0.25j * h0 * sp
    m_log = -j0 * sp / (4.0 * np.pi)
    m_smooth = m_full - m_log * logsin
    m_log[diag] = -speed / (4.0 * np.pi)
    m_smooth[diag] = (
        0.25j - np.euler_gamma / (2.0 * np.pi) - np.log(k * speed / 2.0) / (2.0 * np.pi)
    ) * speed
    single = weights * m_log + (np.pi / n) * m_smooth

    g = np.einsum("ik,ijk->ij", b.normals, diff) / r
    h1 = specfun.hankel1(1, kr)
    j1 = specfun.bessel_j(1, kr)
    n_full = -0.25j * k * h1 * g * sp
    n_log = k * j1 * g * sp / (4.0 * np.pi)
    n_smooth = n_full - n_log * logsin
    dx, ddx = b.tangents, b.accelerations
    n_log[diag] = 0.0
    n_smooth[diag] = (dx[:, 1] * ddx[:, 0] - dx[:, 0] * ddx[:, 1]) / speed**2 / (4.0 * np.pi)
    adjoint = weights * n_log + (np.pi / n) * n_smooth
    return single, adjoint


def system_matrix(b, med, omega):
    """2N x 2N matrix of the transmission system for unknowns (phi, psi)."""
    s_in, kp_in = layer_matrices(b, med.k(omega))
    s_out, kp_out = layer_matrices(b, med.k0(omega))
    eye = np.eye(b.n_points)
    # S^k = -S_Phi and K^k* = -K'_Phi since Gamma_k = -Phi_k
    top = np.hstack([-s_in, s_out])
    bottom = np.hstack([(-0.5 * eye - kp_in) / med.mu_star, -(0.5 * eye - kp_out) / med.mu0])
    return np.vstack([top, bottom])


class BoundarySolver:
    """LU factorization of the transmission system for one (boundary, omega)."""

    def __init__(self, b, med, omega):
        self.boundary = b
        self.medium = med
        self.omega = omega
        matrix = system_matrix(b, med, omega)
        anorm = np.linalg.norm(matrix, 1)
        self.lu, self.piv = linalg.lu_factor(matrix, check_finite=False)
        gecon, = lapack.get_lapack_funcs(("gecon",), (self.lu,))
        rcond, _ = gecon(self.lu, anorm, norm="1")
        self.condition = np.inf if rcond == 0 else 1.0 / rcond
        if self.condition > CONDITION_LIMIT:
            raise NearResonanceError(omega, self.condition)
        logger.debug("factorized %s at omega=%.4f (cond %.2e)", b.name, omega, self.condition)

    def solve(self, u_trace, dnu_u):
        """Densities for boundary data; columns of the inputs are separate sources."""
        n = self.boundary.n_points
        rhs = np.concatenate([np.asarray(u_trace), np.asarray(dnu_u) / self.medium.mu0], axis=0)
        dens = linalg.lu_solve((self.lu, self.piv), rhs.astype(complex), check_finite=False)
        return dens[:n], dens[n:]


def solve_densities(b, med, omega, u_trace, dnu_u):
    """Solve the transmission system for (phi, psi) given U and dU/dnu on the boundary."""
    return BoundarySolver(b, med, omega).solve(u_trace, dnu_u)


def plane_wave_data(b, k0, directions):
    """Traces of U_s(x) = exp(i k0 xi_s . x) and their normal derivatives, shape (N, Ns)."""
    directions = np.atleast_2d(directions)
    u = np.exp(1j * k0 * b.points @ directions.T)
    return u, 1j * k0 * (b.normals @ directions.T) * u


def cylindrical_wave_data(b, k0, modes):
    """Traces of u_m and d u_m / dnu on the boundary, shape (N, len(modes))."""
    modes = np.asarray(modes)
    pts = b.points[:, None, :]
    u = specfun.cylindrical_wave(modes[None, :], k0, pts)
    gx, gy = specfun.cylindrical_wave_gradient(modes[None, :], k0, pts)
    dnu = b.normals[:, :1] * gx + b.normals[:, 1:] * gy
    return u, dnu


def evaluate_scattered(b, psi, k0, x):
    """S^k0[psi](x) at exterior points; returns (values, near_boundary).

    ``near_boundary`` flags points closer to the boundary than one quadrature
    spacing, where the trapezoid rule loses accuracy.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if np.any(b.contains(x)):
        raise DomainError("evaluation points must lie outside the inclusion")
    diff = x[:, None, :] - b.points[None, :, :]
    dist = np.hypot(diff[..., 0], diff[..., 1])
    near = dist.min(axis=1) < b.spacing
    if np.any(near):
        logger.warning("%d evaluation point(s) within one quadrature spacing of %s",
                       int(near.sum()), b.name)
    kernel = -0.25j * specfun.hankel1(0, k0 * dist) * b.weights[None, :]
    return kernel @ np.asarray(psi), near


def simulate_msr(b, med, acq, omega):
    """V_sr = u_s(x_r) - U_s(x_r) for plane-wave sources and circular receivers."""
    if b.circumradius(acq.z0) >= acq.R:
        raise AcquisitionError("measurement circle must enclose the inclusion")
    k0 = med.k0(omega)
    solver = BoundarySolver(b, med, omega)
    _, psi = solver.solve(*plane_wave_data(b, k0, acq.source_directions))
    scattered, _ = evaluate_scattered(b, psi, k0, acq.receivers)
    values = scattered.T.copy()
    mask = acq.mask
    values[~mask] = 0.0
    logger.info("simulated MSR for %s at omega=%.4f (%dx%d)", b.name, omega, acq.Ns, acq.Nr)
    return MSRMatrix(values=values, omega=omega, acquisition=acq, medium=med,
                     mask=mask, perimeter=b.perimeter)


def add_noise(v, sigma0, seed):
    """Add white complex Gaussian noise of level sigma0 * ||V||_F / sqrt(#entries)."""
    if sigma0 < 0:
        raise DomainError("noise level must be non-negative")
    valid = v.valid_values()
    sigma = sigma0 * np.linalg.norm(valid) / np.sqrt(valid.size)
    rng = np.random.default_rng(seed)
    shape = v.values.shape
    noise = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)
    values = v.values.copy()
    if sigma0 > 0:
        values[v.mask] += sigma * noise[v.mask]
    return replace(v, values=values, noise_sigma=float(sigma), seed=seed)


def farfield_direct(b, med, omega, source_angles, observation_angles):
    """Far-field pattern A_D(theta_xi, theta_x) by integrating the exterior density."""
    k0 = med.k0(omega)
    src = np.column_stack([np.cos(source_angles), np.sin(source_angles)])
    obs = np.column_stack([np.cos(observation_angles), np.sin(observation_angles)])
    _, psi = solve_densities(b, med, omega, *plane_wave_data(b, k0, src))
    kernel = np.exp(-1j * k0 * obs @ b.points.T) * b.weights[None, :]
    return (kernel @ psi).T


# --- centred disk by separation of variables ---------------------------------

def disk_scattering_coefficient(m, radius, med, omega):
    """beta_m with u - U = beta_m H_m(k0 r) e^{i m theta} for the source u_m."""
    k, k0 = med.k(omega), med.k0(omega)
    jk, djk = specfun.bessel_j(m, k * radius), specfun.bessel_j_derivative(m, k * radius)
    j0, dj0 = specfun.bessel_j(m, k0 * radius), specfun.bessel_j_derivative(m, k0 * radius)
    h0, dh0 = specfun.hankel1(m, k0 * radius), specfun.hankel1_derivative(m, k0 * radius)
    num = (k0 / med.mu0) * jk * dj0 - (k / med.mu_star) * djk * j0
    den = (k / med.mu_star) * djk * h0 - (k0 / med.mu0) * jk * dh0
    return num / den


def disk_density(m, radius, med, omega, theta):
    """Exact (phi, psi) on the circle for the source u_m."""
    k, k0 = med.k(omega), med.k0(omega)
    beta = disk_scattering_coefficient(m, radius, med, omega)
    alpha = (specfun.bessel_j(m, k0 * radius) + beta * specfun.hankel1(m, k0 * radius)) \
        / specfun.bessel_j(m, k * radius)
    c_psi = 2j * beta / (np.pi * radius * specfun.bessel_j(m, k0 * radius))
    c_phi = 2j * alpha / (np.pi * radius * specfun.hankel1(m, k * radius))
    mode = np.exp(1j * m * np.asarray(theta))
    return c_phi * mode, c_psi * mode


def disk_scattered_field(x, radius, med, omega, source_angle, order=None):
    """Scattered field of a centred disk for the plane wave of direction ``source_angle``."""
    k0 = med.k0(omega)
    if order is None:
        order = int(k0 * radius) + 30
    r, theta = specfun.polar(np.atleast_2d(x))
    modes = specfun.orders(order)
    beta = disk_scattering_coefficient(modes, radius, med, omega)
    terms = (np.exp(1j * modes * (np.pi / 2 - source_angle)) * beta)[None, :] \
        * specfun.hankel1(modes[None, :], k0 * r[:, None]) * np.exp(1j * np.outer(theta, modes))
    return terms.sum(axis=1)
