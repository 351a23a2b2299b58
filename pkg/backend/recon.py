"""Acquisition operator L(W) = A W B^H, reconstruction of W from MSR data, stability analysis."""
import logging
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from backend import specfun
from backend.errors import AcquisitionError, BoundNotApplicableError, DomainError
from backend.forward import Medium
from backend.sct import ScatteringCoeffMatrix
from backend.utils import relative_difference

logger = logging.getLogger(__name__)

SINGULAR_CUTOFF = 1e-10
ORTHOGONALITY_TOLERANCE = 1e-6


@dataclass(frozen=True, eq=False)
class AcquisitionOperator:
    A: np.ndarray
    B: np.ndarray
    D_diag: np.ndarray
    K: int
    omega: float
    acquisition: object
    medium: Medium

    @property
    def mask(self):
        return self.acquisition.mask

    @property
    def size(self):
        return 2 * self.K + 1

    @property
    def uniform_full_view(self):
        acq = self.acquisition
        return acq.full_view and min(acq.Ns, acq.Nr) >= self.size

    def orthogonality_defect(self):
        """Relative deviation of A^H A from Ns I and B^H B from Nr D."""
        acq = self.acquisition
        gram_a = self.A.conj().T @ self.A
        gram_b = self.B.conj().T @ self.B
        target_a = acq.Ns * np.eye(self.size)
        target_b = acq.Nr * np.diag(self.D_diag)
        return max(
            np.linalg.norm(gram_a - target_a) / np.linalg.norm(target_a),
            np.linalg.norm(gram_b - target_b) / np.linalg.norm(target_b),
        )


def build_operator(acq, omega, K, medium=None):
    medium = medium or Medium()
    if K < 0:
        raise DomainError("order K must be >= 0")
    k0 = medium.k0(omega)
    m = specfun.orders(K)
    theta_s = acq.source_angles
    theta_r = acq.receiver_angles
    shift = np.exp(1j * k0 * acq.source_directions @ np.asarray(acq.z0))
    A = shift[:, None] * np.exp(1j * np.outer(np.pi / 2 - theta_s, m))
    h = specfun.hankel1(m, k0 * acq.R)
    d = 0.25j * h
    B = (0.25j * np.conj(h))[None, :] * np.exp(-1j * np.outer(theta_r, m))
    return AcquisitionOperator(A=A, B=B, D_diag=np.abs(d) ** 2, K=K, omega=omega,
                               acquisition=acq, medium=medium)


def _check_operand(op, X):
    if np.shape(X) != (op.size, op.size):
        raise AcquisitionError(f"expected a {op.size}x{op.size} coefficient matrix, got {np.shape(X)}")


def _check_msr(op, v):
    acq = op.acquisition
    if v.values.shape != (acq.Ns, acq.Nr):
        raise AcquisitionError(
            f"MSR of shape {v.values.shape} does not fit the operator ({acq.Ns}, {acq.Nr})"
        )


def apply_L(op, X):
    """A X B^H; unmeasured entries of a limited view are returned as zero."""
    _check_operand(op, X)
    values = op.A @ np.asarray(X) @ op.B.conj().T
    if not op.acquisition.full_view:
        values = np.where(op.mask, values, 0.0)
    return values


def _wrap(op, values, v):
    return ScatteringCoeffMatrix(values=values, K=op.K, omega=op.omega, medium=v.medium)


def pinv_reconstruct(op, v):
    """Closed-form least-squares solution (1/(Ns Nr)) A^H V B D^{-1}."""
    _check_msr(op, v)
    if not op.uniform_full_view:
        raise AcquisitionError(
            "analytic pseudo-inverse needs a full view with Ns, Nr >= 2K+1; use lsq_reconstruct"
        )
    defect = op.orthogonality_defect()
    if defect > ORTHOGONALITY_TOLERANCE:
        raise AcquisitionError(
            f"acquisition is not orthogonal (defect {defect:.2e}); use lsq_reconstruct"
        )
    acq = op.acquisition
    values = op.A.conj().T @ v.values @ op.B / op.D_diag[None, :] / (acq.Ns * acq.Nr)
    return _wrap(op, values, v)


def matricize(op):
    """Matrix of L acting on row-major vec(X), restricted to measured MSR entries."""
    full = np.kron(op.A, np.conj(op.B))
    return full[op.mask.ravel()]


def lsq_reconstruct(op, v, cutoff=SINGULAR_CUTOFF):
    """Minimum-norm least-squares W over measured entries; returns (W, effective_rank).

    Singular values below ``cutoff`` times the largest are treated as zero.
    """
    _check_msr(op, v)
    n_unknowns = op.size**2
    if op.acquisition.full_view:
        ua, sa, vha = linalg.svd(op.A, full_matrices=False)
        ub, sb, vhb = linalg.svd(op.B, full_matrices=False)
        product = np.outer(sa, sb)
        keep = product > cutoff * product.max()
        y = np.zeros_like(product, dtype=complex)
        projected = ua.conj().T @ v.values @ ub
        y[keep] = projected[keep] / product[keep]
        values = vha.conj().T @ y @ vhb
        rank = int(keep.sum())
    else:
        values, _, rank, _ = linalg.lstsq(matricize(op), v.values[op.mask],
                                          cond=cutoff, lapack_driver="gelsd")
        values = values.reshape(op.size, op.size)
    if rank < n_unknowns:
        logger.warning("least-squares operator is rank deficient: effective rank %d of %d",
                       rank, n_unknowns)
    return _wrap(op, values, v), rank


def singular_values(op):
    """(m, n, lambda) triples, largest first.

    Uniform full view uses lambda_mn = sqrt(Ns Nr) |d_n|; otherwise the values
    come from an SVD of the masked matricization and carry no (m, n) label.
    """
    acq = op.acquisition
    if op.uniform_full_view:
        m = specfun.orders(op.K)
        lam = np.sqrt(acq.Ns * acq.Nr * op.D_diag)
        triples = [(int(i), int(j), float(lam[j + op.K])) for i in m for j in m]
        return sorted(triples, key=lambda t: -t[2])
    values = linalg.svdvals(matricize(op))
    values = np.concatenate([values, np.zeros(op.size**2 - len(values))])
    return [(None, None, float(x)) for x in np.sort(values)[::-1]]


def condition_number(op):
    lam = np.array([t[2] for t in singular_values(op)])
    if lam.min() == 0:
        logger.warning("acquisition operator is rank deficient (K=%d)", op.K)
        return float("inf")
    return float(lam.max() / lam.min())


def hankel_constant(k0, R):
    """C_R with |H_n(k0 R)|^{-1} growing like (C_R n)^n."""
    return 2.0 / (np.e * k0 * R)


def truncation_error_bound(C_W, C_R, K):
    """rho^{-K}, rho = 1/(C_W^2 C_R), for the MSR truncation error at order K."""
    if not C_W**2 * C_R < 1:
        raise BoundNotApplicableError(f"C_W^2 C_R = {C_W**2 * C_R:.3g} is not below 1")
    if not K > C_W / (C_R * np.e):
        raise BoundNotApplicableError(f"K = {K} does not exceed C_W/(e C_R) = {C_W / (C_R * np.e):.3g}")
    rho = 1.0 / (C_W**2 * C_R)
    return float(rho ** (-K))


def tail_sum(c, k, terms=10_000):
    """sum_{m > k} (c/m)^m, summed over ``terms`` terms."""
    m = np.arange(k + 1, k + 1 + terms, dtype=float)
    return float(np.sum(np.exp(m * np.log(c / m))))


def tail_sum_bound(c, k):
    """(c/k)^k / (1 + ln(k/c)), valid for k > c/e."""
    if not k > c / np.e:
        raise BoundNotApplicableError(f"k = {k} must exceed c/e = {c / np.e:.3g}")
    return float((c / k) ** k / (1.0 + np.log(k / c)))


def max_resolving_order(snr, tau0=1.0):
    """Largest K with K^(K + 1/2) <= tau0 * snr."""
    if not snr > 1:
        raise DomainError("SNR must exceed 1")
    budget = np.log(tau0 * snr)
    K = 0
    while K < specfun.MAX_ORDER and (K + 1.5) * np.log(K + 1) <= budget:
        K += 1
    logger.info("maximal resolving order %d for SNR %.3g (tau0=%g)", K, snr, tau0)
    return K


def relative_error(estimate, truth):
    """||W_est - W||_F / ||W||_F on the estimate's order."""
    return relative_difference(estimate.values, truth.truncate(estimate.K).values)


def tune_order(truth, v, orders, target=0.1):
    """Largest K in ``orders`` whose reconstruction error stays below ``target``.

    ``truth`` is a high-order W of the calibration inclusion and ``v`` its
    MSR. Returns (best K or None, list of (K, relative error)).
    """
    table = []
    for K in sorted(orders):
        op = build_operator(v.acquisition, v.omega, K, v.medium)
        estimate = pinv_reconstruct(op, v) if op.uniform_full_view else lsq_reconstruct(op, v)[0]
        table.append((K, relative_error(estimate, truth)))
    passing = [K for K, err in table if err <= target]
    best = max(passing) if passing else None
    if best is None:
        logger.warning("no order in %s reaches relative error %.3g", list(orders), target)
    return best, table
