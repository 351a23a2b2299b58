import logging
import os

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from backend.forward import add_noise, simulate_msr
from backend.geometry import RigidTransform, transform
from backend.recon import (
    apply_L,
    build_operator,
    condition_number,
    lsq_reconstruct,
    max_resolving_order,
    pinv_reconstruct,
    relative_error,
    tune_order,
)
from backend.sct import compute_w
from backend.storage import load_msr, save_w, write_csv
from backend.utils import child_seeds
from frontend.runs import finish_run, latest_artifacts
from frontend.simulate import target_boundary

logger = logging.getLogger(__name__)


def reconstruct(v, K, method='pinv'):
    """W of order K from an MSR matrix; returns (W, effective rank or None)."""
    op = build_operator(v.acquisition, v.omega, K, v.medium)
    if method == 'pinv' and op.uniform_full_view:
        return pinv_reconstruct(op, v), None
    return lsq_reconstruct(op, v)


def centred_truth(config, omega, K):
    """W of the target shifted to the acquisition centre, used as the reference."""
    b = target_boundary(config)
    z0 = np.asarray(config.acquisition.z0)
    return compute_w(transform(b, RigidTransform(z=tuple(-z0))), config.medium, omega, K)


def _reconstruct_one(config, path):
    v = load_msr(path)
    rec = config.reconstruction
    w, rank = reconstruct(v, rec.K, rec.method)
    op = build_operator(v.acquisition, v.omega, rec.K, v.medium)
    residual = np.linalg.norm(apply_L(op, w.values) - v.values) / np.linalg.norm(v.values)
    truth = centred_truth(config, v.omega, rec.truth_order)
    row = {
        'omega': v.omega,
        'K': rec.K,
        'method': rec.method,
        'condition': condition_number(op),
        'residual': float(residual),
        'relative_error': relative_error(w, truth),
        'effective_rank': rank,
        'noise_sigma': v.noise_sigma,
        'snr': v.snr,
    }
    return w, row


def error_curves(config, omega, threads=1):
    """Relative reconstruction error against K for every noise level of the sweep."""
    rec = config.reconstruction
    b = target_boundary(config)
    clean = simulate_msr(b, config.medium, config.acquisition, omega)
    truth = centred_truth(config, omega, rec.truth_order)
    seeds = child_seeds(config.seed, len(config.sigma_sweep))
    noisy = [add_noise(clean, sigma0, seed) for sigma0, seed in zip(config.sigma_sweep, seeds)]
    tuned = Parallel(n_jobs=threads)(
        delayed(tune_order)(truth, v, rec.orders, rec.target_error) for v in noisy
    )
    curves, orders = [], []
    for sigma0, v, (best, table) in zip(config.sigma_sweep, noisy, tuned):
        for K, err in table:
            curves.append({'sigma0': sigma0, 'omega': omega, 'K': K, 'relative_error': err})
        orders.append({
            'sigma0': sigma0,
            'snr': v.snr,
            'max_resolving_order': max_resolving_order(v.snr) if v.snr > 1 else 0,
            'tuned_order': best,
        })
    return pd.DataFrame(curves), pd.DataFrame(orders)


def run_reconstruct(config, out_dir, threads=1):
    """Reconstruct W from the latest simulated MSR set and report errors."""
    if not config.acquisition.full_view:
        logger.info("reconstruction is skipped for a limited aperture")
        return None
    msr = latest_artifacts(out_dir, 'simulate', 'msr')
    results = Parallel(n_jobs=threads)(
        delayed(_reconstruct_one)(config, path) for path in msr['path']
    )

    artifacts, rows = [], []
    for index, (w, row) in enumerate(results):
        path = save_w(w, out_dir, index)
        artifacts.append({'kind': 'w', 'path': path, 'shape': config.shape.name,
                          'omega': float(w.omega), 'metadata': {'K': w.K}})
        rows.append(row)
    report = write_csv(pd.DataFrame(rows), os.path.join(out_dir, 'reconstruction_report.csv'))

    curves, orders = error_curves(config, config.frequencies.omega_max, threads)
    curves_path = write_csv(curves, os.path.join(out_dir, 'error_vs_order.csv'))
    orders_path = write_csv(orders, os.path.join(out_dir, 'resolving_order.csv'))
    artifacts += [{'kind': 'report', 'path': p} for p in (report, curves_path, orders_path)]
    return finish_run(out_dir, 'reconstruct', config, artifacts)
