import logging
import os

import pandas as pd
from joblib import Parallel, delayed

from backend.errors import ScatteringError
from backend.forward import add_noise, simulate_msr
from backend.geometry import make_shape, transform
from backend.storage import save_boundary, save_msr, write_csv
from backend.utils import child_seeds, format_omega
from frontend.runs import finish_run

logger = logging.getLogger(__name__)


def target_boundary(config, name=None):
    """The configured target: a dictionary shape moved by the configured rigid motion."""
    shape = config.shape
    return transform(make_shape(name or shape.name, shape.n_points), shape.transform)


def simulate_one(b, medium, acquisition, omega, sigma0, seed):
    """Noisy MSR at one frequency, or None when the solver gives up."""
    try:
        return add_noise(simulate_msr(b, medium, acquisition, omega), sigma0, seed)
    except ScatteringError as e:
        logger.error("simulation at omega=%s failed: %s", format_omega(omega), e)
        return None


def run_simulate(config, out_dir, threads=1):
    """Simulate one MSR file per frequency of the configured grid."""
    os.makedirs(out_dir, exist_ok=True)
    b = target_boundary(config)
    omegas = config.frequencies.omegas
    seeds = child_seeds(config.seed, len(omegas))

    results = Parallel(n_jobs=threads)(
        delayed(simulate_one)(b, config.medium, config.acquisition, omega, config.sigma0, seed)
        for omega, seed in zip(omegas, seeds)
    )

    boundary = save_boundary(b, os.path.join(out_dir, 'boundary.json'))
    artifacts, rows = [{'kind': 'boundary', 'path': boundary, 'shape': b.name}], []
    for index, (omega, v) in enumerate(zip(omegas, results)):
        if v is None:
            continue
        path = save_msr(v, out_dir, index)
        artifacts.append({'kind': 'msr', 'path': path, 'shape': b.name, 'omega': float(omega),
                          'metadata': {'seed': v.seed, 'snr': v.snr}})
        rows.append({'index': index, 'omega': omega, 'noise_sigma': v.noise_sigma,
                     'snr': v.snr, 'seed': v.seed, 'valid_fraction': float(v.mask.mean())})

    summary = write_csv(pd.DataFrame(rows), os.path.join(out_dir, 'msr_summary.csv'))
    artifacts.append({'kind': 'report', 'path': summary})
    logger.info("simulated %d of %d frequencies for %s", len(rows), len(omegas), b.name)
    return finish_run(out_dir, 'simulate', config, artifacts)
