import logging
import os
from dataclasses import replace

import pandas as pd

from backend.descriptor import FULL_APERTURE
from backend.recon import build_operator, condition_number, hankel_constant, singular_values
from backend.storage import write_csv
from frontend.runs import finish_run

logger = logging.getLogger(__name__)


def spectrum_rows(acquisition, omega, K, medium, view):
    op = build_operator(acquisition, omega, K, medium)
    return [
        {'view': view, 'K': K, 'rank': i, 'm': m, 'n': n, 'singular_value': lam}
        for i, (m, n, lam) in enumerate(singular_values(op))
    ], condition_number(op)


def run_spectrum(config, out_dir, threads=1):
    """Singular values of L for full-view and grouped limited-view acquisition."""
    os.makedirs(out_dir, exist_ok=True)
    spec = config.spectrum
    full = replace(config.acquisition, aperture=FULL_APERTURE, n_groups=1)
    limited = replace(config.acquisition, aperture=spec.limited_aperture,
                      n_groups=spec.limited_groups)
    k0 = config.medium.k0(spec.omega)
    c_r = hankel_constant(k0, config.acquisition.R)

    rows, conditions = [], []
    for view, acquisition, orders in (('full', full, spec.full_orders),
                                      ('limited', limited, spec.limited_orders)):
        for K in orders:
            values, cond = spectrum_rows(acquisition, spec.omega, K, config.medium, view)
            rows += values
            conditions.append({'view': view, 'K': K, 'condition': cond,
                               'envelope': (c_r * K) ** K if K else 1.0})
            logger.info("%s view K=%d: condition %.3e", view, K, cond)

    artifacts = [
        {'kind': 'report', 'path': write_csv(pd.DataFrame(rows), os.path.join(out_dir, 'singular_values.csv'))},
        {'kind': 'report', 'path': write_csv(pd.DataFrame(conditions), os.path.join(out_dir, 'condition_numbers.csv'))},
    ]
    return finish_run(out_dir, 'spectrum', config, artifacts)
