import json
import logging
import os

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from backend.descriptor import (
    FULL_APERTURE,
    DescriptorTensor,
    apply_band,
    banded_pattern,
    farfield_from_msr,
    shape_descriptor,
)
from backend.dictionary import check_compatible, identify
from backend.errors import ConfigError, ScatteringError
from backend.forward import add_noise, simulate_msr
from backend.storage import load_dictionary, write_csv
from backend.utils import child_seeds, format_omega
from frontend.dictionary import integrated_table
from frontend.reconstruct import reconstruct
from frontend.runs import finish_run, resolve
from frontend.simulate import target_boundary

logger = logging.getLogger(__name__)


def descriptor_source(config):
    """'w' reconstructs W first; limited apertures always read |V| directly."""
    if config.descriptor_source == 'w' and not config.acquisition.full_view:
        logger.info("limited aperture: descriptors come from |V| instead of reconstructed W")
        return 'msr'
    return config.descriptor_source


def target_slice(b, config, omega, seed, source, Nv, band_alpha):
    """Descriptor of the noisy target at one frequency, or None if the solver fails."""
    try:
        v = add_noise(simulate_msr(b, config.medium, config.acquisition, omega), config.sigma0, seed)
        if source == 'w':
            w, _ = reconstruct(v, config.reconstruction.K, config.reconstruction.method)
            pattern = banded_pattern(w, Nv, band_alpha)
        else:
            pattern = farfield_from_msr(v)
            if band_alpha < FULL_APERTURE:
                pattern = apply_band(pattern, band_alpha)
        return shape_descriptor(pattern)
    except ScatteringError as e:
        logger.error("target %s at omega=%s failed: %s", b.name, format_omega(omega), e)
        return None


def target_descriptor(config, name, dictionary, seed, threads=1):
    """Descriptor tensor of one noisy target over the configured frequency grid."""
    b = target_boundary(config, name)
    source = descriptor_source(config)
    Nv = dictionary.grids.Nv
    if source == 'msr' and config.acquisition.Ns != Nv:
        raise ConfigError(f"far field read from |V| needs Ns = Nr = Nv = {Nv}")
    omegas = config.frequencies.omegas
    seeds = child_seeds(seed, len(omegas))
    slices = Parallel(n_jobs=threads)(
        delayed(target_slice)(b, config, omega, s, source, Nv, dictionary.band_alpha)
        for omega, s in zip(omegas, seeds)
    )
    keep = [i for i, s in enumerate(slices) if s is not None]
    return DescriptorTensor(values=np.stack([slices[i] for i in keep]), omegas=omegas[keep],
                            band_alpha=dictionary.band_alpha, shape=name)


def result_tables(results, true_scale):
    errors, scales = [], []
    for target, result in results.items():
        normalized = result.normalized_errors
        for i, name in enumerate(result.names):
            errors.append({
                'target': target,
                'entry': name,
                'error': result.errors[i],
                'normalized_error': normalized[i],
                'estimated_scale': result.estimated_scales[i],
                'identified': i == result.best_index,
            })
        estimate = result.estimated_scales[result.best_index]
        scales.append({
            'target': target,
            'identified_as': result.best_name,
            'correct': result.best_name == target,
            'estimated_scale': estimate,
            'true_scale': true_scale,
            'scale_error': abs(estimate - true_scale),
        })
    return pd.DataFrame(errors), pd.DataFrame(scales)


def run_identify(config, out_dir, threads=1):
    """Identify every configured target against a prebuilt dictionary."""
    path = resolve(config.dictionary.path, out_dir)
    if not os.path.exists(os.path.join(path, 'manifest.json')):
        raise ConfigError(f"no dictionary at {path}; run build-dict first")
    dictionary = load_dictionary(path)
    source = descriptor_source(config)
    metadata = {
        'sigma0': config.sigma0,
        'aperture': config.acquisition.aperture,
        'band_alpha': dictionary.band_alpha,
        'K': config.reconstruction.K,
        'descriptor_source': source,
    }

    seeds = child_seeds(config.seed, len(config.targets))
    results, tensors = {}, []
    for name, seed in zip(config.targets, seeds):
        target = target_descriptor(config, name, dictionary, seed, threads)
        check_compatible(target, dictionary)
        tensors.append(target)
        results[name] = identify(target, dictionary, threads, metadata)

    errors, scales = result_tables(results, config.shape.transform.s)
    correct = int(scales['correct'].sum())
    logger.info("%d of %d targets identified correctly", correct, len(results))

    result_path = os.path.join(out_dir, 'identification.json')
    with open(result_path, 'w', encoding='utf-8') as fh:
        json.dump({'correct': correct, 'total': len(results),
                   'results': {k: r.to_dict() for k, r in results.items()}},
                  fh, indent=2, sort_keys=True)
        fh.write('\n')
    artifacts = [{'kind': 'identification', 'path': result_path}]
    for df, name in ((errors, 'identification_errors.csv'), (scales, 'scale_errors.csv'),
                     (integrated_table(tensors), 'target_integrated_descriptor.csv')):
        artifacts.append({'kind': 'report', 'path': write_csv(df, os.path.join(out_dir, name))})
    return finish_run(out_dir, 'identify', config, artifacts)
