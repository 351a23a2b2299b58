import logging
import os

import pandas as pd

from backend.config import config_hash
from backend.descriptor import integrated_descriptor
from backend.dictionary import build_dictionary, load_or_build
from backend.storage import save_dictionary, write_csv
from frontend.runs import finish_run, resolve

logger = logging.getLogger(__name__)


def dictionary_hash(config):
    """Hash of the settings a dictionary depends on."""
    raw = config.raw
    return config_hash({
        'dictionary': {k: v for k, v in raw['dictionary'].items() if k != 'path'},
        'frequencies': raw['frequencies'],
        'medium': raw['medium'],
        'n_points': raw['shape']['n_points'],
    })


def integrated_table(entries):
    rows = []
    for tensor in entries:
        for omega, value in zip(tensor.omegas, integrated_descriptor(tensor)):
            rows.append({'shape': tensor.shape, 'omega': omega, 'integrated_descriptor': value})
    return pd.DataFrame(rows)


def run_build_dict(config, out_dir, threads=1):
    """Build (or reuse from cache) the descriptor dictionary and persist it."""
    spec = config.dictionary
    path = resolve(spec.path, out_dir)
    cache = os.path.join(out_dir, 'cache', 'dictionary.joblib')

    def build():
        logger.info("building dictionary of %d shapes on %d frequencies", len(spec.shapes),
                    spec.grids.n_dict_freq + 1)
        return build_dictionary(spec.shapes, config.medium, spec.grids, spec.band_alpha,
                                K=spec.K, n_points=config.shape.n_points, threads=threads)

    dictionary = load_or_build(cache, dictionary_hash(config), build)
    files = save_dictionary(dictionary, path)
    artifacts = [{'kind': 'descriptor', 'path': f, 'shape': entry.shape}
                 for f, entry in zip(files, dictionary.entries)]
    artifacts.append({'kind': 'dictionary', 'path': os.path.join(path, 'manifest.json')})
    table = write_csv(integrated_table(dictionary.entries),
                      os.path.join(out_dir, 'dictionary_integrated_descriptor.csv'))
    artifacts.append({'kind': 'report', 'path': table})
    return finish_run(out_dir, 'build-dict', config, artifacts)
