import logging
import os

from backend.database import get_artifacts, get_latest_run, initialize_database, register_artifacts, register_run
from backend.errors import ConfigError
from backend.storage import write_manifest

logger = logging.getLogger(__name__)


def finish_run(out_dir, command, config, artifacts):
    """Register the run and its files, then write the run manifest."""
    initialize_database(out_dir)
    run_id = register_run(out_dir, command, config.hash, config.seed)
    register_artifacts(out_dir, run_id, artifacts)
    manifest = write_manifest(out_dir, command, config, config.seed, [a['path'] for a in artifacts])
    logger.info("%s finished: %d file(s) in %s", command, len(artifacts), out_dir)
    return {'run_id': run_id, 'manifest': manifest, 'files': [a['path'] for a in artifacts]}


def latest_artifacts(out_dir, command, kind):
    """Files of one kind written by the most recent run of ``command``."""
    run = get_latest_run(out_dir, command)
    if run is None:
        raise ConfigError(f"no '{command}' run found in {out_dir}; run it first")
    return get_artifacts(out_dir, kind, run_id=run['id'])


def resolve(path, out_dir):
    return path if os.path.isabs(path) else os.path.join(out_dir, path)
