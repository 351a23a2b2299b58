"""On-disk formats: JSON headers next to .npy arrays.

Arrays go to plain .npy files rather than .npz archives so that re-running
a seeded experiment reproduces every byte.
"""
import json
import logging
import os
import platform

import joblib
import numpy as np
import pandas as pd
import scipy

from backend.descriptor import DescriptorTensor
from backend.dictionary import Dictionary, DictionaryGrids
from backend.errors import DomainError
from backend.forward import AcquisitionConfig, Medium, MSRMatrix
from backend.geometry import Boundary
from backend.sct import ScatteringCoeffMatrix

logger = logging.getLogger(__name__)


def _write_json(path, payload):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _read_json(path):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _stem(path):
    return path[:-len(".json")] if path.endswith(".json") else path


def save_boundary(b, path):
    """Boundary samples as JSON; normals and weights are recomputed on load."""
    _write_json(path, b.to_dict())
    return path


def load_boundary(path):
    return Boundary.from_dict(_read_json(path))


def save_msr(v, out_dir, index):
    stem = os.path.join(out_dir, f"msr_{index:04d}")
    header = {
        "omega": float(v.omega),
        **v.acquisition.to_dict(),
        "medium": v.medium.to_dict(),
        "noise_sigma": float(v.noise_sigma),
        "seed": v.seed,
        "snr": v.snr,
        "perimeter": v.perimeter,
    }
    _write_json(stem + ".json", header)
    np.save(stem + ".values.npy", np.ascontiguousarray(v.values, dtype=np.complex128))
    np.save(stem + ".mask.npy", np.ascontiguousarray(v.mask, dtype=bool))
    return stem + ".json"


def load_msr(path):
    stem = _stem(path)
    header = _read_json(stem + ".json")
    acq = AcquisitionConfig(**{k: header[k] for k in ("R", "z0", "Ns", "Nr", "aperture", "n_groups")})
    return MSRMatrix(
        values=np.load(stem + ".values.npy"),
        omega=header["omega"],
        acquisition=acq,
        medium=Medium(**header["medium"]),
        mask=np.load(stem + ".mask.npy"),
        noise_sigma=header["noise_sigma"],
        seed=header["seed"],
        perimeter=header["perimeter"],
    )


def save_w(w, out_dir, index):
    stem = os.path.join(out_dir, f"w_{index:04d}")
    _write_json(stem + ".json", {"shape": w.shape, "omega": float(w.omega), "K": int(w.K),
                                 "medium": w.medium.to_dict()})
    np.save(stem + ".values.npy", np.ascontiguousarray(w.values, dtype=np.complex128))
    return stem + ".json"


def load_w(path):
    stem = _stem(path)
    header = _read_json(stem + ".json")
    return ScatteringCoeffMatrix(values=np.load(stem + ".values.npy"), K=header["K"],
                                 omega=header["omega"], medium=Medium(**header["medium"]),
                                 shape=header["shape"])


def save_descriptor(tensor, out_dir, name=None):
    name = name or tensor.shape
    if not name:
        raise DomainError("descriptor needs a name to be saved")
    stem = os.path.join(out_dir, name)
    _write_json(stem + ".json", {
        "shape": tensor.shape,
        "Nv": int(tensor.Nv),
        "omegas": [float(w) for w in tensor.omegas],
        "band_alpha": float(tensor.band_alpha),
    })
    np.save(stem + ".npy", np.ascontiguousarray(tensor.values, dtype=np.float64))
    return stem + ".json"


def load_descriptor(path):
    stem = _stem(path)
    header = _read_json(stem + ".json")
    return DescriptorTensor(values=np.load(stem + ".npy"), omegas=np.asarray(header["omegas"]),
                            band_alpha=header["band_alpha"], shape=header["shape"])


def save_dictionary(dictionary, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    files = [save_descriptor(entry, out_dir) for entry in dictionary.entries]
    grids = dictionary.grids
    _write_json(os.path.join(out_dir, "manifest.json"), {
        "entries": [os.path.basename(f) for f in files],
        "grids": {k: getattr(grids, k) for k in grids.__dataclass_fields__},
        "medium": dictionary.medium.to_dict(),
        "band_alpha": float(dictionary.band_alpha),
        "order": int(dictionary.order),
    })
    logger.info("saved dictionary with %d entries to %s", len(files), out_dir)
    return files


def load_dictionary(out_dir):
    manifest = _read_json(os.path.join(out_dir, "manifest.json"))
    entries = [load_descriptor(os.path.join(out_dir, f)) for f in manifest["entries"]]
    return Dictionary(entries=entries, grids=DictionaryGrids(**manifest["grids"]),
                      medium=Medium(**manifest["medium"]), band_alpha=manifest["band_alpha"],
                      order=manifest["order"])


def write_csv(df, path):
    df.to_csv(path, index=False)
    logger.info("wrote %s (%d rows)", path, len(df))
    return path


def write_manifest(out_dir, command, config, seed, files):
    """Provenance of a run: enough to reproduce its outputs."""
    path = os.path.join(out_dir, "manifest.json")
    _write_json(path, {
        "command": command,
        "config_hash": config.hash,
        "config": config.raw,
        "seed": seed,
        "versions": {
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "pandas": pd.__version__,
            "joblib": joblib.__version__,
        },
        "files": sorted(os.path.relpath(f, out_dir) for f in files),
    })
    return path
