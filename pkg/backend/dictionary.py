"""Frequency-dependent dictionary of shape descriptors and shape identification.

Matching follows the scale/frequency trade-off S_{sB}(v; omega) = S_B(v; s omega):
a target sampled at omega_k is compared with a dictionary entry at the node
omega~_l that brackets s * omega_k, for every candidate scale s.
"""
import logging
import os
from dataclasses import dataclass, field

import joblib
import numpy as np
from joblib import Parallel, delayed

from backend.descriptor import FULL_APERTURE, DescriptorTensor, banded_pattern, shape_descriptor
from backend.errors import IdentificationError, IncomparableError
from backend.forward import Medium
from backend.geometry import Boundary, make_shape
from backend.sct import compute_w

logger = logging.getLogger(__name__)

NODE_TOLERANCE = 1e-9


@dataclass(frozen=True)
class DictionaryGrids:
    """Target frequencies [omega_min, omega_max] and admissible scales [scale_min, scale_max].

    The dictionary covers omega~ in [omega_min * scale_min, omega_max * scale_max]
    with ``n_dict_freq`` intervals; targets use ``n_freq`` intervals.
    """

    omega_min: float = np.pi
    omega_max: float = 2.0 * np.pi
    n_freq: int = 109
    n_dict_freq: int = 219
    scale_min: float = 0.5
    scale_max: float = 2.0
    n_scales: int = 751
    Nv: int = 512

    @property
    def target_omegas(self):
        return np.linspace(self.omega_min, self.omega_max, self.n_freq + 1)

    @property
    def dictionary_omegas(self):
        return np.linspace(self.omega_min * self.scale_min, self.omega_max * self.scale_max,
                           self.n_dict_freq + 1)

    @property
    def scales(self):
        return np.linspace(self.scale_min, self.scale_max, self.n_scales)


@dataclass(frozen=True, eq=False)
class Dictionary:
    entries: list
    grids: DictionaryGrids
    medium: Medium = field(default_factory=Medium)
    band_alpha: float = FULL_APERTURE
    order: int = 30

    @property
    def names(self):
        return [entry.shape for entry in self.entries]

    @property
    def omegas(self):
        return self.grids.dictionary_omegas


@dataclass
class IdentificationResult:
    names: list
    errors: np.ndarray
    estimated_scales: np.ndarray
    best_index: int
    metadata: dict = field(default_factory=dict)

    @property
    def best_name(self):
        return self.names[self.best_index]

    @property
    def normalized_errors(self):
        """Errors divided by the largest comparable error of this target."""
        return self.errors / np.nanmax(self.errors)

    def to_dict(self):
        return {
            "names": list(self.names),
            "errors": [None if np.isnan(e) else float(e) for e in self.errors],
            "normalized_errors": [None if np.isnan(e) else float(e) for e in self.normalized_errors],
            "estimated_scales": [None if np.isnan(s) else float(s) for s in self.estimated_scales],
            "best_index": int(self.best_index),
            "best_name": self.best_name,
            "metadata": self.metadata,
        }


def descriptor_at(b, med, omega, K, Nv, band_alpha=FULL_APERTURE):
    """Descriptor slice of boundary ``b`` at one frequency, through W of order K."""
    return shape_descriptor(banded_pattern(compute_w(b, med, omega, K), Nv, band_alpha))


def build_dictionary(shapes, med, grids, band_alpha=FULL_APERTURE, K=30, n_points=256, threads=1):
    """Descriptor tensors of every shape over the dictionary frequency grid."""
    boundaries = [s if isinstance(s, Boundary) else make_shape(s, n_points) for s in shapes]
    omegas = grids.dictionary_omegas
    jobs = [(b, omega) for b in boundaries for omega in omegas]
    slices = Parallel(n_jobs=threads)(
        delayed(descriptor_at)(b, med, omega, K, grids.Nv, band_alpha) for b, omega in jobs
    )
    entries = []
    for i, b in enumerate(boundaries):
        values = np.stack(slices[i * len(omegas):(i + 1) * len(omegas)])
        entries.append(DescriptorTensor(values=values, omegas=omegas.copy(),
                                        band_alpha=band_alpha, shape=b.name))
        logger.info("dictionary entry %s: %d frequencies", b.name, len(omegas))
    return Dictionary(entries=entries, grids=grids, medium=med, band_alpha=band_alpha, order=K)


def load_or_build(cache_path, config_hash, build):
    """Reuse a cached dictionary when it was built from the same configuration."""
    if os.path.exists(cache_path):
        cached_hash, dictionary = joblib.load(cache_path)
        if cached_hash == config_hash:
            logger.info("reusing cached dictionary %s", cache_path)
            return dictionary
        logger.info("cached dictionary %s is stale, rebuilding", cache_path)
    dictionary = build()
    os.makedirs(os.path.dirname(os.path.abspath(cache_path)), exist_ok=True)
    joblib.dump((config_hash, dictionary), cache_path)
    return dictionary


def bracket_indices(nodes, x):
    """Index l of the node with nodes[l-1] < x <= nodes[l]; -1 outside the grid.

    Values within NODE_TOLERANCE (relative) of a node are matched to that node.
    """
    nodes = np.asarray(nodes)
    x = np.asarray(x, dtype=float)
    l = np.searchsorted(nodes, x, side="left")
    upper = np.minimum(l, len(nodes) - 1)
    lower = np.maximum(l - 1, 0)
    on_upper = (l < len(nodes)) & np.isclose(nodes[upper], x, rtol=NODE_TOLERANCE, atol=0.0)
    on_lower = (l > 0) & np.isclose(nodes[lower], x, rtol=NODE_TOLERANCE, atol=0.0)
    inside = (l > 0) & (l < len(nodes))
    return np.where(on_upper, upper, np.where(on_lower, lower, np.where(inside, l, -1)))


def _costs(scales, target, entry):
    index = bracket_indices(entry.omegas, np.outer(scales, target.omegas))
    valid = index >= 0
    diff = target.sums()[None, :] - entry.sums()[np.where(valid, index, 0)]
    costs = np.sum(np.where(valid, diff**2, 0.0), axis=1)
    return np.where(valid.any(axis=1), costs, np.nan)


def scale_cost(s, target, entry):
    """J(s) = sum_k (sum_ij S^D_ijk - sum_ij S^B_ijl(k))^2.

    l(k) is the dictionary node bracketing s * omega_k; frequencies mapped
    outside the dictionary grid are skipped, and NaN means none was left.
    """
    return float(_costs(np.array([s]), target, entry)[0])


def match_error(target, entry, scales):
    """(epsilon, s_est): the smallest J over the scale samples, ties to the smallest scale index."""
    costs = _costs(np.asarray(scales, dtype=float), target, entry)
    valid = ~np.isnan(costs)
    if not np.any(valid):
        raise IncomparableError(f"no scale sample maps the target onto entry {entry.shape!r}")
    t = int(np.argmin(np.where(valid, costs, np.inf)))
    return float(costs[t]), float(scales[t])


def _match_or_nan(target, entry, scales):
    try:
        return match_error(target, entry, scales)
    except IncomparableError as exc:
        logger.warning("%s", exc)
        return float("nan"), float("nan")


def check_compatible(target, dictionary):
    if not np.isclose(target.band_alpha, dictionary.band_alpha):
        raise IdentificationError(
            f"target band {target.band_alpha:.4f} differs from dictionary band {dictionary.band_alpha:.4f}"
        )
    if target.Nv != dictionary.grids.Nv:
        raise IdentificationError(f"target lag grid {target.Nv} differs from dictionary grid {dictionary.grids.Nv}")


def identify(target, dictionary, threads=1, metadata=None):
    """Match the target descriptor against every entry and return the best one."""
    check_compatible(target, dictionary)
    scales = dictionary.grids.scales
    matches = Parallel(n_jobs=threads)(
        delayed(_match_or_nan)(target, entry, scales) for entry in dictionary.entries
    )
    errors = np.array([m[0] for m in matches])
    estimated = np.array([m[1] for m in matches])
    if np.all(np.isnan(errors)):
        raise IdentificationError("target is incomparable with every dictionary entry")
    best = int(np.argmin(np.where(np.isnan(errors), np.inf, errors)))
    result = IdentificationResult(names=dictionary.names, errors=errors, estimated_scales=estimated,
                                  best_index=best, metadata=dict(metadata or {}))
    logger.info("target %s identified as %s (scale %.3f)", target.shape, result.best_name,
                estimated[best])
    return result
