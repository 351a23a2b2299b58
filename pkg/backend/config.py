"""Experiment configuration: one JSON document, validated, then frozen into dataclasses."""
import copy
import hashlib
import json
import logging
from dataclasses import dataclass, field

import jsonschema
import numpy as np

from backend.dictionary import DictionaryGrids
from backend.errors import ConfigError
from backend.forward import AcquisitionConfig, Medium
from backend.geometry import SHAPE_NAMES, RigidTransform

logger = logging.getLogger(__name__)

_NUMBER = {"type": "number"}
_POSITIVE = {"type": "number", "exclusiveMinimum": 0}
_COUNT = {"type": "integer", "minimum": 1}
_POINT = {"type": "array", "items": _NUMBER, "minItems": 2, "maxItems": 2}
_SHAPE = {"type": "string", "enum": list(SHAPE_NAMES)}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "seed": {"type": "integer", "minimum": 0},
        "output_dir": {"type": "string"},
        "shape": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "name": _SHAPE,
                "n_points": {"type": "integer", "minimum": 64, "multipleOf": 2},
                "transform": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {"z": _POINT, "s": _POSITIVE, "theta": _NUMBER},
                },
            },
        },
        "targets": {"type": "array", "items": _SHAPE, "minItems": 1},
        "medium": {
            "type": "object",
            "additionalProperties": False,
            "properties": {k: _POSITIVE for k in ("eps_star", "mu_star", "eps0", "mu0")},
        },
        "acquisition": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "R": _POSITIVE,
                "z0": _POINT,
                "Ns": _COUNT,
                "Nr": _COUNT,
                "aperture": {"type": "number", "exclusiveMinimum": 0, "maximum": 2 * np.pi + 1e-9},
                "n_groups": _COUNT,
            },
        },
        "frequencies": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"omega_min": _POSITIVE, "omega_max": _POSITIVE, "n_freq": _COUNT},
        },
        "noise": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "sigma0": {"type": "number", "minimum": 0},
                "sweep": {"type": "array", "items": {"type": "number", "minimum": 0}},
            },
        },
        "reconstruction": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "K": {"type": "integer", "minimum": 0, "maximum": 100},
                "method": {"type": "string", "enum": ["pinv", "lsq"]},
                "orders": {"type": "array", "items": {"type": "integer", "minimum": 0}},
                "truth_order": {"type": "integer", "minimum": 0, "maximum": 100},
                "target_error": _POSITIVE,
            },
        },
        "dictionary": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "shapes": {"type": "array", "items": _SHAPE, "minItems": 1},
                "n_dict_freq": _COUNT,
                "scale_min": _POSITIVE,
                "scale_max": _POSITIVE,
                "n_scales": _COUNT,
                "Nv": {"type": "integer", "minimum": 4},
                "K": {"type": "integer", "minimum": 0, "maximum": 100},
                "band_alpha": {"type": "number", "exclusiveMinimum": 0, "maximum": 2 * np.pi + 1e-9},
                "path": {"type": "string"},
            },
        },
        "identify": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"descriptor_source": {"type": "string", "enum": ["w", "msr"]}},
        },
        "spectrum": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "omega": _POSITIVE,
                "full_orders": {"type": "array", "items": {"type": "integer", "minimum": 0}},
                "limited_orders": {"type": "array", "items": {"type": "integer", "minimum": 0}},
                "limited_aperture": {"type": "number", "exclusiveMinimum": 0,
                                     "maximum": 2 * np.pi + 1e-9},
                "limited_groups": _COUNT,
            },
        },
    },
}

DEFAULTS = {
    "name": "experiment",
    "seed": 0,
    "output_dir": "runs",
    "shape": {
        "name": "flower",
        "n_points": 256,
        "transform": {"z": [-0.5, 0.5], "s": 1.5, "theta": np.pi / 3},
    },
    "targets": list(SHAPE_NAMES),
    "medium": {"eps_star": 3.0, "mu_star": 3.0, "eps0": 1.0, "mu0": 1.0},
    "acquisition": {"R": 3.0, "z0": [0.0, 0.0], "Ns": 91, "Nr": 91,
                    "aperture": 2 * np.pi, "n_groups": 1},
    "frequencies": {"omega_min": np.pi, "omega_max": 2 * np.pi, "n_freq": 109},
    "noise": {"sigma0": 0.2, "sweep": [0.2, 0.4, 0.6, 0.8, 1.0]},
    "reconstruction": {"K": 30, "method": "pinv", "orders": list(range(5, 51, 5)),
                       "truth_order": 50, "target_error": 0.1},
    "dictionary": {
        "shapes": list(SHAPE_NAMES),
        "n_dict_freq": 219,
        "scale_min": 0.5,
        "scale_max": 2.0,
        "n_scales": 751,
        "Nv": 512,
        "K": 30,
        "band_alpha": 2 * np.pi,
        "path": "dictionary",
    },
    "identify": {"descriptor_source": "w"},
    "spectrum": {
        "omega": 2 * np.pi,
        "full_orders": [40, 30, 20],
        "limited_orders": [15, 10, 5],
        "limited_aperture": np.pi / 6,
        "limited_groups": 5,
    },
}


def _merge(base, override):
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def config_hash(raw):
    """SHA-256 of the canonical JSON dump (sorted keys)."""
    canonical = json.dumps(raw, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class ShapeSpec:
    name: str
    n_points: int
    transform: RigidTransform


@dataclass(frozen=True)
class FrequencyGrid:
    omega_min: float
    omega_max: float
    n_freq: int

    @property
    def omegas(self):
        return np.linspace(self.omega_min, self.omega_max, self.n_freq + 1)


@dataclass(frozen=True)
class ReconstructionSpec:
    K: int
    method: str
    orders: tuple
    truth_order: int
    target_error: float


@dataclass(frozen=True)
class DictionarySpec:
    shapes: tuple
    grids: DictionaryGrids
    K: int
    band_alpha: float
    path: str


@dataclass(frozen=True)
class SpectrumSpec:
    omega: float
    full_orders: tuple
    limited_orders: tuple
    limited_aperture: float
    limited_groups: int


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    seed: int
    output_dir: str
    shape: ShapeSpec
    targets: tuple
    medium: Medium
    acquisition: AcquisitionConfig
    frequencies: FrequencyGrid
    sigma0: float
    sigma_sweep: tuple
    reconstruction: ReconstructionSpec
    dictionary: DictionarySpec
    descriptor_source: str
    spectrum: SpectrumSpec
    raw: dict = field(repr=False, compare=False, default_factory=dict)

    @property
    def hash(self):
        return config_hash(self.raw)


def _build(raw):
    shape, freq, dic = raw["shape"], raw["frequencies"], raw["dictionary"]
    if freq["omega_max"] < freq["omega_min"]:
        raise ConfigError("frequencies.omega_max must not be below omega_min")
    if dic["scale_max"] < dic["scale_min"]:
        raise ConfigError("dictionary.scale_max must not be below scale_min")
    grids = DictionaryGrids(
        omega_min=freq["omega_min"], omega_max=freq["omega_max"], n_freq=freq["n_freq"],
        n_dict_freq=dic["n_dict_freq"], scale_min=dic["scale_min"], scale_max=dic["scale_max"],
        n_scales=dic["n_scales"], Nv=dic["Nv"],
    )
    rec = raw["reconstruction"]
    spec = raw["spectrum"]
    return ExperimentConfig(
        name=raw["name"],
        seed=raw["seed"],
        output_dir=raw["output_dir"],
        shape=ShapeSpec(shape["name"], shape["n_points"], RigidTransform(**shape["transform"])),
        targets=tuple(raw["targets"]),
        medium=Medium(**raw["medium"]),
        acquisition=AcquisitionConfig(**raw["acquisition"]),
        frequencies=FrequencyGrid(**freq),
        sigma0=raw["noise"]["sigma0"],
        sigma_sweep=tuple(raw["noise"]["sweep"]),
        reconstruction=ReconstructionSpec(rec["K"], rec["method"], tuple(rec["orders"]),
                                          rec["truth_order"], rec["target_error"]),
        dictionary=DictionarySpec(tuple(dic["shapes"]), grids, dic["K"], dic["band_alpha"],
                                  dic["path"]),
        descriptor_source=raw["identify"]["descriptor_source"],
        spectrum=SpectrumSpec(spec["omega"], tuple(spec["full_orders"]),
                              tuple(spec["limited_orders"]), spec["limited_aperture"],
                              spec["limited_groups"]),
        raw=raw,
    )


def parse_config(document, overrides=None):
    """Validate a config mapping, fill defaults, apply CLI overrides."""
    try:
        jsonschema.validate(document, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"invalid config at {path}: {exc.message}") from exc
    raw = _merge(DEFAULTS, document)
    raw = _merge(raw, {k: v for k, v in (overrides or {}).items() if v is not None})
    try:
        return _build(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path, overrides=None):
    with open(path, "r", encoding="utf-8") as fh:
        try:
            document = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
    config = parse_config(document, overrides)
    logger.info("loaded config %s (%s)", path, config.hash[:12])
    return config
