"""Dictionary shapes as discretized 2*pi-periodic boundaries, plus rigid motions.

A boundary is sampled at N equispaced parameter values t_j = 2*pi*j/N of a
smooth counterclockwise parametrization x(t). Besides the points we keep
x'(t) and x''(t): the Nystrom solver needs them for its singular
quadrature.
"""
import json
import logging
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from backend.errors import DomainError, ShapeLookupError

logger = logging.getLogger(__name__)

SHAPE_NAMES = (
    "ellipse", "flower", "letterA", "square", "letterE", "rectangle", "disk", "triangle",
)
MIN_POINTS = 64

# corner rounding radius, relative to the unit size of every dictionary shape
CORNER_RADIUS = 0.05

_SHAPES_DIR = Path(__file__).resolve().parent.parent / "datasets" / "shapes"
_DENSE_SAMPLES = 4096
_FILTER_CUTOFF = 40.0
_MAX_MODE = 160


def _freeze(array):
    array = np.ascontiguousarray(array, dtype=float)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class Boundary:
    """Discretized closed curve with outward normals and arclength weights."""

    name: str
    points: np.ndarray
    tangents: np.ndarray
    accelerations: np.ndarray
    normals: np.ndarray = field(init=False)
    weights: np.ndarray = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "points", _freeze(self.points))
        object.__setattr__(self, "tangents", _freeze(self.tangents))
        object.__setattr__(self, "accelerations", _freeze(self.accelerations))
        speed = self.speed
        normals = np.column_stack([self.tangents[:, 1], -self.tangents[:, 0]]) / speed[:, None]
        object.__setattr__(self, "normals", _freeze(normals))
        object.__setattr__(self, "weights", _freeze(speed * 2.0 * np.pi / len(speed)))

    @property
    def n_points(self):
        return len(self.points)

    @property
    def parameters(self):
        return 2.0 * np.pi * np.arange(self.n_points) / self.n_points

    @property
    def speed(self):
        return np.hypot(self.tangents[:, 0], self.tangents[:, 1])

    @property
    def perimeter(self):
        return float(np.sum(self.weights))

    @property
    def spacing(self):
        """Largest distance between consecutive samples."""
        steps = np.roll(self.points, -1, axis=0) - self.points
        return float(np.max(np.hypot(steps[:, 0], steps[:, 1])))

    @property
    def size(self):
        """Larger side of the axis-aligned bounding box."""
        extent = self.points.max(axis=0) - self.points.min(axis=0)
        return float(extent.max())

    @property
    def centroid(self):
        """Area centroid, by Green's theorem on the parametrization."""
        x, y = self.points[:, 0], self.points[:, 1]
        dx, dy = self.tangents[:, 0], self.tangents[:, 1]
        h = 2.0 * np.pi / self.n_points
        area = 0.5 * h * np.sum(x * dy - y * dx)
        cx = 0.5 * h * np.sum(x * x * dy) / area
        cy = -0.5 * h * np.sum(y * y * dx) / area
        return np.array([cx, cy])

    def circumradius(self, center=(0.0, 0.0)):
        offsets = self.points - np.asarray(center, dtype=float)
        return float(np.max(np.hypot(offsets[:, 0], offsets[:, 1])))

    def winding_number(self, x):
        """Winding number of the sampled polygon around each query point."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        rel = self.points[None, :, :] - x[:, None, :]
        angles = np.arctan2(rel[..., 1], rel[..., 0])
        steps = np.diff(np.concatenate([angles, angles[:, :1]], axis=1), axis=1)
        steps = (steps + np.pi) % (2.0 * np.pi) - np.pi
        return np.rint(steps.sum(axis=1) / (2.0 * np.pi)).astype(int)

    def contains(self, x):
        return self.winding_number(x) != 0

    def to_dict(self):
        return {
            "name": self.name,
            "points": self.points.tolist(),
            "normals": self.normals.tolist(),
            "weights": self.weights.tolist(),
            "tangents": self.tangents.tolist(),
            "accelerations": self.accelerations.tolist(),
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            name=data["name"],
            points=np.asarray(data["points"], dtype=float),
            tangents=np.asarray(data["tangents"], dtype=float),
            accelerations=np.asarray(data["accelerations"], dtype=float),
        )


@dataclass(frozen=True)
class RigidTransform:
    """x -> z + s * R_theta x."""

    z: tuple = (0.0, 0.0)
    s: float = 1.0
    theta: float = 0.0

    def __post_init__(self):
        if not self.s > 0:
            raise DomainError("scaling factor must be positive")
        object.__setattr__(self, "z", tuple(float(c) for c in self.z))
        object.__setattr__(self, "s", float(self.s))
        object.__setattr__(self, "theta", float(self.theta) % (2.0 * np.pi))

    @property
    def rotation(self):
        c, s = np.cos(self.theta), np.sin(self.theta)
        return np.array([[c, -s], [s, c]])

    def apply(self, x):
        return np.asarray(self.z) + self.s * np.asarray(x, dtype=float) @ self.rotation.T


def compose(second, first):
    """Transform equal to applying ``first`` and then ``second``."""
    z = second.apply(np.asarray(first.z))
    return RigidTransform(z=tuple(z), s=second.s * first.s, theta=second.theta + first.theta)


def transform(b, t):
    """Map a boundary by x -> z + s R_theta x; normals rotate, weights scale by s."""
    rot = t.rotation
    return Boundary(
        name=b.name,
        points=t.apply(b.points),
        tangents=t.s * (b.tangents @ rot.T),
        accelerations=t.s * (b.accelerations @ rot.T),
    )


# --- parametrizations -------------------------------------------------------

def _disk(t):
    z = 0.5 * np.exp(1j * t)
    return z, 1j * z, -z


def _ellipse(t, a=0.5, b=0.3):
    z = a * np.cos(t) + 1j * b * np.sin(t)
    dz = -a * np.sin(t) + 1j * b * np.cos(t)
    return z, dz, -z


def _flower(t, petals=5, amplitude=0.3):
    r = 0.5 * (1.0 + amplitude * np.cos(petals * t))
    dr = -0.5 * amplitude * petals * np.sin(petals * t)
    ddr = -0.5 * amplitude * petals**2 * np.cos(petals * t)
    e = np.exp(1j * t)
    return r * e, (dr + 1j * r) * e, (ddr + 2j * dr - r) * e


def _load_vertices(name):
    path = _SHAPES_DIR / f"{name}.json"
    with open(path, "r", encoding="utf-8") as fh:
        return np.asarray(json.load(fh)["vertices"], dtype=float)


def _polygon_vertices(name):
    if name == "square":
        return np.array([[-0.5, -0.5], [0.5, -0.5], [0.5, 0.5], [-0.5, 0.5]])
    if name == "rectangle":
        return np.array([[-0.5, -0.25], [0.5, -0.25], [0.5, 0.25], [-0.5, 0.25]])
    if name == "triangle":
        h = np.sqrt(3.0) / 2.0
        return np.array([[-0.5, 0.0], [0.5, 0.0], [0.0, h]])
    return _load_vertices(name)


def _rounded_polygon(vertices, radius, n_samples):
    """Arclength-uniform samples of a polygon whose corners are circular arcs."""
    v = np.asarray(vertices, dtype=float)
    extent = v.max(axis=0) - v.min(axis=0)
    v = v / extent.max()
    n = len(v)
    corners = []
    for i in range(n):
        prev, here, nxt = v[i - 1], v[i], v[(i + 1) % n]
        u1 = (here - prev) / np.linalg.norm(here - prev)
        u2 = (nxt - here) / np.linalg.norm(nxt - here)
        turn = np.arctan2(u1[0] * u2[1] - u1[1] * u2[0], u1 @ u2)
        cut = radius * np.tan(abs(turn) / 2.0)
        start = here - cut * u1
        left = np.array([-u1[1], u1[0]])
        center = start + np.sign(turn) * radius * left
        angle0 = np.arctan2(start[1] - center[1], start[0] - center[0])
        corners.append((start, here + cut * u2, center, angle0, turn))

    # pieces: arc at corner i, then the straight run to corner i+1
    pieces = []
    for i, (start, end, center, angle0, turn) in enumerate(corners):
        pieces.append(("arc", center, angle0, turn, radius * abs(turn)))
        following = corners[(i + 1) % n][0]
        pieces.append(("line", end, following, None, np.linalg.norm(following - end)))
    lengths = np.array([p[-1] for p in pieces])
    offsets = np.concatenate([[0.0], np.cumsum(lengths)])
    s = offsets[-1] * np.arange(n_samples) / n_samples
    samples = np.empty((n_samples, 2))
    index = np.searchsorted(offsets, s, side="right") - 1
    for k, piece in enumerate(pieces):
        sel = index == k
        if not np.any(sel):
            continue
        frac = (s[sel] - offsets[k]) / lengths[k]
        if piece[0] == "arc":
            _, center, angle0, turn, _ = piece
            phi = angle0 + frac * turn
            samples[sel] = center + radius * np.column_stack([np.cos(phi), np.sin(phi)])
        else:
            _, a, b, _, _ = piece
            samples[sel] = a + frac[:, None] * (b - a)
    return samples


def _trig_eval(coeffs, modes, t):
    phase = np.exp(1j * np.outer(t, modes))
    return phase @ coeffs, phase @ (1j * modes * coeffs), phase @ (-(modes**2) * coeffs)


@lru_cache(maxsize=None)
def _polygon_coefficients(name):
    """Fourier coefficients of the smoothed, unit-size, centred polygon curve."""
    dense = _rounded_polygon(_polygon_vertices(name), CORNER_RADIUS, _DENSE_SAMPLES)
    coeffs = np.fft.fft(dense[:, 0] + 1j * dense[:, 1]) / _DENSE_SAMPLES
    modes = np.fft.fftfreq(_DENSE_SAMPLES, 1.0 / _DENSE_SAMPLES)
    keep = np.abs(modes) <= _MAX_MODE
    modes, coeffs = modes[keep], coeffs[keep] * np.exp(-((modes[keep] / _FILTER_CUTOFF) ** 4))

    t = 2.0 * np.pi * np.arange(_DENSE_SAMPLES) / _DENSE_SAMPLES
    z, _, _ = _trig_eval(coeffs, modes, t)
    coeffs = coeffs / max(np.ptp(z.real), np.ptp(z.imag))
    z, dz, _ = _trig_eval(coeffs, modes, t)
    probe = Boundary(
        name=name,
        points=np.column_stack([z.real, z.imag]),
        tangents=np.column_stack([dz.real, dz.imag]),
        accelerations=np.zeros((_DENSE_SAMPLES, 2)),
    )
    cx, cy = probe.centroid
    coeffs[modes == 0] -= cx + 1j * cy
    return coeffs, modes


def _polygon(name):
    coeffs, modes = _polygon_coefficients(name)
    return lambda t: _trig_eval(coeffs, modes, t)


_SMOOTH = {"disk": _disk, "ellipse": _ellipse, "flower": _flower}


def make_shape(name, n_points=256):
    """Sample one of the dictionary shapes at ``n_points`` parameter values."""
    if name not in SHAPE_NAMES:
        raise ShapeLookupError(f"unknown shape {name!r}; expected one of {', '.join(SHAPE_NAMES)}")
    if n_points < MIN_POINTS or n_points % 2:
        raise DomainError(f"n_points must be an even integer >= {MIN_POINTS}")
    param = _SMOOTH.get(name) or _polygon(name)
    t = 2.0 * np.pi * np.arange(n_points) / n_points
    z, dz, ddz = param(t)
    logger.debug("sampled %s at %d points", name, n_points)
    return Boundary(
        name=name,
        points=np.column_stack([z.real, z.imag]),
        tangents=np.column_stack([dz.real, dz.imag]),
        accelerations=np.column_stack([ddz.real, ddz.imag]),
    )
