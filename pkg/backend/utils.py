import numpy as np


def child_seeds(seed, count):
    """Independent integer seeds for ``count`` work items, derived from one run seed."""
    children = np.random.SeedSequence(seed).spawn(count)
    return [int(child.generate_state(1)[0]) for child in children]


def relative_difference(a, b):
    """||a - b|| / ||b|| over finite entries."""
    a, b = np.asarray(a), np.asarray(b)
    keep = np.isfinite(a) & np.isfinite(b)
    return float(np.linalg.norm(a[keep] - b[keep]) / np.linalg.norm(b[keep]))


def format_omega(omega):
    """Frequency as a multiple of pi, e.g. '1.50pi'."""
    return f"{omega / np.pi:.2f}pi"
