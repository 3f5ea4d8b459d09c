"""
Synthetic test images.
Deterministic, redistribution-free stand-ins for natural test sets; values in [0, 1].
"""
import numpy as np

from app.errors import ConstructionError


def _grid(h, w):
    if h < 1 or w < 1:
        raise ConstructionError(f"phantom size must be positive, got {h}x{w}")
    return np.meshgrid(np.arange(h), np.arange(w), indexing="ij")


def gradient(h, w):
    i, j = _grid(h, w)
    return (i + j) / max(h + w - 2, 1)


def checkerboard(h, w, cells=8):
    i, j = _grid(h, w)
    ch = max(h // cells, 1)
    cw = max(w // cells, 1)
    board = ((i // ch) + (j // cw)) % 2
    return 0.2 + 0.6 * board.astype(np.float64)


def disk(h, w, radius=None):
    i, j = _grid(h, w)
    if radius is None:
        radius = min(h, w) / 3.0
    ci, cj = (h - 1) / 2.0, (w - 1) / 2.0
    inside = (i - ci) ** 2 + (j - cj) ** 2 <= radius**2
    return np.where(inside, 0.8, 0.2)


def _cosine(index, k, n):
    return np.cos(np.pi * (2 * index + 1) * k / (2 * n))


def waves(h, w):
    """Smooth image built from even-index DCT-II cosines (periodic on the torus)."""
    i, j = _grid(h, w)
    return (0.5 + 0.25 * _cosine(i, 4, h) * _cosine(j, 6, w)
            + 0.15 * _cosine(i, 6, h) + 0.08 * _cosine(j, 4, w))


PHANTOMS = {
    "gradient": gradient,
    "checkerboard": checkerboard,
    "disk": disk,
    "waves": waves,
}


def make_phantom(name, h, w=None):
    if name not in PHANTOMS:
        raise ConstructionError(f"unknown phantom '{name}', choose from {sorted(PHANTOMS)}")
    return PHANTOMS[name](h, h if w is None else w)


def probe_images(size):
    """The fixed probe set used for certification sampling."""
    return [make_phantom(name, size) for name in ("gradient", "checkerboard", "disk")]
