"""Poisson observation model f ~ Poisson(u * peak) / peak."""
import numpy as np

from app.core.image import as_image
from app.errors import ConstructionError, DomainError


def sample_poisson_observation(u, peak, seed=0):
    u = as_image(u)
    if peak <= 0:
        raise ConstructionError(f"peak must be positive, got {peak}")
    if np.any(u < 0):
        raise DomainError("Poisson rates must be non-negative")
    rng = np.random.default_rng(seed)
    return rng.poisson(u * peak).astype(np.float64) / peak
