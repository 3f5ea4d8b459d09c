"""
Denoiser abstraction.

A denoiser D_beta is applied as ``apply(x, sigma)`` where sigma is the noise level
in gray levels out of 255. Jacobian probes: ``jvp`` gives J(x)v, ``vjp`` (optional)
gives J(x)^T w.
"""
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from app.config import FD_STEP
from app.core.image import as_image
from app.errors import ConstructionError

LINEAR = "linear"
SYMMETRIC_JACOBIAN = "symmetric_jacobian"
EXACT_PROBE = "exact_probe"
FLAGS = frozenset({LINEAR, SYMMETRIC_JACOBIAN, EXACT_PROBE})

REGIONS = ("firmly_ne", "nonexpansive", "spc", "pseudo_contractive")


@dataclass(frozen=True)
class DenoiserSpec:
    """Kind tag, construction parameters and the constants the construction claims."""

    kind: str
    params: dict = field(default_factory=dict)
    claimed_region: Optional[str] = None
    claimed_k: Optional[float] = None
    claimed_lipschitz: Optional[float] = None
    text: str = ""

    def __post_init__(self):
        if self.claimed_region is not None and self.claimed_region not in REGIONS:
            raise ConstructionError(f"unknown region '{self.claimed_region}'")
        if self.claimed_k is not None and not 0.0 <= self.claimed_k < 1.0:
            raise ConstructionError(f"claimed k must lie in [0, 1), got {self.claimed_k}")

    def to_dict(self):
        return {
            "kind": self.kind,
            "params": dict(self.params),
            "claimed_region": self.claimed_region,
            "claimed_k": self.claimed_k,
            "claimed_lipschitz": self.claimed_lipschitz,
            "text": self.text,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            kind=data["kind"],
            params=dict(data.get("params", {})),
            claimed_region=data.get("claimed_region"),
            claimed_k=data.get("claimed_k"),
            claimed_lipschitz=data.get("claimed_lipschitz"),
            text=data.get("text", ""),
        )


@dataclass(frozen=True)
class DenoiserHandle:
    apply: Callable
    jvp: Callable
    vjp: Optional[Callable]
    flags: frozenset
    spec: DenoiserSpec

    def __post_init__(self):
        unknown = set(self.flags) - FLAGS
        if unknown:
            raise ConstructionError(f"unknown denoiser flags {sorted(unknown)}")
        if EXACT_PROBE in self.flags and self.vjp is None:
            raise ConstructionError("exact_probe requires a vjp")

    def __call__(self, x, sigma=None):
        return self.apply(x, sigma)

    @property
    def name(self):
        return self.spec.text or self.spec.kind

    def has(self, flag):
        return flag in self.flags

    @property
    def is_linear(self):
        return LINEAR in self.flags

    @property
    def has_vjp(self):
        return self.vjp is not None


def finite_difference_jvp(D: DenoiserHandle, x, sigma, v, h=FD_STEP):
    """Central difference (D(x + hv) - D(x - hv)) / 2h."""
    if h <= 0:
        raise ConstructionError(f"finite-difference step must be positive, got {h}")
    x = as_image(x)
    return (D.apply(x + h * v, sigma) - D.apply(x - h * v, sigma)) / (2.0 * h)


def measure_lipschitz(D: DenoiserHandle, shape, sigma=None, pairs=100, seed=0):
    """Largest sampled ratio ||Dx - Dy|| / ||x - y|| over random pairs."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(pairs):
        x = rng.standard_normal(shape)
        y = rng.standard_normal(shape)
        ratio = np.linalg.norm(D.apply(x, sigma) - D.apply(y, sigma)) / np.linalg.norm(x - y)
        worst = max(worst, float(ratio))
    return worst
