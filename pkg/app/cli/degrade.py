"""
Seeded degradation synthesis for the restore command.

Kernel strings:
    delta | binomial:N | gaussian:N:STD | box:N | motion:LEN | <path to a text kernel>
Noise levels are given in gray levels out of 255.
"""
from pathlib import Path

import numpy as np

from app.core.image import Kernel, as_image
from app.core.operators import conv_circular, downsample
from app.errors import ConfigError, ConstructionError
from app.fidelity.noise import sample_poisson_observation


def parse_kernel(text):
    head, *args = text.split(":")
    try:
        if head == "delta" and not args:
            return Kernel.delta()
        if head == "binomial":
            return Kernel.binomial(int(args[0]) if args else 3)
        if head == "gaussian" and len(args) == 2:
            return Kernel.gaussian(int(args[0]), float(args[1]))
        if head == "box" and len(args) == 1:
            return Kernel.box(int(args[0]))
        if head == "motion" and len(args) == 1:
            return Kernel.motion(int(args[0]))
    except ValueError as exc:
        raise ConstructionError(f"bad kernel spec '{text}': {exc}") from exc
    if Path(text).exists():
        return Kernel.from_text(text)
    raise ConfigError(f"unknown kernel '{text}' (delta, binomial:N, gaussian:N:STD, box:N, motion:LEN or a file)")


def add_gaussian_noise(x, noise, rng):
    if noise < 0:
        raise ConstructionError(f"noise level must be >= 0, got {noise}")
    return x + rng.normal(0.0, noise / 255.0, x.shape)


def synthesize_blur(u, kernel: Kernel, noise, seed=0):
    """f = K u + n, n ~ N(0, (noise/255)^2)."""
    rng = np.random.default_rng(seed)
    return add_gaussian_noise(conv_circular(as_image(u), kernel), noise, rng)


def synthesize_denoise(u, noise, seed=0):
    rng = np.random.default_rng(seed)
    return add_gaussian_noise(as_image(u), noise, rng)


def synthesize_sisr(u, kernel: Kernel, scale, noise, seed=0):
    """f = S K u + n with S the s-fold downsampler."""
    rng = np.random.default_rng(seed)
    low = downsample(conv_circular(as_image(u), kernel), scale)
    return add_gaussian_noise(low, noise, rng)


def synthesize_poisson(u, peak, seed=0):
    return sample_poisson_observation(as_image(u), peak, seed)


def synthesize(task, u, params, seed=0):
    """Observation for ``task`` from a clean image, using the restore parameters."""
    if task == "deblur":
        return synthesize_blur(u, parse_kernel(params["kernel"]), params["noise"], seed)
    if task == "denoise":
        return synthesize_denoise(u, params["noise"], seed)
    if task == "sisr":
        return synthesize_sisr(u, parse_kernel(params["kernel"]), params["scale"], params["noise"], seed)
    if task == "poisson":
        return synthesize_poisson(u, params["peak"], seed)
    raise ConfigError(f"unknown task '{task}'")
