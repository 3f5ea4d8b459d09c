"""
Linear operators on images: circular convolution (FFT), s-fold downsampling,
composition, and the cubic-spline upsampler used to initialise super-resolution.
"""
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import fft, ndimage

from app.core.image import Kernel, as_image
from app.errors import DimensionError


@dataclass(frozen=True)
class LinearOperator:
    """A linear map between image spaces with its adjoint and a spectral-norm bound."""

    apply: Callable[[np.ndarray], np.ndarray]
    adjoint: Callable[[np.ndarray], np.ndarray]
    norm_bound: float
    in_shape: tuple
    out_shape: tuple
    name: str = "linear"

    def __call__(self, x):
        return self.apply(x)


def transfer_function(kernel: Kernel, shape):
    """FFT of the kernel zero-padded to ``shape`` with its centre tap moved to (0, 0)."""
    kh, kw = kernel.shape
    h, w = shape
    if kh > h or kw > w:
        raise DimensionError(f"kernel {kernel.shape} is larger than image {tuple(shape)}")
    padded = np.zeros((h, w))
    padded[:kh, :kw] = kernel.taps
    ci, cj = kernel.center
    padded = np.roll(padded, (-ci, -cj), axis=(0, 1))
    return fft.fft2(padded)


def conv_circular(x, kernel: Kernel):
    x = as_image(x)
    khat = transfer_function(kernel, x.shape)
    return fft.ifft2(fft.fft2(x) * khat).real


def conv_circular_adjoint(y, kernel: Kernel):
    y = as_image(y)
    khat = transfer_function(kernel, y.shape)
    return fft.ifft2(fft.fft2(y) * np.conj(khat)).real


def convolution_operator(kernel: Kernel, shape):
    shape = tuple(shape)
    khat = transfer_function(kernel, shape)

    def apply(x):
        return fft.ifft2(fft.fft2(x) * khat).real

    def adjoint(y):
        return fft.ifft2(fft.fft2(y) * np.conj(khat)).real

    return LinearOperator(
        apply=apply,
        adjoint=adjoint,
        norm_bound=float(np.abs(khat).max()),
        in_shape=shape,
        out_shape=shape,
        name=f"conv{kernel.shape[0]}x{kernel.shape[1]}",
    )


def _check_scale(shape, s):
    if s < 1:
        raise DimensionError(f"scale factor must be positive, got {s}")
    h, w = shape
    if h % s or w % s:
        raise DimensionError(f"scale {s} does not divide image shape {tuple(shape)}")


def downsample(x, s):
    """Keep every s-th pixel starting at (0, 0)."""
    x = as_image(x)
    _check_scale(x.shape, s)
    return x[::s, ::s].copy()


def upsample_adjoint(y, s, shape=None):
    """Adjoint of ``downsample``: values at kept positions, zeros elsewhere."""
    y = as_image(y)
    if s < 1:
        raise DimensionError(f"scale factor must be positive, got {s}")
    if shape is None:
        shape = (y.shape[0] * s, y.shape[1] * s)
    _check_scale(shape, s)
    if (shape[0] // s, shape[1] // s) != y.shape:
        raise DimensionError(f"low-res shape {y.shape} does not match {tuple(shape)} at scale {s}")
    out = np.zeros(shape)
    out[::s, ::s] = y
    return out


def downsample_operator(s, shape):
    shape = tuple(shape)
    _check_scale(shape, s)
    return LinearOperator(
        apply=lambda x: x[::s, ::s].copy(),
        adjoint=lambda y: upsample_adjoint(y, s, shape),
        norm_bound=1.0,
        in_shape=shape,
        out_shape=(shape[0] // s, shape[1] // s),
        name=f"down{s}",
    )


def compose(outer: LinearOperator, inner: LinearOperator):
    """outer after inner."""
    if inner.out_shape != outer.in_shape:
        raise DimensionError(f"cannot compose {outer.name} after {inner.name}: "
                             f"{inner.out_shape} != {outer.in_shape}")
    return LinearOperator(
        apply=lambda x: outer.apply(inner.apply(x)),
        adjoint=lambda y: inner.adjoint(outer.adjoint(y)),
        norm_bound=outer.norm_bound * inner.norm_bound,
        in_shape=inner.in_shape,
        out_shape=outer.out_shape,
        name=f"{outer.name}*{inner.name}",
    )


def identity_operator(shape):
    shape = tuple(shape)
    return LinearOperator(
        apply=lambda x: np.array(x, dtype=np.float64),
        adjoint=lambda y: np.array(y, dtype=np.float64),
        norm_bound=1.0,
        in_shape=shape,
        out_shape=shape,
        name="identity",
    )


def scaled_operator(op: LinearOperator, c):
    return LinearOperator(
        apply=lambda x: c * op.apply(x),
        adjoint=lambda y: c * op.adjoint(y),
        norm_bound=abs(c) * op.norm_bound,
        in_shape=op.in_shape,
        out_shape=op.out_shape,
        name=f"{c:g}*{op.name}",
    )


def bicubic_upsample(y, s):
    """Periodic cubic-spline interpolation; sample (i, j) lands on pixel (s*i, s*j)."""
    y = as_image(y)
    if s == 1:
        return y.copy()
    h, w = y.shape
    rows = np.arange(h * s) / s
    cols = np.arange(w * s) / s
    grid = np.meshgrid(rows, cols, indexing="ij")
    return ndimage.map_coordinates(y, grid, order=3, mode="grid-wrap")
