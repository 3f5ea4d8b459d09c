"""
Analytic denoisers with exactly known regularity constants.

    gaussian blur      D = K (symmetric, spectrum in [0, 1])   firmly non-expansive
    spc(N, k)          D = (N - kI) / (1 - k), ||N|| <= 1       k-strictly pseudo-contractive
    antisymmetric(c)   D = I + cA, A the pixel-pair rotation    pseudo-contractive, ||J|| = sqrt(1 + c^2)
    dct-shrink(t)      soft threshold of orthonormal DCT        firmly non-expansive, nonlinear
    matrix(W)          D = W on the flattened image
    blackbox(fn)       any callable, finite-difference jvp only

Only dct-shrink depends on sigma: its threshold is t * sigma / 25 on the AC coefficients.
"""
import numpy as np
from scipy import fft

from app.config import DCT_REFERENCE_SIGMA, NONEXPANSIVE_CHECK_ITERS
from app.core.image import Kernel, as_image
from app.core.operators import (
    LinearOperator,
    conv_circular,
    conv_circular_adjoint,
    identity_operator,
    scaled_operator,
    transfer_function,
)
from app.denoisers.base import (
    EXACT_PROBE,
    LINEAR,
    SYMMETRIC_JACOBIAN,
    DenoiserHandle,
    DenoiserSpec,
    finite_difference_jvp,
)
from app.errors import ConstructionError, DimensionError
from app.spectral.power import power_norm


# ---------------------------------------------------------------- pair rotation

def pair_rotate(x):
    """Rotate consecutive pixel pairs by 90 degrees: (a, b) -> (-b, a).

    Pairs are taken on the row-major flattening; with an odd pixel count the last
    pixel is paired with zero and maps to 0.
    """
    flat = np.asarray(x, dtype=np.float64).ravel()
    out = np.zeros_like(flat)
    m = flat.size // 2
    out[0 : 2 * m : 2] = -flat[1 : 2 * m : 2]
    out[1 : 2 * m : 2] = flat[0 : 2 * m : 2]
    return out.reshape(np.shape(x))


def pair_rotate_adjoint(y):
    return -pair_rotate(y)


def pair_rotation_operator(shape):
    shape = tuple(shape)
    size = shape[0] * shape[1]
    return LinearOperator(
        apply=pair_rotate,
        adjoint=pair_rotate_adjoint,
        norm_bound=1.0 if size > 1 else 0.0,
        in_shape=shape,
        out_shape=shape,
        name="rot90",
    )


# ---------------------------------------------------------------- gaussian blur

def _positive_spectrum(kernel: Kernel, probe=64):
    size = max(probe, *kernel.shape)
    khat = transfer_function(kernel, (size, size))
    return float(khat.real.min()) >= -1e-12


def make_gaussian_blur_denoiser(kernel: Kernel, text=None):
    if not kernel.normalized:
        raise ConstructionError("blur denoiser needs a sum-to-one kernel")
    if not kernel.is_symmetric():
        raise ConstructionError("blur denoiser needs a point-symmetric kernel")
    if not kernel.is_nonnegative():
        raise ConstructionError("blur denoiser needs non-negative taps")

    region = "firmly_ne" if _positive_spectrum(kernel) else "nonexpansive"
    kh, kw = kernel.shape
    spec = DenoiserSpec(
        kind="gauss",
        params={"size": f"{kh}x{kw}"},
        claimed_region=region,
        claimed_k=0.0,
        claimed_lipschitz=1.0,
        text=text or f"gauss:{kh}x{kw}",
    )
    return DenoiserHandle(
        apply=lambda x, sigma=None: conv_circular(x, kernel),
        jvp=lambda x, sigma, v: conv_circular(v, kernel),
        vjp=lambda x, sigma, w: conv_circular_adjoint(w, kernel),
        flags=frozenset({LINEAR, SYMMETRIC_JACOBIAN, EXACT_PROBE}),
        spec=spec,
    )


def make_identity_denoiser():
    return make_gaussian_blur_denoiser(Kernel.delta(), text="identity")


# ---------------------------------------------------------------- strictly pseudo-contractive

def make_spc_denoiser(N: LinearOperator, k, symmetric=False, text=None):
    """D = N/(1-k) - kI/(1-k); k-strictly pseudo-contractive whenever ||N|| <= 1."""
    if not 0.0 <= k < 1.0:
        raise ConstructionError(f"k must lie in [0, 1), got {k}")
    measured = power_norm(N.apply, N.adjoint, N.in_shape, n_iter=NONEXPANSIVE_CHECK_ITERS)
    if measured > 1.0 + 1e-8:
        raise ConstructionError(f"N is not non-expansive: ||N|| ~ {measured:.10g}")

    scale = 1.0 / (1.0 - k)

    def apply(x, sigma=None):
        x = as_image(x)
        if x.shape != N.in_shape:
            raise DimensionError(f"denoiser built for {N.in_shape}, got {x.shape}")
        return scale * (N.apply(x) - k * x)

    flags = {LINEAR, EXACT_PROBE}
    if symmetric:
        flags.add(SYMMETRIC_JACOBIAN)
    spec = DenoiserSpec(
        kind="spc",
        params={"N": N.name, "k": k},
        claimed_region="nonexpansive" if k == 0 else "spc",
        claimed_k=k,
        claimed_lipschitz=(1.0 + k) / (1.0 - k),
        text=text or f"spc:{N.name}:k={k:g}",
    )
    return DenoiserHandle(
        apply=apply,
        jvp=lambda x, sigma, v: scale * (N.apply(v) - k * v),
        vjp=lambda x, sigma, w: scale * (N.adjoint(w) - k * w),
        flags=frozenset(flags),
        spec=spec,
    )


def make_scaled_spc_denoiser(shape, scale, k, text=None):
    """spc construction on N = scale * I."""
    if abs(scale) > 1.0:
        raise ConstructionError(f"|scale| must be at most 1, got {scale}")
    N = scaled_operator(identity_operator(shape), scale)
    return make_spc_denoiser(N, k, symmetric=True, text=text or f"spc:scale={scale:g}:k={k:g}")


# ---------------------------------------------------------------- antisymmetric

def make_antisymmetric_denoiser(c, text=None):
    """D = I + cA; S = I so lambda_max(S) = 1 while ||J|| = sqrt(1 + c^2)."""
    if c < 0:
        raise ConstructionError(f"c must be non-negative, got {c}")
    spec = DenoiserSpec(
        kind="antisym",
        params={"c": c},
        claimed_region="pseudo_contractive",
        claimed_lipschitz=float(np.sqrt(1.0 + c * c)),
        text=text or f"antisym:c={c:g}",
    )
    flags = {LINEAR, EXACT_PROBE}
    if c == 0:
        flags.add(SYMMETRIC_JACOBIAN)
    return DenoiserHandle(
        apply=lambda x, sigma=None: as_image(x) + c * pair_rotate(x),
        jvp=lambda x, sigma, v: v + c * pair_rotate(v),
        vjp=lambda x, sigma, w: w - c * pair_rotate(w),
        flags=frozenset(flags),
        spec=spec,
    )


# ---------------------------------------------------------------- DCT shrinkage

def dct_threshold(t, sigma):
    if sigma is None:
        return t
    return t * sigma / DCT_REFERENCE_SIGMA


def _dct(x):
    return fft.dctn(x, norm="ortho")


def _idct(c):
    return fft.idctn(c, norm="ortho")


def soft_threshold(c, tau):
    return np.sign(c) * np.maximum(np.abs(c) - tau, 0.0)


def make_dct_shrink_denoiser(threshold, text=None):
    """Proximal map of tau*||DCT x||_1 over the AC coefficients, tau = threshold * sigma / 25.

    The DC coefficient passes through, so the mean intensity is never shrunk.
    """
    if threshold < 0:
        raise ConstructionError(f"threshold must be non-negative, got {threshold}")

    def tau_map(shape, sigma):
        tau = np.full(shape, dct_threshold(threshold, sigma))
        tau[0, 0] = 0.0
        return tau

    def apply(x, sigma=None):
        x = as_image(x)
        return _idct(soft_threshold(_dct(x), tau_map(x.shape, sigma)))

    def jvp(x, sigma, v):
        coeffs = _dct(as_image(x))
        mask = np.abs(coeffs) > tau_map(coeffs.shape, sigma)
        mask[0, 0] = True
        return _idct(mask * _dct(v))

    spec = DenoiserSpec(
        kind="dct-shrink",
        params={"t": threshold},
        claimed_region="firmly_ne",
        claimed_k=0.0,
        claimed_lipschitz=1.0,
        text=text or f"dct-shrink:t={threshold:g}",
    )
    return DenoiserHandle(
        apply=apply,
        jvp=jvp,
        vjp=jvp,
        flags=frozenset({SYMMETRIC_JACOBIAN, EXACT_PROBE}),
        spec=spec,
    )


# ---------------------------------------------------------------- dense matrix / black box

def make_matrix_denoiser(W, shape, text=None):
    """Linear denoiser acting as the matrix W on the row-major flattened image."""
    W = np.array(W, dtype=np.float64)
    shape = tuple(shape)
    size = shape[0] * shape[1]
    if W.shape != (size, size):
        raise DimensionError(f"matrix {W.shape} does not act on images of shape {shape}")
    if not np.all(np.isfinite(W)):
        raise ConstructionError("matrix denoiser has non-finite entries")
    W.setflags(write=False)

    def mv(M, v):
        v = np.asarray(v, dtype=np.float64)
        if v.shape != shape:
            raise DimensionError(f"denoiser built for {shape}, got {v.shape}")
        return (M @ v.ravel()).reshape(shape)

    flags = {LINEAR, EXACT_PROBE}
    if np.array_equal(W, W.T):
        flags.add(SYMMETRIC_JACOBIAN)
    spec = DenoiserSpec(
        kind="matrix",
        params={"shape": f"{shape[0]}x{shape[1]}"},
        text=text or f"matrix:shape={shape[0]}x{shape[1]}",
    )
    return DenoiserHandle(
        apply=lambda x, sigma=None: mv(W, x),
        jvp=lambda x, sigma, v: mv(W, v),
        vjp=lambda x, sigma, w: mv(W.T, w),
        flags=frozenset(flags),
        spec=spec,
    )


def make_blackbox_denoiser(fn, name="blackbox"):
    """Wrap ``fn(x, sigma)``; Jacobian probes fall back to finite differences."""
    spec = DenoiserSpec(kind="blackbox", params={"name": name}, text=name)
    handle = None

    def jvp(x, sigma, v):
        return finite_difference_jvp(handle, x, sigma, v)

    handle = DenoiserHandle(
        apply=lambda x, sigma=None: as_image(fn(as_image(x), sigma), "denoiser output"),
        jvp=jvp,
        vjp=None,
        flags=frozenset(),
        spec=spec,
    )
    return handle
