"""
Denoiser spec strings.

    identity
    gauss:3x3            binomial [1 2 1]/4 (x) [1 2 1]/4
    gauss:7x7:s=1.5      sampled gaussian with std s
    spc:rot90:k=0.5      D = (N - kI)/(1 - k) with N the pixel-pair rotation
    spc:scale=0.8:k=0.25 same with N = 0.8 I
    antisym:c=1.0
    dct-shrink:t=0.05
    matrix:W.txt:shape=8x8
"""
from pathlib import Path

import numpy as np

from app.core.image import Kernel
from app.denoisers.base import DenoiserSpec
from app.denoisers.zoo import (
    make_antisymmetric_denoiser,
    make_dct_shrink_denoiser,
    make_gaussian_blur_denoiser,
    make_identity_denoiser,
    make_matrix_denoiser,
    make_scaled_spc_denoiser,
    make_spc_denoiser,
    pair_rotation_operator,
)
from app.errors import ConstructionError

KINDS = ("identity", "gauss", "spc", "antisym", "dct-shrink", "matrix")


def _keyvals(tokens, text):
    params = {}
    for tok in tokens:
        key, sep, value = tok.partition("=")
        if not sep or not key:
            raise ConstructionError(f"expected key=value in denoiser spec '{text}', got '{tok}'")
        params[key.strip()] = value.strip()
    return params


def _float(params, key, text, default=None):
    if key not in params:
        if default is None:
            raise ConstructionError(f"denoiser spec '{text}' is missing '{key}='")
        return default
    try:
        return float(params[key])
    except ValueError as exc:
        raise ConstructionError(f"'{key}' in '{text}' is not a number: {params[key]!r}") from exc


def _size(token, text):
    try:
        h, w = (int(v) for v in token.lower().split("x"))
    except ValueError as exc:
        raise ConstructionError(f"bad size '{token}' in denoiser spec '{text}'") from exc
    return h, w


def parse_denoiser_spec(text):
    """Parse a spec string into a DenoiserSpec (kind and parameters only)."""
    text = text.strip()
    if not text:
        raise ConstructionError("empty denoiser spec")
    head, *rest = text.split(":")
    kind = head.lower()

    if kind == "identity":
        return DenoiserSpec(kind="identity", text=text)

    if kind == "gauss":
        if not rest:
            raise ConstructionError(f"gauss spec needs a size, e.g. gauss:3x3 (got '{text}')")
        h, w = _size(rest[0], text)
        if h != w:
            raise ConstructionError(f"gauss kernels are square, got {h}x{w}")
        params = {"size": h}
        extra = _keyvals(rest[1:], text)
        if "s" in extra:
            params["std"] = _float(extra, "s", text)
        return DenoiserSpec(kind="gauss", params=params, text=text)

    if kind == "spc":
        if not rest:
            raise ConstructionError(f"spc spec needs an operator, e.g. spc:rot90:k=0.5 (got '{text}')")
        if rest[0] == "rot90":
            params = {"N": "rot90"}
            params["k"] = _float(_keyvals(rest[1:], text), "k", text)
        else:
            extra = _keyvals(rest, text)
            params = {"N": "scale", "scale": _float(extra, "scale", text), "k": _float(extra, "k", text)}
        return DenoiserSpec(kind="spc", params=params, text=text)

    if kind == "antisym":
        return DenoiserSpec(kind="antisym", params={"c": _float(_keyvals(rest, text), "c", text)}, text=text)

    if kind == "dct-shrink":
        return DenoiserSpec(kind="dct-shrink", params={"t": _float(_keyvals(rest, text), "t", text)}, text=text)

    if kind == "matrix":
        if len(rest) < 2:
            raise ConstructionError(f"matrix spec needs a path and shape, e.g. matrix:W.txt:shape=8x8 (got '{text}')")
        shape_kv = _keyvals(rest[-1:], text)
        if "shape" not in shape_kv:
            raise ConstructionError(f"matrix spec '{text}' is missing 'shape='")
        return DenoiserSpec(
            kind="matrix",
            params={"path": ":".join(rest[:-1]), "shape": shape_kv["shape"]},
            text=text,
        )

    raise ConstructionError(f"unknown denoiser kind '{head}', choose from {', '.join(KINDS)}")


def build_denoiser(spec, shape):
    """Build a DenoiserHandle for images of ``shape`` from a spec string or DenoiserSpec."""
    if isinstance(spec, str):
        spec = parse_denoiser_spec(spec)
    p = spec.params
    text = spec.text or None

    if spec.kind == "identity":
        return make_identity_denoiser()
    if spec.kind == "gauss":
        size = int(p["size"])
        kernel = Kernel.gaussian(size, float(p["std"])) if "std" in p else Kernel.binomial(size)
        return make_gaussian_blur_denoiser(kernel, text=text)
    if spec.kind == "spc":
        if p["N"] == "rot90":
            return make_spc_denoiser(pair_rotation_operator(shape), float(p["k"]), text=text)
        return make_scaled_spc_denoiser(shape, float(p["scale"]), float(p["k"]), text=text)
    if spec.kind == "antisym":
        return make_antisymmetric_denoiser(float(p["c"]), text=text)
    if spec.kind == "dct-shrink":
        return make_dct_shrink_denoiser(float(p["t"]), text=text)
    if spec.kind == "matrix":
        h, w = _size(str(p["shape"]), spec.text)
        path = Path(p["path"])
        if not path.exists():
            raise ConstructionError(f"matrix file not found: {path}")
        W = np.loadtxt(path, ndmin=2)
        return make_matrix_denoiser(W, (h, w), text=text)
    raise ConstructionError(f"unknown denoiser kind '{spec.kind}'")
