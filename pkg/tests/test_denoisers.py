import numpy as np
import pytest
from scipy import fft

from app.core.image import Kernel
from app.core.operators import identity_operator, scaled_operator
from app.denoisers.base import (
    EXACT_PROBE,
    LINEAR,
    SYMMETRIC_JACOBIAN,
    DenoiserSpec,
    finite_difference_jvp,
    measure_lipschitz,
)
from app.denoisers.registry import build_denoiser, parse_denoiser_spec
from app.denoisers.zoo import (
    make_antisymmetric_denoiser,
    make_blackbox_denoiser,
    make_dct_shrink_denoiser,
    make_gaussian_blur_denoiser,
    make_identity_denoiser,
    make_matrix_denoiser,
    make_scaled_spc_denoiser,
    make_spc_denoiser,
    pair_rotate,
    pair_rotation_operator,
)
from app.errors import ConstructionError, DimensionError
from app.oracle.dense import assemble_dense, dense_svd_norm, sampled_pc_constant, strict_pc_constant

SHAPE = (8, 8)


def _pairs(rng, n=1000, shape=SHAPE):
    for _ in range(n):
        yield rng.standard_normal(shape), rng.standard_normal(shape)


def builtin_denoisers():
    return {
        "identity": make_identity_denoiser(),
        "gauss": make_gaussian_blur_denoiser(Kernel.binomial(3)),
        "spc-rot": make_spc_denoiser(pair_rotation_operator(SHAPE), 0.5),
        "spc-scale": make_scaled_spc_denoiser(SHAPE, 0.8, 0.25),
        "antisym": make_antisymmetric_denoiser(1.0),
        "dct": make_dct_shrink_denoiser(0.1),
    }


# ---------------------------------------------------------------- gaussian blur

def test_delta_blur_is_identity(rng):
    D = make_gaussian_blur_denoiser(Kernel.delta())
    x = rng.standard_normal(SHAPE)
    np.testing.assert_allclose(D(x), x, atol=1e-14)
    assert D.spec.claimed_region == "firmly_ne"


def test_binomial_blur_spectrum():
    D = make_gaussian_blur_denoiser(Kernel.binomial(3))
    J = assemble_dense(D.apply, SHAPE)
    p = np.arange(8)
    expected = np.sort(np.outer(np.cos(np.pi * p / 8) ** 2, np.cos(np.pi * p / 8) ** 2).ravel())
    np.testing.assert_allclose(np.sort(np.linalg.eigvalsh(0.5 * (J + J.T))), expected, atol=1e-12)
    assert dense_svd_norm(J) == pytest.approx(1.0, abs=1e-10)
    assert D.has(SYMMETRIC_JACOBIAN) and D.is_linear


def test_blur_keeps_constants():
    D = make_gaussian_blur_denoiser(Kernel.binomial(5))
    np.testing.assert_allclose(D(np.full(SHAPE, 0.42)), 0.42, atol=1e-14)


@pytest.mark.parametrize("taps", [[[1.0, 2.0, 0.0]], [[-0.5, 2.0, -0.5]]])
def test_blur_rejects_asymmetric_or_negative(taps):
    with pytest.raises(ConstructionError):
        make_gaussian_blur_denoiser(Kernel.from_array(taps))


# ---------------------------------------------------------------- strictly pseudo-contractive

def test_spc_rot90_half():
    N = pair_rotation_operator(SHAPE)
    D = make_spc_denoiser(N, 0.5)
    J = assemble_dense(D.apply, SHAPE)
    Nmat = assemble_dense(N.apply, SHAPE)
    np.testing.assert_allclose(J, 2 * Nmat - np.eye(64), atol=1e-14)
    assert dense_svd_norm(0.5 * np.eye(64) + 0.5 * J) == pytest.approx(1.0, abs=1e-12)
    assert D.spec.claimed_lipschitz == pytest.approx(3.0)


def test_spc_with_zero_k_is_n(rng):
    N = pair_rotation_operator(SHAPE)
    D = make_spc_denoiser(N, 0.0)
    x = rng.standard_normal(SHAPE)
    np.testing.assert_allclose(D(x), pair_rotate(x), atol=1e-15)
    assert D.spec.claimed_region == "nonexpansive"


def test_spc_scaled_identity(rng):
    D = make_scaled_spc_denoiser(SHAPE, 0.8, 0.25)
    x = rng.standard_normal(SHAPE)
    np.testing.assert_allclose(D(x), (11.0 / 15.0) * x, atol=1e-14)
    L = assemble_dense(D.apply, SHAPE)
    assert strict_pc_constant(L) <= 0.25
    assert sampled_pc_constant(D.apply, SHAPE, pairs=200, seed=1) <= 0.25


def test_spc_rejects_expansive_n():
    N = scaled_operator(pair_rotation_operator(SHAPE), 1.2)
    with pytest.raises(ConstructionError):
        make_spc_denoiser(N, 0.3)
    with pytest.raises(ConstructionError):
        make_spc_denoiser(identity_operator(SHAPE), 1.0)


def test_spc_checks_shape():
    D = make_spc_denoiser(pair_rotation_operator(SHAPE), 0.5)
    with pytest.raises(DimensionError):
        D(np.zeros((4, 4)))


@pytest.mark.parametrize("k", [0.0, 0.25, 0.5, 0.9])
def test_spc_round_trip(k, rng):
    D = make_spc_denoiser(pair_rotation_operator(SHAPE), k)
    worst_spc = worst_ne = -np.inf
    for x, y in _pairs(rng):
        dx, dy = D(x), D(y)
        gap = np.sum((x - y) ** 2)
        res = np.sum(((x - dx) - (y - dy)) ** 2)
        worst_spc = max(worst_spc, (np.sum((dx - dy) ** 2) - gap - k * res) / gap)
        nx, ny = (1 - k) * dx + k * x, (1 - k) * dy + k * y
        worst_ne = max(worst_ne, (np.sum((nx - ny) ** 2) - gap) / gap)
    assert worst_spc <= 1e-10
    assert worst_ne <= 1e-10
    assert measure_lipschitz(D, SHAPE, pairs=200, seed=2) <= (1 + k) / (1 - k) + 1e-8


# ---------------------------------------------------------------- antisymmetric

def test_antisym_zero_is_identity(rng):
    x = rng.standard_normal(SHAPE)
    np.testing.assert_allclose(make_antisymmetric_denoiser(0.0)(x), x)


def test_antisym_norms():
    D = make_antisymmetric_denoiser(1.0)
    J = assemble_dense(D.apply, SHAPE)
    assert dense_svd_norm(J) == pytest.approx(np.sqrt(2.0), abs=1e-10)
    np.testing.assert_allclose(0.5 * (J + J.T), np.eye(64), atol=1e-15)


def test_antisym_residual_quadratic_form_vanishes(rng):
    D = make_antisymmetric_denoiser(2.5)
    for _ in range(50):
        v = rng.standard_normal(SHAPE)
        assert abs(np.sum((v - D.jvp(None, None, v)) * v)) <= 1e-12 * np.sum(v * v)


def test_antisym_odd_pixel_count_maps_last_to_zero():
    x = np.arange(1.0, 10.0).reshape(3, 3)
    y = pair_rotate(x).ravel()
    assert y[-1] == 0.0
    np.testing.assert_array_equal(y[:2], [-2.0, 1.0])


def test_antisym_rejects_negative_c():
    with pytest.raises(ConstructionError):
        make_antisymmetric_denoiser(-1.0)


# ---------------------------------------------------------------- DCT shrinkage

def test_dct_zero_threshold_is_identity(rng):
    x = rng.standard_normal(SHAPE)
    np.testing.assert_allclose(make_dct_shrink_denoiser(0.0)(x), x, atol=1e-13)


def test_dct_large_coefficients_shift_by_threshold(rng):
    t = 0.05
    coeffs = rng.choice([-1.0, 1.0], SHAPE) * rng.uniform(0.2, 1.0, SHAPE)
    x = fft.idctn(coeffs, norm="ortho")
    D = make_dct_shrink_denoiser(t)
    shift = np.sign(coeffs)
    shift[0, 0] = 0.0
    expected = x - t * fft.idctn(shift, norm="ortho")
    np.testing.assert_allclose(D(x), expected, atol=1e-12)
    assert np.linalg.norm(D(x)) < np.linalg.norm(x)


def test_dct_keeps_the_mean(rng):
    D = make_dct_shrink_denoiser(0.5)
    flat = np.full(SHAPE, 0.37)
    np.testing.assert_allclose(D(flat, 40.0), flat, atol=1e-13)
    x = rng.uniform(0.0, 1.0, SHAPE)
    assert D(x, 40.0).mean() == pytest.approx(x.mean(), abs=1e-13)
    v = np.ones(SHAPE)
    np.testing.assert_allclose(D.jvp(x, 40.0, v), v, atol=1e-12)


def test_dct_threshold_scales_with_sigma(rng):
    D = make_dct_shrink_denoiser(0.1)
    x = rng.standard_normal(SHAPE)
    np.testing.assert_allclose(D(x, 25.0), D(x, None), atol=1e-14)
    assert not np.allclose(D(x, 40.0), D(x, 25.0))


def test_dct_firmly_nonexpansive(rng):
    D = make_dct_shrink_denoiser(0.3)
    worst = -np.inf
    for x, y in _pairs(rng):
        d = D(x) - D(y)
        worst = max(worst, np.sum(d * d) - np.sum(d * (x - y)))
    assert worst <= 1e-10


# ---------------------------------------------------------------- probes

def test_fd_jvp_matches_linear_jvp(rng):
    D = make_gaussian_blur_denoiser(Kernel.binomial(3))
    x, v = rng.standard_normal(SHAPE), rng.standard_normal(SHAPE)
    np.testing.assert_allclose(finite_difference_jvp(D, x, None, v), D.jvp(x, None, v), atol=1e-6)


def test_fd_jvp_of_identity_returns_direction(rng):
    D = make_identity_denoiser()
    x, v = rng.standard_normal(SHAPE), rng.standard_normal(SHAPE)
    np.testing.assert_allclose(finite_difference_jvp(D, x, None, v), v, atol=1e-10)


def test_fd_jvp_matches_dct_mask_away_from_kinks(rng):
    t = 0.1
    big = rng.choice([-1.0, 1.0], SHAPE) * rng.uniform(0.4, 1.0, SHAPE)
    small = rng.uniform(-0.05, 0.05, SHAPE)
    coeffs = np.where(rng.uniform(size=SHAPE) < 0.5, big, small)
    x = fft.idctn(coeffs, norm="ortho")
    v = rng.standard_normal(SHAPE)
    v /= np.linalg.norm(v)
    D = make_dct_shrink_denoiser(t)
    np.testing.assert_allclose(finite_difference_jvp(D, x, None, v), D.jvp(x, None, v), atol=1e-6)


def test_fd_step_must_be_positive(rng):
    with pytest.raises(ConstructionError):
        finite_difference_jvp(make_identity_denoiser(), np.zeros(SHAPE), None, np.ones(SHAPE), h=0.0)


@pytest.mark.parametrize("name", list(builtin_denoisers()))
def test_jvp_vjp_adjoint(name, rng):
    D = builtin_denoisers()[name]
    x = rng.uniform(0, 1, SHAPE)
    for _ in range(20):
        v, w = rng.standard_normal(SHAPE), rng.standard_normal(SHAPE)
        lhs = np.sum(D.jvp(x, 15.0, v) * w)
        rhs = np.sum(v * D.vjp(x, 15.0, w))
        assert abs(lhs - rhs) <= 1e-8
        np.testing.assert_allclose(D.jvp(x, 15.0, 2 * v + w), 2 * D.jvp(x, 15.0, v) + D.jvp(x, 15.0, w), atol=1e-8)


@pytest.mark.parametrize("name", list(builtin_denoisers()))
def test_pseudo_contractive_denoisers_have_monotone_residual(name, rng):
    D = builtin_denoisers()[name]
    worst = np.inf
    for x, y in _pairs(rng):
        r = (x - D(x, 15.0)) - (y - D(y, 15.0))
        worst = min(worst, np.sum(r * (x - y)))
    assert worst >= -1e-10


@pytest.mark.parametrize("name", ["identity", "gauss", "spc-rot", "antisym"])
def test_linear_flag_is_honest(name, rng):
    D = builtin_denoisers()[name]
    assert D.has(LINEAR) and D.has(EXACT_PROBE)
    x, y = rng.standard_normal(SHAPE), rng.standard_normal(SHAPE)
    np.testing.assert_allclose(D(2 * x - 3 * y), 2 * D(x) - 3 * D(y), atol=1e-10)


def test_matrix_denoiser(rng):
    W = rng.standard_normal((16, 16))
    D = make_matrix_denoiser(W, (4, 4))
    x = rng.standard_normal((4, 4))
    np.testing.assert_allclose(D(x).ravel(), W @ x.ravel())
    np.testing.assert_allclose(assemble_dense(D.apply, (4, 4)), W, atol=1e-14)
    with pytest.raises(DimensionError):
        make_matrix_denoiser(W, (3, 3))


def test_blackbox_denoiser_has_no_vjp(rng):
    D = make_blackbox_denoiser(lambda x, sigma: 0.5 * x, name="half")
    assert not D.has_vjp and not D.flags
    v = rng.standard_normal(SHAPE)
    np.testing.assert_allclose(D.jvp(np.zeros(SHAPE), None, v), 0.5 * v, atol=1e-10)


# ---------------------------------------------------------------- registry

@pytest.mark.parametrize(
    "text, kind",
    [
        ("identity", "identity"),
        ("gauss:3x3", "gauss"),
        ("gauss:7x7:s=1.5", "gauss"),
        ("spc:rot90:k=0.5", "spc"),
        ("spc:scale=0.8:k=0.25", "spc"),
        ("antisym:c=1.0", "antisym"),
        ("dct-shrink:t=0.05", "dct-shrink"),
    ],
)
def test_parse_and_build(text, kind):
    spec = parse_denoiser_spec(text)
    assert spec.kind == kind
    D = build_denoiser(text, SHAPE)
    assert D(np.zeros(SHAPE)).shape == SHAPE
    assert DenoiserSpec.from_dict(D.spec.to_dict()) == D.spec


@pytest.mark.parametrize("text", ["", "gauss", "gauss:3x5", "spc:rot90", "antisym:c", "blur:3", "dct-shrink:t=x"])
def test_parse_rejects_bad_specs(text):
    with pytest.raises(ConstructionError):
        parse_denoiser_spec(text)


def test_build_matrix_from_file(tmp_path, rng):
    W = 0.5 * np.eye(16)
    np.savetxt(tmp_path / "W.txt", W)
    D = build_denoiser(f"matrix:{tmp_path / 'W.txt'}:shape=4x4", (4, 4))
    x = rng.standard_normal((4, 4))
    np.testing.assert_allclose(D(x), 0.5 * x)
