import numpy as np
import pytest
from helpers import random_symmetric_with_spectrum, random_with_singular_values

from app.denoisers.registry import build_denoiser
from app.denoisers.zoo import pair_rotation_operator
from app.errors import ConstructionError, DimensionError, NotSymmetricError
from app.oracle.dense import (
    assemble_dense,
    assemble_jacobian,
    dense_pc_norm,
    dense_svd_norm,
    jacobi_eigh,
    sampled_pc_constant,
    strict_pc_constant,
)
from app.oracle.lemmas import (
    SUITES,
    averagedness_excess,
    lemma4_tight_instance,
    verify_all,
    verify_lemma,
)
from app.solvers.hypotheses import composite_spc_constant


# ---------------------------------------------------------------- assembly

def test_assemble_dense_reproduces_matrix(rng):
    M = rng.standard_normal((6, 6))
    np.testing.assert_array_equal(assemble_dense(lambda v: M @ v, 6), M)


def test_assemble_dense_is_capped():
    with pytest.raises(DimensionError):
        assemble_dense(lambda v: v, (33, 32))


def test_exact_and_fd_jacobians_agree(rng):
    D = build_denoiser("gauss:3x3", (6, 6))
    x = rng.uniform(0, 1, (6, 6))
    exact = assemble_jacobian(D, x, exact=True)
    fd = assemble_jacobian(D, x)
    np.testing.assert_allclose(fd, exact, atol=1e-8)


# ---------------------------------------------------------------- Jacobi

@pytest.mark.parametrize("d", [1, 2, 7, 10, 31])
def test_jacobi_matches_lapack(d, rng):
    B = rng.standard_normal((d, d))
    S = B + B.T
    result = jacobi_eigh(S)
    assert result.converged
    np.testing.assert_allclose(result.eigenvalues, np.linalg.eigvalsh(S), atol=1e-10)
    V = result.eigenvectors
    np.testing.assert_allclose(V.T @ V, np.eye(d), atol=1e-10)
    np.testing.assert_allclose(V @ np.diag(result.eigenvalues) @ V.T, S, atol=1e-10)


def test_jacobi_off_diagonal_mass_shrinks(rng):
    B = rng.standard_normal((12, 12))
    history = jacobi_eigh(B + B.T).off_history
    assert history[-1] < 1e-10 * history[0]


def test_jacobi_skips_negligible_pairs_without_overflow():
    S = np.diag(np.arange(1.0, 7.0))
    S[0, 1] = S[1, 0] = 0.3
    S[2, 4] = S[4, 2] = 1e-170
    S[3, 5] = S[5, 3] = -1e-200
    with np.errstate(over="raise", divide="raise", invalid="raise"):
        result = jacobi_eigh(S)
    assert result.converged
    np.testing.assert_allclose(result.eigenvalues, np.linalg.eigvalsh(S), atol=1e-12)


def test_jacobi_rejects_non_symmetric():
    with pytest.raises(NotSymmetricError):
        jacobi_eigh(np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(NotSymmetricError):
        jacobi_eigh(np.ones((2, 3)))


def test_dense_norms(rng):
    M = random_with_singular_values([3.0, 1.0, 0.5, 0.1], rng)
    assert dense_svd_norm(M) == pytest.approx(3.0, abs=1e-10)
    eigs = np.array([-1.0, 0.2, 0.9, 1.5])
    S = random_symmetric_with_spectrum(eigs, rng)
    assert dense_pc_norm(S) == pytest.approx(np.max(np.abs(eigs / (eigs - 2.0))), abs=1e-10)


# ---------------------------------------------------------------- strict pseudo-contractivity

def test_strict_constant_closed_forms():
    assert strict_pc_constant(np.eye(4)) == 0.0
    c = 11.0 / 15.0
    assert strict_pc_constant(c * np.eye(4)) == pytest.approx(-(1 + c) / (1 - c))
    assert strict_pc_constant(2.0 * np.eye(3)) == pytest.approx(3.0)
    assert strict_pc_constant(np.diag([1.0, 0.5])) == pytest.approx(-3.0)
    assert strict_pc_constant(np.array([[1.0, 1.0], [0.0, 1.0]])) == float("inf")


def test_strict_constant_of_builtin_denoisers():
    shape = (4, 4)
    spc = assemble_dense(build_denoiser("spc:rot90:k=0.5", shape).apply, shape)
    assert strict_pc_constant(spc) == pytest.approx(0.5, abs=1e-10)
    anti = assemble_dense(build_denoiser("antisym:c=2", shape).apply, shape)
    assert strict_pc_constant(anti) == pytest.approx(1.0, abs=1e-10)
    rot = assemble_dense(pair_rotation_operator(shape).apply, shape)
    assert strict_pc_constant(rot) == pytest.approx(0.0, abs=1e-10)


def test_sampled_constant_never_exceeds_tightest(rng):
    L = random_with_singular_values(rng.uniform(0.0, 1.2, 9), rng)
    sampled = sampled_pc_constant(lambda v: (L @ v.ravel()).reshape(3, 3), (3, 3), pairs=500)
    assert sampled <= strict_pc_constant(L) + 1e-10


# ---------------------------------------------------------------- lemma suites

@pytest.mark.parametrize("suite", SUITES)
def test_suite_passes(suite):
    report = verify_lemma(suite, trials=200, seed=0)
    assert report.passed, report.details
    assert report.max_violation <= 1e-8
    assert report.to_dict()["suite"] == suite


@pytest.mark.slow
@pytest.mark.parametrize("seed", [1, 7, 42])
def test_all_suites_pass_across_seeds(seed):
    assert all(r.passed for r in verify_all(trials=1000, seed=seed))


def test_lemma4_tight_instance_sits_under_bound():
    D, P, k, theta = lemma4_tight_instance()
    bound = composite_spc_constant(k, theta)
    measured = strict_pc_constant(D @ P)
    assert bound == pytest.approx(1.0 / 3.0)
    assert 0.333 < measured <= bound
    report = verify_lemma("lemma4", trials=20)
    tight = report.details["tight_instance"]
    assert tight["gap"] == pytest.approx(bound - measured)
    assert tight["gap"] >= 0


def test_a_smaller_bound_would_be_caught():
    D, P, k, theta = lemma4_tight_instance()
    assert strict_pc_constant(D @ P) > composite_spc_constant(k, theta) - 1e-3


def test_averagedness_boundary():
    d = 6
    assert averagedness_excess(np.eye(d) / 3.0, 1.0 / 3.0) == pytest.approx(0.0, abs=1e-12)
    assert averagedness_excess(np.eye(d), 0.5) == pytest.approx(0.0, abs=1e-12)
    assert averagedness_excess(-np.eye(d), 0.5) > 0


def test_lemma_reports_are_reproducible():
    a = verify_lemma("lemma1", trials=50, seed=3)
    b = verify_lemma("lemma1", trials=50, seed=3)
    assert a.to_dict() == b.to_dict()


def test_verify_rejects_bad_arguments():
    with pytest.raises(ConstructionError):
        verify_lemma("lemma2")
    with pytest.raises(ConstructionError):
        verify_lemma("lemma3", trials=0)
