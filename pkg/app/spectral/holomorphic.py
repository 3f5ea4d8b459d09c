"""
The map f(z) = z / (z - 2).

f sends the half plane {Re z <= 1} onto the closed unit disk, so for symmetric S
||f(S)|| <= 1 exactly when lambda_max(S) <= 1 (spectral mapping: sigma(f(S)) = f(sigma(S))).
"""
import numpy as np

from app.errors import PoleError
from app.oracle.dense import check_symmetric, dense_sym_eigs


def holomorphic_map(z):
    z = complex(z)
    if z == 2:
        raise PoleError("f(z) = z/(z-2) has a pole at z = 2")
    return z / (z - 2)


def holomorphic_derivative(z):
    """f'(z) = -2 / (z - 2)^2, elementwise on arrays."""
    z = np.asarray(z, dtype=np.complex128)
    if np.any(z == 2):
        raise PoleError("f'(z) has a pole at z = 2")
    d = -2.0 / (z - 2) ** 2
    return d if d.ndim else complex(d)


def map_eigenvalues(eigs):
    eigs = np.asarray(eigs, dtype=np.float64)
    if np.any(eigs == 2.0):
        raise PoleError("an eigenvalue sits on the pole z = 2")
    return eigs / (eigs - 2.0)


def half_plane_to_disk_check(samples=400, seed=0, slack=1e-12):
    """|f(z)| <= 1 on random points of {Re z <= 1}, including the boundary line."""
    rng = np.random.default_rng(seed)
    re = np.concatenate([1.0 - rng.exponential(3.0, samples), np.ones(samples // 4)])
    im = rng.normal(0.0, 5.0, re.size)
    z = re + 1j * im
    return bool(np.all(np.abs(z / (z - 2.0)) <= 1.0 + slack))


def spectral_mapping_check(S, tol=1e-8):
    """Sorted f(eig(S)) equals sorted eig((S - 2I)^{-1} S) to ``tol``."""
    S = check_symmetric(S)
    n = S.shape[0]
    lam = dense_sym_eigs(S)
    mapped = np.sort(map_eigenvalues(lam))
    try:
        M = np.linalg.solve(S - 2.0 * np.eye(n), S)
    except np.linalg.LinAlgError as exc:
        raise PoleError("S - 2I is singular") from exc
    direct = dense_sym_eigs(0.5 * (M + M.T))
    return bool(np.max(np.abs(mapped - direct), initial=0.0) <= tol) and half_plane_to_disk_check()
