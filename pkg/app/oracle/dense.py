"""
Dense ground truth for small instances.

Operators are assembled column by column, symmetric eigenproblems are solved
with a cyclic Jacobi method, and spectral norms come from the eigenvalues of
M^T M. Everything here is deterministic and limited to DENSE_MAX_DIM unknowns.
"""
import logging
from dataclasses import dataclass, field

import numpy as np

from app.config import DENSE_MAX_DIM, FD_STEP, JACOBI_MAX_SWEEPS, JACOBI_TOL, SYMMETRY_TOL
from app.errors import DimensionError, NotSymmetricError

logger = logging.getLogger(__name__)


def _as_shape(shape):
    if np.isscalar(shape):
        return (int(shape),)
    return tuple(int(s) for s in shape)


def assemble_dense(op, shape):
    """Matrix whose column j is op(e_j); ``shape`` is the input shape of op."""
    shape = _as_shape(shape)
    d = int(np.prod(shape))
    if d > DENSE_MAX_DIM:
        raise DimensionError(f"dense assembly capped at {DENSE_MAX_DIM} unknowns, got {d}")
    columns = []
    e = np.zeros(d)
    for j in range(d):
        e[j] = 1.0
        columns.append(np.asarray(op(e.reshape(shape)), dtype=np.float64).ravel())
        e[j] = 0.0
    return np.stack(columns, axis=1)


def assemble_jacobian(D, x, sigma=None, h=FD_STEP, exact=False):
    """Dense J(x) of a denoiser: exact jvp columns, or central differences."""
    x = np.asarray(x, dtype=np.float64)
    if exact:
        return assemble_dense(lambda v: D.jvp(x, sigma, v), x.shape)
    return assemble_dense(
        lambda v: (D.apply(x + h * v, sigma) - D.apply(x - h * v, sigma)) / (2.0 * h),
        x.shape,
    )


# ---------------------------------------------------------------- Jacobi

@dataclass
class JacobiResult:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    sweeps: int
    off_history: list = field(default_factory=list)
    converged: bool = True


def _off(A):
    return float(np.sqrt(max(np.sum(A * A) - np.sum(np.diag(A) ** 2), 0.0)))


def _round_robin(m):
    """m - 1 rounds of m/2 disjoint pairs covering every pair once (m even)."""
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        p = np.array([players[i] for i in range(m // 2)])
        q = np.array([players[m - 1 - i] for i in range(m // 2)])
        rounds.append((np.minimum(p, q), np.maximum(p, q)))
        players = [players[0], players[-1], *players[1:-1]]
    return rounds


def check_symmetric(M, tol=SYMMETRY_TOL):
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise NotSymmetricError(f"expected a square matrix, got shape {M.shape}")
    asym = float(np.max(np.abs(M - M.T))) if M.size else 0.0
    if asym > tol:
        raise NotSymmetricError(f"matrix is not symmetric: max |M - M^T| = {asym:.3e}")
    return M


def jacobi_eigh(M, tol=JACOBI_TOL, max_sweeps=JACOBI_MAX_SWEEPS):
    """Cyclic Jacobi eigen-decomposition of a symmetric matrix.

    Each round rotates m/2 disjoint index pairs at once. Odd sizes are padded
    with a zero row and column that no rotation ever touches.
    """
    A = check_symmetric(M).copy()
    n = A.shape[0]
    if n == 0:
        return JacobiResult(np.zeros(0), np.zeros((0, 0)), 0)
    A = 0.5 * (A + A.T)
    m = n + (n % 2)
    if m != n:
        A = np.pad(A, ((0, 1), (0, 1)))
    V = np.eye(m)

    off0 = _off(A)
    floor = np.finfo(np.float64).eps * float(np.linalg.norm(A))
    history = [off0]
    rounds = _round_robin(m) if m > 1 else []
    sweeps = 0
    converged = off0 <= floor
    while not converged and sweeps < max_sweeps:
        for p, q in rounds:
            apq = A[p, q]
            # pairs below floor / m are left alone; together they stay under the floor
            active = np.abs(apq) > floor / m
            theta = np.divide(A[q, q] - A[p, p], 2.0 * apq, out=np.zeros_like(apq), where=active)
            t = np.sign(theta) / (np.abs(theta) + np.hypot(theta, 1.0))
            t = np.where(theta == 0.0, 1.0, t)
            t = np.where(active, t, 0.0)
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c

            rows_p, rows_q = A[p, :].copy(), A[q, :].copy()
            A[p, :] = c[:, None] * rows_p - s[:, None] * rows_q
            A[q, :] = s[:, None] * rows_p + c[:, None] * rows_q
            cols_p, cols_q = A[:, p].copy(), A[:, q].copy()
            A[:, p] = cols_p * c - cols_q * s
            A[:, q] = cols_p * s + cols_q * c
            vp, vq = V[:, p].copy(), V[:, q].copy()
            V[:, p] = vp * c - vq * s
            V[:, q] = vp * s + vq * c
        sweeps += 1
        off = _off(A)
        history.append(off)
        converged = off <= max(tol * off0, floor)

    if not converged:
        logger.warning("Jacobi stopped after %d sweeps with off-diagonal mass %.3e", sweeps, history[-1])

    evals = np.diag(A)[:n].copy()
    evecs = V[:n, :n] if m == n else V[:n, :][:, [j for j in range(m) if j != n]]
    order = np.argsort(evals, kind="stable")
    return JacobiResult(evals[order], evecs[:, order], sweeps, history, converged)


def dense_sym_eigs(M):
    """Eigenvalues of a symmetric matrix, ascending."""
    return jacobi_eigh(M).eigenvalues


def dense_svd_norm(M):
    """Spectral norm from the largest eigenvalue of M^T M."""
    M = np.asarray(M, dtype=np.float64)
    if M.size == 0:
        return 0.0
    gram = M.T @ M
    evals = dense_sym_eigs(0.5 * (gram + gram.T))
    return float(np.sqrt(max(evals[-1], 0.0)))


def dense_pc_norm(S):
    """||(S - 2I)^{-1} S|| for a symmetric S by dense solve."""
    S = check_symmetric(S)
    M = np.linalg.solve(S - 2.0 * np.eye(S.shape[0]), S)
    return dense_svd_norm(M)


# ---------------------------------------------------------------- strict pseudo-contractivity

def _sym(M):
    return 0.5 * (M + M.T)


def strict_pc_constant(L, rank_tol=1e-10):
    """Tightest k with ||Lx||^2 <= ||x||^2 + k ||(I - L)x||^2 for every x.

    With R = I - L the inequality reads (1 - k)||Rx||^2 <= 2<x, Rx>, so
    k = 1 - 2 min <x, Rx> / ||Rx||^2 taken over Rx != 0. Substituting w = Rx turns
    this into an eigenvalue problem for the symmetric part of a pseudo-inverse of R.
    The result is negative for strict contractions, ``inf`` when the inequality
    cannot hold for any k, and 0 when L = I.
    """
    L = np.asarray(L, dtype=np.float64)
    d = L.shape[0]
    R = np.eye(d) - L
    U, s, Vt = np.linalg.svd(R)
    if s.size == 0 or s[0] == 0.0:
        return 0.0
    rank = int(np.sum(s > rank_tol * s[0]))
    if rank == d:
        Rinv = np.linalg.solve(R, np.eye(d))
        return float(1.0 - 2.0 * dense_sym_eigs(_sym(Rinv))[0])

    range_basis = U[:, :rank]
    kernel_basis = Vt[rank:, :].T
    # x = R^+ w + n with n in ker R; <n, w> is unbounded unless ker R is orthogonal to range R
    if np.max(np.abs(kernel_basis.T @ range_basis)) > 1e-8:
        return float("inf")
    pinv = (Vt[:rank, :].T / s[:rank]) @ U[:, :rank].T
    reduced = range_basis.T @ pinv @ range_basis
    return float(1.0 - 2.0 * dense_sym_eigs(_sym(reduced))[0])


def sampled_pc_constant(op, shape, pairs=1000, seed=0):
    """Largest sampled (||Dx-Dy||^2 - ||x-y||^2) / ||(I-D)x - (I-D)y||^2."""
    rng = np.random.default_rng(seed)
    worst = -np.inf
    for _ in range(pairs):
        x = rng.standard_normal(shape)
        y = rng.standard_normal(shape)
        dx, dy = op(x), op(y)
        res = np.sum(((x - dx) - (y - dy)) ** 2)
        if res <= 1e-300:
            continue
        worst = max(worst, float((np.sum((dx - dy) ** 2) - np.sum((x - y) ** 2)) / res))
    return worst
