"""
Power iteration for spectral norms and extreme eigenvalues.

The norm is estimated by power iteration on M^T M with the square root of the
Rayleigh quotient, which also holds for non-normal M (a nilpotent M has a zero
Rayleigh quotient on M itself but norm 1).
"""
import logging
from dataclasses import dataclass, field

import numpy as np

from app.config import PROBE_DEFAULTS

logger = logging.getLogger(__name__)


@dataclass
class PowerResult:
    value: float
    history: list = field(default_factory=list)
    seed: int = 0
    iterations: int = 0


def _start_vector(shape, seed, q0=None):
    if q0 is not None:
        q = np.array(q0, dtype=np.float64)
    else:
        q = np.random.default_rng(seed).standard_normal(shape)
    nq = np.linalg.norm(q)
    if nq == 0:
        raise ValueError("power iteration needs a non-zero start vector")
    return q / nq


def _settled(history, n_iter, rtol):
    """True once the floor is met and the last step moved the estimate by at most rtol."""
    if len(history) < max(n_iter, 2):
        return False
    return abs(history[-1] - history[-2]) <= rtol * abs(history[-1])


def power_iteration(
    matvec,
    rmatvec,
    shape,
    n_iter=PROBE_DEFAULTS["n_power"],
    seed=0,
    q0=None,
    rtol=PROBE_DEFAULTS["rtol"],
    max_iter=PROBE_DEFAULTS["max_power"],
):
    """Estimate ||M|| from applications of M^T M.

    ``n_iter`` is a floor: iteration goes on while the estimate still changes
    by more than ``rtol`` relative, up to ``max_iter``. ``rtol=0`` gives exactly
    ``n_iter`` steps. ``history`` holds the running norm estimates; they are
    non-decreasing since M^T M is positive semi-definite.
    """
    q = _start_vector(shape, seed, q0)
    cap = n_iter if rtol <= 0 else max(n_iter, max_iter)
    history = []
    value = 0.0
    for it in range(1, cap + 1):
        z = rmatvec(matvec(q))
        rayleigh = float(np.vdot(q, z).real)
        value = float(np.sqrt(max(rayleigh, 0.0)))
        history.append(value)
        nz = np.linalg.norm(z)
        if nz == 0.0:
            logger.debug("power iteration hit the null space after %d steps", it)
            return PowerResult(0.0, history, seed, it)
        q = z / nz
        if rtol > 0 and _settled(history, n_iter, rtol):
            break
    else:
        if rtol > 0 and cap > n_iter:
            logger.debug("power iteration stopped at the cap of %d steps", cap)
    return PowerResult(value, history, seed, len(history))


def power_norm(matvec, rmatvec, shape, n_iter=PROBE_DEFAULTS["n_power"], seed=0, rtol=PROBE_DEFAULTS["rtol"]):
    return power_iteration(matvec, rmatvec, shape, n_iter, seed, rtol=rtol).value


def matrix_power_norm(M, n_iter=PROBE_DEFAULTS["n_power"], seed=0, rtol=PROBE_DEFAULTS["rtol"]):
    M = np.asarray(M, dtype=np.float64)
    return power_norm(lambda v: M @ v, lambda w: M.T @ w, (M.shape[1],), n_iter, seed, rtol)


def largest_eigenvalue_sym(
    matvec,
    shape,
    n_iter=PROBE_DEFAULTS["n_power"],
    seed=0,
    shift=None,
    rtol=PROBE_DEFAULTS["rtol"],
    max_iter=PROBE_DEFAULTS["max_power"],
):
    """lambda_max of a symmetric operator via power iteration on S + shift*I.

    The default shift is a norm estimate, which makes the shifted operator
    positive semi-definite so its dominant eigenvalue is lambda_max + shift.
    Stopping follows :func:`power_iteration`.
    """
    if shift is None:
        shift = power_norm(matvec, matvec, shape, n_iter, seed, rtol)
        # the estimate is a lower bound; pad it so S + shift*I stays PSD
        shift = 1.05 * shift + 1e-12
    q = _start_vector(shape, seed)
    cap = n_iter if rtol <= 0 else max(n_iter, max_iter)
    rayleigh = 0.0
    history = []
    shifted = []
    for _ in range(cap):
        z = matvec(q) + shift * q
        rayleigh = float(np.vdot(q, z).real)
        history.append(rayleigh - shift)
        shifted.append(rayleigh)
        nz = np.linalg.norm(z)
        if nz == 0.0:
            break
        q = z / nz
        if rtol > 0 and _settled(shifted, n_iter, rtol):
            break
    return PowerResult(rayleigh - shift, history, seed, len(history))
