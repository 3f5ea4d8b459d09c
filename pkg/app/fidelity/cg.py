"""Conjugate gradient for symmetric positive definite operators on images."""
from dataclasses import dataclass

import numpy as np

from app.config import CG_MAX_ITERS, CG_RTOL


@dataclass
class CGResult:
    x: np.ndarray
    iterations: int
    residual: float
    converged: bool


def conjugate_gradient(apply, b, x0=None, rtol=CG_RTOL, max_iter=CG_MAX_ITERS):
    """Solve apply(x) = b; stops when ||b - apply(x)|| <= rtol * ||b||."""
    b = np.asarray(b, dtype=np.float64)
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=np.float64)
    r = b - apply(x)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return CGResult(np.zeros_like(b), 0, 0.0, True)
    p = r.copy()
    rs = float(np.vdot(r, r))
    target = (rtol * bnorm) ** 2
    it = 0
    while rs > target and it < max_iter:
        Ap = apply(p)
        alpha = rs / float(np.vdot(p, Ap))
        x += alpha * p
        r -= alpha * Ap
        rs_new = float(np.vdot(r, r))
        p = r + (rs_new / rs) * p
        rs = rs_new
        it += 1
    return CGResult(x, it, float(np.sqrt(rs) / bnorm), rs <= target)
