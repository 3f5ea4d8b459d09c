"""
Penalty-driven constraint enforcement on a dense linear denoiser W.

Minimises
    F(W) = r * max{pen(W), 1 - eps} + (w / 2) * ||W - W0||_F^2
with
    pen = ||kI + (1 - k)W||               mode ("spc", k)
    pen = ||(S - 2I)^{-1} S||, S = sym(W)  mode "pc"
by normalised gradient steps, stopping as soon as pen(W) <= 1.
"""
import logging
from dataclasses import dataclass, field

import numpy as np

from app.config import CONSTRAIN_DEFAULTS, PENALTY_WEIGHT, PROBE_DEFAULTS
from app.errors import ConstructionError, DimensionError, PoleError
from app.spectral.holomorphic import holomorphic_derivative, map_eigenvalues

logger = logging.getLogger(__name__)

MAX_CONSTRAIN_DIM = 1024


@dataclass
class ConstrainResult:
    W: np.ndarray
    penalty: float
    initial_penalty: float
    steps: int
    converged: bool
    history: list = field(default_factory=list)


def parse_mode(mode):
    """'pc' -> ('pc', None); ('spc', k) or 'spc:k' -> ('spc', k)."""
    if isinstance(mode, str):
        name, _, arg = mode.partition(":")
        mode = (name, float(arg)) if arg else (name, None)
    name, k = mode
    if name == "pc":
        return "pc", None
    if name == "spc" and k is not None and 0.0 <= k < 1.0:
        return "spc", float(k)
    raise ConstructionError(f"mode must be 'pc' or ('spc', k) with k in [0, 1), got {mode!r}")


def penalty_and_grad(W, mode):
    """Dense penalty value and a descent direction for it.

    The value is the norm. The direction sums the gradients of every singular
    value (mode spc) or mapped eigenvalue (mode pc) above 1, plus the largest
    one, so a penalty attained by many directions at once moves all of them.
    With a single violating value it is the gradient of the norm.
    """
    name, k = parse_mode(mode)
    n = W.shape[0]
    if name == "spc":
        M = k * np.eye(n) + (1.0 - k) * W
        U, s, Vt = np.linalg.svd(M)
        active = s > 1.0
        active[0] = True
        return float(s[0]), (1.0 - k) * (U[:, active] @ Vt[active, :])

    S = 0.5 * (W + W.T)
    lam, V = np.linalg.eigh(S)
    if np.any(np.abs(lam - 2.0) < 1e-14):
        raise PoleError("an eigenvalue of sym(W) sits on the pole z = 2")
    f = map_eigenvalues(lam)
    i = int(np.argmax(np.abs(f)))
    active = np.abs(f) > 1.0
    active[i] = True
    weights = np.sign(f[active]) * holomorphic_derivative(lam[active]).real
    Va = V[:, active]
    return float(abs(f[i])), (Va * weights) @ Va.T


def _objective(W, W0, pen, gpen, r, eps, fit_weight):
    diff = W - W0
    value = r * max(pen, 1.0 - eps) + 0.5 * fit_weight * float(np.sum(diff * diff))
    grad = fit_weight * diff
    if pen > 1.0 - eps:
        grad = grad + r * gpen
    return value, grad


def constraint_objective(W, W0, mode, r=PENALTY_WEIGHT, eps=PROBE_DEFAULTS["eps"], fit_weight=None):
    """Value and gradient of r * max{pen, 1 - eps} + (w/2)||W - W0||^2."""
    if fit_weight is None:
        fit_weight = CONSTRAIN_DEFAULTS["fit_ratio"] * r
    pen, gpen = penalty_and_grad(W, mode)
    return _objective(W, W0, pen, gpen, r, eps, fit_weight)


def constrain_linear_denoiser(
    W0,
    mode="pc",
    r=PENALTY_WEIGHT,
    eps=PROBE_DEFAULTS["eps"],
    steps=CONSTRAIN_DEFAULTS["steps"],
    step_size=CONSTRAIN_DEFAULTS["step_size"],
    fit_weight=None,
):
    W0 = np.array(W0, dtype=np.float64)
    if W0.ndim != 2 or W0.shape[0] != W0.shape[1]:
        raise DimensionError(f"W must be square, got shape {W0.shape}")
    if W0.shape[0] > MAX_CONSTRAIN_DIM:
        raise DimensionError(f"W is limited to {MAX_CONSTRAIN_DIM} rows, got {W0.shape[0]}")
    if r <= 0:
        raise ConstructionError(f"r must be positive, got {r}")
    if not 0.0 < eps < 1.0:
        raise ConstructionError(f"eps must lie in (0, 1), got {eps}")
    mode = parse_mode(mode)

    W = W0.copy()
    if fit_weight is None:
        fit_weight = CONSTRAIN_DEFAULTS["fit_ratio"] * r
    pen0, gpen = penalty_and_grad(W, mode)
    pen = pen0
    history = [pen0]
    best_W, best_pen = W.copy(), pen0
    if pen0 <= 1.0:
        return ConstrainResult(W, pen0, pen0, 0, True, history)

    for step in range(1, steps + 1):
        _, grad = _objective(W, W0, pen, gpen, r, eps, fit_weight)
        gnorm = np.linalg.norm(grad)
        if gnorm == 0.0:
            break
        W = W - step_size * grad / gnorm
        pen, gpen = penalty_and_grad(W, mode)
        history.append(pen)
        if pen < best_pen:
            best_W, best_pen = W.copy(), pen
        if pen <= 1.0:
            logger.info("constraint %s reached after %d steps (penalty %.6f)", mode[0], step, pen)
            return ConstrainResult(W, pen, pen0, step, True, history)

    logger.warning("constraint %s not reached after %d steps; best penalty %.6f", mode[0], steps, best_pen)
    return ConstrainResult(best_W, best_pen, pen0, steps, False, history)
