"""
Jacobian probes of a denoiser at a point: norms of affine combinations of J,
the symmetric part S = (J + J^T)/2, and the modified power iteration for
||(S - 2I)^{-1} S||.
"""
import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from app.config import DEFAULT_SIGMAS, DENSE_FALLBACK_PIXELS, MPIM_MAX_HALVINGS, PROBE_DEFAULTS, PROBE_SIZE
from app.denoisers.base import EXACT_PROBE, SYMMETRIC_JACOBIAN, DenoiserHandle
from app.errors import CapabilityError, ConstructionError
from app.spectral.power import PowerResult, largest_eigenvalue_sym, power_iteration

logger = logging.getLogger(__name__)

WARM_STARTS = ("rayleigh", "previous")


@dataclass(frozen=True)
class ProbeConfig:
    n_power: int = PROBE_DEFAULTS["n_power"]
    k_inner: int = PROBE_DEFAULTS["k_inner"]
    dt: float = PROBE_DEFAULTS["dt"]
    eps: float = PROBE_DEFAULTS["eps"]
    tol: float = PROBE_DEFAULTS["tol"]
    rtol: float = PROBE_DEFAULTS["rtol"]
    max_power: int = PROBE_DEFAULTS["max_power"]
    sigmas: tuple = DEFAULT_SIGMAS
    size: int = PROBE_SIZE
    seed: int = 0
    warm_start: str = "rayleigh"
    workers: int = 1

    def __post_init__(self):
        if self.n_power < 1:
            raise ConstructionError(f"n_power must be >= 1, got {self.n_power}")
        if self.k_inner < 1:
            raise ConstructionError(f"k_inner must be >= 1, got {self.k_inner}")
        if self.dt <= 0:
            raise ConstructionError(f"dt must be positive, got {self.dt}")
        if not 0.0 < self.eps < 1.0:
            raise ConstructionError(f"eps must lie in (0, 1), got {self.eps}")
        if self.tol <= 0:
            raise ConstructionError(f"tol must be positive, got {self.tol}")
        if self.rtol < 0:
            raise ConstructionError(f"rtol must be non-negative, got {self.rtol}")
        if self.max_power < self.n_power:
            raise ConstructionError(f"max_power must be >= n_power, got {self.max_power} < {self.n_power}")
        if self.warm_start not in WARM_STARTS:
            raise ConstructionError(f"warm_start must be one of {WARM_STARTS}, got {self.warm_start!r}")
        if self.size < 1:
            raise ConstructionError(f"probe size must be positive, got {self.size}")
        if self.workers < 1:
            raise ConstructionError(f"workers must be >= 1, got {self.workers}")
        object.__setattr__(self, "sigmas", tuple(float(s) for s in self.sigmas))

    def to_dict(self):
        return {
            "n_power": self.n_power,
            "k_inner": self.k_inner,
            "dt": self.dt,
            "eps": self.eps,
            "tol": self.tol,
            "rtol": self.rtol,
            "max_power": self.max_power,
            "sigmas": list(self.sigmas),
            "size": self.size,
            "seed": self.seed,
            "warm_start": self.warm_start,
        }


@dataclass
class JacobianOps:
    jv: object
    jtv: object
    shape: tuple
    route: str
    symmetric: bool = False


def jacobian_ops(D: DenoiserHandle, x, sigma):
    """J(x)v and J(x)^T w closures, exact when possible, else a dense FD Jacobian."""
    x = np.asarray(x, dtype=np.float64)
    shape = x.shape
    symmetric = D.has(SYMMETRIC_JACOBIAN)
    if D.has(EXACT_PROBE) and D.vjp is not None:
        return JacobianOps(
            jv=lambda v: D.jvp(x, sigma, v),
            jtv=lambda w: D.vjp(x, sigma, w),
            shape=shape,
            route="exact",
            symmetric=symmetric,
        )
    if x.size > DENSE_FALLBACK_PIXELS:
        raise CapabilityError(
            f"denoiser '{D.name}' has no exact J^T probe and the image has {x.size} pixels; "
            f"the dense fallback is limited to {DENSE_FALLBACK_PIXELS}"
        )
    from app.oracle.dense import assemble_jacobian

    J = assemble_jacobian(D, x, sigma)
    return JacobianOps(
        jv=lambda v: (J @ np.ravel(v)).reshape(shape),
        jtv=lambda w: (J.T @ np.ravel(w)).reshape(shape),
        shape=shape,
        route="dense-fd",
        symmetric=symmetric,
    )


def affine_norm(ops: JacobianOps, a, b, n_iter, seed, rtol=PROBE_DEFAULTS["rtol"], max_iter=PROBE_DEFAULTS["max_power"]):
    """Power-iteration estimate of ||aI + bJ||."""
    return power_iteration(
        lambda v: a * v + b * ops.jv(v),
        lambda w: a * w + b * ops.jtv(w),
        ops.shape,
        n_iter,
        seed,
        rtol=rtol,
        max_iter=max_iter,
    )


def spc_penalty(D: DenoiserHandle, x, sigma, k, cfg: Optional[ProbeConfig] = None, seed=None):
    """||kI + (1 - k)J(x)||, the factor penalised by the strict pseudo-contractive loss."""
    cfg = cfg or ProbeConfig()
    ops = jacobian_ops(D, x, sigma)
    seed = cfg.seed if seed is None else seed
    return affine_norm(ops, k, 1.0 - k, cfg.n_power, seed, cfg.rtol, cfg.max_power).value


def sym_matvec(ops: JacobianOps):
    if ops.symmetric:
        return ops.jv
    return lambda v: 0.5 * (ops.jv(v) + ops.jtv(v))


def symmetric_part_matvec(D: DenoiserHandle, x, sigma, v):
    """S v with S = (J + J^T)/2 at x."""
    return sym_matvec(jacobian_ops(D, x, sigma))(v)


# ---------------------------------------------------------------- modified power iteration

@dataclass
class MPIMResult:
    value: float
    rayleigh: float
    history: list = field(default_factory=list)
    inner_residuals: list = field(default_factory=list)
    dt: float = 0.0
    halvings: int = 0
    flagged: bool = False
    seed: int = 0

    def metadata(self):
        return {
            "rayleigh": self.rayleigh,
            "inner_residuals": self.inner_residuals,
            "final_inner_residual": self.inner_residuals[-1] if self.inner_residuals else 0.0,
            "dt": self.dt,
            "halvings": self.halvings,
            "flagged": self.flagged,
            "seed": self.seed,
        }


class _InnerSolver:
    """Gradient descent on 0.5 * ||(S - 2I)z - Sq||^2 with dt halving on residual increase."""

    def __init__(self, smatvec, k_inner, dt):
        self.smatvec = smatvec
        self.k_inner = k_inner
        self.dt = dt
        self.halvings = 0

    def A(self, v):
        return self.smatvec(v) - 2.0 * v

    def solve(self, q, z):
        b = self.smatvec(q)
        r = self.A(z) - b
        rnorm = np.linalg.norm(r)
        g = self.A(r)
        Ag = self.A(g)
        steps = 0
        while steps < self.k_inner:
            r_new = r - self.dt * Ag
            rnew_norm = np.linalg.norm(r_new)
            if rnew_norm > rnorm and self.halvings < MPIM_MAX_HALVINGS:
                self.dt *= 0.5
                self.halvings += 1
                continue
            z = z - self.dt * g
            r, rnorm = r_new, rnew_norm
            steps += 1
            if steps < self.k_inner:
                g = self.A(r)
                Ag = self.A(g)
        bnorm = np.linalg.norm(b)
        return z, float(rnorm / bnorm) if bnorm > 0 else float(rnorm)


def mpim(smatvec, shape, cfg: Optional[ProbeConfig] = None, seed=None, q0=None):
    """Modified power iteration for ||(S - 2I)^{-1} S||, S symmetric.

    Each outer step solves (S - 2I)z = Sq approximately with ``k_inner`` gradient
    steps, then normalises z. The estimate is |<q^N, z^{N+1}>|. ``n_power`` outer
    steps are a floor; the loop continues while the signed Rayleigh estimate
    moves by more than ``rtol`` relative, up to ``max_power`` steps.

    Warm start "rayleigh" starts the inner solve from mu*q, mu being the previous
    signed Rayleigh estimate; "previous" starts from sign(mu) times the previous z,
    which undoes the sign flip of q under a negative dominant eigenvalue.
    """
    cfg = cfg or ProbeConfig()
    seed = cfg.seed if seed is None else seed
    if q0 is None:
        q = np.random.default_rng(seed).standard_normal(shape)
    else:
        q = np.array(q0, dtype=np.float64)
    q /= np.linalg.norm(q)

    solver = _InnerSolver(smatvec, cfg.k_inner, cfg.dt)
    mu = 0.0
    z = np.zeros(shape)
    history, residuals = [], []
    cap = cfg.n_power if cfg.rtol == 0 else cfg.max_power

    def warm():
        if cfg.warm_start == "rayleigh":
            return mu * q
        return np.sign(mu) * z

    for step in range(1, cap + 1):
        z, res = solver.solve(q, warm())
        residuals.append(res)
        previous, mu = mu, float(np.vdot(q, z))
        history.append(abs(mu))
        nz = np.linalg.norm(z)
        if nz == 0.0:
            return MPIMResult(0.0, 0.0, history, residuals, solver.dt, solver.halvings, False, seed)
        q = z / nz
        if step >= cfg.n_power and abs(mu - previous) <= cfg.rtol * abs(mu):
            break
    else:
        if cap > cfg.n_power:
            logger.debug("MPIM outer loop stopped at the cap of %d steps", cap)

    z, res = solver.solve(q, warm())
    residuals.append(res)
    mu = float(np.vdot(q, z))
    flagged = res > cfg.tol
    if flagged:
        logger.warning("MPIM inner residual %.3e above tolerance %.1e after %d steps", res, cfg.tol, cfg.k_inner)
    return MPIMResult(abs(mu), mu, history, residuals, solver.dt, solver.halvings, flagged, seed)


def pc_probe(D: DenoiserHandle, x, sigma, cfg: Optional[ProbeConfig] = None, seed=None):
    cfg = cfg or ProbeConfig()
    ops = jacobian_ops(D, x, sigma)
    return mpim(sym_matvec(ops), ops.shape, cfg, seed)


def pc_penalty(D: DenoiserHandle, x, sigma, cfg: Optional[ProbeConfig] = None, seed=None):
    """||(S - 2I)^{-1} S|| at x, the factor penalised by the pseudo-contractive loss."""
    return pc_probe(D, x, sigma, cfg, seed).value


def smax_probe(ops: JacobianOps, n_iter, seed, rtol=PROBE_DEFAULTS["rtol"], max_iter=PROBE_DEFAULTS["max_power"]) -> PowerResult:
    return largest_eigenvalue_sym(sym_matvec(ops), ops.shape, n_iter, seed, rtol=rtol, max_iter=max_iter)
