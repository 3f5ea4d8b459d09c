"""
Plug-and-play solvers.

    pnpi-gd    T = D_beta - grad G
    pnpi-hqs   T = D_beta o Prox_{G/beta}      (optional beta growth per iteration)
    pnpi-fbs   T = D_beta o (I - lambda grad G)

each run through the Ishikawa process, plus the plain PnP baselines that apply
the same operators with Mann (gd) or Picard (hqs, fbs) iterations.
The denoiser strength is sigma = sqrt(1 / beta) gray levels.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from app.config import BETA_GROWTH, END_SIGMA_RATIO, FP_TOL, GROWTH_SCHEDULE, INDEX_SHIFT, TASK_ITERS
from app.core.operators import bicubic_upsample
from app.denoisers.base import DenoiserHandle
from app.errors import ConstructionError
from app.fidelity.terms import FidelityTerm, SISRFidelity
from app.solvers.hypotheses import check_hypotheses
from app.solvers.ishikawa import ishikawa_iterate, mann_iterate, picard_iterate
from app.solvers.schedule import Schedule

logger = logging.getLogger(__name__)

SOLVERS = ("pnpi-gd", "pnpi-hqs", "pnpi-fbs", "pnp-gd", "pnp-hqs", "pnp-fbs")


def sigma_from_beta(beta):
    return math.sqrt(1.0 / beta)


@dataclass(frozen=True)
class SolverConfig:
    solver: str = "pnpi-hqs"
    a: Optional[float] = None
    b: Optional[float] = None
    index_shift: int = INDEX_SHIFT
    max_iters: int = TASK_ITERS["deblur"]
    tol: float = FP_TOL
    beta: float = 1.0 / 15.0**2
    lam: Optional[float] = None
    beta_growth: float = 1.0
    project_box: bool = False
    relaxation: float = 1.0
    seed: int = 0
    log_every: int = 50
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.solver not in SOLVERS:
            raise ConstructionError(f"unknown solver '{self.solver}', choose from {', '.join(SOLVERS)}")
        if self.max_iters < 0:
            raise ConstructionError(f"max_iters must be >= 0, got {self.max_iters}")
        if self.beta <= 0:
            raise ConstructionError(f"beta must be positive, got {self.beta}")
        if self.lam is not None and self.lam < 0:
            raise ConstructionError(f"lambda must be >= 0, got {self.lam}")
        if self.beta_growth < 1.0:
            raise ConstructionError(f"beta growth must be >= 1, got {self.beta_growth}")
        if not 0.0 < self.relaxation <= 1.0:
            raise ConstructionError(f"relaxation must lie in (0, 1], got {self.relaxation}")
        if self.tol < 0:
            raise ConstructionError(f"tol must be >= 0, got {self.tol}")

    @property
    def kind(self):
        return self.solver.split("-")[-1]

    @property
    def is_ishikawa(self):
        return self.solver.startswith("pnpi-")

    def schedule(self):
        default = Schedule.for_solver(self.kind)
        if self.kind == "hqs" and self.beta_growth > 1.0:
            default = Schedule(*GROWTH_SCHEDULE)
        a = default.a if self.a is None else self.a
        b = default.b if self.b is None else self.b
        return Schedule(a, b, self.index_shift)

    def beta_at(self, n):
        return self.beta * self.beta_growth**n

    def sigma_at(self, n):
        return sigma_from_beta(self.beta_at(n))

    def to_dict(self):
        out = {
            "solver": self.solver,
            "max_iters": self.max_iters,
            "tol": self.tol,
            "beta": self.beta,
            "lambda": self.lam,
            "beta_growth": self.beta_growth,
            "project_box": self.project_box,
            "relaxation": self.relaxation,
            "seed": self.seed,
        }
        if self.is_ishikawa:
            out["schedule"] = self.schedule().to_dict()
        return out


def default_beta(mu, growth=1.0, iters=0):
    """beta_0 whose last denoiser runs at END_SIGMA_RATIO times the noise level.

    With mu = 1/noise^2 the final strength is sigma_N = sqrt(1 / beta_N)
    = END_SIGMA_RATIO * noise.
    """
    if mu <= 0:
        raise ConstructionError(f"mu must be positive, got {mu}")
    return mu / (END_SIGMA_RATIO**2 * growth**iters)


def deblur_hqs_config(mu=None, **overrides):
    """PnPI-HQS as run on deblurring: 300 iterations with beta grown by 1.01.

    The growth switches the default schedule to GROWTH_SCHEDULE. Given ``mu``
    and no explicit ``beta``, beta_0 comes from :func:`default_beta`.
    """
    params = {"solver": "pnpi-hqs", "max_iters": TASK_ITERS["deblur"], "beta_growth": BETA_GROWTH}
    params.update(overrides)
    if mu is not None and "beta" not in overrides:
        params["beta"] = default_beta(mu, params["beta_growth"], params["max_iters"])
    return SolverConfig(**params)


def initial_estimate(G: FidelityTerm):
    """Observation for deblur/poisson/denoise, cubic-spline upsampling for super-resolution."""
    if isinstance(G, SISRFidelity):
        return bicubic_upsample(G.observation, G.scale)
    if G.observation is None:
        raise ConstructionError("fidelity has no observation; pass u0 explicitly")
    return np.array(G.observation, dtype=np.float64)


def resolve_lambda(G: FidelityTerm, cfg: SolverConfig):
    if cfg.lam is not None:
        return cfg.lam
    if G.gamma is not None and math.isfinite(G.gamma) and G.gamma > 0:
        return G.gamma
    return 1.0


# ---------------------------------------------------------------- operators T

def gd_operator(D: DenoiserHandle, G: FidelityTerm, sigma):
    def T(u):
        return D.apply(u, sigma) - G.grad(G.domain_clamp(u))

    return T


def hqs_operator(D: DenoiserHandle, G: FidelityTerm, beta):
    sigma = sigma_from_beta(beta)
    tau = 1.0 / beta

    def T(u):
        return D.apply(G.prox(u, tau), sigma)

    return T


def fbs_operator(D: DenoiserHandle, G: FidelityTerm, sigma, lam):
    def T(u):
        return D.apply(u - lam * G.grad(G.domain_clamp(u)), sigma)

    return T


def build_operator(D, G, cfg: SolverConfig):
    """T for the configured solver and, under beta growth, the per-iteration factory."""
    if cfg.kind == "gd":
        return gd_operator(D, G, cfg.sigma_at(0)), None
    if cfg.kind == "fbs":
        return fbs_operator(D, G, cfg.sigma_at(0), resolve_lambda(G, cfg)), None
    T = hqs_operator(D, G, cfg.beta)
    if cfg.beta_growth == 1.0:
        return T, None
    return T, lambda n: hqs_operator(D, G, cfg.beta_at(n))


# ---------------------------------------------------------------- solvers

def _run(D, G, cfg: SolverConfig, u0, ground_truth, cert):
    if u0 is None:
        u0 = initial_estimate(G)
    T, operator_for = build_operator(D, G, cfg)
    common = {
        "ground_truth": ground_truth,
        "operator_for": operator_for,
        "project_box": cfg.project_box,
        "log_every": cfg.log_every,
        "label": cfg.solver,
    }
    logger.info("running %s with %s, fidelity %s, beta=%.6g", cfg.solver, D.name, G.name, cfg.beta)
    if cfg.is_ishikawa:
        trace = ishikawa_iterate(T, u0, cfg.schedule(), cfg.max_iters, cfg.tol, **common)
    elif cfg.kind == "gd":
        trace = mann_iterate(T, u0, cfg.relaxation, cfg.max_iters, cfg.tol, **common)
    else:
        trace = picard_iterate(T, u0, cfg.max_iters, cfg.tol, **common)
    trace.report = check_hypotheses(cert, G, cfg, denoiser=D, lam=resolve_lambda(G, cfg))
    return trace


def _with_solver(cfg, solver):
    if cfg.solver == solver:
        return cfg
    params = {**cfg.__dict__, "solver": solver}
    return SolverConfig(**params)


def pnpi_gd(D, G, cfg: SolverConfig, u0=None, ground_truth=None, cert=None):
    return _run(D, G, _with_solver(cfg, "pnpi-gd"), u0, ground_truth, cert)


def pnpi_hqs(D, G, cfg: SolverConfig, u0=None, ground_truth=None, cert=None):
    return _run(D, G, _with_solver(cfg, "pnpi-hqs"), u0, ground_truth, cert)


def pnpi_fbs(D, G, cfg: SolverConfig, u0=None, ground_truth=None, cert=None):
    return _run(D, G, _with_solver(cfg, "pnpi-fbs"), u0, ground_truth, cert)


def pnp_baseline(kind, D, G, cfg: SolverConfig, u0=None, ground_truth=None, cert=None):
    """Plain PnP-GD (Mann with cfg.relaxation), PnP-HQS or PnP-FBS (Picard)."""
    if kind not in ("gd", "hqs", "fbs"):
        raise ConstructionError(f"baseline kind must be gd, hqs or fbs, got '{kind}'")
    return _run(D, G, _with_solver(cfg, f"pnp-{kind}"), u0, ground_truth, cert)


def solve(D, G, cfg: SolverConfig, u0=None, ground_truth=None, cert=None):
    return _run(D, G, cfg, u0, ground_truth, cert)
