"""
Convergence-theorem hypotheses for the Ishikawa PnP solvers.

    Theorem 1 (GD)   D pseudo-contractive, G convex with Lipschitz gradient
    Theorem 2 (HQS)  D k-strictly pseudo-contractive with k <= (2g + 1)/(2g + 2),
                     g the cocoercivity of grad(G / beta) = beta * gamma
    Theorem 3 (FBS)  0 <= lambda <= 2*gamma and k <= 1 - lambda / (2*gamma)

Reports are pure evaluations: a violated or unknown hypothesis is logged, the run
goes on.
"""
import logging
import math
from dataclasses import dataclass, field

logger = logging.getLogger(__name__)

SATISFIED = "satisfied"
VIOLATED = "violated"
UNKNOWN = "unknown"

_SLACK = 1e-12

THEOREM_FOR_SOLVER = {"gd": "theorem1", "hqs": "theorem2", "fbs": "theorem3"}


@dataclass
class HypothesisReport:
    solver: str
    checks: dict = field(default_factory=dict)
    inputs: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    @property
    def relevant(self):
        return THEOREM_FOR_SOLVER.get(self.solver.split("-")[-1])

    def status(self, theorem):
        return self.checks[theorem]["status"]

    def to_dict(self):
        return {
            "solver": self.solver,
            "relevant": self.relevant,
            "checks": self.checks,
            "inputs": self.inputs,
            "notes": self.notes,
        }


def composite_spc_constant(k, theta):
    """l = k(1 - theta) / ((1 - theta) - k theta) for D k-spc after a theta-averaged map (k < 1 - theta)."""
    if k >= 1.0 - theta:
        return None
    return k * (1.0 - theta) / ((1.0 - theta) - k * theta)


def theorem2_check(k, gamma):
    """k <= (2 gamma + 1) / (2 gamma + 2); gamma is the cocoercivity of grad(G / beta)."""
    if k is None or gamma is None:
        return {"status": UNKNOWN, "bound": None, "theta": None, "l": None}
    if math.isinf(gamma):
        bound, theta = 1.0, 0.0
    else:
        bound = (2.0 * gamma + 1.0) / (2.0 * gamma + 2.0)
        theta = 1.0 / (2.0 * gamma + 2.0)
    status = SATISFIED if k <= bound + _SLACK else VIOLATED
    return {"status": status, "bound": bound, "theta": theta, "l": composite_spc_constant(k, theta)}


def theorem3_check(k, gamma, lam):
    """0 <= lam <= 2 gamma and k <= 1 - lam / (2 gamma); I - lam grad G is lam/(2 gamma)-averaged."""
    if k is None or gamma is None or lam is None:
        return {"status": UNKNOWN, "bound": None, "theta": None, "l": None}
    if lam < 0:
        return {"status": VIOLATED, "bound": None, "theta": None, "l": None}
    if math.isinf(gamma):
        theta = 0.0
    elif gamma == 0.0:
        if lam > 0:
            return {"status": VIOLATED, "bound": None, "theta": None, "l": None}
        theta = 0.0
    else:
        theta = lam / (2.0 * gamma)
    if theta > 1.0 + _SLACK:
        return {"status": VIOLATED, "bound": 1.0 - theta, "theta": theta, "l": None}
    bound = 1.0 - theta
    status = SATISFIED if k <= bound + _SLACK else VIOLATED
    return {"status": status, "bound": bound, "theta": theta, "l": composite_spc_constant(k, theta)}


def resolve_k(cert=None, denoiser=None, k=None):
    """k from an explicit value, else the certificate, else the denoiser's claim."""
    if k is not None:
        return float(k), "explicit"
    if cert is not None and cert.verdicts:
        levels = cert.passing_spc_levels()
        if cert.verdicts.get("nonexpansive"):
            return 0.0, "certificate"
        if levels:
            return levels[0], "certificate"
    if denoiser is not None and denoiser.spec.claimed_k is not None:
        return float(denoiser.spec.claimed_k), "claimed"
    return None, "unavailable"


def _pseudo_contractive(cert, denoiser):
    if cert is not None and cert.verdicts:
        return bool(cert.verdicts.get("pseudo_contractive")), "certificate"
    if denoiser is not None and denoiser.spec.claimed_region is not None:
        return True, "claimed"
    return None, "unavailable"


def check_hypotheses(cert=None, G=None, cfg=None, denoiser=None, k=None, gamma=None, lam=None):
    """Evaluate Theorems 1-3 for a run.

    ``gamma`` overrides the fidelity's cocoercivity constant; Theorem 2 then uses
    beta * gamma (the prox is taken of G / beta).
    """
    solver = getattr(cfg, "solver", "pnpi-hqs")
    beta = getattr(cfg, "beta", 1.0)
    if lam is None:
        lam = getattr(cfg, "lam", None)
    k_val, k_source = resolve_k(cert, denoiser, k)
    if gamma is None and G is not None:
        gamma = G.gamma
    gamma_prox = None if gamma is None else (math.inf if math.isinf(gamma) else beta * gamma)
    if lam is None and gamma is not None and not math.isinf(gamma):
        lam = gamma

    report = HypothesisReport(solver=solver)
    report.inputs = {
        "k": k_val,
        "k_source": k_source,
        "gamma": gamma,
        "gamma_prox": gamma_prox,
        "lambda": lam,
        "beta": beta,
        "lipschitz": None if k_val is None else (1.0 + k_val) / (1.0 - k_val),
    }

    pc, pc_source = _pseudo_contractive(cert, denoiser)
    smooth = G is None or G.grad_lipschitz is not None
    if pc is None or not smooth:
        t1 = UNKNOWN
    else:
        t1 = SATISFIED if pc else VIOLATED
    report.checks["theorem1"] = {
        "status": t1,
        "pseudo_contractive": pc,
        "source": pc_source,
        "grad_lipschitz": None if G is None else G.grad_lipschitz,
    }
    report.checks["theorem2"] = theorem2_check(k_val, gamma_prox)
    report.checks["theorem3"] = theorem3_check(k_val, gamma, lam)

    if gamma_prox is not None and not math.isinf(gamma_prox):
        report.notes.append(
            f"Theorem 2 uses gamma_prox = beta * gamma = {beta:g} * {gamma:g} = {gamma_prox:g}, "
            f"the cocoercivity of grad(G / beta) rather than of grad G"
        )
    if gamma is None:
        report.notes.append("grad G is not cocoercive, so Theorems 2 and 3 cannot be checked")
    if not smooth:
        report.notes.append("grad G is not Lipschitz near u = 0; behaviour there is governed by the domain clamp")
    if G is not None and getattr(G, "mu", 0) and gamma is not None and not math.isinf(gamma):
        alt = theorem2_check(k_val, beta * G.mu)
        report.notes.append(
            f"gamma = 1/(mu ||A||^2) is used; reading the quadratic term as mu-cocoercive "
            f"would give Theorem 2 status '{alt['status']}'"
        )
    if k_val is None:
        report.notes.append("no strict pseudo-contractivity constant known for the denoiser")

    relevant = report.relevant
    if relevant and report.checks[relevant]["status"] == VIOLATED:
        logger.warning("%s hypothesis %s violated: %s", solver, relevant, report.checks[relevant])
    return report
