"""
Randomised checks of the inequalities behind the Ishikawa PnP convergence results.

Every suite draws small instances from the denoiser and fidelity constructions
of this package, evaluates the stated inequality or identity and reports the
largest violation, normalised by ||x - y||^2 where pairs are involved. Nothing
is raised on failure; the report carries the numbers.

    lemma1    D is k-spc  <=>  D = N/(1-k) - kI/(1-k) with N non-expansive
    lemma1_5  D pseudo-contractive  <=>  I - D monotone
    lemma3    ||a x + b y||^2 = a(a+b)||x||^2 + b(a+b)||y||^2 - ab||x-y||^2
    lemma4    D k-spc, P theta-averaged, k < 1 - theta  =>  D o P is l-spc
    lemma5    grad G gamma-cocoercive  =>  Prox_G is 1/(2 gamma + 2)-averaged
    lemma6    D pseudo-contractive, G convex  =>  D - grad G pseudo-contractive
"""
import logging
from dataclasses import dataclass, field

import numpy as np

from app.config import LEMMA_TOL
from app.core.image import Kernel
from app.core.operators import LinearOperator
from app.denoisers.zoo import (
    make_antisymmetric_denoiser,
    make_dct_shrink_denoiser,
    make_gaussian_blur_denoiser,
    make_matrix_denoiser,
    make_spc_denoiser,
)
from app.errors import ConstructionError
from app.fidelity.terms import make_deblur_fidelity
from app.oracle.dense import assemble_dense, dense_svd_norm, strict_pc_constant
from app.solvers.hypotheses import composite_spc_constant

logger = logging.getLogger(__name__)

SUITES = ("lemma1", "lemma1_5", "lemma3", "lemma4", "lemma5", "lemma6")

_SHAPE = (4, 4)
_MAX_INSTANCES = 25
_TINY = 1e-300


@dataclass
class LemmaReport:
    suite: str
    trials: int
    seed: int
    max_violation: float = 0.0
    passed: bool = True
    details: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "suite": self.suite,
            "trials": self.trials,
            "seed": self.seed,
            "max_violation": self.max_violation,
            "passed": self.passed,
            "details": self.details,
        }


# ---------------------------------------------------------------- random instances

def _matrix_operator(M, shape=_SHAPE, name="matrix"):
    M = np.asarray(M, dtype=np.float64)
    return LinearOperator(
        apply=lambda x: (M @ np.asarray(x).ravel()).reshape(shape),
        adjoint=lambda y: (M.T @ np.asarray(y).ravel()).reshape(shape),
        norm_bound=float(np.linalg.norm(M, 2)),
        in_shape=shape,
        out_shape=shape,
        name=name,
    )


def random_orthogonal(d, rng):
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    return q * np.sign(np.diag(r))


def random_nonexpansive(d, rng, top=1.0):
    """U diag(s) V^T with singular values in [0, top]; the largest equals top."""
    s = rng.uniform(0.0, top, d)
    s[0] = top
    return random_orthogonal(d, rng) @ np.diag(s) @ random_orthogonal(d, rng).T


def random_averaged(d, theta, rng):
    """P = (1 - theta) I + theta N with N non-expansive."""
    return (1.0 - theta) * np.eye(d) + theta * random_nonexpansive(d, rng)


def block_rotation(d, angle):
    c, s = np.cos(angle), np.sin(angle)
    R = np.zeros((d, d))
    for i in range(0, d - 1, 2):
        R[i:i + 2, i:i + 2] = [[c, -s], [s, c]]
    return R


def _pairs(rng, count, shape=_SHAPE):
    for _ in range(count):
        yield rng.standard_normal(shape), rng.standard_normal(shape)


def _split(trials):
    """Instances and pairs per instance covering ``trials`` pairs in total."""
    instances = min(trials, _MAX_INSTANCES)
    per = int(np.ceil(trials / instances))
    return instances, per


# ---------------------------------------------------------------- suites

def _lemma1(trials, rng):
    d = _SHAPE[0] * _SHAPE[1]
    instances, per = _split(trials)
    worst_spc = worst_ne = worst_const = 0.0
    for _ in range(instances):
        k = float(rng.uniform(0.0, 0.95))
        Nmat = random_nonexpansive(d, rng)
        D = make_spc_denoiser(_matrix_operator(Nmat), k)
        for x, y in _pairs(rng, per):
            dx, dy = D(x), D(y)
            gap = np.sum((x - y) ** 2)
            lhs = np.sum((dx - dy) ** 2)
            rhs = gap + k * np.sum(((x - dx) - (y - dy)) ** 2)
            worst_spc = max(worst_spc, (lhs - rhs) / gap)
            nx, ny = (1.0 - k) * dx + k * x, (1.0 - k) * dy + k * y
            worst_ne = max(worst_ne, (np.sum((nx - ny) ** 2) - gap) / gap)
        # converse: the tightest constant of D never exceeds k
        Dmat = assemble_dense(D.apply, _SHAPE)
        worst_const = max(worst_const, strict_pc_constant(Dmat) - k)
    details = {
        "instances": instances,
        "spc_inequality": worst_spc,
        "reconstructed_nonexpansive": worst_ne,
        "tightest_constant_excess": worst_const,
    }
    return max(worst_spc, worst_ne, worst_const, 0.0), details


def _pc_denoisers(rng):
    d = _SHAPE[0] * _SHAPE[1]
    yield "antisym", make_antisymmetric_denoiser(float(rng.uniform(0.0, 3.0)))
    yield "spc", make_spc_denoiser(_matrix_operator(random_nonexpansive(d, rng)), float(rng.uniform(0.0, 0.95)))
    yield "gauss", make_gaussian_blur_denoiser(Kernel.binomial(3))
    yield "dct-shrink", make_dct_shrink_denoiser(float(rng.uniform(0.0, 0.5)))
    # S = sym(W) with eigenvalues <= 1 and an arbitrary antisymmetric part
    Q = random_orthogonal(d, rng)
    S = Q @ np.diag(rng.uniform(-2.0, 1.0, d)) @ Q.T
    B = rng.standard_normal((d, d))
    yield "matrix", make_matrix_denoiser(S + (B - B.T), _SHAPE)


def _lemma1_5(trials, rng):
    instances, per = _split(trials)
    per_kind = {}
    for _ in range(instances):
        for kind, D in _pc_denoisers(rng):
            for x, y in _pairs(rng, per):
                dx, dy = D(x, 15.0), D(y, 15.0)
                gap = np.sum((x - y) ** 2)
                monotone = np.sum(((x - dx) - (y - dy)) * (x - y))
                pc = np.sum((dx - dy) ** 2) - gap - np.sum(((x - dx) - (y - dy)) ** 2)
                # ||Dx-Dy||^2 - ||x-y||^2 - ||(I-D)x-(I-D)y||^2 = -2 <(I-D)x-(I-D)y, x-y>
                identity = abs(pc + 2.0 * monotone)
                violation = max(-monotone / gap, pc / gap, identity / gap, 0.0)
                per_kind[kind] = max(per_kind.get(kind, 0.0), violation)
    return max(per_kind.values(), default=0.0), {"instances": instances, "per_denoiser": per_kind}


def _lemma3(trials, rng):
    worst_first = worst_second = 0.0
    for _ in range(trials):
        a, b = rng.uniform(-3.0, 3.0, 2)
        x, y = rng.standard_normal(_SHAPE), rng.standard_normal(_SHAPE)
        nx, ny = np.sum(x * x), np.sum(y * y)
        scale = max((abs(a) + abs(b)) ** 2 * (nx + ny), _TINY)
        first = np.sum((a * x + b * y) ** 2) - (a * (a + b) * nx + b * (a + b) * ny - a * b * np.sum((x - y) ** 2))
        second = a * b * np.sum((x + y) ** 2) - (a * (a + b) * nx + b * (a + b) * ny - np.sum((a * x - b * y) ** 2))
        worst_first = max(worst_first, abs(first) / scale)
        worst_second = max(worst_second, abs(second) / scale)
    return max(worst_first, worst_second), {"first_identity": worst_first, "second_identity": worst_second}


def lemma4_tight_instance(d=8):
    """D = (4/3)R(0.015) - I/3 (k = 1/4) after P = (I + R(-0.01))/2 (theta = 1/2); bound l = 1/3."""
    D = (4.0 / 3.0) * block_rotation(d, 0.015) - (1.0 / 3.0) * np.eye(d)
    P = 0.5 * np.eye(d) + 0.5 * block_rotation(d, -0.01)
    return D, P, 0.25, 0.5


def _lemma4(trials, rng):
    d = _SHAPE[0] * _SHAPE[1]
    instances = min(trials, 4 * _MAX_INSTANCES)
    worst_l = worst_lip = worst_boundary = 0.0
    for _ in range(instances):
        theta = float(rng.uniform(0.05, 0.9))
        k = float(rng.uniform(0.0, 1.0 - theta) * 0.999)
        N = random_nonexpansive(d, rng)
        D = make_spc_denoiser(_matrix_operator(N), k)
        Dmat = assemble_dense(D.apply, _SHAPE)
        L = Dmat @ random_averaged(d, theta, rng)
        worst_l = max(worst_l, strict_pc_constant(L) - composite_spc_constant(k, theta))
        worst_lip = max(worst_lip, dense_svd_norm(L) - (1.0 + k) / (1.0 - k))
        # k = 1 - theta: the composite stays pseudo-contractive
        kb = 1.0 - theta
        Db = N / (1.0 - kb) - kb / (1.0 - kb) * np.eye(d)
        Lb = Db @ random_averaged(d, theta, rng)
        worst_boundary = max(worst_boundary, strict_pc_constant(Lb) - 1.0)

    Dt, Pt, kt, tt = lemma4_tight_instance(d)
    bound = composite_spc_constant(kt, tt)
    measured = strict_pc_constant(Dt @ Pt)
    details = {
        "instances": instances,
        "composite_constant_excess": worst_l,
        "lipschitz_excess": worst_lip,
        "boundary_excess": worst_boundary,
        "tight_instance": {"k": kt, "theta": tt, "bound": bound, "measured": measured, "gap": bound - measured},
    }
    worst = max(worst_l, worst_lip, worst_boundary, measured - bound, 0.0)
    return worst, details


def averagedness_excess(P, theta):
    """||N|| - 1 for N = (P - (1 - theta) I) / theta."""
    d = P.shape[0]
    N = (P - (1.0 - theta) * np.eye(d)) / theta
    return dense_svd_norm(N) - 1.0


def _lemma5(trials, rng):
    d = _SHAPE[0] * _SHAPE[1]
    instances = min(trials, 4 * _MAX_INSTANCES)
    worst_dense = worst_deblur = 0.0
    for _ in range(instances):
        # G(u) = (mu/2)||Au - f||^2: grad G is gamma-cocoercive with gamma = 1/lambda_max(mu A^T A)
        A = rng.standard_normal((d, d))
        mu = float(rng.uniform(0.1, 5.0))
        H = mu * A.T @ A
        gamma = 1.0 / np.linalg.eigvalsh(H)[-1]
        P = np.linalg.inv(np.eye(d) + H)
        worst_dense = max(worst_dense, averagedness_excess(P, 1.0 / (2.0 * gamma + 2.0)))

        taps = rng.uniform(0.0, 1.0, (3, 3))
        G = make_deblur_fidelity(rng.uniform(0.0, 1.0, _SHAPE), Kernel.from_array(taps), mu)
        offset = G.prox(np.zeros(_SHAPE), 1.0)
        Pd = assemble_dense(lambda v: G.prox(v, 1.0) - offset, _SHAPE)
        worst_deblur = max(worst_deblur, averagedness_excess(Pd, 1.0 / (2.0 * G.gamma + 2.0)))

    # H = h I sits on the boundary: N = -I exactly
    h = 2.0
    boundary = averagedness_excess(np.eye(d) / (1.0 + h), 1.0 / (2.0 / h + 2.0))
    details = {
        "instances": instances,
        "dense_quadratic": worst_dense,
        "deblur_prox": worst_deblur,
        "boundary_excess": boundary,
    }
    return max(worst_dense, worst_deblur, abs(boundary), 0.0), details


def _lemma6(trials, rng):
    instances, per = _split(trials)
    worst = 0.0
    for _ in range(instances):
        D = make_antisymmetric_denoiser(float(rng.uniform(0.0, 3.0)))
        taps = rng.uniform(0.0, 1.0, (3, 3))
        G = make_deblur_fidelity(rng.uniform(0.0, 1.0, _SHAPE), Kernel.from_array(taps), float(rng.uniform(0.1, 5.0)))
        for x, y in _pairs(rng, per):
            tx = D(x) - G.grad(x)
            ty = D(y) - G.grad(y)
            gap = np.sum((x - y) ** 2)
            monotone = np.sum(((x - tx) - (y - ty)) * (x - y))
            worst = max(worst, -monotone / gap)
    return max(worst, 0.0), {"instances": instances, "denoiser": "antisym", "fidelity": "deblur"}


_RUNNERS = {
    "lemma1": _lemma1,
    "lemma1_5": _lemma1_5,
    "lemma3": _lemma3,
    "lemma4": _lemma4,
    "lemma5": _lemma5,
    "lemma6": _lemma6,
}


def verify_lemma(suite, trials=1000, seed=0, tol=LEMMA_TOL):
    """Run one suite; violations are reported, never raised."""
    if suite not in _RUNNERS:
        raise ConstructionError(f"unknown lemma suite '{suite}', choose from {', '.join(SUITES)}")
    if trials < 1:
        raise ConstructionError(f"trials must be >= 1, got {trials}")
    rng = np.random.default_rng(seed)
    violation, details = _RUNNERS[suite](int(trials), rng)
    report = LemmaReport(suite, int(trials), seed, float(violation), bool(violation <= tol), details)
    if report.passed:
        logger.info("%s passed: max violation %.3e over %d trials", suite, violation, trials)
    else:
        logger.warning("%s failed: max violation %.3e exceeds %.1e", suite, violation, tol)
    return report


def verify_all(trials=1000, seed=0, tol=LEMMA_TOL):
    return [verify_lemma(suite, trials, seed, tol) for suite in SUITES]
