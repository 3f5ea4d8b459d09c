import math

import numpy as np
import pytest

from app.config import TRACE_COLUMNS
from app.core.image import Kernel
from app.core.metrics import psnr
from app.core.operators import conv_circular
from app.core.phantoms import make_phantom
from app.denoisers.registry import build_denoiser
from app.denoisers.zoo import make_identity_denoiser, pair_rotate
from app.errors import ConstructionError, DivergenceError, DomainError
from app.fidelity.terms import (
    make_deblur_fidelity,
    make_denoise_fidelity,
    make_null_fidelity,
    make_poisson_fidelity,
    make_sisr_fidelity,
)
from app.solvers.hypotheses import (
    SATISFIED,
    UNKNOWN,
    VIOLATED,
    check_hypotheses,
    composite_spc_constant,
    resolve_k,
    theorem2_check,
    theorem3_check,
)
from app.solvers.ishikawa import ishikawa_iterate, mann_iterate, picard_iterate
from app.solvers.pnpi import (
    SolverConfig,
    build_operator,
    initial_estimate,
    deblur_hqs_config,
    default_beta,
    pnp_baseline,
    pnpi_fbs,
    pnpi_gd,
    pnpi_hqs,
    resolve_lambda,
    sigma_from_beta,
    solve,
)
from app.solvers.schedule import Schedule

NOISE = 12.75


# ---------------------------------------------------------------- schedules

def test_default_schedules():
    s = Schedule.for_solver("pnpi-hqs")
    assert (s.a, s.b, s.index_shift) == (0.8, 0.15, 2)
    assert s.alpha(0) == pytest.approx(2**-0.8)
    assert s.beta(0) == pytest.approx(2**-0.15)
    assert Schedule.for_solver("gd").a == 0.3
    report = s.validate(horizon=10**5)
    assert report["ordered"] and report["sum_diverges"]
    assert report["beta_at_horizon"] < 1.0


@pytest.mark.parametrize("a, b, shift", [(0.3, 0.5, 2), (0.6, 0.5, 2), (0.8, 0.15, 1), (1.0, 0.0, 2)])
def test_schedule_rejects_bad_exponents(a, b, shift):
    with pytest.raises(ConstructionError):
        Schedule(a, b, shift)


def test_schedule_for_unknown_solver():
    with pytest.raises(ConstructionError):
        Schedule.for_solver("admm")


# ---------------------------------------------------------------- iteration engine

def rotation(u):
    return pair_rotate(u)


def antisym(u):
    return u + pair_rotate(u)


def test_picard_on_rotation_never_moves_residual():
    u0 = np.array([[1.0, 0.0]])
    trace = picard_iterate(rotation, u0, 100, tol=0.0)
    np.testing.assert_allclose(trace.fp_residuals, math.sqrt(2.0), atol=1e-12)
    assert trace.stopped == "max_iters"


def test_ishikawa_on_rotation_converges():
    u0 = np.array([[1.0, 0.0]])
    trace = ishikawa_iterate(rotation, u0, Schedule(0.3, 0.15), 1000, tol=0.0)
    assert trace.final_residual < 1e-10 * trace.initial_residual
    assert len(trace) == 1000


def test_ishikawa_converges_where_mann_grows():
    u0 = np.array([[1.0, 0.0]])
    ishikawa = ishikawa_iterate(antisym, u0, Schedule(0.8, 0.15), 5000, tol=0.0)
    assert ishikawa.final_residual < 1e-2 * ishikawa.initial_residual
    mann = mann_iterate(antisym, u0, 0.5, 200, tol=0.0)
    assert mann.final_residual > 10 * mann.initial_residual


def test_picard_divergence_keeps_trace():
    with pytest.raises(DivergenceError) as info:
        picard_iterate(antisym, np.array([[1.0, 0.0]]), 5000, tol=0.0)
    trace = info.value.trace
    assert trace.stopped == "diverged"
    assert 1000 < len(trace) < 5000


def test_domain_error_becomes_divergence():
    def T(u):
        if u.min() < 0:
            raise DomainError("negative pixel")
        return u - 1.0

    with pytest.raises(DivergenceError, match="negative pixel"):
        picard_iterate(T, np.full((2, 2), 1.5), 10)


def test_tolerance_stop_and_trace_frame():
    target = np.full((4, 4), 0.4)
    trace = picard_iterate(lambda u: 0.5 * u + 0.5 * target, np.ones((4, 4)), 200, tol=1e-8,
                           ground_truth=target)
    assert trace.stopped == "tol"
    np.testing.assert_allclose(trace.final, target, atol=1e-7)
    frame = trace.to_frame()
    assert list(frame.columns) == TRACE_COLUMNS
    assert frame["psnr"].is_monotonic_increasing
    assert len(frame) == len(trace) < 200


def test_zero_iterations_records_initial_residual():
    trace = picard_iterate(lambda u: 0.5 * u, np.ones((2, 2)), 0)
    assert len(trace) == 0
    assert trace.initial_residual == pytest.approx(1.0)
    np.testing.assert_array_equal(trace.final, np.ones((2, 2)))


def test_box_projection():
    trace = picard_iterate(lambda u: u + 0.3, np.full((2, 2), 0.9), 3, tol=0.0, project_box=True)
    np.testing.assert_array_equal(trace.final, 1.0)


def test_operator_factory_is_used_per_iteration():
    calls = []

    def operator_for(n):
        calls.append(n)
        return lambda u: 0.5 * u

    picard_iterate(None, np.ones((2, 2)), 4, tol=0.0, operator_for=operator_for)
    assert calls == [0, 1, 2, 3, 4]


# ---------------------------------------------------------------- solver config

def test_solver_config_defaults_and_validation():
    cfg = SolverConfig()
    assert cfg.kind == "hqs" and cfg.is_ishikawa
    assert cfg.sigma_at(0) == pytest.approx(15.0)
    assert cfg.schedule().to_dict() == {"a": 0.8, "b": 0.15, "index_shift": 2}
    assert SolverConfig(solver="pnpi-gd", b=0.1).schedule().to_dict() == {"a": 0.3, "b": 0.1, "index_shift": 2}
    assert "schedule" not in SolverConfig(solver="pnp-hqs").to_dict()
    for bad in ({"solver": "admm"}, {"beta": 0.0}, {"lam": -1.0}, {"beta_growth": 0.9},
                {"relaxation": 0.0}, {"max_iters": -1}):
        with pytest.raises(ConstructionError):
            SolverConfig(**bad)


def test_beta_growth_and_sigma():
    cfg = deblur_hqs_config(beta=1.0 / NOISE**2)
    assert cfg.beta_growth == 1.01 and cfg.max_iters == 300
    assert sigma_from_beta(cfg.beta) == pytest.approx(NOISE)
    assert cfg.beta_at(100) == pytest.approx(cfg.beta * 1.01**100)
    assert cfg.sigma_at(100) < cfg.sigma_at(0)


def test_initial_estimate_and_lambda(rng):
    f = rng.uniform(0, 1, (8, 8))
    sisr = make_sisr_fidelity(f, Kernel.binomial(3), 2, mu=1.0)
    assert initial_estimate(sisr).shape == (16, 16)
    deblur = make_deblur_fidelity(f, Kernel.binomial(3), mu=4.0)
    np.testing.assert_array_equal(initial_estimate(deblur), f)
    with pytest.raises(ConstructionError):
        initial_estimate(make_null_fidelity((8, 8)))
    assert resolve_lambda(deblur, SolverConfig()) == pytest.approx(0.25)
    assert resolve_lambda(deblur, SolverConfig(lam=0.1)) == 0.1
    assert resolve_lambda(make_poisson_fidelity(f, 1.0, 10), SolverConfig()) == 1.0


def test_build_operator_growth_factory(rng):
    f = rng.uniform(0, 1, (8, 8))
    G = make_denoise_fidelity(f, mu=1.0)
    D = make_identity_denoiser()
    _, factory = build_operator(D, G, SolverConfig())
    assert factory is None
    T, factory = build_operator(D, G, SolverConfig(beta=1.0, beta_growth=2.0))
    u = rng.uniform(0, 1, (8, 8))
    np.testing.assert_allclose(T(u), factory(0)(u))
    np.testing.assert_allclose(factory(1)(u), (f / 2.0 + u) / 1.5)


# ---------------------------------------------------------------- PnP solvers

def test_hqs_identity_denoiser_recovers_observation(rng):
    f = rng.uniform(0, 1, (8, 8))
    G = make_denoise_fidelity(f, mu=1.0)
    trace = pnpi_hqs(make_identity_denoiser(), G, SolverConfig(beta=1.0, max_iters=20000), u0=np.zeros((8, 8)))
    assert trace.stopped == "tol"
    np.testing.assert_allclose(trace.final, f, atol=1e-4)


def _checkerboard_deblur(rng):
    clean = make_phantom("checkerboard", 64)
    kernel = Kernel.binomial(3)
    f = conv_circular(clean, kernel) + rng.normal(0.0, NOISE / 255.0, clean.shape)
    mu = 1.0 / NOISE**2
    return clean, make_deblur_fidelity(f, kernel, mu), build_denoiser("dct-shrink:t=0.15", clean.shape), mu


def test_growth_defaults_end_at_three_times_the_noise():
    cfg = deblur_hqs_config(mu=1.0 / NOISE**2)
    assert cfg.schedule().to_dict() == {"a": 0.3, "b": 0.15, "index_shift": 2}
    assert cfg.sigma_at(cfg.max_iters) == pytest.approx(3.0 * NOISE)
    assert cfg.sigma_at(0) == pytest.approx(3.0 * NOISE * 1.01**150)
    assert deblur_hqs_config(mu=1.0, a=0.8).schedule().a == 0.8
    assert default_beta(4.0) == pytest.approx(4.0 / 9.0)
    with pytest.raises(ConstructionError):
        default_beta(0.0)


@pytest.mark.slow
def test_pnpi_hqs_deblur_end_to_end(rng):
    clean, G, D, mu = _checkerboard_deblur(rng)
    cfg = deblur_hqs_config(mu=mu)
    trace = pnpi_hqs(D, G, cfg, ground_truth=clean)
    assert trace.final_rel_residual <= 1e-3
    assert psnr(trace.final, clean) >= psnr(G.observation, clean) + 2.0
    assert trace.report.relevant == "theorem2"
    assert trace.report.status("theorem2") == SATISFIED


def test_gd_and_fbs_run_with_traces(checker16, rng):
    f = checker16 + rng.normal(0.0, 0.05, checker16.shape)
    G = make_denoise_fidelity(f, mu=0.5)
    D = build_denoiser("gauss:3x3", f.shape)
    for runner in (pnpi_gd, pnpi_fbs):
        trace = runner(D, G, SolverConfig(max_iters=50), ground_truth=checker16)
        assert len(trace) > 0
        assert not np.isnan(trace.records[-1].psnr)
        assert trace.final_residual < trace.initial_residual


def test_baselines_use_mann_and_picard(checker16):
    G = make_denoise_fidelity(checker16, mu=1.0)
    D = build_denoiser("gauss:3x3", checker16.shape)
    cfg = SolverConfig(max_iters=5, tol=0.0, relaxation=0.5)
    mann = pnp_baseline("gd", D, G, cfg)
    assert all(r.alpha == 0.5 and r.beta == 0.0 for r in mann.records)
    picard = pnp_baseline("hqs", D, G, cfg)
    assert all(r.alpha == 1.0 for r in picard.records)
    assert picard.report.solver == "pnp-hqs"
    with pytest.raises(ConstructionError):
        pnp_baseline("admm", D, G, cfg)


def test_solve_dispatches_on_config(checker16):
    G = make_denoise_fidelity(checker16, mu=1.0)
    D = make_identity_denoiser()
    trace = solve(D, G, SolverConfig(solver="pnp-fbs", lam=0.5, max_iters=3, tol=0.0), u0=np.zeros_like(checker16))
    assert trace.report.solver == "pnp-fbs"
    assert len(trace) == 3


def test_poisson_run_stays_in_domain(rng):
    u = rng.uniform(0.2, 1.0, (16, 16))
    f = rng.poisson(u * 20).astype(float) / 20
    G = make_poisson_fidelity(f, mu=20 / 255**2, peak=20)
    D = build_denoiser("dct-shrink:t=0.1", f.shape)
    trace = pnpi_hqs(D, G, SolverConfig(beta=1.0 / 15**2, max_iters=30), ground_truth=u)
    assert np.all(np.isfinite(trace.final))
    assert trace.report.status("theorem2") == UNKNOWN


# ---------------------------------------------------------------- hypotheses

def test_composite_constant():
    assert composite_spc_constant(0.5, 0.25) == pytest.approx(0.6)
    assert composite_spc_constant(0.0, 0.3) == 0.0
    assert composite_spc_constant(0.8, 0.25) is None


@pytest.mark.parametrize("gamma", [0.0, 0.1, 1.0, 10.0, math.inf])
def test_theorem2_half_always_holds(gamma):
    assert theorem2_check(0.5, gamma)["status"] == SATISFIED


def test_theorem2_and_3_boundaries():
    assert theorem2_check(0.9, 0.0)["status"] == VIOLATED
    assert theorem2_check(None, 1.0)["status"] == UNKNOWN
    assert theorem3_check(0.5, 1.0, 1.0)["status"] == SATISFIED
    assert theorem3_check(0.51, 1.0, 1.0)["status"] == VIOLATED
    assert theorem3_check(0.0, 1.0, 2.5)["status"] == VIOLATED
    assert theorem3_check(0.0, 1.0, -0.1)["status"] == VIOLATED
    assert theorem3_check(0.2, math.inf, 5.0)["status"] == SATISFIED


def test_check_hypotheses_for_spc_denoiser(rng):
    f = rng.uniform(0, 1, (8, 8))
    mu = 1.0 / NOISE**2
    G = make_deblur_fidelity(f, Kernel.binomial(3), mu)
    D = build_denoiser("spc:rot90:k=0.5", f.shape)
    report = check_hypotheses(G=G, cfg=SolverConfig(beta=mu), denoiser=D)
    assert report.inputs["k"] == 0.5 and report.inputs["k_source"] == "claimed"
    assert report.inputs["gamma"] == pytest.approx(1.0 / mu)
    assert report.inputs["gamma_prox"] == pytest.approx(1.0)
    assert report.inputs["lipschitz"] == pytest.approx(3.0)
    assert report.checks["theorem2"]["bound"] == pytest.approx(0.75)
    assert report.status("theorem1") == SATISFIED
    assert report.status("theorem2") == SATISFIED
    assert report.to_dict()["relevant"] == "theorem2"
    assert any(n.startswith("Theorem 2 uses gamma_prox = beta * gamma") for n in report.to_dict()["notes"])


def test_check_hypotheses_warns_on_violation(caplog, rng):
    f = rng.uniform(0, 1, (8, 8))
    G = make_deblur_fidelity(f, Kernel.binomial(3), 1.0)
    D = build_denoiser("spc:rot90:k=0.9", f.shape)
    report = check_hypotheses(G=G, cfg=SolverConfig(solver="pnpi-fbs", lam=1.5), denoiser=D)
    assert report.status("theorem3") == VIOLATED
    assert "theorem3 violated" in caplog.text


def test_resolve_k_sources():
    assert resolve_k(k=0.3) == (0.3, "explicit")
    assert resolve_k() == (None, "unavailable")
    D = build_denoiser("antisym:c=1", (4, 4))
    assert resolve_k(denoiser=D) == (None, "unavailable")
