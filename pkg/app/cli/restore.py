"""restore: run one PnP solver on an observed or synthesized degradation."""
import logging

from app.config import TASK_ITERS
from app.core.io import read_image, write_csv, write_image, write_json
from app.core.metrics import psnr, ssim
from app.core.phantoms import make_phantom
from app.cli.degrade import parse_kernel, synthesize
from app.cli.runconfig import RunConfig
from app.denoisers.registry import build_denoiser
from app.errors import DivergenceError
from app.fidelity.terms import (
    make_deblur_fidelity,
    make_denoise_fidelity,
    make_poisson_fidelity,
    make_sisr_fidelity,
)
from app.solvers.pnpi import SolverConfig, default_beta, initial_estimate, solve
from app.spectral.certify import certify
from app.spectral.probes import ProbeConfig

logger = logging.getLogger(__name__)


def default_mu(rc: RunConfig):
    """1/noise^2 in gray levels for Gaussian tasks, peak/255^2 for Poisson."""
    if rc.get("mu") is not None:
        return rc["mu"]
    if rc["task"] == "poisson":
        return rc["peak"] / 255.0**2
    noise = rc["noise"]
    return 1.0 / noise**2 if noise > 0 else 1.0 / 15.0**2


def solver_config(rc: RunConfig, mu):
    iters = rc.get("iters", TASK_ITERS.get(rc["task"], TASK_ITERS["deblur"]))
    return SolverConfig(
        solver=rc["solver"],
        a=rc.get("a"),
        b=rc.get("b"),
        index_shift=rc["index_shift"],
        max_iters=iters,
        tol=rc["tol"],
        beta=rc.get("beta", default_beta(mu, rc["beta_growth"], iters) if rc["task"] != "poisson" else 1.0 / 15.0**2),
        lam=rc.get("lambda"),
        beta_growth=rc["beta_growth"],
        project_box=rc["project_box"],
        relaxation=rc["relaxation"],
        seed=rc.seed,
    )


def load_problem(rc: RunConfig):
    """(observation, ground truth or None) from files or a synthetic phantom."""
    clean = None
    if rc.get("clean") is not None:
        clean = read_image(rc["clean"])
    if rc.get("input") is not None:
        return read_image(rc["input"]), clean
    if clean is None:
        clean = make_phantom(rc["phantom"], rc["size"])
    return synthesize(rc["task"], clean, rc.params, seed=rc.seed), clean


def build_fidelity(rc: RunConfig, observation, mu):
    task = rc["task"]
    if task == "deblur":
        return make_deblur_fidelity(observation, parse_kernel(rc["kernel"]), mu)
    if task == "denoise":
        return make_denoise_fidelity(observation, mu)
    if task == "sisr":
        return make_sisr_fidelity(observation, parse_kernel(rc["kernel"]), rc["scale"], mu)
    return make_poisson_fidelity(observation, mu, rc["peak"])


def cmd_restore(rc: RunConfig):
    """Returns (exit code, summary)."""
    out = rc.out
    out.mkdir(parents=True, exist_ok=True)
    meta = rc.meta()
    ext = rc["format"]

    observation, clean = load_problem(rc)
    mu = default_mu(rc)
    G = build_fidelity(rc, observation, mu)
    u0 = initial_estimate(G)
    D = build_denoiser(rc["denoiser"], u0.shape)
    cfg = solver_config(rc, mu)
    write_image(out / f"observation.{ext}", observation, meta=meta)

    cert = None
    if rc["certify"]:
        cert = certify(D, ProbeConfig(seed=rc.seed), assumptions="ne,pc,spc:0.5")
        write_json(out / "certificate.json", cert.to_dict(), meta=meta)

    logger.info("restore: task=%s solver=%s denoiser=%s mu=%.6g beta=%.6g iters=%d",
                rc["task"], cfg.solver, D.name, mu, cfg.beta, cfg.max_iters)
    try:
        trace = solve(D, G, cfg, u0=u0, ground_truth=clean, cert=cert)
    except DivergenceError as exc:
        if exc.trace is not None:
            write_csv(out / "trace.csv", exc.trace.to_frame(), meta=meta)
        raise

    write_image(out / f"restored.{ext}", trace.final, meta=meta)
    write_csv(out / "trace.csv", trace.to_frame(), meta=meta)
    report = {
        "solver": cfg.to_dict(),
        "denoiser": D.spec.to_dict(),
        "fidelity": G.describe(),
        "iterations": len(trace),
        "stopped": trace.stopped,
        "initial_residual": trace.initial_residual,
        "final_residual": trace.final_residual,
        "final_rel_residual": trace.final_rel_residual,
        "hypotheses": trace.report.to_dict() if trace.report is not None else None,
    }
    write_json(out / "report.json", report, meta=meta)

    summary = {"stopped": trace.stopped, "iterations": len(trace), "final_rel_residual": trace.final_rel_residual}
    if clean is not None and clean.shape == trace.final.shape:
        metrics = {
            "psnr": psnr(trace.final, clean),
            "ssim": ssim(trace.final, clean),
            "psnr_initial": psnr(u0, clean),
            "ssim_initial": ssim(u0, clean),
        }
        if observation.shape == clean.shape:
            metrics["psnr_observation"] = psnr(observation, clean)
        write_json(out / "metrics.json", metrics, meta=meta)
        logger.info("restore: PSNR %.2f dB (initial %.2f dB), SSIM %.4f",
                    metrics["psnr"], metrics["psnr_initial"], metrics["ssim"])
        summary.update(metrics)
    return 0, summary
