"""certify: spectral certificate of a denoiser over probe images and noise levels."""
import logging

from app.cli.runconfig import RunConfig
from app.config import EXIT_CODES
from app.core.io import read_image, write_csv, write_json
from app.core.phantoms import probe_images
from app.denoisers.registry import build_denoiser
from app.spectral.certify import certify, claimed_constants_hold
from app.spectral.probes import ProbeConfig

logger = logging.getLogger(__name__)


def probe_config(rc: RunConfig):
    return ProbeConfig(
        n_power=rc["n_power"],
        k_inner=rc["k_inner"],
        dt=rc["dt"],
        eps=rc["eps"],
        tol=rc["tol"],
        rtol=rc["rtol"],
        max_power=rc["max_power"],
        sigmas=tuple(rc["sigmas"]),
        size=rc["size"],
        seed=rc.seed,
        warm_start=rc["warm_start"],
        workers=rc["workers"],
    )


def cmd_certify(rc: RunConfig):
    """Exit 0 when every requested assumption holds, 2 when one fails, 3 when none could be measured."""
    out = rc.out
    out.mkdir(parents=True, exist_ok=True)
    meta = rc.meta()
    cfg = probe_config(rc)

    images = [read_image(p) for p in rc["images"]] or probe_images(cfg.size)
    D = build_denoiser(rc["denoiser"], images[0].shape)
    cert = certify(D, cfg, assumptions=rc["assumptions"], images=images, strict=rc["strict"])

    payload = cert.to_dict()
    payload["claimed_constants_hold"] = claimed_constants_hold(cert)
    write_json(out / "certificate.json", payload, meta=meta)
    write_csv(out / "maxima.csv", cert.table(), meta=meta)

    summary = {"requested": cert.requested, "maxima": {k: v for k, v in cert.maxima.items() if k != "norm_spc"}}
    if cert.missing():
        reasons = sorted({s["error"] for s in cert.samples if "error" in s})
        logger.error("certify: could not measure %s: %s", ", ".join(cert.missing()), "; ".join(reasons))
        summary["errors"] = reasons
        return EXIT_CODES["capability"], summary
    if cert.violated():
        logger.warning("certify: %s violates %s", D.name, ", ".join(cert.violated()))
        return EXIT_CODES["violated"], summary
    logger.info("certify: %s satisfies %s", D.name, ", ".join(cert.assumptions))
    return EXIT_CODES["ok"], summary
