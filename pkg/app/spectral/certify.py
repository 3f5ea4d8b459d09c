"""
Spectral certification of a denoiser.

The denoiser is probed at noisy versions of the fixed probe images, for every
configured sigma. At each point the following are estimated:

    norm_J         ||J||
    norm_firm      ||2J - I||            firmly non-expansive iff <= 1
    norm_residual  ||I - J||             contractive residual iff <= r
    norm_spc[k]    ||kI + (1 - k)J||     k-strictly pseudo-contractive iff <= 1
    pc_norm        ||(S - 2I)^{-1} S||   pseudo-contractive iff <= 1
    smax           lambda_max(S)         pseudo-contractive iff <= 1

The certificate keeps the maximum of every norm over all samples and issues
verdicts with tolerance ``CERT_TOL``.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import pandas as pd

from app.config import CERT_TOL
from app.core.phantoms import probe_images
from app.denoisers.base import DenoiserHandle
from app.errors import CapabilityError, CertificateError, ConfigError
from app.spectral.probes import ProbeConfig, affine_norm, jacobian_ops, mpim, smax_probe, sym_matvec

logger = logging.getLogger(__name__)

NORMS = ("norm_J", "norm_firm", "norm_residual", "pc_norm", "smax")

_ALIASES = {
    "fne": "firmly_ne",
    "firmly_ne": "firmly_ne",
    "ne": "nonexpansive",
    "nonexpansive": "nonexpansive",
    "pc": "pc",
    "pseudo_contractive": "pc",
}


def parse_assumption(token):
    """'ne' -> ('nonexpansive', None), 'spc:0.5' -> ('spc', 0.5), 'cr:0.9' -> ('cr', 0.9)."""
    token = token.strip().lower()
    name, _, arg = token.partition(":")
    if name in _ALIASES and not arg:
        return _ALIASES[name], None
    if name == "spc":
        try:
            k = float(arg)
        except ValueError as exc:
            raise ConfigError(f"assumption '{token}' needs a numeric k, e.g. spc:0.5") from exc
        if not 0.0 <= k < 1.0:
            raise ConfigError(f"assumption '{token}': k must lie in [0, 1)")
        return "spc", k
    if name in ("cr", "contractive_residual"):
        try:
            r = float(arg) if arg else 1.0
        except ValueError as exc:
            raise ConfigError(f"assumption '{token}' needs a numeric r, e.g. cr:0.9") from exc
        return "cr", r
    raise ConfigError(f"unknown assumption '{token}'; use fne, ne, cr[:r], spc:k or pc")


def parse_assumptions(text):
    if isinstance(text, str):
        tokens = [t for t in text.split(",") if t.strip()]
    else:
        tokens = list(text)
    return [parse_assumption(t) if isinstance(t, str) else tuple(t) for t in tokens]


def assumption_label(name, arg):
    if name == "spc":
        return f"spc:{arg:g}"
    if name == "cr":
        return f"cr:{arg:g}"
    return {"firmly_ne": "fne", "nonexpansive": "ne", "pc": "pc"}[name]


@dataclass
class SpectralCertificate:
    denoiser: dict
    assumptions: list
    sample_count: int
    maxima: dict
    verdicts: dict
    requested: dict
    samples: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)
    unavailable: list = field(default_factory=list)

    def all_hold(self):
        return all(v is True for v in self.requested.values())

    def violated(self):
        return sorted(k for k, v in self.requested.items() if v is False)

    def missing(self):
        return sorted(k for k, v in self.requested.items() if v is None)

    def passing_spc_levels(self):
        return sorted(float(k) for k, ok in self.verdicts.get("k_spc", {}).items() if ok)

    def to_dict(self):
        return {
            "denoiser": self.denoiser,
            "assumptions": self.assumptions,
            "sample_count": self.sample_count,
            "maxima": self.maxima,
            "verdicts": self.verdicts,
            "requested": self.requested,
            "samples": self.samples,
            "metadata": self.metadata,
            "unavailable": self.unavailable,
        }

    def table(self):
        """Maximum of every norm per sigma, one row per sigma."""
        return per_sigma_maxima(self.samples)


def per_sigma_maxima(samples):
    if not samples:
        return pd.DataFrame(columns=["sigma", *NORMS])
    rows = []
    for s in samples:
        row = {"sigma": s["sigma"]}
        row.update({n: s.get(n) for n in NORMS})
        row.update({f"norm_spc[{k}]": v for k, v in s.get("norm_spc", {}).items()})
        rows.append(row)
    frame = pd.DataFrame(rows)
    return frame.groupby("sigma", as_index=False).max()


def _probe_sample(D, x, sigma, seed, cfg, ks):
    out = {"norm_spc": {}}
    ops = jacobian_ops(D, x, sigma)
    out["route"] = ops.route
    out["norm_J"] = affine_norm(ops, 0.0, 1.0, cfg.n_power, seed, cfg.rtol, cfg.max_power).value
    out["norm_firm"] = affine_norm(ops, -1.0, 2.0, cfg.n_power, seed, cfg.rtol, cfg.max_power).value
    out["norm_residual"] = affine_norm(ops, 1.0, -1.0, cfg.n_power, seed, cfg.rtol, cfg.max_power).value
    for k in ks:
        out["norm_spc"][f"{k:g}"] = affine_norm(ops, k, 1.0 - k, cfg.n_power, seed, cfg.rtol, cfg.max_power).value
    pc = mpim(sym_matvec(ops), ops.shape, cfg, seed)
    out["pc_norm"] = pc.value
    out["mpim"] = pc.metadata()
    out["smax"] = smax_probe(ops, cfg.n_power, seed, cfg.rtol, cfg.max_power).value
    return out


def _nesting_breaches(verdicts, smax, tol):
    breaches = []
    if verdicts["firmly_ne"] and not verdicts["nonexpansive"]:
        breaches.append("firmly_ne holds but nonexpansive fails")
    for k, ok in verdicts["k_spc"].items():
        if verdicts["nonexpansive"] and not ok:
            breaches.append(f"nonexpansive holds but spc({k}) fails")
        if ok and not verdicts["pseudo_contractive"]:
            breaches.append(f"spc({k}) holds but pseudo_contractive fails")
    if verdicts["nonexpansive"] and not verdicts["pseudo_contractive"]:
        breaches.append("nonexpansive holds but pseudo_contractive fails")
    # |f(1 + d)| ~ 1 + 2d, so the two routes may legitimately differ inside a thin band
    if verdicts["pseudo_contractive"] != verdicts["pc_smax"] and abs(smax - 1.0) > 10 * tol:
        breaches.append(f"pc routes disagree: pc_norm route {verdicts['pseudo_contractive']}, "
                        f"smax route {verdicts['pc_smax']} (smax = {smax:.6g})")
    return breaches


def certify(
    D: DenoiserHandle,
    cfg: Optional[ProbeConfig] = None,
    assumptions="ne,pc",
    images=None,
    strict=False,
    tol=CERT_TOL,
):
    """Probe D on noisy probe images and certify the requested assumptions."""
    cfg = cfg or ProbeConfig()
    parsed = parse_assumptions(assumptions)
    ks = sorted({arg for name, arg in parsed if name == "spc"})
    r = min([arg for name, arg in parsed if name == "cr"] or [1.0])
    images = probe_images(cfg.size) if images is None else [np.asarray(im, dtype=np.float64) for im in images]

    points = [(i, sigma) for i in range(len(images)) for sigma in cfg.sigmas]
    seeds = [int(s) for s in np.random.SeedSequence(cfg.seed).generate_state(len(points))]

    def run(job):
        (img_idx, sigma), seed = job
        rng = np.random.default_rng(seed)
        x = images[img_idx] + rng.normal(0.0, sigma / 255.0, images[img_idx].shape)
        record = {"image": img_idx, "sigma": sigma, "seed": seed}
        try:
            record.update(_probe_sample(D, x, sigma, seed, cfg, ks))
        except CapabilityError as exc:
            record["error"] = str(exc)
        return record

    jobs = list(zip(points, seeds))
    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            samples = list(pool.map(run, jobs))
    else:
        samples = [run(job) for job in jobs]

    ok_samples = [s for s in samples if "error" not in s]
    unavailable = []
    maxima = {"norm_spc": {}}
    if ok_samples:
        for n in NORMS:
            maxima[n] = max(s[n] for s in ok_samples)
        for k in ks:
            key = f"{k:g}"
            maxima["norm_spc"][key] = max(s["norm_spc"][key] for s in ok_samples)
    else:
        unavailable = [*NORMS, *(f"norm_spc[{k:g}]" for k in ks)]
        reason = samples[0].get("error") if samples else "no probe samples"
        logger.warning("certification of %s unavailable: %s", D.name, reason)

    requested = {}
    verdicts = {}
    metadata = {
        "probe": cfg.to_dict(),
        "tol": tol,
        "image_size": [list(im.shape) for im in images],
        "routes": sorted({s.get("route", "unavailable") for s in samples}),
        "mpim_flagged": sum(1 for s in ok_samples if s["mpim"]["flagged"]),
    }
    if ok_samples:
        bound = 1.0 + tol
        verdicts = {
            "firmly_ne": maxima["norm_firm"] <= bound,
            "nonexpansive": maxima["norm_J"] <= bound,
            "contractive_residual": maxima["norm_residual"] <= r + tol,
            "contractive_residual_r": r,
            "k_spc": {key: v <= bound for key, v in maxima["norm_spc"].items()},
            "pseudo_contractive": maxima["pc_norm"] <= bound,
            "pc_smax": maxima["smax"] <= bound,
        }
        breaches = _nesting_breaches(verdicts, maxima["smax"], tol)
        metadata["breaches"] = breaches
        if breaches:
            if strict:
                raise CertificateError("; ".join(breaches))
            for b in breaches:
                logger.warning("certificate for %s: %s", D.name, b)

    for name, arg in parsed:
        label = assumption_label(name, arg)
        if not verdicts:
            requested[label] = None
        elif name == "firmly_ne":
            requested[label] = verdicts["firmly_ne"]
        elif name == "nonexpansive":
            requested[label] = verdicts["nonexpansive"]
        elif name == "pc":
            requested[label] = verdicts["pseudo_contractive"]
        elif name == "spc":
            requested[label] = verdicts["k_spc"][f"{arg:g}"]
        elif name == "cr":
            requested[label] = maxima["norm_residual"] <= arg + tol

    cert = SpectralCertificate(
        denoiser=D.spec.to_dict(),
        assumptions=[assumption_label(n, a) for n, a in parsed],
        sample_count=len(ok_samples),
        maxima=maxima,
        verdicts=verdicts,
        requested=requested,
        samples=samples,
        metadata=metadata,
        unavailable=unavailable,
    )
    logger.info("certified %s over %d samples: %s", D.name, len(ok_samples), requested)
    return cert


def claimed_constants_hold(cert: SpectralCertificate, tol=CERT_TOL):
    """Check the denoiser's claimed region and k against the measured maxima."""
    spec = cert.denoiser
    if not cert.maxima or "norm_J" not in cert.maxima:
        return None
    region = spec.get("claimed_region")
    m = cert.maxima
    checks = {
        "firmly_ne": m["norm_firm"] <= 1.0 + tol,
        "nonexpansive": m["norm_J"] <= 1.0 + tol,
        "pseudo_contractive": m["pc_norm"] <= 1.0 + tol,
    }
    ok = True
    if region in checks:
        ok = ok and checks[region]
    k = spec.get("claimed_k")
    if k is not None and f"{k:g}" in m["norm_spc"]:
        ok = ok and m["norm_spc"][f"{k:g}"] <= 1.0 + tol
    lip = spec.get("claimed_lipschitz")
    if lip is not None:
        ok = ok and m["norm_J"] <= lip + tol
    return bool(ok)
